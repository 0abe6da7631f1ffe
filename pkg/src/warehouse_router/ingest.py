"""Frame acquisition: TCP ingest server, file replay, throughput probes.

Wire format, big-endian throughout: magic "FRM1", u32 payload length,
u8 format (0 = binary pixmap P6 maxval 255, 1 = baseline JPEG), payload.
The server answers each message with ACK 0x06 once decoded, or NAK 0x15.
A malformed header poisons the stream, so it NAKs and closes; a payload
that fails to decode only NAKs and the connection continues.

Delivery: the server hands every decoded frame, in arrival order, to its
consumer queue. A pipeline that cannot keep up should subscribe through
LatestWinsMailbox instead, which retains only the newest undelivered frame
and never blocks the sender.
"""

from __future__ import annotations

import logging
import queue
import socket
import struct
import threading
import time
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .frames import DEFAULT_MM_PER_PX, Frame, PixmapError, decode_p6

log = logging.getLogger(__name__)

FRAME_MAGIC = b"FRM1"
FORMAT_PIXMAP = 0
FORMAT_JPEG = 1
ACK = b"\x06"
NAK = b"\x15"
DEFAULT_PORT = 5005
_HEADER = struct.Struct(">4sIB")
MAX_PAYLOAD = 64 * 1024 * 1024


class FrameProtocolError(ValueError):
    """Header violates the frame wire format."""


def encode_frame_message(fmt: int, payload: bytes) -> bytes:
    if fmt not in (FORMAT_PIXMAP, FORMAT_JPEG):
        raise FrameProtocolError(f"unknown format {fmt}")
    if len(payload) > MAX_PAYLOAD:
        raise FrameProtocolError("payload too large")
    return _HEADER.pack(FRAME_MAGIC, len(payload), fmt) + payload


def _recv_exact(conn: socket.socket, n: int) -> bytes | None:
    buf = b""
    while len(buf) < n:
        chunk = conn.recv(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


class LatestWinsMailbox:
    """Depth-one hand-off; a new frame replaces an uncollected one."""

    def __init__(self) -> None:
        self._cond = threading.Condition()
        self._item: Frame | None = None
        self.dropped = 0

    def put(self, frame: Frame) -> None:
        with self._cond:
            if self._item is not None:
                self.dropped += 1
            self._item = frame
            self._cond.notify()

    def get(self, timeout: float | None = None) -> Frame | None:
        with self._cond:
            if self._item is None:
                self._cond.wait(timeout)
            item, self._item = self._item, None
            return item


class FrameServer:
    """Threaded TCP ingest endpoint.

    Frames go to `on_frame` when given, else to an internal unbounded queue
    drained by frames(). Pixmap payloads decode natively; JPEG needs a
    pluggable `jpeg_decoder(bytes) -> Frame`, otherwise format 1 is NAKed.
    """

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = DEFAULT_PORT,
        on_frame: Callable[[Frame], None] | None = None,
        jpeg_decoder: Callable[[bytes], Frame] | None = None,
        mm_per_px: float = DEFAULT_MM_PER_PX,
    ) -> None:
        self._sock = socket.create_server((host, port))
        self.host, self.port = self._sock.getsockname()[:2]
        self._on_frame = on_frame
        self._jpeg_decoder = jpeg_decoder
        self._mm_per_px = mm_per_px
        self._queue: "queue.Queue[Frame | None]" = queue.Queue()
        self._threads: list[threading.Thread] = []
        self._running = False

    def start(self) -> "FrameServer":
        self._running = True
        t = threading.Thread(target=self._accept_loop, daemon=True)
        t.start()
        self._threads.append(t)
        return self

    def stop(self) -> None:
        self._running = False
        try:
            self._sock.close()
        except OSError:
            pass
        self._queue.put(None)

    def _accept_loop(self) -> None:
        while self._running:
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return
            t = threading.Thread(target=self._serve_conn, args=(conn,), daemon=True)
            t.start()
            self._threads.append(t)

    def _serve_conn(self, conn: socket.socket) -> None:
        with conn:
            while self._running:
                header = _recv_exact(conn, _HEADER.size)
                if header is None:
                    return
                magic, length, fmt = _HEADER.unpack(header)
                if magic != FRAME_MAGIC or fmt not in (FORMAT_PIXMAP, FORMAT_JPEG) or length > MAX_PAYLOAD:
                    conn.sendall(NAK)
                    return  # poisoned stream: close
                payload = _recv_exact(conn, length)
                if payload is None:
                    return
                try:
                    frame = self._decode(fmt, payload)
                except (PixmapError, ValueError) as exc:
                    log.warning("frame decode failed: %s", exc)
                    conn.sendall(NAK)
                    continue
                self._deliver(frame)
                conn.sendall(ACK)

    def _decode(self, fmt: int, payload: bytes) -> Frame:
        if fmt == FORMAT_PIXMAP:
            return decode_p6(payload, self._mm_per_px)
        if self._jpeg_decoder is None:
            raise ValueError("no JPEG decoder configured")
        return self._jpeg_decoder(payload)

    def _deliver(self, frame: Frame) -> None:
        if self._on_frame is not None:
            self._on_frame(frame)
        else:
            self._queue.put(frame)

    def frames(self, timeout: float | None = None) -> Iterator[Frame]:
        """Drain decoded frames in arrival order; stops on server shutdown."""
        while True:
            try:
                item = self._queue.get(timeout=timeout)
            except queue.Empty:
                return
            if item is None:
                return
            yield item


def file_source(
    path: str | Path | Iterable[str | Path],
    mm_per_px: float = DEFAULT_MM_PER_PX,
) -> Iterator[Frame]:
    """Yield frames from pixmap files in lexicographic order.

    A directory expands to its files sorted by name; unreadable or
    non-pixmap files are logged and skipped so a replay never dies on one
    bad capture.
    """
    if isinstance(path, (str, Path)):
        p = Path(path)
        files = sorted(p.iterdir()) if p.is_dir() else [p]
    else:
        files = [Path(item) for item in path]
    for f in files:
        try:
            yield decode_p6(f.read_bytes(), mm_per_px)
        except (OSError, PixmapError) as exc:
            log.warning("skipping %s: %s", f, exc)


def send_frames(
    server: tuple[str, int],
    frames: Iterable[Frame],
    fps: float | None = None,
    timeout: float = 10.0,
) -> int:
    """Reference acquisition client: stream frames, return the ACK count."""
    period = None if not fps else 1.0 / fps
    sent = 0
    with socket.create_connection(server, timeout=timeout) as conn:
        next_due = time.monotonic()
        for frame in frames:
            if period is not None:
                now = time.monotonic()
                if now < next_due:
                    time.sleep(next_due - now)
                next_due = max(next_due + period, time.monotonic())
            from .frames import encode_p6

            conn.sendall(encode_frame_message(FORMAT_PIXMAP, encode_p6(frame)))
            reply = _recv_exact(conn, 1)
            if reply == ACK:
                sent += 1
            elif reply is None:
                break
    return sent


def measure_stage_fps(stage: Callable[[], object], duration_s: float = 0.25) -> dict:
    """Run a stage repeatedly for a wall-clock window and report throughput.

    Row shape: execution time (ms), iteration count, frames per second and
    per-frame sampling time (ms). A window too short for a single run
    reports an error row instead of dividing by zero.
    """
    if duration_s <= 0:
        raise ValueError("duration must be positive")
    count = 0
    start = time.perf_counter()
    deadline = start + duration_s
    while time.perf_counter() < deadline:
        stage()
        count += 1
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    if count == 0:
        return {
            "elapsed_ms": elapsed_ms,
            "count": 0,
            "fps": 0.0,
            "sampling_ms": None,
            "error": "no iterations completed",
        }
    return {
        "elapsed_ms": elapsed_ms,
        "count": count,
        "fps": count / (elapsed_ms / 1000.0),
        "sampling_ms": elapsed_ms / count,
    }


def format_fps_table(title: str, rows: list[dict]) -> str:
    """Four-column throughput table: time, images, fps, sampling."""
    lines = [
        title,
        f"{'Execution time (ms)':>20} {'No. Images':>12} {'FPS':>10} {'Sampling (ms)':>14}",
    ]
    for row in rows:
        sampling = row["sampling_ms"]
        lines.append(
            f"{row['elapsed_ms']:>20.2f} {row['count']:>12d} "
            f"{row['fps']:>10.2f} "
            + (f"{sampling:>14.2f}" if sampling is not None else f"{'-':>14}")
        )
    return "\n".join(lines)
