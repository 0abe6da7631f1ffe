"""Route-to-actuator boundary: motion vectors and PLC data blocks.

A route polyline becomes a list of (turn, distance) motion vectors: the
turn is the heading change to face the next waypoint, normalized to
(-180, 180], and the distance is the segment length converted to
millimeters. Headings follow atan2(dy, dx) in degrees; with the camera's
y axis pointing down, positive turns are clockwise on the floor - the
convention is the consumer's business, the math here is plain atan2.

Data block writes, big-endian: magic "DBW1", u16 db_number, u16
start_offset, u16 byte_count, then the payload: u16 segment count followed
by per segment i16 turn in tenths of a degree and u16 distance in mm.
Reads ("DBR1") reuse the header with an empty payload and get back ACK 0x06
plus byte_count raw bytes. The mock server keeps numbered blocks in memory
and NAKs (0x15) any out-of-range window.
"""

from __future__ import annotations

import math
import socket
import struct
import threading
from dataclasses import dataclass
from typing import Sequence

from .geometry import Point, px_to_mm

WRITE_MAGIC = b"DBW1"
READ_MAGIC = b"DBR1"
ACK = b"\x06"
NAK = b"\x15"
DEFAULT_PLC_PORT = 1102
_BLOCK_HEADER = struct.Struct(">4sHHH")

TURN_SCALE = 10.0  # tenths of a degree on the wire
MAX_DIST_MM = 0xFFFF


class PlcProtocolError(ValueError):
    """Malformed data block message."""


class PlcNakError(RuntimeError):
    """Peer rejected the request; safe to retry after correcting it."""


@dataclass(frozen=True)
class MotionVector:
    turn_deg: float
    dist_mm: float

    def __post_init__(self) -> None:
        if not (-180.0 < self.turn_deg <= 180.0):
            raise ValueError(f"turn {self.turn_deg} outside (-180, 180]")
        if self.dist_mm < 0:
            raise ValueError("distance must be non-negative")


def normalize_turn_deg(angle: float) -> float:
    """Fold any angle into (-180, 180]."""
    folded = math.fmod(angle + 180.0, 360.0)
    if folded < 0:
        folded += 360.0
    folded -= 180.0
    if folded == -180.0:
        return 180.0
    return folded


def route_to_motion(
    waypoints_px: Sequence[Point],
    mm_per_px: float,
    initial_heading_deg: float = 0.0,
) -> list[MotionVector]:
    """Turn/advance vectors that replay the polyline by dead reckoning.

    Zero-length segments are skipped (no bearing to face). The turns sum to
    the final bearing minus the initial heading, modulo 360.
    """
    if len(waypoints_px) < 2:
        raise ValueError("a route needs at least two waypoints")
    heading = initial_heading_deg
    vectors: list[MotionVector] = []
    for k in range(len(waypoints_px) - 1):
        x0, y0 = waypoints_px[k]
        x1, y1 = waypoints_px[k + 1]
        dx, dy = x1 - x0, y1 - y0
        length = math.hypot(dx, dy)
        if length == 0.0:
            continue
        bearing = math.degrees(math.atan2(dy, dx))
        vectors.append(
            MotionVector(normalize_turn_deg(bearing - heading), px_to_mm(length, mm_per_px))
        )
        heading = bearing
    return vectors


def encode_motion_payload(vectors: Sequence[MotionVector]) -> bytes:
    """u16 count then per vector i16 turn (tenths of deg) + u16 dist (mm)."""
    if len(vectors) > 0xFFFF:
        raise PlcProtocolError("too many segments")
    out = [struct.pack(">H", len(vectors))]
    for v in vectors:
        turn = round(v.turn_deg * TURN_SCALE)
        dist = round(v.dist_mm)
        if not (-1800 <= turn <= 1800):
            raise PlcProtocolError(f"turn {v.turn_deg} out of wire range")
        if not (0 <= dist <= MAX_DIST_MM):
            raise PlcProtocolError(f"distance {v.dist_mm} mm exceeds u16 range")
        out.append(struct.pack(">hH", turn, dist))
    return b"".join(out)


def decode_motion_payload(payload: bytes) -> list[MotionVector]:
    if len(payload) < 2:
        raise PlcProtocolError("payload shorter than the segment count")
    (count,) = struct.unpack(">H", payload[:2])
    if len(payload) != 2 + 4 * count:
        raise PlcProtocolError(
            f"payload holds {len(payload)} bytes, expected {2 + 4 * count}"
        )
    vectors = []
    for k in range(count):
        turn, dist = struct.unpack(">hH", payload[2 + 4 * k : 6 + 4 * k])
        vectors.append(MotionVector(turn / TURN_SCALE, float(dist)))
    return vectors


def encode_block_write(db_number: int, start_offset: int, payload: bytes) -> bytes:
    if not (0 <= db_number <= 0xFFFF and 0 <= start_offset <= 0xFFFF):
        raise PlcProtocolError("db number / offset outside u16 range")
    if len(payload) > 0xFFFF:
        raise PlcProtocolError("payload too large for u16 byte count")
    return _BLOCK_HEADER.pack(WRITE_MAGIC, db_number, start_offset, len(payload)) + payload


def encode_block_read(db_number: int, start_offset: int, byte_count: int) -> bytes:
    if not (
        0 <= db_number <= 0xFFFF
        and 0 <= start_offset <= 0xFFFF
        and 0 <= byte_count <= 0xFFFF
    ):
        raise PlcProtocolError("db number / offset / count outside u16 range")
    return _BLOCK_HEADER.pack(READ_MAGIC, db_number, start_offset, byte_count)


def decode_block_header(header: bytes) -> tuple[bytes, int, int, int]:
    if len(header) != _BLOCK_HEADER.size:
        raise PlcProtocolError("short header")
    magic, db_number, offset, count = _BLOCK_HEADER.unpack(header)
    if magic not in (WRITE_MAGIC, READ_MAGIC):
        raise PlcProtocolError(f"bad magic {magic!r}")
    return magic, db_number, offset, count


def _recv_exact(conn: socket.socket, n: int) -> bytes | None:
    buf = b""
    while len(buf) < n:
        chunk = conn.recv(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


class PlcClient:
    """Short-lived connections to a data block endpoint."""

    def __init__(self, host: str, port: int = DEFAULT_PLC_PORT, timeout: float = 5.0):
        self.host = host
        self.port = port
        self.timeout = timeout

    def _roundtrip(self, message: bytes, reply_payload: int = 0) -> bytes:
        with socket.create_connection((self.host, self.port), timeout=self.timeout) as conn:
            conn.sendall(message)
            status = _recv_exact(conn, 1)
            if status is None:
                raise PlcNakError("connection closed before status byte")
            if status == NAK:
                raise PlcNakError("peer NAKed the request")
            if status != ACK:
                raise PlcProtocolError(f"unexpected status byte {status!r}")
            if reply_payload == 0:
                return b""
            data = _recv_exact(conn, reply_payload)
            if data is None:
                raise PlcNakError("connection closed mid-reply")
            return data

    def write_motion(
        self, db_number: int, start_offset: int, vectors: Sequence[MotionVector]
    ) -> int:
        """Write a motion program; returns the byte count written."""
        payload = encode_motion_payload(vectors)
        self._roundtrip(encode_block_write(db_number, start_offset, payload))
        return len(payload)

    def write_bytes(self, db_number: int, start_offset: int, payload: bytes) -> None:
        self._roundtrip(encode_block_write(db_number, start_offset, payload))

    def read_bytes(self, db_number: int, start_offset: int, byte_count: int) -> bytes:
        return self._roundtrip(
            encode_block_read(db_number, start_offset, byte_count), byte_count
        )


def plc_write(
    endpoint: tuple[str, int],
    db_number: int,
    start_offset: int,
    vectors: Sequence[MotionVector],
    timeout: float = 5.0,
) -> int:
    """One-shot write of a motion program to a data block endpoint."""
    return PlcClient(endpoint[0], endpoint[1], timeout).write_motion(
        db_number, start_offset, vectors
    )


class MockPlcServer:
    """In-memory data block store speaking the DBW1/DBR1 protocol.

    Blocks appear on first touch, sized `block_size`. Writers to the same
    block serialize on a per-block lock; out-of-range windows are NAKed.
    """

    def __init__(self, host: str = "127.0.0.1", port: int = DEFAULT_PLC_PORT, block_size: int = 1024):
        self._sock = socket.create_server((host, port))
        self.host, self.port = self._sock.getsockname()[:2]
        self.block_size = block_size
        self._blocks: dict[int, bytearray] = {}
        self._locks: dict[int, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._running = False

    def _block(self, db_number: int) -> tuple[bytearray, threading.Lock]:
        with self._registry_lock:
            if db_number not in self._blocks:
                self._blocks[db_number] = bytearray(self.block_size)
                self._locks[db_number] = threading.Lock()
            return self._blocks[db_number], self._locks[db_number]

    def snapshot(self, db_number: int) -> bytes:
        block, lock = self._block(db_number)
        with lock:
            return bytes(block)

    def start(self) -> "MockPlcServer":
        self._running = True
        threading.Thread(target=self._accept_loop, daemon=True).start()
        return self

    def stop(self) -> None:
        self._running = False
        try:
            self._sock.close()
        except OSError:
            pass

    def _accept_loop(self) -> None:
        while self._running:
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return
            threading.Thread(target=self._serve_conn, args=(conn,), daemon=True).start()

    def _serve_conn(self, conn: socket.socket) -> None:
        with conn:
            while self._running:
                header = _recv_exact(conn, _BLOCK_HEADER.size)
                if header is None:
                    return
                try:
                    magic, db_number, offset, count = decode_block_header(header)
                except PlcProtocolError:
                    conn.sendall(NAK)
                    return
                if offset + count > self.block_size:
                    if magic == WRITE_MAGIC:
                        _recv_exact(conn, count)  # drain the rejected payload
                    conn.sendall(NAK)
                    continue
                block, lock = self._block(db_number)
                if magic == WRITE_MAGIC:
                    payload = _recv_exact(conn, count)
                    if payload is None:
                        return
                    with lock:
                        block[offset : offset + count] = payload
                    conn.sendall(ACK)
                else:
                    with lock:
                        data = bytes(block[offset : offset + count])
                    conn.sendall(ACK + data)
