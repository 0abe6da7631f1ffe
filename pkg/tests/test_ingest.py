from __future__ import annotations

import socket
import struct
import threading
import time
from pathlib import Path

import numpy as np
import pytest

from warehouse_router.frames import Frame, decode_p6, encode_p6
from warehouse_router.ingest import (
    ACK,
    FORMAT_PIXMAP,
    FRAME_MAGIC,
    NAK,
    FrameServer,
    LatestWinsMailbox,
    encode_frame_message,
    file_source,
    format_fps_table,
    measure_stage_fps,
    send_frames,
)


def _frame(width: int = 64, height: int = 48, shade: int = 200) -> Frame:
    img = np.full((height, width, 3), shade, dtype=np.uint8)
    return Frame.from_array(img)


def _server(**kwargs) -> FrameServer:
    return FrameServer("127.0.0.1", 0, **kwargs).start()


def test_frame_message_roundtrip_byte_exact():
    payload = encode_p6(_frame())
    msg = encode_frame_message(FORMAT_PIXMAP, payload)
    magic, length, fmt = struct.unpack(">4sIB", msg[:9])
    assert magic == FRAME_MAGIC
    assert fmt == FORMAT_PIXMAP
    assert length == len(payload)
    assert msg[9:] == payload
    assert decode_p6(msg[9:]).pixels == _frame().pixels


def test_empty_payload_message():
    msg = encode_frame_message(FORMAT_PIXMAP, b"")
    assert struct.unpack(">4sIB", msg)[1] == 0


def test_server_acks_valid_pixmap():
    received: list[Frame] = []
    server = _server(on_frame=received.append)
    try:
        frame = _frame()
        with socket.create_connection((server.host, server.port), timeout=5) as conn:
            conn.sendall(encode_frame_message(FORMAT_PIXMAP, encode_p6(frame)))
            assert conn.recv(1) == ACK
        deadline = time.time() + 2
        while not received and time.time() < deadline:
            time.sleep(0.01)
        assert len(received) == 1
        assert received[0].width == 64 and received[0].height == 48
        assert received[0].pixels == frame.pixels
    finally:
        server.stop()


def test_server_naks_bad_magic_and_closes():
    server = _server()
    try:
        with socket.create_connection((server.host, server.port), timeout=5) as conn:
            conn.sendall(struct.pack(">4sIB", b"XXXX", 4, 0) + b"abcd")
            assert conn.recv(1) == NAK
            try:
                rest = conn.recv(1)
            except ConnectionResetError:
                rest = b""  # reset counts as closed too
            assert rest == b""
    finally:
        server.stop()


def test_server_naks_bad_payload_and_continues():
    received: list[Frame] = []
    server = _server(on_frame=received.append)
    try:
        with socket.create_connection((server.host, server.port), timeout=5) as conn:
            conn.sendall(encode_frame_message(FORMAT_PIXMAP, b"not a pixmap"))
            assert conn.recv(1) == NAK
            conn.sendall(encode_frame_message(FORMAT_PIXMAP, encode_p6(_frame())))
            assert conn.recv(1) == ACK
    finally:
        server.stop()
    assert len(received) == 1


def test_server_naks_unknown_format():
    server = _server()
    try:
        with socket.create_connection((server.host, server.port), timeout=5) as conn:
            conn.sendall(struct.pack(">4sIB", FRAME_MAGIC, 0, 9))
            assert conn.recv(1) == NAK
    finally:
        server.stop()


def test_jpeg_format_needs_decoder():
    server = _server()
    try:
        with socket.create_connection((server.host, server.port), timeout=5) as conn:
            conn.sendall(encode_frame_message(1, b"\xff\xd8fakejpeg"))
            assert conn.recv(1) == NAK
    finally:
        server.stop()


def test_replay_300_frames_in_order_zero_drops():
    received: list[Frame] = []
    server = _server(on_frame=received.append)
    try:
        frames = [_frame(16, 12, shade=i % 256) for i in range(300)]
        sent = send_frames((server.host, server.port), iter(frames), fps=None)
        assert sent == 300
        deadline = time.time() + 5
        while len(received) < 300 and time.time() < deadline:
            time.sleep(0.01)
        assert len(received) == 300
        for i, frame in enumerate(received):
            assert frame.pixels[0] == i % 256
    finally:
        server.stop()


def test_send_frames_paces_to_fps():
    server = _server(on_frame=lambda f: None)
    try:
        frames = [_frame(8, 8) for _ in range(10)]
        start = time.monotonic()
        sent = send_frames((server.host, server.port), iter(frames), fps=50.0)
        elapsed = time.monotonic() - start
        assert sent == 10
        assert elapsed >= 0.15  # 10 frames at 50 fps is at least ~0.18 s
    finally:
        server.stop()


def test_mailbox_latest_wins():
    box = LatestWinsMailbox()
    a, b = _frame(8, 8, 1), _frame(8, 8, 2)
    box.put(a)
    box.put(b)  # replaces a without blocking
    assert box.dropped == 1
    got = box.get(timeout=0.5)
    assert got is b
    assert box.get(timeout=0.05) is None


def test_mailbox_handoff_across_threads():
    box = LatestWinsMailbox()
    out: list[Frame] = []

    def consumer():
        frame = box.get(timeout=2.0)
        if frame is not None:
            out.append(frame)

    t = threading.Thread(target=consumer)
    t.start()
    time.sleep(0.05)
    box.put(_frame(8, 8, 7))
    t.join()
    assert len(out) == 1 and out[0].pixels[0] == 7


def test_file_source_lexicographic_order_and_skip(tmp_path: Path):
    names = ["c.ppm", "a.ppm", "b.ppm"]
    for i, name in enumerate(sorted(names)):
        (tmp_path / name).write_bytes(encode_p6(_frame(8, 8, shade=i)))
    (tmp_path / "bad.ppm").write_bytes(b"junk that is not a pixmap")
    frames = list(file_source(tmp_path))
    assert len(frames) == 3
    assert [f.pixels[0] for f in frames] == [0, 1, 2]


def test_file_source_single_file(tmp_path: Path):
    p = tmp_path / "one.ppm"
    p.write_bytes(encode_p6(_frame(8, 8, shade=9)))
    frames = list(file_source(p))
    assert len(frames) == 1 and frames[0].pixels[0] == 9


def test_measure_stage_fps_forced_rate():
    row = measure_stage_fps(lambda: time.sleep(0.010), duration_s=0.4)
    assert row["count"] >= 2
    assert row["fps"] == pytest.approx(100.0, rel=0.10)
    assert row["sampling_ms"] == pytest.approx(10.0, rel=0.10)
    assert row["fps"] == pytest.approx(row["count"] / (row["elapsed_ms"] / 1000.0))


def test_measure_stage_fps_zero_iterations_is_error_row():
    row = measure_stage_fps(lambda: None, duration_s=1e-12)
    assert row["count"] == 0
    assert row["fps"] == 0.0
    assert row["sampling_ms"] is None
    assert "error" in row


def test_measure_stage_fps_rejects_bad_duration():
    with pytest.raises(ValueError):
        measure_stage_fps(lambda: None, duration_s=0.0)


def test_fps_formula_reference_row():
    # 57 iterations in 632 ms must print as 90.19 fps / 11.09 ms
    row = {
        "elapsed_ms": 632.0,
        "count": 57,
        "fps": 57 / (632.0 / 1000.0),
        "sampling_ms": 632.0 / 57,
    }
    assert row["fps"] == pytest.approx(90.19, abs=0.005)
    assert row["sampling_ms"] == pytest.approx(11.09, abs=0.005)
    table = format_fps_table("capture", [row])
    assert "90.19" in table
    assert "11.09" in table


def test_fps_table_shape():
    rows = [measure_stage_fps(lambda: None, duration_s=0.01) for _ in range(3)]
    table = format_fps_table("stage: noop", rows)
    lines = table.splitlines()
    assert lines[0] == "stage: noop"
    header = lines[1].split()
    assert header == ["Execution", "time", "(ms)", "No.", "Images", "FPS", "Sampling", "(ms)"]
    assert len(lines) == 5
    for line in lines[2:]:
        assert len(line.split()) == 4


def test_fps_table_error_row_renders_dash():
    row = {"elapsed_ms": 0.01, "count": 0, "fps": 0.0, "sampling_ms": None, "error": "x"}
    table = format_fps_table("t", [row])
    assert table.splitlines()[-1].split()[-1] == "-"
