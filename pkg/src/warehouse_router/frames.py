"""Raw RGB frames and portable-pixmap (P6) encoding.

Frames are immutable row-major RGB8 buffers tagged with the pixel scale.
The default scale maps a 640 px camera line to 190 cm of floor, i.e.
2.96875 mm per pixel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_MM_PER_PX = 2.96875


class PixmapError(ValueError):
    """Malformed portable-pixmap data."""


@dataclass(frozen=True)
class Frame:
    width: int
    height: int
    pixels: bytes
    mm_per_px: float = DEFAULT_MM_PER_PX

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"bad frame dims {self.width}x{self.height}")
        if self.mm_per_px <= 0:
            raise ValueError("mm_per_px must be positive")
        expected = self.width * self.height * 3
        if len(self.pixels) != expected:
            raise ValueError(
                f"pixel buffer holds {len(self.pixels)} bytes, expected {expected}"
            )

    def as_array(self) -> np.ndarray:
        """(height, width, 3) uint8 view of the buffer (read-only)."""
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(
            self.height, self.width, 3
        )

    @classmethod
    def from_array(
        cls, arr: np.ndarray, mm_per_px: float = DEFAULT_MM_PER_PX
    ) -> "Frame":
        a = np.asarray(arr, dtype=np.uint8)
        if a.ndim != 3 or a.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) array, got {a.shape}")
        return cls(a.shape[1], a.shape[0], a.tobytes(), mm_per_px)


def encode_p6(frame: Frame) -> bytes:
    header = f"P6\n{frame.width} {frame.height}\n255\n".encode("ascii")
    return header + frame.pixels


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # skip whitespace and '#' comments, then read one token
    n = len(data)
    while pos < n:
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise PixmapError("truncated pixmap header")
    return data[start:pos], pos


def decode_p6(data: bytes, mm_per_px: float = DEFAULT_MM_PER_PX) -> Frame:
    """Parse a binary pixmap (magic P6, maxval 255)."""
    if not data.startswith(b"P6"):
        raise PixmapError("not a P6 pixmap")
    pos = 2
    fields = []
    for _ in range(3):
        token, pos = _read_token(data, pos)
        try:
            fields.append(int(token))
        except ValueError as exc:
            raise PixmapError(f"bad header token {token!r}") from exc
    width, height, maxval = fields
    if maxval != 255:
        raise PixmapError(f"unsupported maxval {maxval}")
    if width < 1 or height < 1:
        raise PixmapError(f"bad dimensions {width}x{height}")
    pos += 1  # single whitespace byte separates header from raster
    raster = data[pos : pos + width * height * 3]
    if len(raster) != width * height * 3:
        raise PixmapError("truncated raster")
    return Frame(width, height, raster, mm_per_px)
