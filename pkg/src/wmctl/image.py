"""8-bit raster images and binary portable pixmap (P5/P6) I/O.

The toolkit's on-disk image format is deliberately minimal: binary PGM for
grayscale and binary PPM for RGB, maxval 255, written with a single
whitespace character after each header token.
"""

from __future__ import annotations

import math
import os
from pathlib import Path

import numpy as np

from .errors import DimensionError, ParseError

# ITU-R BT.601 luma weights, used for embedding in the luma plane of RGB images.
BT601_WEIGHTS = np.array([0.299, 0.587, 0.114])

# Declared PSNR for identical images (zero MSE).
PSNR_CAP_DB = 99.0


class ImageBuffer:
    """An 8-bit raster image, one (gray) or three (RGB) channels.

    Wraps a uint8 numpy array of shape (height, width) or (height, width, 3).
    Instances are treated as immutable by every operation in the toolkit;
    operations return new buffers.
    """

    __slots__ = ("pixels",)

    def __init__(self, pixels: np.ndarray):
        pixels = np.asarray(pixels)
        if pixels.dtype != np.uint8:
            raise ValueError("pixel samples must be uint8")
        if pixels.ndim == 2:
            pass
        elif pixels.ndim == 3 and pixels.shape[2] == 3:
            pass
        else:
            raise DimensionError(
                f"expected shape (h, w) or (h, w, 3), got {pixels.shape}"
            )
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise DimensionError("image must have at least one pixel")
        self.pixels = pixels

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else 3

    def luma(self) -> np.ndarray:
        """Luma plane as float64 (the gray plane itself for 1-channel images)."""
        if self.channels == 1:
            return self.pixels.astype(np.float64)
        return self.pixels.astype(np.float64) @ BT601_WEIGHTS

    def with_luma(self, new_luma: np.ndarray) -> "ImageBuffer":
        """New buffer whose luma was replaced; chroma is preserved for RGB.

        For RGB the luma delta is added to every channel, which leaves the
        color-difference planes untouched. Result is clamped and rounded.
        """
        if self.channels == 1:
            out = np.clip(np.rint(new_luma), 0, 255).astype(np.uint8)
            return ImageBuffer(out)
        delta = new_luma - self.luma()
        rgb = self.pixels.astype(np.float64) + delta[:, :, None]
        return ImageBuffer(np.clip(np.rint(rgb), 0, 255).astype(np.uint8))

    def copy(self) -> "ImageBuffer":
        return ImageBuffer(self.pixels.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return (
            self.pixels.shape == other.pixels.shape
            and bool(np.array_equal(self.pixels, other.pixels))
        )

    def __hash__(self):  # pragma: no cover - identity hashing is never used
        raise TypeError("ImageBuffer is unhashable")

    def __repr__(self) -> str:
        kind = "gray" if self.channels == 1 else "rgb"
        return f"ImageBuffer({self.width}x{self.height} {kind})"


def psnr(a: ImageBuffer, b: ImageBuffer) -> float:
    """Peak signal-to-noise ratio in dB, peak 255, capped at 99.0 for equality."""
    if a.pixels.shape != b.pixels.shape:
        raise DimensionError(
            f"psnr requires equal shapes, got {a.pixels.shape} vs {b.pixels.shape}"
        )
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(255.0**2 / mse))


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # Skips whitespace and '#' comment lines between header tokens.
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ParseError("unexpected end of pixmap header")
    return data[start:pos], pos


def read_pixmap(path: str | os.PathLike) -> ImageBuffer:
    """Read a binary PGM (P5) or PPM (P6) file with maxval 255."""
    data = Path(path).read_bytes()
    magic, pos = _read_token(data, 0)
    if magic not in (b"P5", b"P6"):
        raise ParseError(f"{path}: unsupported pixmap magic {magic!r}")
    fields = []
    for name in ("width", "height", "maxval"):
        tok, pos = _read_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise ParseError(f"{path}: non-numeric {name} field {tok!r}") from None
    width, height, maxval = fields
    if maxval != 255:
        raise ParseError(f"{path}: only maxval 255 is supported, got {maxval}")
    if width < 1 or height < 1:
        raise ParseError(f"{path}: bad dimensions {width}x{height}")
    pos += 1  # single whitespace byte after the maxval token
    channels = 1 if magic == b"P5" else 3
    expected = width * height * channels
    raster = data[pos : pos + expected]
    if len(raster) != expected:
        raise ParseError(
            f"{path}: raster truncated, expected {expected} bytes, got {len(raster)}"
        )
    arr = np.frombuffer(raster, dtype=np.uint8)
    if channels == 1:
        arr = arr.reshape(height, width)
    else:
        arr = arr.reshape(height, width, 3)
    return ImageBuffer(arr.copy())


def write_pixmap(image: ImageBuffer, path: str | os.PathLike) -> None:
    """Write as binary PGM/PPM, single whitespace after each header token."""
    magic = b"P5" if image.channels == 1 else b"P6"
    header = b"%s\n%d %d\n255\n" % (magic, image.width, image.height)
    Path(path).write_bytes(header + image.pixels.tobytes())
