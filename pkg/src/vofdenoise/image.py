"""Grayscale image representation, PGM/PNG I/O and exact reductions.

Images are plain 2-D ``numpy.float64`` arrays of shape ``(height, width)``
holding intensities on the nominal ``[0, 255]`` scale. There is no
``[0, 1]`` normalization anywhere in the package.
"""

from __future__ import annotations

import math
import os
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

__all__ = [
    "ImageFormatError",
    "as_image",
    "load_image",
    "save_image",
    "save_png",
    "mean",
    "total",
]

_WHITESPACE = b" \t\r\n\x0b\x0c"


class ImageFormatError(ValueError):
    """Raised for unreadable, unsupported or non-grayscale image files."""


def as_image(data, *, copy: bool = False) -> np.ndarray:
    """Validate ``data`` as an image and return it as a float64 array."""
    arr = np.array(data, dtype=np.float64) if copy else np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"image must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"image must be at least 1x1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains NaN or infinite values")
    return arr


def _pgm_tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` header tokens from a PNM buffer, skipping comments."""
    tokens: list[bytes] = []
    pos = 0
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos] in _WHITESPACE:
            pos += 1
        if pos < n and buf[pos] == ord("#"):
            while pos < n and buf[pos] not in b"\r\n":
                pos += 1
            continue
        if pos >= n:
            raise ImageFormatError("truncated PGM header")
        start = pos
        while pos < n and buf[pos] not in _WHITESPACE and buf[pos] != ord("#"):
            pos += 1
        tokens.append(buf[start:pos])
    return tokens, pos


def _parse_pgm(buf: bytes) -> np.ndarray:
    magic = buf[:2]
    if magic in (b"P3", b"P6"):
        raise ImageFormatError("color PPM input is not supported; convert to grayscale first")
    if magic not in (b"P2", b"P5"):
        raise ImageFormatError("not a PGM file")
    tokens, pos = _pgm_tokens(buf[2:], 3)
    pos += 2
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise ImageFormatError(f"malformed PGM header: {tokens!r}") from exc
    if width < 1 or height < 1:
        raise ImageFormatError(f"invalid PGM size {width}x{height}")
    if not 1 <= maxval <= 65535:
        raise ImageFormatError(f"invalid PGM maxval {maxval}")
    npix = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = buf[pos:pos + npix * dtype.itemsize]
        if len(raw) < npix * dtype.itemsize:
            raise ImageFormatError("truncated PGM raster")
        values = np.frombuffer(raw, dtype=dtype).astype(np.float64)
    else:
        fields = buf[pos:].split()
        if len(fields) < npix:
            raise ImageFormatError("truncated PGM raster")
        try:
            values = np.array([int(v) for v in fields[:npix]], dtype=np.float64)
        except ValueError as exc:
            raise ImageFormatError("non-integer sample in ASCII PGM") from exc

    if values.max(initial=0.0) > maxval:
        raise ImageFormatError("PGM sample exceeds maxval")
    return (values * 255.0 / maxval).reshape(height, width)


def _load_png(path: Path) -> np.ndarray:
    try:
        with PILImage.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "L":
                return np.asarray(im, dtype=np.float64)
            if mode == "1":
                return np.asarray(im, dtype=np.float64) * 255.0
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                return np.asarray(im, dtype=np.float64) * 255.0 / 65535.0
    except OSError as exc:
        raise ImageFormatError(f"cannot read {path}: {exc}") from exc
    raise ImageFormatError(f"{path}: image mode {mode!r} is not grayscale")


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Load a grayscale PGM (P2/P5, 8 or 16 bit) or PNG file.

    Samples are rescaled linearly by ``255 / maxval``, so 8-bit data maps to
    the same float values. Color inputs are rejected rather than converted.
    """
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as exc:
        raise ImageFormatError(f"cannot read {path}: {exc}") from exc
    if not buf:
        raise ImageFormatError(f"{path}: empty file")
    if buf[:8] == b"\x89PNG\r\n\x1a\n":
        img = _load_png(path)
    elif buf[:1] == b"P":
        img = _parse_pgm(buf)
    else:
        raise ImageFormatError(f"{path}: unsupported image format")
    return as_image(img)


def _to_bytes(img: np.ndarray) -> np.ndarray:
    img = as_image(img)
    # np.rint rounds half to even
    return np.rint(np.clip(img, 0.0, 255.0)).astype(np.uint8)


def save_image(img: np.ndarray, path: str | os.PathLike) -> None:
    """Write ``img`` as an 8-bit binary PGM (P5) after clamping and rounding."""
    data = _to_bytes(img)
    height, width = data.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def save_png(img: np.ndarray, path: str | os.PathLike) -> None:
    """Write ``img`` as an 8-bit grayscale PNG after clamping and rounding."""
    PILImage.fromarray(_to_bytes(img), mode="L").save(path)


def total(img: np.ndarray) -> float:
    """Correctly rounded sum of all pixel values."""
    return math.fsum(np.asarray(img, dtype=np.float64).ravel().tolist())


def mean(img: np.ndarray) -> float:
    """Arithmetic mean using exact (fsum) accumulation."""
    img = np.asarray(img, dtype=np.float64)
    return total(img) / img.size
