"""Real and complex 2D fields, plus their on-disk formats.

Images and spatial kernels are plain ``float64`` arrays of shape
``(height, width)``; spectra are ``complex128`` arrays on the full DFT grid.
Kernels use the FFT origin convention: index ``(0, 0)`` is the kernel
center, and anything meant for display goes through a half-period shift.

Two file formats are supported:

* PGM (P2 ASCII and P5 binary, 8 or 16 bit) for images.
* A small binary container ("field file") for bit-exact storage of real
  or complex float64 grids::

      offset  size  content
      0       8     magic b"SCLREGF1"
      8       1     kind (0 = real, 1 = complex)
      9       8     height, uint64 little-endian
      17      8     width,  uint64 little-endian
      25      ...   row-major float64 little-endian payload
                    (complex: interleaved re, im)
"""

from __future__ import annotations

import os
import struct

import numpy as np

__all__ = [
    "FormatError",
    "as_image",
    "as_spectrum",
    "hermitian_deviation",
    "load_pgm",
    "save_pgm",
    "clipped_fraction",
    "load_field",
    "save_field",
    "center_crop",
]

FIELD_MAGIC = b"SCLREGF1"
_FIELD_HEADER = struct.Struct("<8sBQQ")
KIND_REAL = 0
KIND_COMPLEX = 1


class FormatError(ValueError):
    """A file does not follow the expected layout.

    ``offset`` is the byte position at which parsing failed, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


def as_image(data) -> np.ndarray:
    """Validate and convert ``data`` into a finite 2D float64 grid."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2D grid, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("grid contains non-finite values")
    return arr


def as_spectrum(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2D field, got shape {arr.shape}")
    return arr


def _reflect(field: np.ndarray) -> np.ndarray:
    # field[(-i) % H, (-j) % W]
    return np.roll(field[::-1, ::-1], 1, axis=(0, 1))


def hermitian_deviation(field) -> float:
    """Largest violation of ``F[-k] == conj(F[k])``, relative to ``max|F|``.

    Returns 0.0 for an all-zero field.
    """
    field = np.asarray(field)
    scale = np.max(np.abs(field))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(_reflect(field) - np.conj(field))) / scale)


# --------------------------------------------------------------------------
# PGM


def _pgm_tokens(buf: bytes, count: int, pos: int):
    """Read ``count`` whitespace separated header tokens, skipping comments."""
    tokens = []
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos : pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos : pos + 1] == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= n:
            raise FormatError("truncated PGM header", pos)
        start = pos
        while pos < n and not buf[pos : pos + 1].isspace() and buf[pos : pos + 1] != b"#":
            pos += 1
        tok = buf[start:pos]
        if not tok.isdigit():
            raise FormatError(f"expected an integer in PGM header, got {tok!r}", start)
        tokens.append(int(tok))
    return tokens, pos


def load_pgm(path) -> np.ndarray:
    """Read a P2 or P5 graymap and scale intensities to ``[0, 1]``."""
    with open(path, "rb") as fh:
        buf = fh.read()
    magic = buf[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"not a PGM file (magic {magic!r})", 0)
    (width, height, maxval), pos = _pgm_tokens(buf, 3, 2)
    if width < 1 or height < 1:
        raise FormatError(f"invalid PGM dimensions {width}x{height}", pos)
    if not 1 <= maxval <= 65535:
        raise FormatError(f"unsupported PGM maxval {maxval}", pos)
    npix = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        if pos >= len(buf) or not buf[pos : pos + 1].isspace():
            raise FormatError("missing whitespace after PGM header", pos)
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        nbytes = npix * dtype.itemsize
        if len(buf) - pos < nbytes:
            raise FormatError(
                f"truncated PGM raster: expected {nbytes} bytes, found {len(buf) - pos}",
                len(buf),
            )
        values = np.frombuffer(buf, dtype=dtype, count=npix, offset=pos)
    else:
        try:
            values, _ = _pgm_tokens(buf, npix, pos)
        except FormatError as exc:
            raise FormatError(f"truncated or malformed PGM raster: {exc}") from exc
        values = np.asarray(values)

    if np.any(values > maxval):
        raise FormatError(f"PGM sample exceeds maxval {maxval}", pos)
    return values.reshape(height, width).astype(np.float64) / maxval


def clipped_fraction(grid, clip_lo: float, clip_hi: float) -> float:
    """Fraction of pixels strictly outside ``[clip_lo, clip_hi]``."""
    grid = np.asarray(grid)
    return float(np.mean((grid < clip_lo) | (grid > clip_hi)))


def save_pgm(grid, path, clip_lo: float, clip_hi: float) -> float:
    """Write ``grid`` as an 8-bit binary PGM after clamping to the clip window.

    Values are mapped affinely so ``clip_lo -> 0`` and ``clip_hi -> 255``
    (rounding down). Returns the fraction of pixels that had to be clipped.
    """
    if not clip_lo < clip_hi:
        raise ValueError("clip_lo must be smaller than clip_hi")
    grid = as_image(grid)
    frac = clipped_fraction(grid, clip_lo, clip_hi)
    scaled = (np.clip(grid, clip_lo, clip_hi) - clip_lo) / (clip_hi - clip_lo)
    raster = np.floor(scaled * 255.0).astype(np.uint8)
    height, width = grid.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (width, height))
        fh.write(raster.tobytes())
    return frac


# --------------------------------------------------------------------------
# field files


def save_field(field, path) -> None:
    """Store a real or complex 2D grid losslessly."""
    arr = np.asarray(field)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2D field, got shape {arr.shape}")
    if np.iscomplexobj(arr):
        kind = KIND_COMPLEX
        payload = np.ascontiguousarray(arr, dtype="<c16")
    else:
        kind = KIND_REAL
        payload = np.ascontiguousarray(arr, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_FIELD_HEADER.pack(FIELD_MAGIC, kind, arr.shape[0], arr.shape[1]))
        fh.write(payload.tobytes())


def load_field(path, kind: str | None = None) -> np.ndarray:
    """Load a field file.

    Parameters
    ----------
    path : path-like
    kind : {"real", "complex", None}
        When given, the stored kind must match; ``None`` accepts either.
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < _FIELD_HEADER.size:
        raise FormatError("truncated field header", len(buf))
    magic, stored, height, width = _FIELD_HEADER.unpack_from(buf)
    if magic != FIELD_MAGIC:
        raise FormatError(f"bad magic {magic!r}", 0)
    if stored not in (KIND_REAL, KIND_COMPLEX):
        raise FormatError(f"unknown field kind {stored}", 8)
    if kind is not None:
        wanted = {"real": KIND_REAL, "complex": KIND_COMPLEX}[kind]
        if stored != wanted:
            have = "complex" if stored == KIND_COMPLEX else "real"
            raise FormatError(f"field kind mismatch: file holds {have}, {kind} requested", 8)
    if height < 1 or width < 1:
        raise FormatError(f"invalid field dimensions {height}x{width}", 9)
    dtype = np.dtype("<c16") if stored == KIND_COMPLEX else np.dtype("<f8")
    expected = height * width * dtype.itemsize
    actual = len(buf) - _FIELD_HEADER.size
    if actual != expected:
        raise FormatError(
            f"payload holds {actual} bytes, expected {expected}", _FIELD_HEADER.size + min(actual, expected)
        )
    data = np.frombuffer(buf, dtype=dtype, offset=_FIELD_HEADER.size)
    return data.reshape(height, width).astype(dtype.newbyteorder("="))


def center_crop(grid, h: int, w: int) -> np.ndarray:
    """Crop an ``h x w`` window around the kernel origin.

    The grid is half-period shifted first, so the origin lands at index
    ``(h // 2, w // 2)`` of the crop.
    """
    grid = np.asarray(grid)
    height, width = grid.shape
    if not (1 <= h <= height and 1 <= w <= width):
        raise ValueError(f"crop {h}x{w} does not fit a {height}x{width} grid")
    shifted = np.fft.fftshift(grid)
    top = height // 2 - h // 2
    left = width // 2 - w // 2
    return shifted[top : top + h, left : left + w].copy()


def ensure_parent(path) -> None:
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
