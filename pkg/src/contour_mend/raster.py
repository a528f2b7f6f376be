"""Raster value types and Netpbm (PGM/PBM) codecs.

Coordinates are (row, col) with row 0 at the top. In a :class:`BinaryImage`
1 is contour ink and 0 is background, which is also what PBM stores.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class NetpbmError(ValueError):
    """Base class for malformed PGM/PBM streams."""


class HeaderError(NetpbmError):
    pass


class TruncatedDataError(NetpbmError):
    pass


class MaxvalError(NetpbmError):
    pass


class PixelCoord(NamedTuple):
    row: int
    col: int


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.uint8, copy=True)
    arr.flags.writeable = False
    return arr


def _check_shape(arr: np.ndarray) -> None:
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D raster, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"raster must be at least 1x1, got {arr.shape}")


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit single-channel raster. ``data`` is a read-only (height, width) array."""

    data: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.data)
        _check_shape(raw)
        if raw.size and (raw.min() < 0 or raw.max() > 255):
            raise ValueError("intensity values must lie in [0, 255]")
        if raw.dtype.kind == "f" and not np.all(raw == np.round(raw)):
            raise ValueError("intensity values must be integers")
        object.__setattr__(self, "data", _frozen(raw))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class BinaryImage:
    """{0,1} raster, 1 = foreground ink. ``data`` is a read-only (height, width) array."""

    data: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.data)
        _check_shape(raw)
        if raw.dtype == bool:
            raw = raw.astype(np.uint8)
        elif not np.isin(raw, (0, 1)).all():
            raise ValueError("binary image values must be 0 or 1")
        object.__setattr__(self, "data", _frozen(raw))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def count(self) -> int:
        return int(self.data.sum())

    def to_gray(self, ink: int = 255) -> GrayImage:
        """Promote to grayscale with foreground mapped to ``ink`` and background to 0."""
        return GrayImage(self.data.astype(np.int32) * ink)

    def __eq__(self, other):
        if not isinstance(other, BinaryImage):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    __hash__ = None


# ---------------------------------------------------------------------------
# Netpbm parsing
# ---------------------------------------------------------------------------

_WS = b" \t\r\n\v\f"


def _read_header(buf: bytes, nfields: int) -> tuple[bytes, list[int], int]:
    """Parse magic plus ``nfields`` integers; return (magic, fields, body offset)."""
    if len(buf) < 2 or buf[:1] != b"P":
        raise HeaderError("missing Netpbm magic number")
    magic = buf[:2]
    pos = 2
    fields: list[int] = []
    while len(fields) < nfields:
        while pos < len(buf) and (buf[pos] in _WS or buf[pos:pos + 1] == b"#"):
            if buf[pos:pos + 1] == b"#":
                end = buf.find(b"\n", pos)
                pos = len(buf) if end < 0 else end + 1
            else:
                pos += 1
        start = pos
        while pos < len(buf) and buf[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise HeaderError(f"header ended after {len(fields)} of {nfields} fields")
        fields.append(int(buf[start:pos]))
    # exactly one whitespace byte separates the header from a raw body
    if pos < len(buf) and buf[pos] not in _WS:
        raise HeaderError("header not terminated by whitespace")
    pos += 1
    return magic, fields, pos


def _ascii_values(body: bytes, count: int, what: str) -> np.ndarray:
    text = re.sub(rb"#[^\n]*", b" ", body)
    tokens = text.split()
    if len(tokens) < count:
        raise TruncatedDataError(f"{what}: expected {count} samples, found {len(tokens)}")
    try:
        return np.array(tokens[:count], dtype=np.int64)
    except ValueError as exc:
        raise HeaderError(f"{what}: non-numeric sample") from exc


def _ascii_rows(a: np.ndarray) -> bytes:
    """Space-separated decimal samples, one image row per line."""
    return ("\n".join(" ".join(map(str, row)) for row in a.tolist()) + "\n").encode()


def _check_dims(width: int, height: int) -> None:
    if width < 1 or height < 1:
        raise HeaderError(f"invalid dimensions {width}x{height}")


def read_pgm(buf: bytes) -> GrayImage:
    """Decode a P2 or P5 stream with maxval <= 255."""
    magic = buf[:2]
    if magic not in (b"P2", b"P5"):
        raise HeaderError(f"not a PGM stream (magic {magic!r})")
    magic, (width, height, maxval), pos = _read_header(buf, 3)
    _check_dims(width, height)
    if maxval > 255:
        raise MaxvalError(f"maxval {maxval} exceeds 255")
    if maxval < 1:
        raise HeaderError(f"invalid maxval {maxval}")
    n = width * height
    if magic == b"P2":
        values = _ascii_values(buf[pos:], n, "P2")
    else:
        body = buf[pos:pos + n]
        if len(body) < n:
            raise TruncatedDataError(f"P5: expected {n} bytes, found {len(body)}")
        values = np.frombuffer(body, dtype=np.uint8).astype(np.int64)
    if values.max(initial=0) > maxval:
        raise HeaderError(f"sample exceeds maxval {maxval}")
    return GrayImage(values.reshape(height, width))


def write_pgm(img: GrayImage, ascii: bool = False) -> bytes:
    header = b"%s\n%d %d\n255\n" % (b"P2" if ascii else b"P5", img.width, img.height)
    if not ascii:
        return header + img.data.tobytes()
    return header + _ascii_rows(img.data)


def read_pbm(buf: bytes) -> BinaryImage:
    """Decode a P1 or P4 stream."""
    magic = buf[:2]
    if magic not in (b"P1", b"P4"):
        raise HeaderError(f"not a PBM stream (magic {magic!r})")
    if magic == b"P1":
        magic, (width, height), pos = _read_header(buf, 2)
        _check_dims(width, height)
        # P1 samples may be packed without separators
        text = re.sub(rb"#[^\n]*", b"", buf[pos:])
        digits = np.frombuffer(b"".join(text.split()), dtype=np.uint8)
        n = width * height
        if len(digits) < n:
            raise TruncatedDataError(f"P1: expected {n} samples, found {len(digits)}")
        values = digits[:n] - ord("0")
        if np.any(values > 1):
            raise HeaderError("P1: samples must be 0 or 1")
        return BinaryImage(values.reshape(height, width))
    magic, (width, height), pos = _read_header(buf, 2)
    _check_dims(width, height)
    stride = (width + 7) // 8
    body = buf[pos:pos + stride * height]
    if len(body) < stride * height:
        raise TruncatedDataError(f"P4: expected {stride * height} bytes, found {len(body)}")
    packed = np.frombuffer(body, dtype=np.uint8).reshape(height, stride)
    bits = np.unpackbits(packed, axis=1)[:, :width]
    return BinaryImage(bits)


def write_pbm(img: BinaryImage, ascii: bool = False) -> bytes:
    if ascii:
        header = b"P1\n%d %d\n" % (img.width, img.height)
        return header + _ascii_rows(img.data)
    header = b"P4\n%d %d\n" % (img.width, img.height)
    return header + np.packbits(img.data, axis=1).tobytes()


def load_pgm(path) -> GrayImage:
    with open(path, "rb") as fh:
        return read_pgm(fh.read())


def load_pbm(path) -> BinaryImage:
    with open(path, "rb") as fh:
        return read_pbm(fh.read())


def save_pgm(path, img: GrayImage, ascii: bool = False) -> None:
    with open(path, "wb") as fh:
        fh.write(write_pgm(img, ascii=ascii))


def save_pbm(path, img: BinaryImage, ascii: bool = False) -> None:
    with open(path, "wb") as fh:
        fh.write(write_pbm(img, ascii=ascii))
