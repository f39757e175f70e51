"""Primitive readers/writers for the MBOE binary container format.

All integers are little-endian.  Strings are length-prefixed: u32 byte
length followed by UTF-8 bytes.  Counts are u64.  Float arrays are u64
element count followed by raw IEEE-754 float64 values.

Every container starts with the magic bytes ``MBOE``, a u32 format
version, and a length-prefixed kind string identifying the payload.
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

from .errors import FormatError

MAGIC = b"MBOE"
VERSION = 1


def write_u32(fh: BinaryIO, value: int) -> None:
    fh.write(struct.pack("<I", value))


def write_u64(fh: BinaryIO, value: int) -> None:
    fh.write(struct.pack("<Q", value))


def write_str(fh: BinaryIO, value: str) -> None:
    data = value.encode("utf-8")
    write_u32(fh, len(data))
    fh.write(data)


def write_f64_array(fh: BinaryIO, arr: np.ndarray) -> None:
    flat = np.ascontiguousarray(arr, dtype="<f8").ravel()
    write_u64(fh, flat.size)
    fh.write(flat.tobytes())


def _read_exact(fh: BinaryIO, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise FormatError(f"truncated file: expected {n} bytes, got {len(data)}")
    return data


def read_u32(fh: BinaryIO) -> int:
    return struct.unpack("<I", _read_exact(fh, 4))[0]


def read_u64(fh: BinaryIO) -> int:
    return struct.unpack("<Q", _read_exact(fh, 8))[0]


def read_str(fh: BinaryIO) -> str:
    length = read_u32(fh)
    try:
        return _read_exact(fh, length).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"corrupt string field: {exc}") from exc


def read_f64_array(fh: BinaryIO, shape: tuple[int, ...] | None = None) -> np.ndarray:
    count = read_u64(fh)
    arr = np.frombuffer(_read_exact(fh, count * 8), dtype="<f8").astype(np.float64)
    if shape is not None:
        try:
            arr = arr.reshape(shape)
        except ValueError as exc:
            raise FormatError(f"array of {count} values does not fit shape {shape}") from exc
    return arr


def write_header(fh: BinaryIO, kind: str) -> None:
    fh.write(MAGIC)
    write_u32(fh, VERSION)
    write_str(fh, kind)


def read_header(fh: BinaryIO) -> str:
    magic = fh.read(4)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}: not an MBOE container")
    version = read_u32(fh)
    if version != VERSION:
        raise FormatError(f"unsupported container version {version} (expected {VERSION})")
    return read_str(fh)


def expect_eof(fh: BinaryIO) -> None:
    if fh.read(1):
        raise FormatError("trailing bytes after payload")
