"""Binary importance-map file format.

Layout: 16-byte header (magic "PAMI", u32 width, u32 height, u32 reserved,
all little-endian) followed by width*height row-major 32-bit little-endian
floats. Writing and re-reading a file reproduces it byte for byte.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .types import ImportanceMap

__all__ = ["MapFormatError", "write_map", "read_map", "MAGIC"]

MAGIC = b"PAMI"
_HEADER = struct.Struct("<4sIII")


class MapFormatError(ValueError):
    """The file is not a valid importance-map dump."""


def write_map(path, imap: ImportanceMap) -> None:
    payload = imap.values.astype("<f4").tobytes()
    header = _HEADER.pack(MAGIC, imap.width, imap.height, 0)
    Path(path).write_bytes(header + payload)


def read_map(path) -> ImportanceMap:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise MapFormatError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, width, height, _ = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise MapFormatError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * width * height
    if len(blob) != expected:
        raise MapFormatError(
            f"{path}: expected {expected} bytes for {width}x{height}, got {len(blob)}")
    values = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size)
    return ImportanceMap(values.astype(np.float64).reshape(height, width))
