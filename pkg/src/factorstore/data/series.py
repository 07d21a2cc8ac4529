"""Binary series codec.

Layout: bytes 0..3 hold the start index as an unsigned 32-bit little-endian
integer, followed by consecutive 32-bit little-endian IEEE-754 floats. The same
layout backs raw attribute series and expression-cache entries.
"""

import os
from pathlib import Path
from typing import Tuple

import numpy as np


HEADER_DTYPE = np.dtype("<u4")
VALUE_DTYPE = np.dtype("<f4")
HEADER_SIZE = HEADER_DTYPE.itemsize
VALUE_SIZE = VALUE_DTYPE.itemsize


def encode(start_index: int, values: np.ndarray) -> bytes:
    """Serialize a series to its file bytes."""
    header = np.array([start_index], dtype=HEADER_DTYPE).tobytes()
    return header + np.asarray(values, dtype=VALUE_DTYPE).tobytes()


def write_atomic(path: Path, payload: bytes) -> None:
    """Write ``payload`` to a sibling temp file, then rename it into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    with open(tmp, "wb") as f:
        f.write(payload)
    os.replace(tmp, path)


def write(path: Path, start_index: int, values: np.ndarray) -> None:
    """Write a complete series file."""
    write_atomic(path, encode(start_index, values))


def append(path: Path, values: np.ndarray) -> None:
    """Append whole records at the tail; header and prior bytes are untouched."""
    payload = np.asarray(values, dtype=VALUE_DTYPE).tobytes()
    if not payload:
        return
    with open(path, "ab") as f:
        f.write(payload)


def extent(path: Path) -> Tuple[int, int]:
    """
    Start index and value count, from the header and file size alone.

    A trailing partial record (possible only mid-append) is ignored.
    """
    with open(path, "rb") as f:
        start = int(np.frombuffer(f.read(HEADER_SIZE), dtype=HEADER_DTYPE)[0])
        f.seek(0, os.SEEK_END)
        size = f.tell()
    return start, (size - HEADER_SIZE) // VALUE_SIZE


def read_range(path: Path, lo: int, hi: int) -> np.ndarray:
    """
    Values for calendar indices ``[lo, hi]``, NaN where nothing is stored.

    Seeks straight to the first needed record; never scans the whole file.
    """
    out = np.full(hi - lo + 1, np.nan, dtype=np.float32)
    with open(path, "rb") as f:
        start = int(np.frombuffer(f.read(HEADER_SIZE), dtype=HEADER_DTYPE)[0])
        f.seek(0, os.SEEK_END)
        count = (f.tell() - HEADER_SIZE) // VALUE_SIZE
        a = max(lo, start)
        b = min(hi, start + count - 1)
        if a > b:
            return out
        f.seek(HEADER_SIZE + VALUE_SIZE * (a - start))
        raw = f.read(VALUE_SIZE * (b - a + 1))
    out[a - lo : b - lo + 1] = np.frombuffer(raw, dtype=VALUE_DTYPE)
    return out
