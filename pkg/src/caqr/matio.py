"""Matrix file I/O: the binary MAT1 format and CSV interchange.

MAT1 layout, all little-endian:

    bytes  0..7   magic ``b"TSQRMAT1"``
    bytes  8..11  u32 rows
    bytes 12..15  u32 cols
    bytes 16..23  reserved (two u32 zeros, kept for a 24-byte header)
    bytes 24..    rows*cols IEEE-754 doubles in column-major order
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import as_matrix

MAGIC = b"TSQRMAT1"
HEADER = struct.Struct("<8sIIII")  # magic, rows, cols, reserved, reserved2


class FormatError(ValueError):
    """Malformed MAT1 file."""


def write_mat1(path, A) -> None:
    A = as_matrix(A)
    rows, cols = A.shape
    with open(path, "wb") as f:
        f.write(HEADER.pack(MAGIC, rows, cols, 0, 0))
        f.write(np.asfortranarray(A).tobytes(order="F"))


def read_mat1(path) -> np.ndarray:
    with open(path, "rb") as f:
        head = f.read(HEADER.size)
        if len(head) != HEADER.size:
            raise FormatError(f"{path}: truncated header")
        magic, rows, cols, _, _ = HEADER.unpack(head)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        body = f.read(8 * rows * cols)
    if len(body) != 8 * rows * cols:
        raise FormatError(f"{path}: expected {rows}x{cols} doubles, file too short")
    data = np.frombuffer(body, dtype="<f8").reshape((rows, cols), order="F")
    return as_matrix(data, str(path))


def write_csv(path, A) -> None:
    np.savetxt(path, as_matrix(A), delimiter=",", fmt="%.17g")


def read_csv(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return as_matrix(data, str(path))


def read_matrix(path) -> np.ndarray:
    """Dispatch on extension: .mat -> MAT1, .csv -> CSV."""
    p = Path(path)
    if p.suffix.lower() == ".csv":
        return read_csv(p)
    return read_mat1(p)


def write_matrix(path, A) -> None:
    p = Path(path)
    if p.suffix.lower() == ".csv":
        write_csv(p, A)
    else:
        write_mat1(p, A)
