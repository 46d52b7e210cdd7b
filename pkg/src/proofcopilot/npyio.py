"""Hand-rolled reader/writer for the NPY v1.0 binary array format.

Covers exactly the slice of the format premise matrices need: 2-D C-order
little-endian float32. The writer produces byte-identical output to
numpy's own save for such arrays (magic, version 1.0, header dict padded
with spaces to a 64-byte boundary, then the raw payload), which keeps
embedding files diffable and makes round-trips bit-exact. Malformed
streams raise FormatError; a header whose shape disagrees with the
payload length raises ShapeError.
"""

from __future__ import annotations

import ast
import struct
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .errors import FormatError, ShapeError

MAGIC = b"\x93NUMPY"
_ALIGN = 64


def write_npy(matrix: np.ndarray, sink: BinaryIO) -> None:
    """Write a 2-D array as float32 NPY v1.0."""
    if matrix.ndim != 2:
        raise ShapeError(f"expected a 2-D array, got {matrix.ndim}-D")
    m = np.ascontiguousarray(matrix, dtype=np.float32)
    header = "{'descr': '<f4', 'fortran_order': False, 'shape': (%d, %d), }" % m.shape
    # magic(6) + version(2) + header-length(2) + header + '\n', padded to 64
    unpadded = len(MAGIC) + 2 + 2 + len(header) + 1
    pad = (_ALIGN - unpadded % _ALIGN) % _ALIGN
    header = header + " " * pad + "\n"
    sink.write(MAGIC)
    sink.write(b"\x01\x00")
    sink.write(struct.pack("<H", len(header)))
    sink.write(header.encode("latin1"))
    sink.write(m.tobytes())


def read_npy(source: BinaryIO) -> np.ndarray:
    """Read a float32 2-D NPY v1.0 stream written by write_npy or numpy."""
    magic = source.read(len(MAGIC))
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    version = source.read(2)
    if len(version) != 2:
        raise FormatError("truncated version field")
    if version != b"\x01\x00":
        raise FormatError(f"unsupported version {version[0]}.{version[1]}")
    raw_len = source.read(2)
    if len(raw_len) != 2:
        raise FormatError("truncated header length")
    (header_len,) = struct.unpack("<H", raw_len)
    header_bytes = source.read(header_len)
    if len(header_bytes) != header_len:
        raise FormatError("truncated header")
    try:
        header = ast.literal_eval(header_bytes.decode("latin1").strip())
    except (ValueError, SyntaxError) as e:
        raise FormatError(f"unparseable header: {e}") from None
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise FormatError("header must declare descr, fortran_order and shape")
    if header["descr"] != "<f4":
        raise FormatError(f"unsupported dtype {header['descr']!r}, need little-endian float32")
    if header["fortran_order"] is not False:
        raise FormatError("fortran-order payloads are not supported")
    shape = header["shape"]
    if (
        not isinstance(shape, tuple)
        or len(shape) != 2
        or not all(isinstance(s, int) and s >= 0 for s in shape)
    ):
        raise FormatError(f"need a 2-D shape, got {shape!r}")
    n, d = shape
    payload = source.read()
    expected = n * d * 4
    if len(payload) != expected:
        raise ShapeError(
            f"payload holds {len(payload)} bytes but shape {shape} needs {expected}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(n, d).copy()


def save_npy(path: str | Path, matrix: np.ndarray) -> None:
    with open(path, "wb") as sink:
        write_npy(matrix, sink)


def load_npy(path: str | Path) -> np.ndarray:
    with open(path, "rb") as source:
        return read_npy(source)
