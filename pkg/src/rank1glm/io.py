"""On-disk matrix formats: NPY (version 1.0) and headered CSV.

The format is chosen by file extension. NPY round-trips bit-exactly;
CSV is written with 17 significant digits.
"""

import ast
import io as _io
import struct

import numpy as np

from .exceptions import FormatError

_NPY_MAGIC = b"\x93NUMPY"


def _parse_npy_header(fh, name):
    magic = fh.read(6)
    if magic != _NPY_MAGIC:
        raise FormatError(f"{name}: byte 0: not an NPY file (bad magic)")
    version = fh.read(2)
    if len(version) != 2:
        raise FormatError(f"{name}: byte 6: truncated version field")
    major, minor = version[0], version[1]
    if (major, minor) != (1, 0):
        raise FormatError(
            f"{name}: byte 6: unsupported NPY version {major}.{minor}"
        )
    raw_len = fh.read(2)
    if len(raw_len) != 2:
        raise FormatError(f"{name}: byte 8: truncated header length")
    (header_len,) = struct.unpack("<H", raw_len)
    header = fh.read(header_len)
    if len(header) != header_len:
        raise FormatError(f"{name}: byte 10: truncated header")
    try:
        meta = ast.literal_eval(header.decode("latin1"))
    except (ValueError, SyntaxError):
        raise FormatError(f"{name}: byte 10: malformed header dict") from None
    return meta, 10 + header_len


def _read_npy(path):
    name = str(path)
    with open(path, "rb") as fh:
        meta, data_offset = _parse_npy_header(fh, name)
        if meta.get("descr") != "<f8":
            raise FormatError(
                f"{name}: byte 10: dtype must be little-endian float64 "
                f"('<f8'), got {meta.get('descr')!r}"
            )
        if meta.get("fortran_order"):
            raise FormatError(
                f"{name}: byte 10: Fortran-order arrays are unsupported"
            )
        shape = meta.get("shape")
        if not (isinstance(shape, tuple) and len(shape) == 2):
            raise FormatError(
                f"{name}: byte 10: expected a 2-D shape, got {shape!r}"
            )
        n, v = shape
        if n == 0 or v == 0:
            raise FormatError(f"{name}: byte 10: empty data (shape {shape})")
        data = fh.read(8 * n * v)
        if len(data) != 8 * n * v:
            raise FormatError(
                f"{name}: byte {data_offset + len(data)}: truncated data "
                f"(expected {8 * n * v} bytes)"
            )
    return np.frombuffer(data, dtype="<f8").reshape(n, v).copy()


def _read_csv(path):
    name = str(path)
    with _io.open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError(f"{name}: line 1: empty file")
    header = [c.strip() for c in lines[0].split(",")]
    if header != [f"v{i}" for i in range(len(header))]:
        raise FormatError(f"{name}: line 1: expected header 'v0,v1,...'")
    v = len(header)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != v:
            raise FormatError(
                f"{name}: line {lineno}: expected {v} columns, got {len(cells)}"
            )
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise FormatError(f"{name}: line {lineno}: {exc}") from None
    if not rows:
        raise FormatError(f"{name}: line 2: no data rows")
    return np.array(rows)


def read_bold(path):
    """Read an n x v matrix from ``.npy`` or ``.csv``."""
    path = str(path)
    if path.endswith(".npy"):
        return _read_npy(path)
    if path.endswith(".csv"):
        return _read_csv(path)
    raise FormatError(f"{path}: unknown extension (expected .npy or .csv)")


def write_bold(path, matrix):
    """Write an n x v matrix to ``.npy`` (bit-exact) or ``.csv``."""
    matrix = np.ascontiguousarray(matrix, dtype="<f8")
    if matrix.ndim != 2 or matrix.size == 0:
        raise ValueError("matrix must be 2-D and non-empty")
    path = str(path)
    if path.endswith(".npy"):
        np.save(path, matrix)
    elif path.endswith(".csv"):
        header = ",".join(f"v{i}" for i in range(matrix.shape[1]))
        np.savetxt(path, matrix, fmt="%.17g", delimiter=",",
                   header=header, comments="")
    else:
        raise FormatError(f"{path}: unknown extension (expected .npy or .csv)")


def write_matrix_csv(path, matrix):
    """Plain CSV dump (no header), 17 significant digits."""
    np.savetxt(path, np.atleast_2d(matrix), fmt="%.17g", delimiter=",")


def read_matrix_csv(path):
    """Read a plain CSV matrix written by :func:`write_matrix_csv`."""
    return np.atleast_2d(np.loadtxt(path, delimiter=","))
