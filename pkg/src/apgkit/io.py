"""File formats: CSV and raw binary for vectors/matrices, binary PGM for images.

CSV files are UTF-8, comma separated, one row per line; lines starting with
``#`` are comments. Binary files carry an 8-byte header of two little-endian
uint32 dims followed by little-endian float64 data in row-major order
(vectors are stored as n-by-1). Floats in text formats are written with
``repr``, i.e. the shortest string that round-trips.
"""

import struct

import numpy as np

from .errors import ConstructionError

__all__ = [
    "fmt_float",
    "read_matrix",
    "read_matrix_bin",
    "read_matrix_csv",
    "read_pgm",
    "read_vector",
    "write_matrix_bin",
    "write_matrix_csv",
    "write_pgm",
    "write_vector_bin",
    "write_vector_csv",
]

_BIN_HEADER = struct.Struct("<II")


def fmt_float(x) -> str:
    """Shortest round-trip decimal form of a float."""
    return repr(float(x))


def _write_comments(fh, header_lines):
    for line in header_lines:
        fh.write(f"# {line}\n")


def write_matrix_csv(path, M, header_lines=()):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", encoding="utf-8") as fh:
        _write_comments(fh, header_lines)
        for row in M:
            fh.write(",".join(fmt_float(v) for v in row) + "\n")


def read_matrix_csv(path):
    return np.loadtxt(path, delimiter=",", comments="#", ndmin=2)


def write_vector_csv(path, v, header_lines=()):
    v = np.asarray(v, dtype=float).ravel()
    with open(path, "w", encoding="utf-8") as fh:
        _write_comments(fh, header_lines)
        for x in v:
            fh.write(fmt_float(x) + "\n")


def read_vector_csv(path):
    return np.loadtxt(path, delimiter=",", comments="#", ndmin=1).ravel()


def write_matrix_bin(path, M):
    M = np.atleast_2d(np.ascontiguousarray(M, dtype="<f8"))
    with open(path, "wb") as fh:
        fh.write(_BIN_HEADER.pack(M.shape[0], M.shape[1]))
        fh.write(M.tobytes())


def read_matrix_bin(path):
    with open(path, "rb") as fh:
        head = fh.read(_BIN_HEADER.size)
        if len(head) != _BIN_HEADER.size:
            raise ConstructionError(f"{path}: truncated binary header")
        rows, cols = _BIN_HEADER.unpack(head)
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != rows * cols:
        raise ConstructionError(f"{path}: payload size does not match header")
    return data.reshape(rows, cols).astype(float)


def write_vector_bin(path, v):
    write_matrix_bin(path, np.asarray(v, dtype=float).reshape(-1, 1))


def read_vector_bin(path):
    return read_matrix_bin(path).ravel()


def read_vector(path):
    """Vector from .bin or CSV, decided by suffix."""
    if str(path).endswith(".bin"):
        return read_vector_bin(path)
    return read_vector_csv(path)


def read_matrix(path):
    if str(path).endswith(".bin"):
        return read_matrix_bin(path)
    return read_matrix_csv(path)


def write_pgm(path, image, header_lines=()):
    """8-bit binary PGM; values in [0, 1] map linearly to 0..255."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ConstructionError("PGM image must be 2-D")
    gray = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n")
        for line in header_lines:
            fh.write(f"# {line}\n".encode("utf-8"))
        fh.write(f"{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())


def read_pgm(path):
    """Read an 8-bit binary PGM into floats in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ConstructionError(f"{path}: not a binary PGM")
    # Header tokens: magic, width, height, maxval; '#' comments run to EOL.
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval
    width, height, maxval = (int(t) for t in tokens)
    if maxval != 255:
        raise ConstructionError(f"{path}: only 8-bit PGM supported")
    raw = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    return raw.reshape(height, width).astype(float) / 255.0
