"""Writer for the CKGF entity feature format.

Layout (little-endian): magic ``CKGF``, u32 version=1, u64 rows, u64 dim,
then rows*dim IEEE-754 f32 values row-major. Row i holds the features of
entity id i. This is the only coupling to the training engine, so the
format is implemented here independently rather than imported.
"""

import struct

import numpy as np

from .errors import ExtractorError

MAGIC = b"CKGF"
VERSION = 1
_HEADER = struct.Struct("<IQQ")


def write_features(path: str, matrix: np.ndarray, manifest: str | None = None) -> None:
    matrix = np.ascontiguousarray(matrix, dtype=np.float32)
    if matrix.ndim != 2:
        raise ExtractorError("feature matrix must be 2-D")
    if not np.all(np.isfinite(matrix)):
        raise ExtractorError("feature matrix contains non-finite values")
    rows, dim = matrix.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(VERSION, rows, dim))
        fh.write(matrix.tobytes(order="C"))
    if manifest is not None:
        with open(path + ".manifest.txt", "w", encoding="utf-8") as fh:
            fh.write(manifest if manifest.endswith("\n") else manifest + "\n")


def read_features(path: str) -> np.ndarray:
    """Read a CKGF file back; used for self-checks, not by the engine."""
    with open(path, "rb") as fh:
        head = fh.read(4 + _HEADER.size)
        if len(head) < 4 + _HEADER.size or head[:4] != MAGIC:
            raise ExtractorError(f"{path}: not a CKGF feature file")
        version, rows, dim = _HEADER.unpack(head[4:])
        if version != VERSION:
            raise ExtractorError(f"{path}: unsupported CKGF version {version}")
        payload = fh.read()
    expected = rows * dim * 4
    if len(payload) != expected:
        raise ExtractorError(f"{path}: payload is {len(payload)} bytes, "
                             f"expected {expected}")
    return np.frombuffer(payload, dtype="<f4").reshape(rows, dim)
