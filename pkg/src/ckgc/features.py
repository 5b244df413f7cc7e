"""Fixed entity feature matrix: binary file format and exact cosine k-NN.

Feature file layout (little-endian): magic ``CKGF``, u32 version=1,
u64 rows, u64 dim, then rows*dim IEEE-754 f32 values row-major. A sidecar
text manifest (``<path>.manifest.txt``) records provenance.

k-NN is exact: chunked matrix products with float64 accumulation, ties
broken by ascending id, zero-norm rows defined to have similarity 0.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import ContractError, DataError

MAGIC = b"CKGF"
VERSION = 1


def save_features(path: str, matrix: np.ndarray, manifest: str | None = None) -> None:
    matrix = np.ascontiguousarray(matrix, dtype=np.float32)
    if matrix.ndim != 2:
        raise ContractError("feature matrix must be 2-D")
    rows, dim = matrix.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQQ", VERSION, rows, dim))
        fh.write(matrix.tobytes(order="C"))
    if manifest is not None:
        with open(path + ".manifest.txt", "w", encoding="utf-8") as fh:
            fh.write(manifest if manifest.endswith("\n") else manifest + "\n")


def load_features(path: str, expected_rows: int | None = None) -> np.ndarray:
    """Load a CKGF file into a read-only float32 matrix.

    The header row count must equal ``expected_rows`` when given; any
    non-finite value is a data error naming the first offending row.
    """
    with open(path, "rb") as fh:
        head = fh.read(4 + 4 + 8 + 8)
        if len(head) < 24 or head[:4] != MAGIC:
            raise DataError(f"{path}: not a CKGF feature file")
        version, rows, dim = struct.unpack("<IQQ", head[4:])
        if version != VERSION:
            raise DataError(f"{path}: unsupported CKGF version {version}")
        if dim < 1:
            raise DataError(f"{path}: feature dim must be >= 1")
        payload = fh.read(rows * dim * 4)
    if len(payload) != rows * dim * 4:
        raise DataError(f"{path}: truncated payload ({len(payload)} bytes)")
    matrix = np.frombuffer(payload, dtype="<f4").reshape(rows, dim)
    if expected_rows is not None and rows != expected_rows:
        raise DataError(f"{path}: header declares {rows} rows, entity table has {expected_rows}")
    finite = np.isfinite(matrix).all(axis=1)
    if not finite.all():
        bad = int(np.argmin(finite))
        raise DataError(f"{path}: non-finite value at row {bad}")
    matrix = matrix.copy()
    matrix.flags.writeable = False
    return matrix


def normalize_rows(matrix: np.ndarray) -> np.ndarray:
    """Unit-normalize rows in float64; zero-norm rows come back as zeros."""
    m = np.asarray(matrix, dtype=np.float64)
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(norms > 0, m / norms, 0.0)
    return out


def cosine_knn(matrix: np.ndarray, queries, k: int, exclude=None, chunk: int = 1024):
    """Exact top-k cosine neighbors for each query row id.

    ``exclude`` is an optional sequence (parallel to ``queries``) of id
    collections removed from each query's candidate pool; the query itself is
    always removed. Returns one ``[(id, similarity), ...]`` list per query,
    ordered by similarity descending then id ascending. When fewer than ``k``
    candidates are eligible, all of them are returned.
    """
    if k < 0:
        raise ContractError("k must be >= 0")
    queries = np.asarray(queries, dtype=np.int64)
    n = matrix.shape[0]
    if len(queries) and (queries.min() < 0 or queries.max() >= n):
        raise ContractError("query id out of range")
    unit = normalize_rows(matrix)
    out = []
    for start in range(0, len(queries), chunk):
        idx = queries[start : start + chunk]
        sims = unit[idx] @ unit.T  # (q, n) float64
        for row, q in enumerate(idx):
            s = sims[row]
            out.append(_top_k(s, int(q), k, None if exclude is None else exclude[start + row]))
    return out


def _top_k(sims: np.ndarray, self_id: int, k: int, excluded) -> list[tuple[int, float]]:
    eligible = np.ones(len(sims), dtype=bool)
    eligible[self_id] = False
    if excluded is not None:
        ex = np.asarray(list(excluded), dtype=np.int64)
        if len(ex):
            eligible[ex] = False
    ids = np.nonzero(eligible)[0]
    if k == 0 or not len(ids):
        return []
    s = sims[ids]
    if k < len(ids):
        # keep everything tied with the k-th value, then sort the short list
        kth = np.partition(s, len(s) - k)[len(s) - k]
        keep = s >= kth
        ids, s = ids[keep], s[keep]
    order = np.lexsort((ids, -s))[:k]
    return [(int(ids[i]), float(s[i])) for i in order]


def pairwise_cosine(matrix: np.ndarray) -> np.ndarray:
    """Dense all-pairs cosine similarity in float64 (small inputs only)."""
    unit = normalize_rows(matrix)
    return unit @ unit.T
