"""Binary parameter checkpoints.

Layout (little-endian): magic ``CKGM``, u32 version=1, a named-array
directory for model parameters, a presence byte for optimizer state
followed by (step, lr, beta1, beta2, eps) and the first/second moment
directories. Arrays are f64 or i64; integer arrays carry the decoder's
shuffle permutations. A JSON sidecar (``<path>.manifest.json``) records
the hyperparameter manifest.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import DataError
from .optim import OptimizerState

MAGIC = b"CKGM"
VERSION = 1

_DTYPES = {0: "<f8", 1: "<i8"}
_CODES = {np.dtype(np.float64): 0, np.dtype(np.int64): 1}


def _write_array(fh, name: str, arr: np.ndarray):
    raw_name = name.encode("utf-8")
    arr = np.ascontiguousarray(arr)
    code = _CODES.get(arr.dtype)
    if code is None:
        raise DataError(f"checkpoint arrays must be f64 or i64, got {arr.dtype} for {name}")
    fh.write(struct.pack("<H", len(raw_name)))
    fh.write(raw_name)
    fh.write(struct.pack("<BB", code, arr.ndim))
    for dim in arr.shape:
        fh.write(struct.pack("<Q", dim))
    fh.write(arr.tobytes(order="C"))


def _read_array(fh, path: str):
    head = fh.read(2)
    if len(head) != 2:
        raise DataError(f"{path}: truncated checkpoint")
    (name_len,) = struct.unpack("<H", head)
    name = fh.read(name_len).decode("utf-8")
    code, ndim = struct.unpack("<BB", fh.read(2))
    if code not in _DTYPES:
        raise DataError(f"{path}: unknown dtype code {code}")
    shape = tuple(struct.unpack("<Q", fh.read(8))[0] for _ in range(ndim))
    count = int(np.prod(shape)) if shape else 1
    payload = fh.read(count * 8)
    if len(payload) != count * 8:
        raise DataError(f"{path}: truncated array {name}")
    return name, np.frombuffer(payload, dtype=_DTYPES[code]).reshape(shape).copy()


def _write_directory(fh, arrays: dict[str, np.ndarray]):
    fh.write(struct.pack("<Q", len(arrays)))
    for name, arr in arrays.items():
        _write_array(fh, name, arr)


def _read_directory(fh, path: str) -> dict[str, np.ndarray]:
    (count,) = struct.unpack("<Q", fh.read(8))
    out = {}
    for _ in range(count):
        name, arr = _read_array(fh, path)
        out[name] = arr
    return out


def save_checkpoint(path: str, params: dict[str, np.ndarray],
                    opt: OptimizerState | None = None,
                    manifest: dict | None = None) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        _write_directory(fh, params)
        fh.write(struct.pack("<B", 1 if opt is not None else 0))
        if opt is not None:
            fh.write(struct.pack("<Qdddd", opt.step, opt.lr, opt.beta1, opt.beta2, opt.eps))
            _write_directory(fh, opt.m)
            _write_directory(fh, opt.v)
    if manifest is not None:
        with open(path + ".manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_checkpoint(path: str):
    """Returns (params, optimizer_state_or_None, manifest_or_None)."""
    with open(path, "rb") as fh:
        head = fh.read(8)
        if len(head) < 8 or head[:4] != MAGIC:
            raise DataError(f"{path}: not a CKGM checkpoint")
        (version,) = struct.unpack("<I", head[4:])
        if version != VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {version}")
        params = _read_directory(fh, path)
        (has_opt,) = struct.unpack("<B", fh.read(1))
        opt = None
        if has_opt:
            step, lr, b1, b2, eps = struct.unpack("<Qdddd", fh.read(8 + 32))
            m = _read_directory(fh, path)
            v = _read_directory(fh, path)
            opt = OptimizerState(lr=lr, beta1=b1, beta2=b2, eps=eps, step=step, m=m, v=v)
    manifest = None
    try:
        with open(path + ".manifest.json", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        pass
    return params, opt, manifest
