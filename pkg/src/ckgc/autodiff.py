"""Dense-tensor reverse-mode automatic differentiation.

A deliberately small engine: exactly the primitives the encoder/decoder
stack needs, no broadcasting beyond what those primitives define. Values
are float64 by default (float32 storage is accepted and upcast on entry).
Every primitive checks its output for finiteness and raises NumericError
otherwise.

Usage: create leaf tensors, apply primitives through a fresh ``Tape`` per
forward pass, call :func:`backward` on the scalar loss.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import ContractError, NumericError

_uid = itertools.count()


class Tensor:
    """A dense array plus autodiff metadata. Leaf values may be updated in
    place between passes (optimizer steps); never during a forward pass."""

    __slots__ = ("value", "requires_grad", "uid", "name")

    def __init__(self, value, requires_grad: bool = False, name: str = ""):
        self.value = np.array(value, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.uid = next(_uid)
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.value.shape

    def __repr__(self):
        tag = self.name or f"t{self.uid}"
        return f"Tensor({tag}, shape={self.shape}, grad={self.requires_grad})"


def tensor(value, requires_grad: bool = False, name: str = "") -> Tensor:
    return Tensor(value, requires_grad, name)


class _Node:
    __slots__ = ("out_uid", "parents", "backward_fn", "op")

    def __init__(self, out_uid, parents, backward_fn, op):
        self.out_uid = out_uid
        self.parents = parents
        self.backward_fn = backward_fn  # grad_out -> list of parent grads (None allowed)
        self.op = op


class Tape:
    """Recorded primitive applications in topological (creation) order."""

    def __init__(self):
        self.nodes: list[_Node] = []

    def _record(self, out: Tensor, parents, backward_fn, op: str):
        self.nodes.append(_Node(out.uid, list(parents), backward_fn, op))


def _finish(tape: Tape | None, op: str, value: np.ndarray, parents, backward_fn) -> Tensor:
    if not np.all(np.isfinite(value)):
        raise NumericError(f"{op}: non-finite output")
    out = Tensor(value)
    out.requires_grad = any(p.requires_grad for p in parents)
    if tape is not None and out.requires_grad:
        tape._record(out, parents, backward_fn, op)
    return out


def _need(cond: bool, op: str, msg: str):
    if not cond:
        raise ContractError(f"{op}: {msg}")


# ---------------------------------------------------------------------------
# primitives


def matmul(tape, a: Tensor, b: Tensor) -> Tensor:
    _need(a.value.ndim == 2 and b.value.ndim == 2, "matmul", "inputs must be 2-D")
    _need(a.shape[1] == b.shape[0], "matmul", f"inner dims differ: {a.shape} x {b.shape}")
    value = a.value @ b.value

    def back(g):
        return [g @ b.value.T, a.value.T @ g]

    return _finish(tape, "matmul", value, [a, b], back)


def transpose(tape, a: Tensor) -> Tensor:
    _need(a.value.ndim == 2, "transpose", "input must be 2-D")
    return _finish(tape, "transpose", a.value.T.copy(), [a], lambda g: [g.T])


def add(tape, a: Tensor, b: Tensor) -> Tensor:
    _need(a.shape == b.shape, "add", f"shapes differ: {a.shape} vs {b.shape}")
    return _finish(tape, "add", a.value + b.value, [a, b], lambda g: [g, g])


def mul(tape, a: Tensor, b: Tensor) -> Tensor:
    _need(a.shape == b.shape, "mul", f"shapes differ: {a.shape} vs {b.shape}")
    value = a.value * b.value

    def back(g):
        return [g * b.value, g * a.value]

    return _finish(tape, "mul", value, [a, b], back)


def scalar_mul(tape, a: Tensor, c: float) -> Tensor:
    c = float(c)
    return _finish(tape, "scalar_mul", a.value * c, [a], lambda g: [g * c])


def concat(tape, tensors, axis: int) -> Tensor:
    _need(len(tensors) >= 1, "concat", "needs at least one input")
    value = np.concatenate([t.value for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def back(g):
        return list(np.split(g, splits, axis=axis))

    return _finish(tape, "concat", value, list(tensors), back)


def gather_rows(tape, table: Tensor, ids) -> Tensor:
    _need(table.value.ndim == 2, "gather_rows", "table must be 2-D")
    ids = np.asarray(ids, dtype=np.int64)
    _need(ids.ndim == 1, "gather_rows", "ids must be 1-D")
    if len(ids):
        _need(0 <= ids.min() and ids.max() < table.shape[0], "gather_rows", "id out of range")
    value = table.value[ids]

    def back(g):
        gt = np.zeros_like(table.value)
        np.add.at(gt, ids, g)
        return [gt]

    return _finish(tape, "gather_rows", value, [table], back)


def scatter_add_rows(tape, x: Tensor, ids, num_rows: int) -> Tensor:
    _need(x.value.ndim == 2, "scatter_add_rows", "input must be 2-D")
    ids = np.asarray(ids, dtype=np.int64)
    _need(len(ids) == x.shape[0], "scatter_add_rows", "one id per input row")
    if len(ids):
        _need(0 <= ids.min() and ids.max() < num_rows, "scatter_add_rows", "id out of range")
    value = np.zeros((num_rows, x.shape[1]), dtype=x.value.dtype)
    np.add.at(value, ids, x.value)
    return _finish(tape, "scatter_add_rows", value, [x], lambda g: [g[ids]])


def sigmoid(tape, a: Tensor) -> Tensor:
    x = a.value
    value = np.empty_like(x)
    pos = x >= 0
    value[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    value[~pos] = e / (1.0 + e)

    def back(g):
        return [g * value * (1.0 - value)]

    return _finish(tape, "sigmoid", value, [a], back)


def tanh(tape, a: Tensor) -> Tensor:
    value = np.tanh(a.value)
    return _finish(tape, "tanh", value, [a], lambda g: [g * (1.0 - value * value)])


def relu(tape, a: Tensor) -> Tensor:
    value = np.maximum(a.value, 0.0)
    mask = a.value > 0
    return _finish(tape, "relu", value, [a], lambda g: [g * mask])


def permute_columns(tape, a: Tensor, perm) -> Tensor:
    """out[..., j] = a[..., perm[j]] for a fixed permutation of the last axis."""
    perm = np.asarray(perm, dtype=np.int64)
    d = a.shape[-1]
    _need(len(perm) == d and np.array_equal(np.sort(perm), np.arange(d)),
          "permute_columns", "perm must be a permutation of the last axis")
    value = a.value[..., perm]
    inv = np.empty_like(perm)
    inv[perm] = np.arange(d)
    return _finish(tape, "permute_columns", value, [a], lambda g: [g[..., inv]])


def conv1d_same(tape, x: Tensor, kernels: Tensor) -> Tensor:
    """Width-preserving 1-D convolution of a 2-row stack.

    ``x`` is (2, d) or batched (B, 2, d); ``kernels`` is (K, 2, n) with
    n <= d. Zero padding keeps the output width at d, with the extra pad
    cell on the right when n is even. Returns (K, d) or (B, K, d).
    """
    _need(kernels.value.ndim == 3 and kernels.shape[1] == 2, "conv1d_same",
          "kernels must be (K, 2, n)")
    squeeze = x.value.ndim == 2
    xv = x.value[None] if squeeze else x.value
    _need(xv.ndim == 3 and xv.shape[1] == 2, "conv1d_same", "input must be (2, d) or (B, 2, d)")
    batch, _, d = xv.shape
    kv = kernels.value
    n = kv.shape[2]
    _need(n <= d, "conv1d_same", f"kernel width {n} exceeds input width {d}")
    pad_left, pad_right = (n - 1) // 2, n // 2
    xp = np.zeros((batch, 2, d + n - 1), dtype=xv.dtype)
    xp[:, :, pad_left : pad_left + d] = xv
    value = np.zeros((batch, kv.shape[0], d), dtype=xv.dtype)
    for u in range(n):
        value += np.einsum("brd,kr->bkd", xp[:, :, u : u + d], kv[:, :, u])

    def back(g):
        gb = g[None] if squeeze else g
        gk = np.empty_like(kv)
        gxp = np.zeros_like(xp)
        for u in range(n):
            gk[:, :, u] = np.einsum("bkd,brd->kr", gb, xp[:, :, u : u + d])
            gxp[:, :, u : u + d] += np.einsum("bkd,kr->brd", gb, kv[:, :, u])
        gx = gxp[:, :, pad_left : pad_left + d]
        return [gx[0] if squeeze else gx, gk]

    out_value = value[0] if squeeze else value
    return _finish(tape, "conv1d_same", out_value, [x, kernels], back)


def reshape(tape, a: Tensor, shape) -> Tensor:
    old = a.shape
    value = a.value.reshape(shape)
    return _finish(tape, "reshape", value, [a], lambda g: [g.reshape(old)])


def vec(tape, a: Tensor) -> Tensor:
    return reshape(tape, a, (-1,))


def tsum(tape, a: Tensor) -> Tensor:
    value = np.asarray(a.value.sum())
    return _finish(tape, "sum", value, [a], lambda g: [np.full_like(a.value, float(g))])


def tmean(tape, a: Tensor) -> Tensor:
    count = a.value.size
    _need(count > 0, "mean", "cannot average an empty tensor")
    value = np.asarray(a.value.mean())
    return _finish(tape, "mean", value, [a], lambda g: [np.full_like(a.value, float(g) / count)])


def bce_with_logits(tape, logits: Tensor, targets) -> Tensor:
    """Mean binary cross-entropy between logits and [0,1] targets.

    Computed in the numerically stable logit form
    ``mean(max(s,0) - s*t + log1p(exp(-|s|)))``; targets are constants.
    """
    t = targets.value if isinstance(targets, Tensor) else np.asarray(targets, dtype=np.float64)
    s = logits.value
    _need(s.shape == t.shape, "bce_with_logits", f"shapes differ: {s.shape} vs {t.shape}")
    _need(t.size > 0, "bce_with_logits", "empty input")
    _need(np.all((t >= 0) & (t <= 1)), "bce_with_logits", "targets must lie in [0, 1]")
    value = np.asarray(np.mean(np.maximum(s, 0.0) - s * t + np.log1p(np.exp(-np.abs(s)))))

    def back(g):
        sig = np.empty_like(s)
        pos = s >= 0
        sig[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
        e = np.exp(s[~pos])
        sig[~pos] = e / (1.0 + e)
        return [float(g) * (sig - t) / t.size]

    return _finish(tape, "bce_with_logits", value, [logits], back)


# ---------------------------------------------------------------------------
# backward pass and checking


class Gradients:
    """Gradient lookup by tensor; parameters the loss never touched get
    exact zeros."""

    def __init__(self, by_uid: dict):
        self._by_uid = by_uid

    def __getitem__(self, t: Tensor) -> np.ndarray:
        g = self._by_uid.get(t.uid)
        return np.zeros_like(t.value) if g is None else g

    def __contains__(self, t: Tensor) -> bool:
        return t.uid in self._by_uid


def backward(tape: Tape, loss: Tensor) -> Gradients:
    """Reverse-topological sweep from a scalar loss over the recorded tape."""
    if loss.shape != ():
        raise ContractError(f"backward: loss must be scalar, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {loss.uid: np.asarray(1.0)}
    for node in reversed(tape.nodes):
        g_out = grads.get(node.out_uid)
        if g_out is None:
            continue
        parent_grads = node.backward_fn(g_out)
        for parent, g in zip(node.parents, parent_grads):
            if g is None or not parent.requires_grad:
                continue
            have = grads.get(parent.uid)
            grads[parent.uid] = g if have is None else have + g
    return Gradients(grads)


def grad_check(f, inputs, eps: float = 1e-5) -> float:
    """Max elementwise relative error between analytic and central-difference
    gradients of a scalar-valued ``f(tape, *inputs)``.

    Relative error uses ``max(|analytic|, |numeric|, 1e-8)`` as denominator.
    Only inputs with ``requires_grad`` are perturbed.
    """
    tape = Tape()
    out = f(tape, *inputs)
    if out.shape != ():
        raise ContractError("grad_check: f must be scalar-valued")
    grads = backward(tape, out)
    worst = 0.0
    for x in inputs:
        if not isinstance(x, Tensor) or not x.requires_grad:
            continue
        analytic = grads[x]
        flat = x.value.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + eps
            f_plus = float(f(Tape(), *inputs).value)
            flat[i] = keep - eps
            f_minus = float(f(Tape(), *inputs).value)
            flat[i] = keep
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = float(analytic.reshape(-1)[i])
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
