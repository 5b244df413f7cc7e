"""Adaptive-moment (Adam) optimizer with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Gradients, Tensor
from .errors import ContractError


@dataclass
class OptimizerState:
    """Per-parameter first/second moment accumulators keyed by name."""

    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict[str, Tensor], grads: Gradients, state: OptimizerState):
    """One bias-corrected adaptive-moment update, applied in place.

    ``params`` maps names to leaf tensors; missing accumulators are created
    as zeros on first touch. Returns (params, state) for chaining.
    """
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for name, p in params.items():
        g = grads[p]
        if g.shape != p.value.shape:
            raise ContractError(f"adam_step: gradient shape mismatch for {name}")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.value)
            state.v[name] = np.zeros_like(p.value)
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p.value -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state
