"""Shuffled convolutional triplet scorer.

Head and relation embeddings are stacked into a 2-row matrix, each row's
columns are shuffled by its own fixed permutation, a bank of 2-row 1-D
kernels convolves the stack (width preserved), the feature map is flattened
and projected back to d dimensions, and the result is inner-producted with
every candidate tail embedding. Relation embeddings (one row per original
relation, one per inverse, plus the unused similarity row) are trainable;
the shuffle permutations are sampled once at init and serialized with the
checkpoint. Dropout at the input stack, feature map, and projection output
is active only in training mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .config import DecoderConfig
from .errors import ContractError


@dataclass
class DecoderParams:
    rel_table: ad.Tensor  # (num_relation_ids, d)
    kernels: ad.Tensor  # (K, 2, n)
    proj: ad.Tensor  # (K*d, d)
    perm_head: np.ndarray  # fixed column permutation for the head row
    perm_rel: np.ndarray  # fixed column permutation for the relation row

    def named(self) -> dict[str, ad.Tensor]:
        return {"dec.rel_table": self.rel_table, "dec.kernels": self.kernels, "dec.proj": self.proj}

    @property
    def dim(self) -> int:
        return self.rel_table.shape[1]


def init_params(config: DecoderConfig, num_relation_ids: int, dim: int, seed) -> DecoderParams:
    rng = np.random.default_rng(seed)
    k, n = config.kernels, config.kernel_width

    def glorot(fan_in, fan_out, shape):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape)

    rel_table = glorot(num_relation_ids, dim, (num_relation_ids, dim))
    kernels = glorot(2 * n, k * n, (k, 2, n))
    proj = glorot(k * dim, dim, (k * dim, dim))
    if config.shuffle:
        perm_head = rng.permutation(dim)
        perm_rel = rng.permutation(dim)
    else:
        perm_head = np.arange(dim)
        perm_rel = np.arange(dim)
    return DecoderParams(
        rel_table=ad.tensor(rel_table, True, "dec.rel_table"),
        kernels=ad.tensor(kernels, True, "dec.kernels"),
        proj=ad.tensor(proj, True, "dec.proj"),
        perm_head=perm_head.astype(np.int64),
        perm_rel=perm_rel.astype(np.int64),
    )


def shuffle(tape, stacked: ad.Tensor, params: DecoderParams) -> ad.Tensor:
    """Permute row 0 of a (2, d) stack by the head permutation and row 1 by
    the relation permutation."""
    if stacked.shape != (2, params.dim):
        raise ContractError(f"shuffle expects a (2, {params.dim}) stack, got {stacked.shape}")
    head = ad.permute_columns(tape, ad.gather_rows(tape, stacked, [0]), params.perm_head)
    rel = ad.permute_columns(tape, ad.gather_rows(tape, stacked, [1]), params.perm_rel)
    return ad.concat(tape, [head, rel], axis=0)


@dataclass
class DropoutMasks:
    """Pre-sampled inverted-dropout masks; None means identity."""

    stack: np.ndarray | None = None
    features: np.ndarray | None = None
    proj: np.ndarray | None = None


def sample_dropout(rng: np.random.Generator, config: DecoderConfig, batch: int,
                   k: int, dim: int) -> DropoutMasks:
    def mask(rate, shape):
        if rate <= 0.0:
            return None
        return (rng.random(shape) >= rate) / (1.0 - rate)

    return DropoutMasks(
        stack=mask(config.dropout_input, (batch, 2, dim)),
        features=mask(config.dropout_features, (batch, k, dim)),
        proj=mask(config.dropout_proj, (batch, dim)),
    )


def _maybe_drop(tape, x: ad.Tensor, mask) -> ad.Tensor:
    if mask is None:
        return x
    return ad.mul(tape, x, ad.tensor(mask))


def score_all(tape, heads: ad.Tensor, rel_ids, candidates: ad.Tensor,
              params: DecoderParams, dropout: DropoutMasks | None = None) -> ad.Tensor:
    """Score a batch of (head, relation) queries against all candidates.

    ``heads`` is (B, d), ``rel_ids`` a length-B id array, ``candidates``
    (C, d). Returns (B, C) pre-sigmoid scores. Gradients flow into the head
    and candidate embeddings, the relation table, kernels, and projection.
    """
    d = params.dim
    if heads.value.ndim != 2 or heads.shape[1] != d:
        raise ContractError(f"score_all: heads must be (B, {d})")
    if candidates.value.ndim != 2 or candidates.shape[1] != d:
        raise ContractError(f"score_all: candidates must be (C, {d})")
    rel_ids = np.asarray(rel_ids, dtype=np.int64)
    if len(rel_ids) != heads.shape[0]:
        raise ContractError("score_all: one relation id per head row")
    if len(rel_ids) and (rel_ids.min() < 0 or rel_ids.max() >= params.rel_table.shape[0]):
        raise ContractError("score_all: unknown relation id")
    batch = heads.shape[0]
    k = params.kernels.shape[0]

    rels = ad.gather_rows(tape, params.rel_table, rel_ids)
    head_row = ad.permute_columns(tape, heads, params.perm_head)
    rel_row = ad.permute_columns(tape, rels, params.perm_rel)
    stacked = ad.concat(
        tape,
        [ad.reshape(tape, head_row, (batch, 1, d)), ad.reshape(tape, rel_row, (batch, 1, d))],
        axis=1,
    )
    if dropout is not None:
        stacked = _maybe_drop(tape, stacked, dropout.stack)
    fmap = ad.relu(tape, ad.conv1d_same(tape, stacked, params.kernels))
    if dropout is not None:
        fmap = _maybe_drop(tape, fmap, dropout.features)
    flat = ad.reshape(tape, fmap, (batch, k * d))
    z = ad.relu(tape, ad.matmul(tape, flat, params.proj))
    if dropout is not None:
        z = _maybe_drop(tape, z, dropout.proj)
    return ad.matmul(tape, z, ad.transpose(tape, candidates))


def score_triplet(tape, head: ad.Tensor, rel_id: int, tail: ad.Tensor,
                  params: DecoderParams) -> ad.Tensor:
    """Scalar score of one triplet; exactly score_all with one candidate."""
    heads = ad.reshape(tape, head, (1, params.dim))
    tails = ad.reshape(tape, tail, (1, params.dim))
    scores = score_all(tape, heads, np.array([rel_id]), tails, params)
    return ad.reshape(tape, scores, ())
