"""Degree-balanced graph densification with synthetic similarity edges.

Nodes whose non-synthetic in-degree falls short of the target ``m`` receive
directed similarity edges from their cosine-nearest neighbors, budgeted per
node as max(0, m - degree). The reference strategy ranks neighbors by the
graph encoder's current output embeddings and is refreshed periodically;
the two baseline strategies (global threshold, fixed neighbor count) rank
by raw features instead. Synthetic edges participate in message passing
only; they are never training targets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DensifierConfig, EncoderConfig
from .errors import ContractError
from .features import cosine_knn, normalize_rows
from .store import EntityTable, MultiGraph


@dataclass
class SyntheticEdgeSet:
    """Directed (source -> target) similarity edges plus a generation stamp."""

    src: np.ndarray
    dst: np.ndarray
    similarity: np.ndarray
    stamp: str = ""

    def __post_init__(self):
        if np.any(self.src == self.dst):
            raise ContractError("synthetic edge set contains a self-edge")
        pairs = set(zip(self.src.tolist(), self.dst.tolist()))
        if len(pairs) != len(self.src):
            raise ContractError("synthetic edge set contains duplicates")

    def __len__(self) -> int:
        return len(self.src)

    def dump_tsv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for s, d, sim in zip(self.src, self.dst, self.similarity):
                fh.write(f"{s}\tSIM\t{d}\t{sim:.6f}\n")


def compute_k(m: int, degree: int) -> int:
    """Similarity-edge budget for one node: 0 if already at degree m."""
    if m < 0 or degree < 0:
        raise ContractError("compute_k needs non-negative inputs")
    return 0 if m <= degree else m - degree


def densify(graph: MultiGraph, embeddings: np.ndarray, config: DensifierConfig,
            stamp: str = "") -> SyntheticEdgeSet:
    """Budgeted k-NN densification over the given embeddings.

    For each node i with budget k_i > 0, the k_i nearest nodes by cosine
    similarity (excluding i itself and its existing non-synthetic
    in-neighbors) become sources of directed edges into i. Deterministic:
    ties break by ascending id. Previous synthetic edges play no role.
    """
    embeddings = np.asarray(embeddings)
    if embeddings.shape[0] != graph.num_nodes:
        raise ContractError("embeddings not aligned with graph nodes")
    if not np.all(np.isfinite(embeddings)):
        raise ContractError("embeddings must be finite")
    budgets = np.maximum(0, config.m - graph.nonsyn_indegree)
    needy = np.nonzero(budgets)[0]
    if not len(needy):
        return SyntheticEdgeSet(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0), stamp)
    exclude = [graph.src[graph.dst == i] for i in needy]
    neighbor_lists = cosine_knn(embeddings, needy, int(budgets.max()), exclude)
    src, dst, sims = [], [], []
    for node, neighbors in zip(needy, neighbor_lists):
        for nbr, sim in neighbors[: budgets[node]]:
            src.append(nbr)
            dst.append(node)
            sims.append(sim)
    return SyntheticEdgeSet(np.array(src, np.int64), np.array(dst, np.int64),
                            np.array(sims, np.float64), stamp)


def densify_global_threshold(features: np.ndarray, tau: float = 0.95,
                             stamp: str = "gs") -> SyntheticEdgeSet:
    """Baseline: an edge j -> i for every ordered pair with cosine > tau."""
    if not (-1.0 < tau <= 1.0):
        raise ContractError("tau must lie in (-1, 1]")
    unit = normalize_rows(features)
    sims = unit @ unit.T
    np.fill_diagonal(sims, -np.inf)
    dsts, srcs = np.nonzero(sims > tau)  # sims[i, j] > tau adds edge j -> i
    return SyntheticEdgeSet(srcs.astype(np.int64), dsts.astype(np.int64),
                            sims[dsts, srcs], stamp)


def densify_fixed_neighbor(graph: MultiGraph, features: np.ndarray, n: int = 5,
                           stamp: str = "fn") -> SyntheticEdgeSet:
    """Baseline: top up every node to n in-neighbors using raw-feature cosine."""
    if n < 0:
        raise ContractError("n must be >= 0")
    return densify(graph, features, DensifierConfig(m=n, period=1, mode="fn"), stamp)


def synthesize_edges(graph: MultiGraph, features, embeddings,
                     config: DensifierConfig, stamp: str = "") -> SyntheticEdgeSet:
    """Produce synthetic edges under the configured strategy.

    The reference strategy ranks by the given embeddings; the two baselines
    rank by raw features and ignore the embeddings entirely.
    """
    from .config import DENSIFY_FN, DENSIFY_GS, DENSIFY_OFF, DENSIFY_OURS

    if config.mode == DENSIFY_OFF:
        return SyntheticEdgeSet(np.empty(0, np.int64), np.empty(0, np.int64),
                                np.empty(0), stamp)
    if config.mode == DENSIFY_GS:
        return densify_global_threshold(features, config.gs_threshold, stamp)
    if config.mode == DENSIFY_FN:
        return densify_fixed_neighbor(graph, features, config.fn_neighbors, stamp)
    if config.mode == DENSIFY_OURS:
        return densify(graph, embeddings, config, stamp)
    raise ContractError(f"unknown densifier mode {config.mode!r}")


def test_time_embed(graph: MultiGraph, features, encoder_params,
                    encoder_config: EncoderConfig, densifier_config: DensifierConfig,
                    two_pass: bool = True):
    """Two-pass embedding of a graph that may contain isolated unseen nodes.

    Pass 1 encodes the non-synthetic graph as-is; synthetic edges are then
    derived from those embeddings and the densified graph is encoded again.
    Returns (embeddings, densified_graph). With ``two_pass=False`` or the
    densifier disabled, the pass-1 embeddings are returned unchanged.
    """
    from .config import DENSIFY_OFF
    from .encoder import encode_inference

    base = graph.without_synthetic()
    first = encode_inference(base, features, encoder_params, encoder_config)
    if not two_pass or densifier_config is None or densifier_config.mode == DENSIFY_OFF:
        return first, base
    edges = synthesize_edges(base, features, first, densifier_config, stamp="test-time")
    if len(edges) == 0:
        return first, base
    densified = base.with_synthetic(edges.src, edges.dst)
    second = encode_inference(densified, features, encoder_params, encoder_config)
    return second, densified


def nearest_neighbor_report(embeddings: np.ndarray, entity_ids, entities: EntityTable,
                            top_k: int = 3) -> str:
    """Human-readable top-k neighbor listing for the given entities."""
    entity_ids = np.asarray(entity_ids, dtype=np.int64)
    if len(entity_ids) and (entity_ids.min() < 0 or entity_ids.max() >= len(entities)):
        raise ContractError("entity id out of range")
    lines = []
    for eid, neighbors in zip(entity_ids, cosine_knn(embeddings, entity_ids, top_k)):
        lines.append(f"{entities.texts[eid]} (id {eid})")
        for nbr, sim in neighbors:
            lines.append(f"    {sim:+.4f}  {entities.texts[nbr]} (id {nbr})")
    return "\n".join(lines)
