"""Filtered-rank link prediction evaluation.

Every test triplet produces two queries: predict the tail given (h, r) and
predict the head given (t, r_inverse). Scores over the full entity set are
filtered: every known positive except the gold answer is pushed to -inf
before ranking. Ties share credit (average rank), so a constant scorer
cannot fake a good MRR.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import decoder as dec
from . import densify
from .errors import ContractError, DataError
from .store import EntityTable, RelationTable, TripletSet


def build_known_set(triplet_arrays, num_relations: int) -> dict:
    """Map (source node, relation id) to the array of known answer ids.

    Both directions are indexed: (h, r) -> tails and (t, r + R) -> heads,
    so filtering works for inverse queries without a second structure.
    """
    known: dict[tuple[int, int], set[int]] = {}
    for arr in triplet_arrays:
        if isinstance(arr, TripletSet):
            arr = arr.triplets
        for h, r, t in np.asarray(arr, dtype=np.int64):
            known.setdefault((int(h), int(r)), set()).add(int(t))
            known.setdefault((int(t), int(r) + num_relations), set()).add(int(h))
    return {key: np.fromiter(sorted(vals), dtype=np.int64) for key, vals in known.items()}


def filtered_rank(scores: np.ndarray, gold: int, known) -> float:
    """Tie-averaged filtered rank of the gold entity.

    rank = 1 + #{scores strictly above gold} + #{non-gold ties} / 2,
    computed after masking every known positive except gold to -inf.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1:
        raise ContractError("filtered_rank expects a 1-D score vector")
    if not 0 <= gold < scores.shape[0]:
        raise ContractError(f"gold id {gold} out of range for {scores.shape[0]} candidates")
    masked = scores.copy()
    if known is not None and len(known) > 0:
        masked[np.asarray(known, dtype=np.int64)] = -np.inf
    s_gold = scores[gold]
    masked[gold] = s_gold
    higher = int(np.count_nonzero(masked > s_gold))
    ties = int(np.count_nonzero(masked == s_gold)) - 1
    return 1.0 + higher + ties / 2.0


def mrr(ranks) -> float:
    ranks = np.asarray(ranks, dtype=np.float64)
    if ranks.size == 0:
        raise DataError("cannot aggregate metrics over zero queries")
    return float(np.mean(1.0 / ranks))


def hits_at(ranks, k: int) -> float:
    ranks = np.asarray(ranks, dtype=np.float64)
    if ranks.size == 0:
        raise DataError("cannot aggregate metrics over zero queries")
    return float(np.mean(ranks <= k))


@dataclass
class RankReport:
    ranks: np.ndarray  # one tie-averaged rank per query
    queries: list = field(default_factory=list)  # (h, r, t, direction) per rank

    @property
    def mrr(self) -> float:
        return mrr(self.ranks)

    def hits(self, k: int) -> float:
        return hits_at(self.ranks, k)

    def format(self, ks=(1, 3, 10)) -> str:
        lines = [f"queries\t{self.ranks.size}", f"mrr\t{self.mrr:.6f}"]
        for k in ks:
            lines.append(f"hits@{k}\t{self.hits(k):.6f}")
        return "\n".join(lines)

    def dump_ranks(self, path, entities: EntityTable, relations: RelationTable) -> None:
        """Per-query TSV: head, relation, tail, predicted side, rank."""
        with open(path, "w", encoding="utf-8") as fh:
            for (h, r, t, direction), rank in zip(self.queries, self.ranks):
                fh.write(f"{entities.texts[h]}\t{relations.names[r]}\t"
                         f"{entities.texts[t]}\t{direction}\t{rank:g}\n")


def expand_queries(triplets: np.ndarray, num_relations: int):
    """Yield (source, relation id, gold, direction, original triplet)."""
    for h, r, t in np.asarray(triplets, dtype=np.int64):
        yield int(h), int(r), int(t), "tail", (int(h), int(r), int(t))
        yield int(t), int(r) + num_relations, int(h), "head", (int(h), int(r), int(t))


def rank_queries(embeddings: np.ndarray, triplets, num_relations: int,
                 decoder_params: dec.DecoderParams, known: dict,
                 batch_size: int = 128, threads: int = 1) -> RankReport:
    """Score each query against every entity and collect filtered ranks.

    Chunks are independent given the frozen embeddings, so with threads > 1
    they are scored concurrently and written back by index; results are
    bit-identical to the sequential order.
    """
    queries = list(expand_queries(triplets, num_relations))
    candidates = ad.tensor(embeddings)
    ranks = np.empty(len(queries), dtype=np.float64)
    rows = [(q[4][0], q[4][1], q[4][2], q[3]) for q in queries]

    def score_chunk(start: int) -> None:
        chunk = queries[start:start + batch_size]
        srcs = np.array([q[0] for q in chunk], dtype=np.int64)
        rels = np.array([q[1] for q in chunk], dtype=np.int64)
        heads = ad.tensor(embeddings[srcs])
        scores = dec.score_all(None, heads, rels, candidates, decoder_params).value
        for i, (src, rel, gold, _direction, _orig) in enumerate(chunk):
            ranks[start + i] = filtered_rank(scores[i], gold, known.get((src, rel)))

    starts = range(0, len(queries), batch_size)
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(score_chunk, starts))
    else:
        for start in starts:
            score_chunk(start)
    return RankReport(ranks=ranks, queries=rows)


def evaluate(model, graph, features: np.ndarray, eval_triplets,
             known_sources, densifier_config, two_pass: bool = True,
             batch_size: int = 128, threads: int = 1) -> RankReport:
    """Full evaluation: two-pass test-time embeddings, then filtered ranking.

    ``known_sources`` is the list of triplet arrays (train, valid, test)
    whose positives are filtered out of every candidate list.
    """
    if isinstance(eval_triplets, TripletSet):
        eval_triplets = eval_triplets.triplets
    if len(eval_triplets) == 0:
        raise DataError("evaluation set is empty")
    known = build_known_set(known_sources, model.num_relations)
    embeddings, _ = densify.test_time_embed(
        graph, features, model.encoder_params, model.encoder_config,
        densifier_config, two_pass=two_pass)
    return rank_queries(embeddings, eval_triplets, model.num_relations,
                        model.decoder_params, known, batch_size=batch_size,
                        threads=threads)
