"""Triplet store, data splits and the multi-relational graph.

Entities are free-form text phrases; identity is exact string match on the
raw text. Triplets are stored as integer id triples against shared entity
and relation tables. The graph built from a triplet set holds per-node
in-edges over an extended relation id space: original relations, their
inverses, and one reserved similarity relation used by the densifier.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DataError

THREE_COLUMN = "three-column"
SCORED_FOUR_COLUMN = "scored-four-column"


@dataclass(frozen=True)
class EntityTable:
    """Dense id <-> text mapping. ids are contiguous 0..n-1."""

    texts: tuple[str, ...]
    index: dict[str, int] = field(repr=False, default_factory=dict)

    @staticmethod
    def from_texts(texts) -> "EntityTable":
        texts = tuple(texts)
        index = {t: i for i, t in enumerate(texts)}
        if len(index) != len(texts):
            raise DataError("entity table contains duplicate texts")
        return EntityTable(texts, index)

    def __len__(self) -> int:
        return len(self.texts)

    def id_of(self, text: str) -> int:
        try:
            return self.index[text]
        except KeyError:
            raise DataError(f"unknown entity text: {text!r}") from None


@dataclass(frozen=True)
class RelationTable:
    names: tuple[str, ...]
    index: dict[str, int] = field(repr=False, default_factory=dict)

    @staticmethod
    def from_names(names) -> "RelationTable":
        names = tuple(names)
        return RelationTable(names, {n: i for i, n in enumerate(names)})

    def __len__(self) -> int:
        return len(self.names)

    def id_of(self, name: str) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise DataError(f"unknown relation name: {name!r}") from None


@dataclass(frozen=True)
class TripletSet:
    """Ordered, duplicate-free list of (head, relation, tail) id triples.

    ``weights`` keeps the optional per-triplet confidence column of scored
    input files; the model never consumes it.
    """

    triplets: np.ndarray  # (n, 3) int64, columns (head, relation, tail)
    entities: EntityTable
    relations: RelationTable
    weights: np.ndarray | None = None  # (n,) float64 or None

    def __post_init__(self):
        t = self.triplets
        if t.ndim != 2 or t.shape[1] != 3:
            raise ContractError("triplets must be an (n, 3) array")
        if len(t):
            if t[:, [0, 2]].max() >= len(self.entities) or t.min() < 0:
                raise ContractError("triplet refers to an unknown entity id")
            if t[:, 1].max() >= len(self.relations):
                raise ContractError("triplet refers to an unknown relation id")

    def __len__(self) -> int:
        return len(self.triplets)

    @property
    def heads(self) -> np.ndarray:
        return self.triplets[:, 0]

    @property
    def rels(self) -> np.ndarray:
        return self.triplets[:, 1]

    @property
    def tails(self) -> np.ndarray:
        return self.triplets[:, 2]

    def entity_ids(self) -> np.ndarray:
        """Sorted unique ids occurring as head or tail."""
        if not len(self.triplets):
            return np.empty(0, dtype=np.int64)
        return np.unique(self.triplets[:, [0, 2]])

    def subset(self, mask: np.ndarray) -> "TripletSet":
        w = self.weights[mask] if self.weights is not None else None
        return TripletSet(self.triplets[mask], self.entities, self.relations, w)


@dataclass(frozen=True)
class SplitBundle:
    """Train/valid/test views sharing one entity and relation table."""

    train: TripletSet
    valid: TripletSet
    test: TripletSet

    def __post_init__(self):
        for part in (self.valid, self.test):
            if part.entities is not self.train.entities and part.entities.texts != self.train.entities.texts:
                raise ContractError("split parts must share one entity table")

    @property
    def entities(self) -> EntityTable:
        return self.train.entities

    @property
    def relations(self) -> RelationTable:
        return self.train.relations

    def all_triplets(self) -> np.ndarray:
        return np.concatenate([self.train.triplets, self.valid.triplets, self.test.triplets])


def _parse_lines(path: str, format: str):
    """Yield (head_text, rel_name, tail_text, weight) per line."""
    ncols = 3 if format == THREE_COLUMN else 4
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != ncols:
                raise DataError(
                    f"{path}:{lineno}: expected {ncols} tab-separated columns, got {len(cols)}"
                )
            if format == THREE_COLUMN:
                h, r, t = cols
                w = None
            else:
                r, h, t, w = cols
                try:
                    w = float(w)
                except ValueError:
                    raise DataError(f"{path}:{lineno}: bad weight {w!r}") from None
            if not h or not t or not r:
                raise DataError(f"{path}:{lineno}: empty field")
            yield h, r, t, w


def ingest_triplets(path: str, format: str = THREE_COLUMN) -> TripletSet:
    """Read a tab-separated triplet file into a deduplicated TripletSet.

    ``format`` is ``"three-column"`` (head, relation, tail) or
    ``"scored-four-column"`` (relation, head, tail, weight). Entities are
    keyed by exact text; duplicate (h, r, t) lines keep the first occurrence.
    """
    if format not in (THREE_COLUMN, SCORED_FOUR_COLUMN):
        raise ContractError(f"unknown format: {format!r}")
    ent_index: dict[str, int] = {}
    ent_texts: list[str] = []
    rel_index: dict[str, int] = {}
    rel_names: list[str] = []
    triples: list[tuple[int, int, int]] = []
    weights: list[float] = []
    seen: set[tuple[int, int, int]] = set()
    any_weight = format == SCORED_FOUR_COLUMN

    def ent_id(text: str) -> int:
        i = ent_index.get(text)
        if i is None:
            i = len(ent_texts)
            ent_index[text] = i
            ent_texts.append(text)
        return i

    for h, r, t, w in _parse_lines(path, format):
        hi, ti = ent_id(h), ent_id(t)
        ri = rel_index.get(r)
        if ri is None:
            ri = len(rel_names)
            rel_index[r] = ri
            rel_names.append(r)
        key = (hi, ri, ti)
        if key in seen:
            continue
        seen.add(key)
        triples.append(key)
        if any_weight:
            weights.append(w)

    if not triples:
        raise DataError(f"{path}: no triplets found")
    return TripletSet(
        np.array(triples, dtype=np.int64),
        EntityTable.from_texts(ent_texts),
        RelationTable.from_names(rel_names),
        np.array(weights) if any_weight else None,
    )


def uniform_split(data: TripletSet, ratios=(0.8, 0.1, 0.1), seed: int = 0) -> SplitBundle:
    """Shuffle triplets by a seeded uniform permutation and cut by ratio.

    Part sizes are round(r0*n) / round(r1*n) / remainder, so the three parts
    partition the input exactly.
    """
    r0, r1, r2 = ratios
    if min(r0, r1, r2) <= 0 or abs(r0 + r1 + r2 - 1.0) > 1e-9:
        raise ContractError(f"ratios must be positive and sum to 1, got {ratios}")
    n = len(data)
    if n < 3:
        raise DataError(f"need at least 3 triplets to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(r0 * n))
    n_valid = int(round(r1 * n))
    parts = (perm[:n_train], perm[n_train : n_train + n_valid], perm[n_train + n_valid :])
    train, valid, test = (data.subset(p) for p in parts)
    return SplitBundle(train, valid, test)


def unseen_entities(train: TripletSet, eval: TripletSet) -> np.ndarray:
    """Sorted ids occurring in ``eval`` but in no train triplet."""
    return np.setdiff1d(eval.entity_ids(), train.entity_ids(), assume_unique=True)


def inductive_filter(bundle: SplitBundle) -> tuple[TripletSet, TripletSet]:
    """Keep only valid/test triplets with at least one entity unseen in train."""
    for name, part in (("train", bundle.train), ("valid", bundle.valid), ("test", bundle.test)):
        if not len(part):
            raise ContractError(f"{name} part is empty")
    seen = np.zeros(len(bundle.entities), dtype=bool)
    seen[bundle.train.entity_ids()] = True

    def filt(part: TripletSet) -> TripletSet:
        mask = ~(seen[part.heads] & seen[part.tails])
        return part.subset(mask)

    return filt(bundle.valid), filt(bundle.test)


class MultiGraph:
    """Directed multi-relational graph stored as flat in-edge arrays.

    Relation id space: original relations ``[0, R)``, inverse relations
    ``[R, 2R)``, and the reserved similarity relation ``2R``. Base edges
    (original + inverse) are immutable; synthetic similarity edges live in a
    separate block so they can be swapped atomically between refreshes.
    """

    def __init__(self, num_nodes: int, num_relations: int, src, rel, dst, sim_src=None, sim_dst=None):
        self.num_nodes = int(num_nodes)
        self.num_relations = int(num_relations)  # original relation count
        self.src = np.asarray(src, dtype=np.int64)
        self.rel = np.asarray(rel, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.sim_src = np.asarray(sim_src if sim_src is not None else [], dtype=np.int64)
        self.sim_dst = np.asarray(sim_dst if sim_dst is not None else [], dtype=np.int64)
        if len(self.src) and (self.rel.max() >= self.sim_relation_id or self.rel.min() < 0):
            raise ContractError("base edge carries an out-of-range relation id")
        # in-degree over original + inverse edges only; the densifier's budget
        self.nonsyn_indegree = np.bincount(self.dst, minlength=self.num_nodes)

    @property
    def sim_relation_id(self) -> int:
        return 2 * self.num_relations

    @property
    def num_relation_ids(self) -> int:
        return 2 * self.num_relations + 1

    def num_base_edges(self) -> int:
        return len(self.src)

    def all_edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(src, rel, dst) over base plus synthetic edges."""
        if not len(self.sim_src):
            return self.src, self.rel, self.dst
        sim_rel = np.full(len(self.sim_src), self.sim_relation_id, dtype=np.int64)
        return (
            np.concatenate([self.src, self.sim_src]),
            np.concatenate([self.rel, sim_rel]),
            np.concatenate([self.dst, self.sim_dst]),
        )

    def total_indegree(self) -> np.ndarray:
        """Per-node in-degree counting synthetic edges as well."""
        deg = self.nonsyn_indegree.copy()
        if len(self.sim_dst):
            deg += np.bincount(self.sim_dst, minlength=self.num_nodes)
        return deg

    def in_neighbors(self, node: int) -> np.ndarray:
        """Sources of the node's non-synthetic in-edges (unique, sorted)."""
        return np.unique(self.src[self.dst == node])

    def with_synthetic(self, sim_src, sim_dst) -> "MultiGraph":
        """New graph sharing the base edges, with synthetic edges replaced."""
        return MultiGraph(
            self.num_nodes, self.num_relations, self.src, self.rel, self.dst, sim_src, sim_dst
        )

    def without_synthetic(self) -> "MultiGraph":
        if not len(self.sim_src):
            return self
        return self.with_synthetic(None, None)


def build_graph(train: TripletSet, add_inverse: bool = True) -> MultiGraph:
    """Build the multigraph over the full entity table from train triplets.

    Entities absent from train stay as isolated nodes, which is what the
    inductive setting requires. Inverse edges (t, r+R, h) are added when
    ``add_inverse`` is set. The similarity relation id is reserved but no
    synthetic edges are present yet.
    """
    if not len(train):
        raise ContractError("train set is empty")
    num_nodes = len(train.entities)
    num_rel = len(train.relations)
    h, r, t = train.heads, train.rels, train.tails
    if add_inverse:
        src = np.concatenate([h, t])
        rel = np.concatenate([r, r + num_rel])
        dst = np.concatenate([t, h])
    else:
        src, rel, dst = h, r, t
    return MultiGraph(num_nodes, num_rel, src, rel, dst)


@dataclass(frozen=True)
class DegreeReport:
    mean_in_degree: float  # original-direction edges per entity
    triplet_degrees: np.ndarray  # (n,) per-triplet (deg(head)+deg(tail))/2
    histogram: "collections.OrderedDict"  # triplet-degree value -> count

    def format(self, max_rows: int = 25) -> str:
        lines = [f"mean_in_degree\t{self.mean_in_degree:.4f}"]
        for value, count in list(self.histogram.items())[:max_rows]:
            lines.append(f"triplet_degree\t{value:g}\t{count}")
        if len(self.histogram) > max_rows:
            lines.append(f"triplet_degree\t...\t({len(self.histogram) - max_rows} more buckets)")
        return "\n".join(lines)


def degree_stats(graph: MultiGraph, triplets: TripletSet) -> DegreeReport:
    """Per-triplet degree histogram plus the mean in-degree of the graph.

    Node degree here is the non-synthetic in-degree (original + inverse
    edges); on a graph built with inverses that equals the undirected degree
    over original triplets. Mean in-degree counts original-direction edges
    only, i.e. edges / entities.
    """
    if len(triplets) and triplets.triplets[:, [0, 2]].max() >= graph.num_nodes:
        raise ContractError("triplet entity id outside graph")
    deg = graph.nonsyn_indegree
    trip_deg = (deg[triplets.heads] + deg[triplets.tails]) / 2.0
    n_original = int(np.sum(graph.rel < graph.num_relations))
    hist = collections.OrderedDict()
    for value, count in zip(*np.unique(trip_deg, return_counts=True)):
        hist[float(value)] = int(count)
    return DegreeReport(n_original / graph.num_nodes, trip_deg, hist)


def write_entity_table(path: str, entities: EntityTable) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, text in enumerate(entities.texts):
            fh.write(f"{i}\t{text}\n")


def read_entity_table(path: str) -> EntityTable:
    texts = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise DataError(f"{path}:{lineno}: expected id<TAB>text")
            if int(cols[0]) != lineno - 1:
                raise DataError(f"{path}:{lineno}: ids must be contiguous from 0")
            texts.append(cols[1])
    if not texts:
        raise DataError(f"{path}: empty entity table")
    return EntityTable.from_texts(texts)


def write_triplets(path: str, data: TripletSet) -> None:
    """Three-column TSV: head_text, relation_name, tail_text."""
    ent, rel = data.entities.texts, data.relations.names
    with open(path, "w", encoding="utf-8") as fh:
        for h, r, t in data.triplets:
            fh.write(f"{ent[h]}\t{rel[r]}\t{ent[t]}\n")


def read_triplets(path: str, entities: EntityTable, relations: RelationTable | None = None) -> TripletSet:
    """Read a three-column TSV against a fixed entity table.

    When ``relations`` is given, relation names are resolved against it and
    unknown names are a data error; otherwise a fresh relation table is built
    in order of first appearance.
    """
    own_relations = relations is None
    rel_names: list[str] = []
    rel_index: dict[str, int] = {}
    triples = []
    seen = set()
    for h, r, t, _ in _parse_lines(path, THREE_COLUMN):
        hi, ti = entities.id_of(h), entities.id_of(t)
        if own_relations:
            ri = rel_index.get(r)
            if ri is None:
                ri = len(rel_names)
                rel_index[r] = ri
                rel_names.append(r)
        else:
            ri = relations.id_of(r)
        key = (hi, ri, ti)
        if key in seen:
            continue
        seen.add(key)
        triples.append(key)
    if not triples:
        raise DataError(f"{path}: no triplets found")
    table = RelationTable.from_names(rel_names) if own_relations else relations
    return TripletSet(np.array(triples, dtype=np.int64), entities, table)
