"""KvsAll training loop with node-sampled epochs and periodic densification.

Each epoch draws a uniform node subset, restricts the graph and the (head,
relation) queries to it, and scores every retained query against all sampled
nodes. Validation uses the full graph and candidate set. The learning rate
halves after every `lr_patience` consecutive non-improving validations and
training stops at the epoch cap or when the rate drops below the floor.
Logs carry no timestamps so reruns with the same seed are byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import decoder as dec
from . import densify as dens
from . import encoder as enc
from .config import (DENSIFY_FN, DENSIFY_GS, DENSIFY_OURS, RunConfig)
from .errors import ContractError, DataError, NumericError
from .evaluate import RankReport, evaluate
from .model import Model, init_model, save_model
from .optim import OptimizerState, adam_step
from .store import MultiGraph, SplitBundle, TripletSet, build_graph


@dataclass
class QuerySet:
    """Distinct (head, relation-id) queries with their positive tail sets."""

    heads: np.ndarray  # (Q,)
    rels: np.ndarray  # (Q,) over the doubled relation-id space
    positives: list  # list of int64 arrays, one per query

    def __len__(self) -> int:
        return len(self.heads)


def kvsall_pairs(train: TripletSet, with_inverse: bool = True) -> QuerySet:
    """Aggregate train triplets into per-(h, r) positive tail sets.

    With inverses, each triplet also contributes to the (t, r + R) query, so
    the query count is #distinct (h, r) plus #distinct (t, r_inv).
    """
    if not len(train):
        raise DataError("cannot build queries from an empty train set")
    num_rel = len(train.relations)
    table: dict[tuple[int, int], set[int]] = {}
    for h, r, t in train.triplets:
        table.setdefault((int(h), int(r)), set()).add(int(t))
        if with_inverse:
            table.setdefault((int(t), int(r) + num_rel), set()).add(int(h))
    keys = sorted(table)
    heads = np.array([k[0] for k in keys], dtype=np.int64)
    rels = np.array([k[1] for k in keys], dtype=np.int64)
    positives = [np.fromiter(sorted(table[k]), dtype=np.int64) for k in keys]
    return QuerySet(heads, rels, positives)


@dataclass
class EpochSample:
    """One epoch's training world: relabeled subgraph plus retained queries.

    ``nodes[local_id] = original_id``; queries and positives use local ids,
    and the candidate set is exactly the sampled nodes.
    """

    nodes: np.ndarray
    graph: MultiGraph
    heads: np.ndarray
    rels: np.ndarray
    positives: list

    @property
    def num_queries(self) -> int:
        return len(self.heads)


def sample_epoch_subgraph(graph: MultiGraph, queries: QuerySet, sample_size: int,
                          seed: int, epoch: int) -> EpochSample:
    """Uniform node sample without replacement, deterministic in (seed, epoch).

    Edges (including current synthetic ones) survive only if both endpoints
    are sampled. A query survives if its head is sampled and at least one
    positive tail is; positives outside the sample are dropped for the epoch.
    """
    if sample_size < 1:
        raise ContractError("sample_size must be >= 1")
    rng = np.random.default_rng([seed, epoch])
    if sample_size >= graph.num_nodes:
        nodes = np.arange(graph.num_nodes, dtype=np.int64)
    else:
        nodes = np.sort(rng.choice(graph.num_nodes, size=sample_size, replace=False))
    local = np.full(graph.num_nodes, -1, dtype=np.int64)
    local[nodes] = np.arange(len(nodes))

    keep = (local[graph.src] >= 0) & (local[graph.dst] >= 0)
    sub_src = local[graph.src[keep]]
    sub_rel = graph.rel[keep]
    sub_dst = local[graph.dst[keep]]
    if len(graph.sim_src):
        keep_sim = (local[graph.sim_src] >= 0) & (local[graph.sim_dst] >= 0)
        sim_src = local[graph.sim_src[keep_sim]]
        sim_dst = local[graph.sim_dst[keep_sim]]
    else:
        sim_src = sim_dst = None
    subgraph = MultiGraph(len(nodes), graph.num_relations,
                          sub_src, sub_rel, sub_dst, sim_src, sim_dst)

    heads, rels, positives = [], [], []
    for q in range(len(queries)):
        h_local = local[queries.heads[q]]
        if h_local < 0:
            continue
        pos = queries.positives[q]
        pos_local = local[pos]
        pos_local = pos_local[pos_local >= 0]
        if not len(pos_local):
            continue
        heads.append(h_local)
        rels.append(queries.rels[q])
        positives.append(np.sort(pos_local))
    return EpochSample(nodes, subgraph,
                       np.array(heads, dtype=np.int64),
                       np.array(rels, dtype=np.int64), positives)


def build_label_matrix(positives: list, num_candidates: int, epsilon: float) -> np.ndarray:
    """Smoothed multi-label targets: 1 - eps at positives, eps/C elsewhere."""
    if not (0.0 <= epsilon < 0.5):
        raise ContractError("label smoothing must lie in [0, 0.5)")
    labels = np.full((len(positives), num_candidates), epsilon / num_candidates)
    for i, pos in enumerate(positives):
        labels[i, pos] = 1.0 - epsilon
    return labels


def train_step(model: Model, sample: EpochSample, features_local: ad.Tensor,
               batch: np.ndarray, state: OptimizerState, epsilon: float,
               rng: np.random.Generator) -> float:
    """One forward/backward/update over a batch of queries; returns the loss."""
    tape = ad.Tape()
    emb = enc.encode(tape, sample.graph, features_local, model.encoder_params,
                     model.encoder_config)
    heads = ad.gather_rows(tape, emb, sample.heads[batch])
    masks = dec.sample_dropout(rng, model.decoder_config, len(batch),
                               model.decoder_config.kernels, model.encoder_config.hidden_dim)
    scores = dec.score_all(tape, heads, sample.rels[batch], emb,
                           model.decoder_params, masks)
    labels = build_label_matrix([sample.positives[i] for i in batch],
                                len(sample.nodes), epsilon)
    loss = ad.bce_with_logits(tape, scores, labels)
    grads = ad.backward(tape, loss)
    adam_step(model.named_parameters(), grads, state)
    return float(loss.value)


@dataclass
class TrainResult:
    model: Model
    optimizer: OptimizerState
    log: list = field(default_factory=list)
    best_mrr: float | None = None
    best_epoch: int | None = None


def _refresh_edges(base: MultiGraph, features: np.ndarray, model: Model,
                   config: RunConfig, epoch: int):
    """Synthetic edges for the coming epochs, per the configured strategy.

    The reference strategy ranks by encoder outputs on the full non-synthetic
    graph; the raw-feature baselines are static and computed once at epoch 0.
    """
    mode = config.densifier.mode
    if mode == DENSIFY_OURS:
        emb = enc.encode_inference(base, features, model.encoder_params,
                                   model.encoder_config)
        return dens.densify(base, emb, config.densifier, stamp=f"epoch-{epoch}")
    return dens.synthesize_edges(base, features, None, config.densifier,
                                 stamp=f"epoch-{epoch}")


def fit(bundle: SplitBundle, features: np.ndarray, config: RunConfig,
        checkpoint_path: str | None = None, log_fn=None) -> TrainResult:
    """Train to the epoch cap or the LR floor, checkpointing on best MRR.

    Validation (when the bundle has a valid split) runs every
    `val_interval` epochs with the same two-pass test-time embedding as
    final evaluation. Without a valid split, the final parameters are saved.
    """
    train = bundle.train
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] != len(train.entities):
        raise DataError(f"feature rows {features.shape[0]} != "
                        f"entity count {len(train.entities)}")
    if config.encoder.input_dim == 0:
        config.encoder.input_dim = features.shape[1]
    elif config.encoder.input_dim != features.shape[1]:
        raise DataError(f"feature dim {features.shape[1]} != configured "
                        f"input_dim {config.encoder.input_dim}")

    tc = config.train
    base = build_graph(train)
    model = init_model(config.encoder, config.decoder, len(train.relations), tc.seed)
    queries = kvsall_pairs(train)
    state = OptimizerState(lr=tc.lr)
    result = TrainResult(model=model, optimizer=state)

    def emit(line: str) -> None:
        result.log.append(line)
        if log_fn is not None:
            log_fn(line)

    known = [bundle.train, bundle.valid, bundle.test]
    has_valid = len(bundle.valid) > 0
    graph = base
    bad_checks = 0
    saved = False

    for epoch in range(tc.epochs):
        static_mode = config.densifier.mode in (DENSIFY_GS, DENSIFY_FN)
        refresh_now = (static_mode and epoch == 0) or (
            config.densifier.mode == DENSIFY_OURS
            and epoch > 0 and epoch % config.densifier.period == 0)
        if refresh_now:
            edges = _refresh_edges(base, features, model, config, epoch)
            graph = base.with_synthetic(edges.src, edges.dst) if len(edges) else base
            emit(f"epoch={epoch} densify={config.densifier.mode} edges={len(edges)}")

        sample = sample_epoch_subgraph(graph, queries, tc.sample_size, tc.seed, epoch)
        if sample.num_queries == 0:
            emit(f"epoch={epoch} skipped=no-queries-in-sample")
            continue
        rng_epoch = np.random.default_rng([tc.seed, epoch, 1])
        order = rng_epoch.permutation(sample.num_queries)
        feats_local = ad.tensor(features[sample.nodes])
        for step, start in enumerate(range(0, sample.num_queries, tc.batch_size)):
            batch = order[start:start + tc.batch_size]
            try:
                loss = train_step(model, sample, feats_local, batch, state,
                                  tc.label_smoothing, rng_epoch)
            except NumericError as err:
                raise NumericError(f"epoch {epoch} step {step}: {err}") from err
            emit(f"epoch={epoch} step={step} loss={loss:.6f} lr={state.lr:.8g}")

        if has_valid and (epoch + 1) % tc.val_interval == 0:
            report = evaluate(model, graph, features, bundle.valid, known,
                              config.densifier, two_pass=True)
            val = report.mrr
            emit(f"epoch={epoch} val_mrr={val:.6f} lr={state.lr:.8g}")
            if result.best_mrr is None or val > result.best_mrr:
                result.best_mrr, result.best_epoch = val, epoch
                bad_checks = 0
                if checkpoint_path is not None:
                    save_model(checkpoint_path, model, opt=state,
                               extra_manifest={"epoch": epoch, "val_mrr": val})
                    saved = True
            else:
                bad_checks += 1
                if bad_checks % tc.lr_patience == 0:
                    state.lr /= 2.0
                    emit(f"epoch={epoch} lr_halved={state.lr:.8g}")
        if state.lr < tc.lr_floor:
            emit(f"epoch={epoch} stop=lr-floor")
            break

    if checkpoint_path is not None and not saved:
        save_model(checkpoint_path, model, opt=state,
                   extra_manifest={"epoch": tc.epochs - 1, "val_mrr": None})
    return result


def evaluate_split(model: Model, bundle: SplitBundle, features: np.ndarray,
                   eval_set: TripletSet, densifier_config, two_pass: bool = True,
                   threads: int = 1) -> RankReport:
    """Evaluate a split with the standard filtered protocol over the bundle."""
    graph = build_graph(bundle.train)
    known = [bundle.train, bundle.valid, bundle.test]
    return evaluate(model, graph, np.asarray(features, dtype=np.float64),
                    eval_set, known, densifier_config, two_pass=two_pass,
                    threads=threads)
