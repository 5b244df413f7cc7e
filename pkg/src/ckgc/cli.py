"""Command line entry point.

Subcommands cover the whole pipeline: ingest, split, inductive-split,
stats, train, evaluate, inspect-neighbors. Exit codes: 0 success, 1 usage
error, 2 data error, 3 numeric failure. All randomness hangs off --seed, so
fixed flags reproduce artifacts and logs byte for byte.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import densify as dens
from . import features as feat
from . import store
from .config import (DENSIFY_FN, DENSIFY_GS, DENSIFY_OFF, DENSIFY_OURS,
                     ENCODER_MLP, GATE_FIXED, RunConfig, apply_overrides,
                     load_config_file)
from .encoder import encode_inference
from .errors import CkgcError, DataError, UsageError
from .model import load_model
from .store import SplitBundle, TripletSet
from .trainer import evaluate_split, fit


class _Parser(argparse.ArgumentParser):
    """argparse that reports bad usage through the shared error hierarchy."""

    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ckgc", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="cmd", required=True, metavar="command")

    p = sub.add_parser("ingest", parents=[], help="normalize a raw triplet file",
                       description="Read a triplet TSV, deduplicate, and write "
                                   "the entity table plus a normalized three-column file.")
    p.add_argument("--input", required=True, help="raw triplet TSV")
    p.add_argument("--format", choices=[store.THREE_COLUMN, store.SCORED_FOUR_COLUMN],
                   default=store.THREE_COLUMN,
                   help="input layout (default: %(default)s); weights of the "
                        "four-column layout are dropped on output")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("split", help="seeded uniform train/valid/test split")
    p.add_argument("--input", required=True, help="triplet TSV to split")
    p.add_argument("--format", choices=[store.THREE_COLUMN, store.SCORED_FOUR_COLUMN],
                   default=store.THREE_COLUMN)
    p.add_argument("--ratios", default="0.8,0.1,0.1",
                   help="train,valid,test fractions summing to 1 (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="shuffle seed (default: %(default)s)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("inductive-split",
                       help="restrict valid/test to triplets with unseen entities")
    _data_flags(p, valid=True, test=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_inductive_split)

    p = sub.add_parser("stats", help="degree statistics of a triplet corpus")
    p.add_argument("--train", required=True, help="triplet TSV")
    p.add_argument("--valid", help="optional extra split included in the counts")
    p.add_argument("--test", help="optional extra split included in the counts")
    p.add_argument("--entities", help="entity table; defaults to entities seen in the files")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("train", help="train a model and checkpoint the best validation MRR")
    _data_flags(p, valid=True, test=True)
    p.add_argument("--features", required=True, help="entity feature file")
    p.add_argument("--checkpoint", required=True, help="checkpoint path to write")
    _config_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="filtered-rank metrics for a checkpoint")
    _data_flags(p, valid=True, test=True)
    p.add_argument("--features", required=True, help="entity feature file")
    p.add_argument("--checkpoint", required=True, help="checkpoint to evaluate")
    p.add_argument("--eval-split", choices=["test", "valid"], default="test",
                   help="split to rank (default: %(default)s)")
    p.add_argument("--inductive", action="store_true",
                   help="keep only eval triplets touching an entity unseen in train")
    p.add_argument("--single-pass", action="store_true",
                   help="skip test-time densification (one encoder pass)")
    p.add_argument("--dump-ranks", metavar="PATH",
                   help="write per-query TSV: head, rel, tail, direction, rank")
    _config_flags(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("inspect-neighbors",
                       help="nearest neighbors and synthetic edges of chosen entities")
    _data_flags(p, valid=False, test=False)
    p.add_argument("--features", required=True, help="entity feature file")
    p.add_argument("--checkpoint", required=True, help="trained model")
    p.add_argument("--ids", help="comma-separated entity ids (default: entities "
                                 "with no train edges)")
    p.add_argument("--top-k", type=int, default=3, help="neighbors per entity "
                                                        "(default: %(default)s)")
    p.add_argument("--dump-edges", metavar="PATH",
                   help="write synthetic edges as src, SIM, dst, similarity")
    _config_flags(p)
    p.set_defaults(func=_cmd_inspect)

    return parser


def _data_flags(p, valid: bool, test: bool) -> None:
    p.add_argument("--train", required=True, help="train triplet TSV")
    if valid:
        p.add_argument("--valid", help="validation triplet TSV")
    if test:
        p.add_argument("--test", help="test triplet TSV")
    p.add_argument("--entities", required=True, help="entity table TSV (id, text)")


def _config_flags(p) -> None:
    g = p.add_argument_group("configuration (defaults < --config file < flags)")
    g.add_argument("--config", help="flat key=value config file")
    g.add_argument("--seed", type=int, help="master random seed (default: 0)")
    g.add_argument("--m", type=int, help="densifier target in-degree (default: 5)")
    g.add_argument("--densify-period", type=int,
                   help="epochs between similarity-edge refreshes (default: 100)")
    g.add_argument("--sample-size", type=int,
                   help="nodes sampled per training epoch (default: 50000)")
    g.add_argument("--epochs", type=int, help="max training epochs (default: 500)")
    g.add_argument("--lr", type=float, help="initial learning rate (default: 3e-4)")
    g.add_argument("--dim", type=int, help="hidden embedding width (default: 500)")
    g.add_argument("--layers", type=int, help="encoder layers (default: 2)")
    g.add_argument("--kernels", type=int, help="decoder kernel count (default: 300)")
    g.add_argument("--batch-size", type=int, help="queries per step (default: 256)")
    g.add_argument("--val-interval", type=int,
                   help="epochs between validation checks (default: 25)")
    g.add_argument("--label-smoothing", type=float,
                   help="target smoothing epsilon (default: 0.1)")
    g.add_argument("--densifier", choices=[DENSIFY_OURS, DENSIFY_GS, DENSIFY_FN],
                   help="densification strategy (default: ours)")
    g.add_argument("--no-densify", action="store_true", help="disable densification")
    g.add_argument("--no-gate", action="store_true",
                   help="fix the encoder gate at 0.5 instead of learning it")
    g.add_argument("--mlp-encoder", action="store_true",
                   help="drop message passing; encode features only")
    g.add_argument("--threads", type=int, help="evaluation parallelism (default: 1)")


_FLAG_DESTS = {
    "seed": ("train", "seed"),
    "m": ("densifier", "m"),
    "densify_period": ("densifier", "period"),
    "sample_size": ("train", "sample_size"),
    "epochs": ("train", "epochs"),
    "lr": ("train", "lr"),
    "dim": ("encoder", "hidden_dim"),
    "layers": ("encoder", "layers"),
    "kernels": ("decoder", "kernels"),
    "batch_size": ("train", "batch_size"),
    "val_interval": ("train", "val_interval"),
    "label_smoothing": ("train", "label_smoothing"),
}


def build_config(args) -> RunConfig:
    """Merge defaults, config file, and flags (later sources win)."""
    cfg = RunConfig()
    if getattr(args, "config", None):
        apply_overrides(cfg, load_config_file(args.config))
    for dest, (section, fname) in _FLAG_DESTS.items():
        value = getattr(args, dest, None)
        if value is not None:
            setattr(getattr(cfg, section), fname, value)
    if getattr(args, "densifier", None):
        cfg.densifier.mode = args.densifier
    if getattr(args, "no_densify", False):
        cfg.densifier.mode = DENSIFY_OFF
    if getattr(args, "no_gate", False):
        cfg.encoder.gate = GATE_FIXED
    if getattr(args, "mlp_encoder", False):
        cfg.encoder.mode = ENCODER_MLP
    if getattr(args, "threads", None) is not None:
        cfg.threads = args.threads
    # merged values bypass construction, so re-run the range checks
    cfg.encoder.__post_init__()
    cfg.densifier.__post_init__()
    cfg.train.__post_init__()
    return cfg


def _load_bundle(args) -> SplitBundle:
    entities = store.read_entity_table(args.entities)
    train = store.read_triplets(args.train, entities)
    empty = TripletSet(np.empty((0, 3), dtype=np.int64), entities, train.relations)
    valid = test = empty
    if getattr(args, "valid", None):
        valid = store.read_triplets(args.valid, entities, train.relations)
    if getattr(args, "test", None):
        test = store.read_triplets(args.test, entities, train.relations)
    return SplitBundle(train, valid, test)


def _cmd_ingest(args) -> int:
    data = store.ingest_triplets(args.input, args.format)
    os.makedirs(args.out, exist_ok=True)
    store.write_entity_table(os.path.join(args.out, "entities.tsv"), data.entities)
    store.write_triplets(os.path.join(args.out, "triplets.tsv"), data)
    print(f"entities\t{len(data.entities)}")
    print(f"relations\t{len(data.relations)}")
    print(f"triplets\t{len(data)}")
    return 0


def _cmd_split(args) -> int:
    parts = args.ratios.split(",")
    if len(parts) != 3:
        raise UsageError(f"--ratios needs three comma-separated numbers, got {args.ratios!r}")
    try:
        ratios = tuple(float(x) for x in parts)
    except ValueError:
        raise UsageError(f"--ratios must be numeric, got {args.ratios!r}") from None
    data = store.ingest_triplets(args.input, args.format)
    bundle = store.uniform_split(data, ratios, args.seed)
    os.makedirs(args.out, exist_ok=True)
    store.write_entity_table(os.path.join(args.out, "entities.tsv"), bundle.entities)
    for name, part in (("train", bundle.train), ("valid", bundle.valid), ("test", bundle.test)):
        store.write_triplets(os.path.join(args.out, f"{name}.tsv"), part)
        print(f"{name}\t{len(part)}")
    return 0


def _cmd_inductive_split(args) -> int:
    bundle = _load_bundle(args)
    valid_ind, test_ind = store.inductive_filter(bundle)
    os.makedirs(args.out, exist_ok=True)
    store.write_triplets(os.path.join(args.out, "valid.tsv"), valid_ind)
    store.write_triplets(os.path.join(args.out, "test.tsv"), test_ind)
    unseen = store.unseen_entities(
        bundle.train, TripletSet(bundle.all_triplets(), bundle.entities, bundle.relations))
    print(f"unseen_entities\t{len(unseen)}")
    print(f"valid\t{len(valid_ind)}")
    print(f"test\t{len(test_ind)}")
    return 0


def _scan_tables(paths):
    """Entity and relation tables from files, ids by first appearance."""
    ent, rel = [], []
    ent_idx, rel_idx = {}, {}
    for path in paths:
        for h, r, t, _ in store._parse_lines(path, store.THREE_COLUMN):
            for text in (h, t):
                if text not in ent_idx:
                    ent_idx[text] = len(ent)
                    ent.append(text)
            if r not in rel_idx:
                rel_idx[r] = len(rel)
                rel.append(r)
    if not ent:
        raise DataError(f"{paths[0]}: no triplets found")
    return store.EntityTable.from_texts(ent), store.RelationTable.from_names(rel)


def _cmd_stats(args) -> int:
    paths = [p for p in (args.train, args.valid, args.test) if p]
    if args.entities:
        entities = store.read_entity_table(args.entities)
        first = store.read_triplets(paths[0], entities)
        relations = first.relations
    else:
        entities, relations = _scan_tables(paths)
        first = store.read_triplets(paths[0], entities, relations)
    rows = [first.triplets]
    for path in paths[1:]:
        rows.append(store.read_triplets(path, entities, relations).triplets)
    merged = np.concatenate(rows)
    # cross-split duplicates would double-count degrees
    _, keep = np.unique(merged, axis=0, return_index=True)
    merged = merged[np.sort(keep)]
    combined = TripletSet(merged, entities, relations)
    report = store.degree_stats(store.build_graph(combined), combined)
    print(f"entities\t{len(entities)}")
    print(f"triplets\t{len(combined)}")
    print(report.format())
    return 0


def _cmd_train(args) -> int:
    cfg = build_config(args)
    bundle = _load_bundle(args)
    features = feat.load_features(args.features, expected_rows=len(bundle.entities))
    print("config " + cfg.echo())
    result = fit(bundle, features, cfg, checkpoint_path=args.checkpoint, log_fn=print)
    if result.best_mrr is not None:
        print(f"best val_mrr={result.best_mrr:.6f} epoch={result.best_epoch}")
    print(f"checkpoint {args.checkpoint}")
    return 0


def _cmd_evaluate(args) -> int:
    cfg = build_config(args)
    bundle = _load_bundle(args)
    features = feat.load_features(args.features, expected_rows=len(bundle.entities))
    model, _, _ = load_model(args.checkpoint)
    if features.shape[1] != model.encoder_config.input_dim:
        raise DataError(f"feature dim {features.shape[1]} != model input dim "
                        f"{model.encoder_config.input_dim}")
    eval_set = bundle.test if args.eval_split == "test" else bundle.valid
    if not len(eval_set):
        raise DataError(f"--eval-split {args.eval_split}: split is empty or missing")
    if args.inductive:
        seen = np.zeros(len(bundle.entities), dtype=bool)
        seen[bundle.train.entity_ids()] = True
        eval_set = eval_set.subset(~(seen[eval_set.heads] & seen[eval_set.tails]))
        if not len(eval_set):
            raise DataError("no eval triplets touch an unseen entity")
    report = evaluate_split(model, bundle, features, eval_set, cfg.densifier,
                            two_pass=not args.single_pass, threads=cfg.threads)
    print(report.format())
    if args.dump_ranks:
        report.dump_ranks(args.dump_ranks, bundle.entities, bundle.relations)
    return 0


def _cmd_inspect(args) -> int:
    cfg = build_config(args)
    bundle = _load_bundle(args)
    features = feat.load_features(args.features, expected_rows=len(bundle.entities))
    model, _, _ = load_model(args.checkpoint)
    base = store.build_graph(bundle.train)
    first = encode_inference(base, features, model.encoder_params, model.encoder_config)
    edges = dens.synthesize_edges(base, features, first, cfg.densifier, stamp="inspect")
    graph = base.with_synthetic(edges.src, edges.dst) if len(edges) else base
    embeddings = encode_inference(graph, features, model.encoder_params, model.encoder_config)
    if args.ids:
        try:
            ids = np.array([int(x) for x in args.ids.split(",")], dtype=np.int64)
        except ValueError:
            raise UsageError(f"--ids must be comma-separated integers, got {args.ids!r}") from None
    else:
        ids = np.nonzero(base.nonsyn_indegree == 0)[0]
        if not len(ids):
            raise DataError("no isolated entities; pass --ids explicitly")
    print(dens.nearest_neighbor_report(embeddings, ids, bundle.entities, args.top_k))
    if args.dump_edges:
        edges.dump_tsv(args.dump_edges)
        print(f"synthetic_edges\t{len(edges)}")
    return 0


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        return args.func(args)
    except SystemExit as e:  # argparse --help
        code = e.code if e.code is not None else 0
        return int(code)
    except CkgcError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
