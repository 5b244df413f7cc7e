"""Inductive knowledge-graph completion over free-text entities.

The pipeline: fixed text features per entity, a gated relational graph
encoder, a degree-balanced similarity densifier that wires sparse and
unseen entities into the graph, and a shuffled convolutional decoder
scoring every (head, relation) query against all entities. Training and
inference run on a small hand-built reverse-mode autodiff core; everything
is deterministic given a seed.
"""

from .config import (DecoderConfig, DensifierConfig, EncoderConfig, RunConfig,
                     TrainConfig)
from .errors import (CkgcError, ContractError, DataError, NumericError,
                     UsageError)
from .evaluate import RankReport, build_known_set, filtered_rank, hits_at, mrr
from .features import cosine_knn, load_features, normalize_rows, save_features
from .model import Model, init_model, load_model, save_model
from .store import (EntityTable, MultiGraph, RelationTable, SplitBundle,
                    TripletSet, build_graph, degree_stats, ingest_triplets,
                    inductive_filter, read_entity_table, read_triplets,
                    uniform_split, unseen_entities, write_entity_table,
                    write_triplets)
from .trainer import TrainResult, evaluate_split, fit, kvsall_pairs

__version__ = "0.1.0"

__all__ = [
    "CkgcError", "ContractError", "DataError", "NumericError", "UsageError",
    "DecoderConfig", "DensifierConfig", "EncoderConfig", "RunConfig", "TrainConfig",
    "EntityTable", "MultiGraph", "RelationTable", "SplitBundle", "TripletSet",
    "Model", "RankReport", "TrainResult",
    "build_graph", "build_known_set", "cosine_knn", "degree_stats",
    "evaluate_split", "filtered_rank", "fit", "hits_at",
    "inductive_filter", "ingest_triplets", "init_model", "kvsall_pairs",
    "load_features", "load_model", "mrr", "normalize_rows",
    "read_entity_table", "read_triplets", "save_features", "save_model",
    "uniform_split", "unseen_entities", "write_entity_table", "write_triplets",
]
