"""Small deterministic fixtures for end-to-end exercises.

Two worlds: a memorization fixture (does the full pipeline have enough
capacity and plumbing to drive train-set MRR close to 1?) and a clustered
inductive fixture where test-only entities are isolated nodes whose features
place them inside a feature cluster, so densification is what connects them
to the graph. Both are sized to train in seconds.
"""

from __future__ import annotations

import os

import numpy as np

from .config import (DecoderConfig, DensifierConfig, EncoderConfig, RunConfig,
                     TrainConfig)
from .features import save_features
from .store import (EntityTable, RelationTable, SplitBundle, TripletSet,
                    write_entity_table, write_triplets)


def _bundle(entities, relations, train, valid, test):
    def part(rows):
        arr = np.array(sorted(set(rows)), dtype=np.int64).reshape(-1, 3)
        return TripletSet(arr, entities, relations)

    return SplitBundle(part(train), part(valid), part(test))


def overfit_fixture(seed: int = 0):
    """30 entities, 4 relations, 100 random triplets, valid = train.

    Returns (bundle, features, config). The config is sized so 500 epochs
    memorize the train set; validation on the train split drives
    checkpoint selection.
    """
    rng = np.random.default_rng(seed)
    n_ent, n_rel, n_trip = 30, 4, 100
    entities = EntityTable.from_texts([f"thing {i:02d}" for i in range(n_ent)])
    relations = RelationTable.from_names([f"rel{j}" for j in range(n_rel)])

    rows = set()
    while len(rows) < n_trip:
        h, t = rng.integers(0, n_ent, size=2)
        if h == t:
            continue
        rows.add((int(h), int(rng.integers(0, n_rel)), int(t)))
    train = TripletSet(np.array(sorted(rows), dtype=np.int64), entities, relations)
    bundle = SplitBundle(train, train, train)

    features = rng.normal(size=(n_ent, 16))
    config = RunConfig(
        encoder=EncoderConfig(layers=2, hidden_dim=32, input_dim=16),
        decoder=DecoderConfig(kernels=8, kernel_width=3, dropout_input=0.0,
                              dropout_features=0.0, dropout_proj=0.0),
        densifier=DensifierConfig(m=5, period=50),
        train=TrainConfig(epochs=500, batch_size=256, lr=3e-3, seed=seed,
                          val_interval=25),
    )
    return bundle, features, config


def inductive_fixture(seed: int = 0, clusters: int = 6, members: int = 5,
                      noise: float = 0.35):
    """Clustered world where one entity per cluster appears only in test.

    Every cluster has a hub; members link to their own hub (rel ``to-hub``),
    to the next cluster's hub (``to-next``), and to a ring of peers
    (``peer``). The held-out entity of each cluster shares the cluster's
    feature prototype but has no train edges, so only densification can give
    it neighbors. Returns (bundle, features, config, unseen_ids).
    """
    rng = np.random.default_rng(seed)
    texts, cluster_of = [], []
    hub, member, unseen = {}, {}, {}
    for c in range(clusters):
        hub[c] = len(texts)
        texts.append(f"group {c} hub")
        cluster_of.append((c, "hub"))
        for j in range(members):
            member[c, j] = len(texts)
            texts.append(f"group {c} item {j}")
            cluster_of.append((c, "member"))
        unseen[c] = len(texts)
        texts.append(f"group {c} newcomer")
        cluster_of.append((c, "member"))
    entities = EntityTable.from_texts(texts)
    relations = RelationTable.from_names(["to-hub", "to-next", "peer"])
    r_hub, r_next, r_peer = 0, 1, 2

    train, valid, test = [], [], []
    for c in range(clusters):
        nxt = (c + 1) % clusters
        for j in range(members):
            e = member[c, j]
            train.append((e, r_hub, hub[c]))
            train.append((e, r_next, hub[nxt]))
            train.append((e, r_peer, member[c, (j + 1) % members]))
        valid.append((member[c, 1], r_peer, member[c, 3]))
        test.append((unseen[c], r_hub, hub[c]))
        test.append((unseen[c], r_next, hub[nxt]))
    bundle = _bundle(entities, relations, train, valid, test)

    dim = 16
    member_proto = rng.normal(size=(clusters, dim))
    hub_proto = rng.normal(size=(clusters, dim))
    features = np.empty((len(texts), dim))
    for eid, (c, role) in enumerate(cluster_of):
        proto = hub_proto[c] if role == "hub" else member_proto[c]
        features[eid] = proto + noise * rng.normal(size=dim)

    config = RunConfig(
        encoder=EncoderConfig(layers=2, hidden_dim=32, input_dim=dim),
        decoder=DecoderConfig(kernels=8, kernel_width=3, dropout_input=0.0,
                              dropout_features=0.0, dropout_proj=0.0),
        densifier=DensifierConfig(m=3, period=50),
        train=TrainConfig(epochs=200, batch_size=256, lr=3e-3, seed=seed,
                          val_interval=25),
    )
    unseen_ids = np.array([unseen[c] for c in range(clusters)], dtype=np.int64)
    return bundle, features, config, unseen_ids


def write_fixture(out_dir: str, bundle: SplitBundle, features: np.ndarray) -> dict:
    """Materialize a fixture as the files the command line consumes."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "entities": os.path.join(out_dir, "entities.tsv"),
        "train": os.path.join(out_dir, "train.tsv"),
        "valid": os.path.join(out_dir, "valid.tsv"),
        "test": os.path.join(out_dir, "test.tsv"),
        "features": os.path.join(out_dir, "features.ckgf"),
    }
    write_entity_table(paths["entities"], bundle.entities)
    write_triplets(paths["train"], bundle.train)
    write_triplets(paths["valid"], bundle.valid)
    write_triplets(paths["test"], bundle.test)
    save_features(paths["features"], features,
                  manifest=f"rows={features.shape[0]} dim={features.shape[1]}")
    return paths
