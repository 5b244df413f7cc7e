"""
Training end to end and scoring unseen entities
===============================================

Trains the full model (gated graph encoder + densifier + convolutional
decoder) on a clustered synthetic world in which one entity per cluster
appears only at test time, then shows why the densifier matters: with it,
those newcomers are ranked far above chance; without the second
densify-and-reencode pass, they sit near the random baseline.
"""

import numpy as np

from ckgc.evaluate import build_known_set, expand_queries
from ckgc.store import build_graph, unseen_entities
from ckgc.synth import inductive_fixture
from ckgc.trainer import evaluate_split, fit

bundle, features, config, unseen = inductive_fixture(seed=0)
config.train.epochs = 120  # enough for this world; the fixture default is 200
print("entities:", len(bundle.entities), " train:", len(bundle.train),
      " valid:", len(bundle.valid), " test:", len(bundle.test))
print("held-out newcomers:", unseen.tolist())

# the newcomers are genuinely isolated in the training graph
graph = build_graph(bundle.train)
assert np.array_equal(np.sort(unseen_entities(bundle.train, bundle.test)), np.sort(unseen))
assert all(graph.total_indegree()[unseen] == 0)

# train; every `val_interval` epochs the valid split is ranked and the best
# checkpoint kept, and every densifier period the synthetic edges refresh
logs = []
result = fit(bundle, features, config, log_fn=logs.append)
for line in logs:
    if "val_mrr" in line or "densify" in line:
        print(line)
print("best val_mrr=%.4f at epoch %d" % (result.best_mrr, result.best_epoch))

# evaluation is rank-based: for each test triplet, both the tail and the
# head are hidden in turn and ranked against every entity, filtering other
# known positives
two_pass = evaluate_split(result.model, bundle, features, bundle.test,
                          config.densifier, two_pass=True)
one_pass = evaluate_split(result.model, bundle, features, bundle.test,
                          config.densifier, two_pass=False)
print("\ntwo-pass test report:\n" + two_pass.format())

# analytic chance level: a random scorer gives a query with n free
# candidates an expected reciprocal rank of H(n)/n
num_cand = len(bundle.entities)
known = build_known_set([bundle.train, bundle.valid, bundle.test],
                        len(bundle.relations))
expected = []
for src, rel, gold, _direction, _orig in expand_queries(bundle.test.triplets,
                                                        len(bundle.relations)):
    n = num_cand - (len(known[src, rel]) - 1)
    expected.append(sum(1.0 / r for r in range(1, n + 1)) / n)
baseline = float(np.mean(expected))

print("mrr: two-pass=%.4f  single-pass=%.4f  random=%.4f"
      % (two_pass.mrr, one_pass.mrr, baseline))
assert two_pass.mrr > 3 * baseline
assert two_pass.mrr > one_pass.mrr
print("\ndensified re-encoding lifts unseen entities well above chance")
