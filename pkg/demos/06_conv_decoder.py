"""
Scoring triples with a shuffled convolutional decoder
=====================================================

The decoder stacks a (head, relation) pair into a 2-row image, shuffles
each row with a fixed learned-free permutation, convolves along the
embedding axis, and projects back to embedding space; scores are inner
products against candidate embeddings.
"""

import numpy as np

import ckgc.autodiff as ad
from ckgc.config import DecoderConfig
from ckgc.decoder import init_params, sample_dropout, score_all, score_triplet

rng = np.random.default_rng(5)

d, num_rel_ids, num_cand = 8, 4, 6
config = DecoderConfig(kernels=3, kernel_width=3,
                       dropout_input=0.0, dropout_features=0.0, dropout_proj=0.0)
params = init_params(config, num_rel_ids, d, seed=0)
print("kernels:", params.kernels.shape, " projection:", params.proj.shape)
print("head permutation:", params.perm_head.tolist())
print("rel  permutation:", params.perm_rel.tolist())

heads = ad.tensor(rng.normal(size=(2, d)))
cands = ad.tensor(rng.normal(size=(num_cand, d)))
rel_ids = np.array([0, 2])

# a (2 queries) x (6 candidates) score matrix in one call
tape = ad.Tape()
scores = score_all(tape, heads, rel_ids, cands, params)
print("\nscore matrix:\n", np.round(scores.value, 3))

# score_triplet is literally score_all with a single candidate
tape = ad.Tape()
one = score_triplet(tape, ad.tensor(heads.value[0]), 0, ad.tensor(cands.value[3]), params)
assert np.isclose(float(one.value), scores.value[0, 3])
print("single-triplet score agrees with the matrix entry")

# scores are linear in the candidate embeddings (final op is an inner
# product), so doubling a candidate doubles its column
tape = ad.Tape()
doubled = score_all(tape, heads, rel_ids,
                    ad.tensor(cands.value * 2.0), params)
assert np.allclose(doubled.value, scores.value * 2.0)
print("candidate linearity holds")

# the permutations are per-row and fixed at init; disabling the shuffle
# gives a plainly different scorer on the same weights
plain = init_params(DecoderConfig(kernels=3, kernel_width=3, shuffle=False,
                                  dropout_input=0.0, dropout_features=0.0,
                                  dropout_proj=0.0), num_rel_ids, d, seed=0)
assert np.array_equal(plain.perm_head, np.arange(d))
tape = ad.Tape()
unshuffled = score_all(tape, heads, rel_ids, cands, plain)
print("max |shuffled - unshuffled| =",
      float(np.abs(scores.value - unshuffled.value).max()))

# training uses inverted dropout: masks are 0 or 1/(1-rate), sampled once
# per step so the gradient check sees a fixed function
drop_cfg = DecoderConfig(kernels=3, kernel_width=3, dropout_input=0.3,
                         dropout_features=0.3, dropout_proj=0.3)
masks = sample_dropout(np.random.default_rng(0), drop_cfg, batch=2, k=3, dim=d)
vals = np.unique(masks.stack)
print("dropout mask values:", np.round(vals, 4).tolist())
tape = ad.Tape()
noisy = score_all(tape, heads, rel_ids, cands, params, dropout=masks)
print("masked scores differ:", not np.allclose(noisy.value, scores.value))

# gradients flow through the whole scorer into every parameter
def loss_fn(tape, h, kern, proj):
    p = type(params)(rel_table=params.rel_table, kernels=kern, proj=proj,
                     perm_head=params.perm_head, perm_rel=params.perm_rel)
    return ad.tmean(tape, score_all(tape, h, rel_ids, cands, p))

h = ad.tensor(heads.value.copy(), requires_grad=True)
kern = ad.tensor(params.kernels.value.copy(), requires_grad=True)
proj = ad.tensor(params.proj.value.copy(), requires_grad=True)
print("decoder grad_check error:", ad.grad_check(loss_fn, [h, kern, proj]))
