"""Gated relational graph layer, checked against hand-unrolled arithmetic."""

import numpy as np
import pytest

from ckgc import autodiff as ad
from ckgc import encoder as enc
from ckgc.config import EncoderConfig
from ckgc.errors import ContractError
from ckgc.store import MultiGraph


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def make_params(rng, d_in, d_out, num_rel_ids, rel_weight=None):
    rel = np.ones((num_rel_ids, 1)) if rel_weight is None else np.asarray(rel_weight, float).reshape(-1, 1)
    return enc.GrGcnLayerParams(
        w_self=ad.tensor(rng.normal(size=(d_in, d_out)), True, "w_self"),
        w_nbr=ad.tensor(rng.normal(size=(d_in, d_out)), True, "w_nbr"),
        rel_weight=ad.tensor(rel, True, "rel_weight"),
        w_gate=ad.tensor(rng.normal(size=(2 * d_out, d_out)), True, "w_gate"),
        b_gate=ad.tensor(rng.normal(size=(1, d_out)), True, "b_gate"),
    )


def reference_layer(graph, h, p, activation=np.tanh, gate="learned"):
    """Plain numpy re-derivation of one layer, node by node."""
    ws, wn = p.w_self.value, p.w_nbr.value
    wg, bg = p.w_gate.value, p.b_gate.value
    alpha = p.rel_weight.value[:, 0]
    center = h @ ws
    proj = h @ wn
    src, rel, dst = graph.all_edges()
    degree = np.bincount(dst, minlength=graph.num_nodes)
    neighbor = np.zeros_like(center)
    for s, r, d in zip(src, rel, dst):
        neighbor[d] += alpha[r] * proj[s] / degree[d]
    if gate == "learned":
        beta = sigmoid(np.concatenate([center, neighbor], axis=1) @ wg + bg)
        mixed = center * beta + neighbor * (1.0 - beta)
    else:
        mixed = 0.5 * (center + neighbor)
    return activation(mixed)


class TestLayerForward:
    def test_hand_unrolled_chain(self):
        """Two-edge chain 0 -> 1 -> 2, d=2, every node worked out by hand."""
        h = np.array([[1.0, 2.0], [0.5, -1.0], [-2.0, 0.0]])
        ws = np.array([[0.3, -0.1], [0.2, 0.4]])
        wn = np.array([[-0.5, 0.7], [0.1, 0.2]])
        wg = np.array([[0.2, 0.0], [-0.3, 0.1], [0.4, -0.2], [0.0, 0.5]])
        bg = np.array([[0.1, -0.1]])
        alpha = 1.3

        p = enc.GrGcnLayerParams(
            w_self=ad.tensor(ws, True), w_nbr=ad.tensor(wn, True),
            rel_weight=ad.tensor(np.array([[alpha]]), True),
            w_gate=ad.tensor(wg, True), b_gate=ad.tensor(bg, True))
        graph = MultiGraph(3, 1, src=[0, 1], rel=[0, 0], dst=[1, 2])
        out = enc.layer_forward(None, graph, ad.tensor(h), p).value

        center = h @ ws
        proj = h @ wn
        nbr = np.zeros((3, 2))
        nbr[1] = alpha * proj[0]  # in-degree 1
        nbr[2] = alpha * proj[1]
        beta = sigmoid(np.concatenate([center, nbr], axis=1) @ wg + bg)
        want = np.tanh(center * beta + nbr * (1.0 - beta))
        np.testing.assert_allclose(out, want, atol=1e-12)
        # node 0 has no in-edges: pure gated self path
        want0 = np.tanh(center[0] * beta[0])
        np.testing.assert_allclose(out[0], want0, atol=1e-12)

    def test_multi_edge_normalization(self):
        """Two in-edges with different relations split the 1/|N| weight."""
        rng = np.random.default_rng(4)
        h = rng.normal(size=(3, 2))
        p = make_params(rng, 2, 2, 5, rel_weight=[1.0, 0.25, 1.0, 1.0, 1.0])
        graph = MultiGraph(3, 2, src=[0, 1], rel=[0, 1], dst=[2, 2])
        out = enc.layer_forward(None, graph, ad.tensor(h), p).value

        proj = h @ p.w_nbr.value
        nbr2 = (1.0 * proj[0] + 0.25 * proj[1]) / 2.0
        center = h @ p.w_self.value
        beta2 = sigmoid(np.concatenate([center[2], nbr2]) @ p.w_gate.value
                        + p.b_gate.value[0])
        np.testing.assert_allclose(out[2], np.tanh(center[2] * beta2 + nbr2 * (1 - beta2)),
                                   atol=1e-12)

    def test_matches_reference_on_random_graphs(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            n, d_in, d_out = 8, 3, 4
            n_rel = 2
            e = int(rng.integers(4, 16))
            src = rng.integers(0, n, size=e)
            rel = rng.integers(0, 2 * n_rel + 1, size=e)
            dst = rng.integers(0, n, size=e)
            graph = MultiGraph(n, n_rel, src[rel < 2 * n_rel], rel[rel < 2 * n_rel],
                               dst[rel < 2 * n_rel],
                               sim_src=src[rel == 2 * n_rel], sim_dst=dst[rel == 2 * n_rel])
            h = rng.normal(size=(n, d_in))
            p = make_params(rng, d_in, d_out, 2 * n_rel + 1,
                            rel_weight=rng.uniform(0.5, 1.5, size=2 * n_rel + 1))
            got = enc.layer_forward(None, graph, ad.tensor(h), p).value
            np.testing.assert_allclose(got, reference_layer(graph, h, p), atol=1e-12)

    def test_synthetic_edges_count_in_degree_and_messages(self):
        rng = np.random.default_rng(1)
        h = rng.normal(size=(4, 3))
        p = make_params(rng, 3, 3, 3, rel_weight=[1.0, 1.0, 0.7])
        base = MultiGraph(4, 1, src=[0], rel=[0], dst=[3])
        withsim = base.with_synthetic([1], [3])
        got = enc.layer_forward(None, withsim, ad.tensor(h), p).value
        proj = h @ p.w_nbr.value
        nbr3 = (1.0 * proj[0] + 0.7 * proj[1]) / 2.0  # degree now 2
        center = h @ p.w_self.value
        beta3 = sigmoid(np.concatenate([center[3], nbr3]) @ p.w_gate.value + p.b_gate.value[0])
        np.testing.assert_allclose(got[3], np.tanh(center[3] * beta3 + nbr3 * (1 - beta3)),
                                   atol=1e-12)

    def test_permutation_equivariance(self):
        """Relabeling nodes permutes outputs; scatter order changes floating
        point summation, so the comparison uses a tight tolerance instead of
        bit equality."""
        rng = np.random.default_rng(7)
        n, d = 9, 3
        h = rng.normal(size=(n, d))
        src = rng.integers(0, n, size=14)
        rel = rng.integers(0, 2, size=14)
        dst = rng.integers(0, n, size=14)
        graph = MultiGraph(n, 1, src, rel, dst)
        p = make_params(rng, d, d, 3)

        pi = rng.permutation(n)
        perm_graph = MultiGraph(n, 1, pi[src], rel, pi[dst])
        out = enc.layer_forward(None, graph, ad.tensor(h), p).value
        out_perm = enc.layer_forward(None, perm_graph, ad.tensor(h[np.argsort(pi)]), p).value
        np.testing.assert_allclose(out_perm[pi], out, atol=1e-12)

    def test_gate_saturation(self):
        rng = np.random.default_rng(2)
        h = rng.normal(size=(3, 2))
        graph = MultiGraph(3, 1, src=[0, 1], rel=[0, 0], dst=[1, 2])
        p = make_params(rng, 2, 2, 1)
        p.w_gate.value[:] = 0.0

        p.b_gate.value[:] = 30.0  # gate ~ 1: self path only
        out = enc.layer_forward(None, graph, ad.tensor(h), p).value
        np.testing.assert_allclose(out, np.tanh(h @ p.w_self.value), atol=1e-9)

        p.b_gate.value[:] = -30.0  # gate ~ 0: neighbor path only
        out = enc.layer_forward(None, graph, ad.tensor(h), p).value
        proj = h @ p.w_nbr.value
        nbr = np.zeros((3, 2))
        nbr[1], nbr[2] = proj[0], proj[1]
        np.testing.assert_allclose(out, np.tanh(nbr), atol=1e-9)

    def test_fixed_gate_is_half_mix(self):
        rng = np.random.default_rng(3)
        h = rng.normal(size=(3, 2))
        graph = MultiGraph(3, 1, src=[0, 1], rel=[0, 0], dst=[1, 2])
        p = make_params(rng, 2, 2, 1)
        out = enc.layer_forward(None, graph, ad.tensor(h), p, gate="fixed").value
        np.testing.assert_allclose(out, reference_layer(graph, h, p, gate="fixed"),
                                   atol=1e-12)

    def test_mlp_mode_bit_matches_dense_transform(self):
        rng = np.random.default_rng(8)
        h = rng.normal(size=(5, 3))
        graph = MultiGraph(5, 2, src=[0, 1, 2], rel=[0, 1, 2], dst=[1, 2, 3])
        p = make_params(rng, 3, 4, 5)
        out = enc.layer_forward(None, graph, ad.tensor(h), p, mode="mlp").value
        np.testing.assert_array_equal(out, np.tanh(h @ p.w_self.value))

    def test_relu_activation(self):
        rng = np.random.default_rng(9)
        h = rng.normal(size=(3, 2))
        graph = MultiGraph(3, 1, src=[0], rel=[0], dst=[1])
        p = make_params(rng, 2, 2, 1)
        out = enc.layer_forward(None, graph, ad.tensor(h), p, activation="relu").value
        want = reference_layer(graph, h, p, activation=lambda x: np.maximum(x, 0.0))
        np.testing.assert_allclose(out, want, atol=1e-12)

    def test_gradients_through_layer(self):
        rng = np.random.default_rng(11)
        h = ad.tensor(rng.normal(size=(4, 3)), requires_grad=True)
        graph = MultiGraph(4, 1, src=[0, 1, 3], rel=[0, 1, 0], dst=[1, 2, 2])
        p = make_params(rng, 3, 3, 3)
        W = rng.normal(size=(4, 3))

        def fn(tape, h_, ws, wn, rw, wg, bg):
            params = enc.GrGcnLayerParams(ws, wn, rw, wg, bg)
            out = enc.layer_forward(tape, graph, h_, params)
            return ad.tsum(tape, ad.mul(tape, out, ad.tensor(W)))

        err = ad.grad_check(fn, [h, p.w_self, p.w_nbr, p.rel_weight, p.w_gate, p.b_gate])
        assert err <= 1e-4


class TestEncodeStack:
    def test_init_shapes_and_values(self):
        cfg = EncoderConfig(layers=2, hidden_dim=4, input_dim=3)
        params = enc.init_params(cfg, num_relation_ids=5, seed=0)
        assert len(params) == 2
        assert params[0].w_self.shape == (3, 4)
        assert params[1].w_self.shape == (4, 4)
        assert params[0].w_gate.shape == (8, 4)
        np.testing.assert_array_equal(params[0].rel_weight.value, np.ones((5, 1)))
        np.testing.assert_array_equal(params[0].b_gate.value, np.zeros((1, 4)))
        limit = np.sqrt(6.0 / (3 + 4))
        assert np.all(np.abs(params[0].w_self.value) <= limit)

    def test_init_deterministic(self):
        cfg = EncoderConfig(layers=1, hidden_dim=4, input_dim=3)
        a = enc.init_params(cfg, 3, seed=5)
        b = enc.init_params(cfg, 3, seed=5)
        np.testing.assert_array_equal(a[0].w_self.value, b[0].w_self.value)

    def test_two_layer_composition(self):
        rng = np.random.default_rng(12)
        cfg = EncoderConfig(layers=2, hidden_dim=3, input_dim=2)
        params = enc.init_params(cfg, 3, seed=1)
        graph = MultiGraph(4, 1, src=[0, 1], rel=[0, 1], dst=[1, 2])
        feats = rng.normal(size=(4, 2))
        got = enc.encode(None, graph, feats, params, cfg).value
        h1 = reference_layer(graph, feats, params[0])
        h2 = reference_layer(graph, h1, params[1])
        np.testing.assert_allclose(got, h2, atol=1e-12)

    def test_feature_dim_checked(self):
        cfg = EncoderConfig(layers=1, hidden_dim=3, input_dim=5)
        params = enc.init_params(cfg, 3, seed=1)
        graph = MultiGraph(2, 1, src=[0], rel=[0], dst=[1])
        with pytest.raises(ContractError):
            enc.encode(None, graph, np.ones((2, 4)), params, cfg)

    def test_relation_id_without_weight_rejected(self):
        rng = np.random.default_rng(0)
        p = make_params(rng, 2, 2, 2)  # rows for ids 0..1 only
        graph = MultiGraph(3, 1, src=[0], rel=[0], dst=[1], sim_src=[2], sim_dst=[0])
        with pytest.raises(ContractError):
            enc.layer_forward(None, graph, ad.tensor(rng.normal(size=(3, 2))), p)

    def test_bad_relation_id_rejected_at_graph_construction(self):
        with pytest.raises(ContractError):
            MultiGraph(3, 1, src=[0], rel=[2], dst=[1])  # id 2 = similarity slot
