"""Triplet store, graph construction, splits, and TSV round-trips."""

import numpy as np
import pytest

from ckgc import store
from ckgc.errors import ContractError, DataError
from ckgc.store import (EntityTable, MultiGraph, RelationTable, SplitBundle,
                        TripletSet, build_graph, degree_stats, ingest_triplets,
                        inductive_filter, read_entity_table, read_triplets,
                        uniform_split, unseen_entities, write_entity_table,
                        write_triplets)


def make_set(triples, n_ent=10, n_rel=4):
    entities = EntityTable.from_texts([f"e{i}" for i in range(n_ent)])
    relations = RelationTable.from_names([f"r{j}" for j in range(n_rel)])
    return TripletSet(np.array(triples, dtype=np.int64).reshape(-1, 3), entities, relations)


class TestIngest:
    def test_three_column(self, tmp_path):
        p = tmp_path / "kg.tsv"
        p.write_text("cat\tis_a\tanimal\ndog\tis_a\tanimal\ncat\tnear\tdog\n")
        data = ingest_triplets(str(p))
        assert len(data) == 3
        assert len(data.entities) == 3
        assert len(data.relations) == 2
        assert data.entities.id_of("cat") == 0
        assert data.weights is None

    def test_duplicates_keep_first(self, tmp_path):
        p = tmp_path / "kg.tsv"
        p.write_text("a\tr\tb\na\tr\tb\nb\tr\ta\n")
        data = ingest_triplets(str(p))
        assert len(data) == 2

    def test_four_column_order_and_weights(self, tmp_path):
        # layout: relation, head, tail, weight
        p = tmp_path / "kg.tsv"
        p.write_text("is_a\tcat\tanimal\t3.5\nnear\tcat\tdog\t1.0\n")
        data = ingest_triplets(str(p), format=store.SCORED_FOUR_COLUMN)
        assert len(data) == 2
        assert data.relations.names == ("is_a", "near")
        h, r, t = data.triplets[0]
        assert data.entities.texts[h] == "cat"
        assert data.entities.texts[t] == "animal"
        np.testing.assert_allclose(data.weights, [3.5, 1.0])

    def test_parse_error_names_line(self, tmp_path):
        p = tmp_path / "kg.tsv"
        p.write_text("a\tr\tb\nbroken line\n")
        with pytest.raises(DataError, match=":2"):
            ingest_triplets(str(p))

    def test_bad_weight_names_line(self, tmp_path):
        p = tmp_path / "kg.tsv"
        p.write_text("r\ta\tb\tnot_a_number\n")
        with pytest.raises(DataError, match=":1"):
            ingest_triplets(str(p), format=store.SCORED_FOUR_COLUMN)

    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "kg.tsv"
        p.write_text("")
        with pytest.raises(DataError):
            ingest_triplets(str(p))


class TestTables:
    def test_duplicate_entity_text_rejected(self):
        with pytest.raises(DataError):
            EntityTable.from_texts(["a", "b", "a"])

    def test_unknown_lookups(self):
        ents = EntityTable.from_texts(["a"])
        rels = RelationTable.from_names(["r"])
        with pytest.raises(DataError):
            ents.id_of("missing")
        with pytest.raises(DataError):
            rels.id_of("missing")

    def test_triplet_set_validates_ids(self):
        with pytest.raises(ContractError):
            make_set([(0, 0, 99)])
        with pytest.raises(ContractError):
            make_set([(0, 9, 1)])


class TestSplit:
    def test_sizes_follow_rounding(self):
        data = make_set([(i % 10, i % 4, (i + 1) % 10) for i in range(37)][:20])
        n = len(data)
        bundle = uniform_split(data, (0.8, 0.1, 0.1), seed=7)
        assert len(bundle.train) == round(0.8 * n)
        assert len(bundle.valid) == round(0.1 * n)
        assert len(bundle.test) == n - len(bundle.train) - len(bundle.valid)

    def test_partition_exact(self):
        data = make_set([(i % 10, i % 4, (i + 3) % 10) for i in range(10)])
        bundle = uniform_split(data, seed=3)
        merged = np.concatenate([bundle.train.triplets, bundle.valid.triplets,
                                 bundle.test.triplets])
        assert sorted(map(tuple, merged)) == sorted(map(tuple, data.triplets))

    def test_deterministic_in_seed(self):
        data = make_set([(i % 10, i % 4, (i + 3) % 10) for i in range(10)])
        a = uniform_split(data, seed=5)
        b = uniform_split(data, seed=5)
        np.testing.assert_array_equal(a.train.triplets, b.train.triplets)
        c = uniform_split(data, seed=6)
        assert not np.array_equal(a.train.triplets, c.train.triplets)

    def test_too_small_rejected(self):
        with pytest.raises(DataError):
            uniform_split(make_set([(0, 0, 1), (1, 0, 2)]))

    def test_bad_ratios_rejected(self):
        data = make_set([(i % 10, 0, (i + 1) % 10) for i in range(10)])
        with pytest.raises(ContractError):
            uniform_split(data, ratios=(0.5, 0.5, 0.5))


class TestInductiveFilter:
    def test_unseen_entities(self):
        train = make_set([(0, 0, 1), (1, 1, 2)])
        test = make_set([(0, 0, 5), (3, 0, 1)])
        np.testing.assert_array_equal(unseen_entities(train, test), [3, 5])

    def test_filter_keeps_unseen_touching_rows(self):
        train = make_set([(0, 0, 1), (1, 1, 2), (2, 0, 0)])
        valid = make_set([(0, 0, 2), (5, 0, 1)])
        test = make_set([(1, 1, 0), (0, 1, 7), (6, 0, 7)])
        v, t = inductive_filter(SplitBundle(train, valid, test))
        assert [tuple(x) for x in v.triplets] == [(5, 0, 1)]
        assert [tuple(x) for x in t.triplets] == [(0, 1, 7), (6, 0, 7)]


class TestGraph:
    def test_inverse_edges(self):
        train = make_set([(0, 1, 2)], n_ent=5, n_rel=3)
        g = build_graph(train)
        assert g.num_nodes == 5
        src, rel, dst = g.all_edges()
        assert list(zip(src, rel, dst)) == [(0, 1, 2), (2, 4, 0)]
        assert g.sim_relation_id == 6
        assert g.num_relation_ids == 7

    def test_isolated_nodes_have_zero_degree(self):
        train = make_set([(0, 0, 1)], n_ent=4)
        g = build_graph(train)
        np.testing.assert_array_equal(g.nonsyn_indegree, [1, 1, 0, 0])

    def test_synthetic_edges_separate_from_budget_degree(self):
        train = make_set([(0, 0, 1)], n_ent=4)
        g = build_graph(train).with_synthetic([0, 1], [2, 2])
        np.testing.assert_array_equal(g.nonsyn_indegree, [1, 1, 0, 0])
        np.testing.assert_array_equal(g.total_indegree(), [1, 1, 2, 0])
        src, rel, dst = g.all_edges()
        assert len(src) == 4
        assert list(rel[2:]) == [g.sim_relation_id] * 2
        base = g.without_synthetic()
        assert base.num_base_edges() == 2
        assert len(base.sim_src) == 0

    def test_in_neighbors_unique_sorted(self):
        train = make_set([(3, 0, 1), (3, 1, 1), (0, 0, 1)], n_ent=5)
        g = build_graph(train, add_inverse=False)
        np.testing.assert_array_equal(g.in_neighbors(1), [0, 3])


class TestDegreeStats:
    def test_hand_case(self):
        # a chain 0->1->2 with inverses: in-degrees [1, 2, 1]
        train = make_set([(0, 0, 1), (1, 0, 2)], n_ent=3, n_rel=1)
        g = build_graph(train)
        rep = degree_stats(g, train)
        np.testing.assert_array_equal(g.nonsyn_indegree, [1, 2, 1])
        assert rep.mean_in_degree == pytest.approx(2 / 3)
        np.testing.assert_allclose(rep.triplet_degrees, [1.5, 1.5])
        assert rep.histogram == {1.5: 2}

    def test_reference_corpus_arithmetic(self):
        """Mean in-degree = edges/entities reproduces the published corpus
        statistics for ConceptNet-100K and ATOMIC splits."""
        cn_edges, cn_entities = 100_000 + 1_200 + 1_200, 78_334
        assert round(cn_edges / cn_entities, 2) == 1.31
        at_edges, at_entities = 610_536 + 87_700 + 87_701, 304_388
        assert round(at_edges / at_entities, 2) == 2.58

    def test_format_lines(self):
        train = make_set([(0, 0, 1), (1, 0, 2)], n_ent=3, n_rel=1)
        rep = degree_stats(build_graph(train), train)
        lines = rep.format().splitlines()
        assert lines[0].startswith("mean_in_degree\t")
        assert lines[1] == "triplet_degree\t1.5\t2"


class TestTsvRoundTrips:
    def test_entity_table(self, tmp_path):
        ents = EntityTable.from_texts(["alpha", "beta b", "gamma"])
        p = tmp_path / "entities.tsv"
        write_entity_table(str(p), ents)
        back = read_entity_table(str(p))
        assert back.texts == ents.texts

    def test_entity_table_requires_contiguous_ids(self, tmp_path):
        p = tmp_path / "entities.tsv"
        p.write_text("0\ta\n2\tb\n")
        with pytest.raises(DataError):
            read_entity_table(str(p))

    def test_triplets(self, tmp_path):
        data = make_set([(0, 1, 2), (2, 0, 1)], n_ent=3)
        p = tmp_path / "t.tsv"
        write_triplets(str(p), data)
        back = read_triplets(str(p), data.entities, data.relations)
        np.testing.assert_array_equal(back.triplets, data.triplets)

    def test_read_rejects_unknown_entity(self, tmp_path):
        p = tmp_path / "t.tsv"
        p.write_text("nope\tr0\te1\n")
        ents = EntityTable.from_texts(["e0", "e1"])
        with pytest.raises(DataError):
            read_triplets(str(p), ents)

    def test_read_rejects_unknown_relation_when_table_given(self, tmp_path):
        p = tmp_path / "t.tsv"
        p.write_text("e0\tmystery\te1\n")
        ents = EntityTable.from_texts(["e0", "e1"])
        rels = RelationTable.from_names(["r0"])
        with pytest.raises(DataError):
            read_triplets(str(p), ents, rels)
