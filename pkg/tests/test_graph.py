import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entropy_bench.graph import (Graph, GraphError, Partition, canonical_2cut, complement, complete_bipartite,
                                 complete_graph, cut_value, cut_value_fast, cycle_graph, gen_gnm, gen_gnp,
                                 load_graph, save_graph)


@st.composite
def graphs(draw, max_n=10):
    n = draw(st.integers(1, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Graph.from_edges(n, chosen)


class TestGraphInvariants:
    def test_rejects_self_loop(self):
        with pytest.raises(GraphError):
            Graph.from_edges(3, [(1, 1)])

    def test_rejects_duplicate(self):
        with pytest.raises(GraphError):
            Graph.from_edges(3, [(0, 1), (1, 0)])

    def test_rejects_out_of_range(self):
        with pytest.raises(GraphError):
            Graph.from_edges(3, [(0, 3)])

    def test_edges_are_normalised_and_sorted(self):
        g = Graph.from_edges(4, [(3, 2), (1, 0), (2, 0)])
        assert g.edges == ((0, 1), (0, 2), (2, 3))

    @given(graphs())
    def test_adjacency_symmetric_and_consistent(self, g):
        bits = sum(len(g.neighbors(v)) for v in range(g.n))
        assert bits == 2 * g.m
        for v in range(g.n):
            for u in g.neighbors(v):
                assert v in g.neighbors(u)
        indptr, _ = g.csr
        assert indptr[-1] == 2 * g.m


class TestGenerators:
    def test_gnp_extremes(self):
        assert gen_gnp(5, 0.0, 1).m == 0
        assert gen_gnp(5, 1.0, 1).edges == complete_graph(5).edges

    def test_gnp_edge_count_moments(self):
        counts = np.array([gen_gnp(30, 0.5, s).m for s in range(1000)])
        sigma = np.sqrt(435 * 0.25)
        # mean of 1000 draws: standard error sigma / sqrt(1000)
        assert abs(counts.mean() - 217.5) <= 3 * sigma / np.sqrt(1000)
        assert 0.8 * sigma**2 < counts.var(ddof=1) < 1.2 * sigma**2

    def test_gnm_exact_count(self):
        assert gen_gnm(30, 233, 7).m == 233
        assert gen_gnm(4, 6, 1).edges == complete_graph(4).edges
        assert gen_gnm(4, 0, 1).m == 0

    def test_gnm_range_error(self):
        with pytest.raises(ValueError):
            gen_gnm(4, 7, 1)

    def test_gnm_uniform_over_edges(self):
        # every slot equally likely: 3 of 6 slots chosen, each slot hit ~1/2 of the time
        hits = np.zeros((4, 4))
        for s in range(4000):
            for u, v in gen_gnm(4, 3, s).edges:
                hits[u, v] += 1
        freq = hits[np.triu_indices(4, 1)] / 4000
        assert np.all(np.abs(freq - 0.5) < 0.03)

    def test_determinism_bytes(self):
        assert gen_gnp(20, 0.3, 99).to_json() == gen_gnp(20, 0.3, 99).to_json()
        assert gen_gnm(20, 50, 99).to_json() == gen_gnm(20, 50, 99).to_json()
        assert gen_gnm(20, 50, 99).to_json() != gen_gnm(20, 50, 100).to_json()


class TestSerialization:
    def test_json_format(self):
        g = Graph.from_edges(3, [(1, 2), (0, 1)])
        assert json.loads(g.to_json()) == {"n": 3, "edges": [[0, 1], [1, 2]]}

    @given(graphs())
    @settings(max_examples=50)
    def test_json_round_trip(self, g):
        assert Graph.from_dict(json.loads(g.to_json())) == g

    @given(graphs())
    @settings(max_examples=50)
    def test_dimacs_round_trip(self, g):
        assert Graph.from_dimacs(g.to_dimacs()) == g

    def test_dimacs_is_one_based(self):
        text = Graph.from_edges(2, [(0, 1)]).to_dimacs()
        assert "p edge 2 1" in text and "e 1 2" in text

    def test_files(self, tmp_path):
        g = gen_gnm(8, 10, 3)
        for name in ("g.json", "g.dimacs"):
            save_graph(g, tmp_path / name)
            assert load_graph(tmp_path / name) == g

    def test_planted_labels_survive(self, tmp_path):
        g = Graph.from_edges(4, [(0, 2)], planted=(0, 1, 2, 3))
        save_graph(g, tmp_path / "p.json")
        assert load_graph(tmp_path / "p.json").planted == (0, 1, 2, 3)


class TestCutValue:
    def test_examples(self):
        assert cut_value(complete_graph(3), [0, 1, 1]) == 2
        assert cut_value(gen_gnp(9, 0.5, 4), [1] * 9) == 0
        assert cut_value(cycle_graph(5), [0, 1, 0, 1, 0]) == 4

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            cut_value(complete_graph(3), [0, 1])

    def test_partition_label_range(self):
        with pytest.raises(ValueError):
            Partition((0, 3), 2)

    @given(graphs(), st.data())
    def test_complement_and_fast_path(self, g, data):
        labels = data.draw(st.lists(st.integers(0, 1), min_size=g.n, max_size=g.n))
        assert cut_value(g, labels) == cut_value(g, complement(labels))
        assert cut_value(g, labels) == cut_value(g, canonical_2cut(labels))
        assert canonical_2cut(labels)[0] == 0
        assert cut_value_fast(g, np.array(labels)) == cut_value(g, labels)

    @given(graphs(max_n=8))
    @settings(max_examples=40)
    def test_max_cut_equals_m_iff_bipartite(self, g):
        from itertools import product
        best = max(cut_value(g, (0,) + rest) for rest in product((0, 1), repeat=g.n - 1))
        assert best <= g.m
        assert (best == g.m) == g.is_bipartite()

    def test_complete_bipartite(self):
        g = complete_bipartite(3, 3)
        assert g.m == 9 and cut_value(g, [0, 0, 0, 1, 1, 1]) == 9
