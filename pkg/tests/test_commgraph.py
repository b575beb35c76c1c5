import numpy as np
import pytest
from scipy.stats import binom

from d2eal.commgraph import BaseGraph, CommSnapshot, degree, sample_graph
from d2eal.geometry import RngStream


class TestBaseGraph:
    def test_path(self):
        g = BaseGraph.path(4)
        assert g.edges == ((0, 1), (1, 2), (2, 3))

    def test_ring(self):
        g = BaseGraph.ring(4)
        assert len(g.edges) == 4

    def test_complete(self):
        g = BaseGraph.complete(5)
        assert len(g.edges) == 10

    def test_explicit_edges(self):
        g = BaseGraph.from_config([(0, 1), (1, 2)], 3)
        assert g.n == 3

    def test_disconnected_rejected(self):
        with pytest.raises(ValueError):
            BaseGraph(4, ((0, 1), (2, 3)))

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError):
            BaseGraph(3, ((0, 0), (0, 1), (1, 2)))

    def test_duplicate_rejected(self):
        with pytest.raises(ValueError):
            BaseGraph(3, ((0, 1), (1, 0), (1, 2)))

    def test_unknown_topology(self):
        with pytest.raises(ValueError):
            BaseGraph.from_config("torus", 4)


class TestSampleGraph:
    def test_no_drops(self):
        base = BaseGraph.path(6)
        snap = sample_graph(base, 0.0, 3, RngStream(1).generator())
        assert snap.edges == base.edges
        assert snap.t == 3

    def test_all_dropped(self):
        base = BaseGraph.path(6)
        snap = sample_graph(base, 1.0, 0, RngStream(1).generator())
        assert snap.edges == ()
        for i in range(6):
            assert snap.closed_neighborhood(i) == (i,)

    def test_symmetry_and_self_exclusion(self):
        base = BaseGraph.complete(6)
        for seed in range(20):
            snap = sample_graph(base, 0.4, 0, RngStream(seed).generator())
            for i in range(6):
                assert i not in snap.neighbors[i]
                for j in snap.neighbors[i]:
                    assert i in snap.neighbors[j]

    def test_determinism(self):
        base = BaseGraph.path(6)
        a = [sample_graph(base, 0.3, t, RngStream(7, 3).generator()).edges for t in range(5)]
        b = [sample_graph(base, 0.3, t, RngStream(7, 3).generator()).edges for t in range(5)]
        assert a == b

    def test_invalid_probability(self):
        with pytest.raises(ValueError):
            sample_graph(BaseGraph.path(3), 1.5, 0, RngStream(1).generator())

    def test_drop_count_distribution_matches_binomial(self):
        # five-edge path, drop probability 0.1, 1400 snapshots: empirical
        # frequencies within 3 percentage points of Binomial(5, 0.1)
        base = BaseGraph.path(6)
        rng = RngStream(2024).generator()
        counts = np.zeros(6)
        steps = 1400
        for t in range(steps):
            snap = sample_graph(base, 0.1, t, rng)
            counts[snap.dropped_count(base)] += 1
        freqs = counts / steps
        for k in range(6):
            assert abs(freqs[k] - binom.pmf(k, 5, 0.1)) < 0.03


class TestDegree:
    def test_isolated_node(self):
        snap = CommSnapshot(0, 3, ())
        assert degree(snap, 1) == 1

    def test_path_interior_and_endpoint(self):
        base = BaseGraph.path(6)
        snap = CommSnapshot(0, 6, base.edges)
        assert degree(snap, 2) == 3
        assert degree(snap, 0) == 2
        assert degree(snap, 5) == 2

    def test_closed_neighborhood_sorted(self):
        base = BaseGraph.path(4)
        snap = CommSnapshot(0, 4, base.edges)
        assert snap.closed_neighborhood(1) == (0, 1, 2)
