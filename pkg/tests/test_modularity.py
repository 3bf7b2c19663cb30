"""Quality-function correctness: frozen identities, gains, exhaustive oracle.

The analytic fixtures below were derived by hand before the scoring code
was written:

* two disjoint equal cliques, one community each:
  W_C = W/2 and S_C = W for both, so Q = 2 * (1/2 - 1/4) = 1/2.
* two 3-cliques joined by one bridge edge (7 unit edges), clique split:
  Q = 2 * (3/7 - (7/14)^2) = 6/7 - 1/2 = 5/14.
* two disjoint complete 2x2 bipartite blocks (m=8), one community each:
  Q_B = 2 * (4/8 - (4*4)/64) = 1/2.
"""

import math
from itertools import combinations

import numpy as np
import pytest

from bibridge.graphs import BipartiteGraph, GraphError, Partition, WeightedGraph
from bibridge.modularity import (
    BipartiteAggregates,
    UnipartiteAggregates,
    brute_force_best_partition,
    iter_set_partitions,
    modularity_bipartite,
    modularity_unipartite,
)


def clique_union(sizes, bridges=(), weight=1.0):
    """Disjoint unit-weight cliques (optionally bridged) as a WeightedGraph."""
    offsets = np.cumsum([0] + list(sizes))
    u, v = [], []
    for s, off in zip(sizes, offsets):
        for a, b in combinations(range(off, off + s), 2):
            u.append(a)
            v.append(b)
    for a, b in bridges:
        u.append(a)
        v.append(b)
    w = np.full(len(u), weight)
    return WeightedGraph(int(offsets[-1]), np.array(u), np.array(v), w)


def random_weighted_graph(rng, n_max=20, ensure_edge=True):
    n = int(rng.integers(3, n_max + 1))
    pairs = [(a, b) for a, b in combinations(range(n), 2) if rng.random() < 0.4]
    if ensure_edge and not pairs:
        pairs = [(0, 1)]
    u = np.array([p[0] for p in pairs])
    v = np.array([p[1] for p in pairs])
    w = rng.uniform(0.1, 3.0, size=len(pairs))
    return WeightedGraph(n, u, v, w)


def random_bipartite_graph(rng, nl_max=10, nr_max=10):
    nl = int(rng.integers(2, nl_max + 1))
    nr = int(rng.integers(2, nr_max + 1))
    pairs = [(a, b) for a in range(nl) for b in range(nr) if rng.random() < 0.35]
    if not pairs:
        pairs = [(0, 0)]
    return BipartiteGraph.from_edge_arrays(
        nl, nr, np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])
    )


class TestUnipartiteModularity:
    def test_single_community_is_zero(self):
        g = clique_union([4], bridges=[], weight=2.5)
        q = modularity_unipartite(g, np.zeros(4, dtype=int))
        assert abs(q) < 1e-12

    def test_two_cliques_half(self):
        g = clique_union([3, 3])
        labels = np.array([0, 0, 0, 1, 1, 1])
        assert modularity_unipartite(g, labels) == pytest.approx(0.5, abs=1e-12)
        # also exact for larger equal cliques
        g2 = clique_union([5, 5])
        labels2 = np.array([0] * 5 + [1] * 5)
        assert modularity_unipartite(g2, labels2) == pytest.approx(0.5, abs=1e-12)

    def test_bridged_cliques_five_fourteenths(self):
        g = clique_union([3, 3], bridges=[(2, 3)])
        labels = np.array([0, 0, 0, 1, 1, 1])
        assert modularity_unipartite(g, labels) == pytest.approx(5.0 / 14.0, abs=1e-12)

    def test_weight_scaling_invariance(self):
        # Q is scale-free in the weights
        rng = np.random.default_rng(11)
        g = random_weighted_graph(rng)
        labels = rng.integers(0, 3, size=g.node_count)
        g2 = WeightedGraph(g.node_count, g.u, g.v, g.w * 7.25)
        assert modularity_unipartite(g, labels) == pytest.approx(
            modularity_unipartite(g2, labels), abs=1e-12
        )

    def test_label_permutation_bit_exact(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            g = random_weighted_graph(rng)
            k = int(rng.integers(1, 6))
            labels = rng.integers(0, k, size=g.node_count)
            perm = rng.permutation(k)
            q1 = modularity_unipartite(g, labels)
            q2 = modularity_unipartite(g, perm[labels])
            assert q1 == q2  # bit-identical, not just close

    def test_self_loop_convention(self):
        # aggregated two-node graph: loops keep the weight a node absorbed
        g = WeightedGraph(2, [0, 0, 1], [0, 1, 1], [2.0, 1.0, 3.0], allow_self_loops=True)
        # together: Q = 0
        assert abs(modularity_unipartite(g, [0, 0])) < 1e-12
        # split: internal = loops only; strengths 5 and 7, W = 6
        expected = (2.0 / 6.0 - (5.0 / 12.0) ** 2) + (3.0 / 6.0 - (7.0 / 12.0) ** 2)
        assert modularity_unipartite(g, [0, 1]) == pytest.approx(expected, abs=1e-12)

    def test_zero_weight_graph_rejected(self):
        g = WeightedGraph.empty(3)
        with pytest.raises(GraphError):
            modularity_unipartite(g, np.zeros(3, dtype=int))

    def test_wrong_length_rejected(self):
        g = clique_union([3])
        with pytest.raises(GraphError):
            modularity_unipartite(g, np.zeros(2, dtype=int))


class TestBipartiteModularity:
    def test_two_k22_half(self):
        g = BipartiteGraph.from_edge_arrays(
            4, 4,
            [0, 0, 1, 1, 2, 2, 3, 3],
            [0, 1, 0, 1, 2, 3, 2, 3],
        )
        labels = np.array([0, 0, 1, 1, 0, 0, 1, 1])  # combined: lefts then rights
        assert modularity_bipartite(g, labels) == pytest.approx(0.5, abs=1e-12)

    def test_single_community_is_zero(self):
        rng = np.random.default_rng(3)
        g = random_bipartite_graph(rng)
        q = modularity_bipartite(g, np.zeros(g.combined_count, dtype=int))
        assert abs(q) < 1e-12

    def test_label_permutation_bit_exact(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            g = random_bipartite_graph(rng)
            k = int(rng.integers(1, 5))
            labels = rng.integers(0, k, size=g.combined_count)
            perm = rng.permutation(k)
            assert modularity_bipartite(g, labels) == modularity_bipartite(g, perm[labels])

    def test_empty_graph_rejected(self):
        g = BipartiteGraph(2, 2)
        with pytest.raises(GraphError):
            modularity_bipartite(g, np.zeros(4, dtype=int))


class TestUnipartiteGains:
    def test_gain_matches_recompute(self):
        rng = np.random.default_rng(17)
        for _ in range(60):
            g = random_weighted_graph(rng)
            n = g.node_count
            labels = rng.integers(0, max(2, n // 2), size=n)
            agg = UnipartiteAggregates(g, labels)
            node = int(rng.integers(0, n))
            target = int(rng.integers(0, max(2, n // 2)))
            gain = agg.move_gain(node, target)
            before = modularity_unipartite(g, agg.labels)
            agg.apply_move(node, target)
            after = modularity_unipartite(g, agg.labels)
            assert gain == pytest.approx(after - before, abs=1e-9)

    def test_gain_to_own_community_is_zero(self):
        g = clique_union([3, 3])
        agg = UnipartiteAggregates(g, np.array([0, 0, 0, 1, 1, 1]))
        assert agg.move_gain(0, 0) == 0.0

    def test_aggregates_track_score_through_moves(self):
        rng = np.random.default_rng(23)
        g = random_weighted_graph(rng)
        n = g.node_count
        agg = UnipartiteAggregates(g, np.arange(n))
        for _ in range(30):
            agg.apply_move(int(rng.integers(0, n)), int(rng.integers(0, n)))
        assert agg.score() == pytest.approx(
            modularity_unipartite(g, agg.labels), abs=1e-12
        )

    def test_gain_with_self_loops(self):
        # aggregated graphs carry loops; gains must still match recompute
        g = WeightedGraph(
            3, [0, 0, 1, 2], [0, 1, 2, 2], [1.0, 2.0, 1.0, 4.0], allow_self_loops=True
        )
        labels = np.array([0, 0, 1])
        agg = UnipartiteAggregates(g, labels)
        before = modularity_unipartite(g, labels)
        gain = agg.move_gain(1, 1)
        agg.apply_move(1, 1)
        after = modularity_unipartite(g, agg.labels)
        assert gain == pytest.approx(after - before, abs=1e-12)


class TestBipartiteGains:
    def test_gain_matches_recompute(self):
        rng = np.random.default_rng(31)
        for _ in range(60):
            g = random_bipartite_graph(rng)
            n = g.combined_count
            labels = rng.integers(0, max(2, n // 2), size=n)
            agg = BipartiteAggregates(g, labels)
            node = int(rng.integers(0, n))
            target = int(rng.integers(0, max(2, n // 2)))
            gain = agg.move_gain(node, target)
            before = modularity_bipartite(g, agg.labels)
            agg.apply_move(node, target)
            after = modularity_bipartite(g, agg.labels)
            assert gain == pytest.approx(after - before, abs=1e-9)

    def test_aggregates_track_score_through_moves(self):
        rng = np.random.default_rng(37)
        g = random_bipartite_graph(rng)
        n = g.combined_count
        agg = BipartiteAggregates(g, np.arange(n))
        for _ in range(30):
            agg.apply_move(int(rng.integers(0, n)), int(rng.integers(0, n)))
        assert agg.score() == pytest.approx(
            modularity_bipartite(g, agg.labels), abs=1e-12
        )


class TestSetPartitionEnumeration:
    BELL = {1: 1, 2: 2, 3: 5, 4: 15, 5: 52, 6: 203, 7: 877}

    def test_bell_counts(self):
        for n, bell in self.BELL.items():
            assert sum(1 for _ in iter_set_partitions(n)) == bell

    def test_canonical_order_endpoints(self):
        parts = list(iter_set_partitions(4))
        assert parts[0].tolist() == [0, 0, 0, 0]
        assert parts[-1].tolist() == [0, 1, 2, 3]

    def test_all_restricted_growth(self):
        # every prefix maximum grows by at most one
        for labels in iter_set_partitions(6):
            ceiling = 0
            for x in labels:
                assert x <= ceiling
                ceiling = max(ceiling, int(x) + 1)

    def test_no_duplicates(self):
        seen = {tuple(p.tolist()) for p in iter_set_partitions(6)}
        assert len(seen) == 203


class TestBruteForce:
    def test_two_triangles_optimum(self):
        g = clique_union([3, 3])
        best = brute_force_best_partition(g)
        assert best.score == pytest.approx(0.5, abs=1e-12)
        assert best.assignment.tolist() == [0, 0, 0, 1, 1, 1]

    def test_bridged_triangles_optimum(self):
        g = clique_union([3, 3], bridges=[(2, 3)])
        best = brute_force_best_partition(g)
        assert best.score == pytest.approx(5.0 / 14.0, abs=1e-12)
        assert best.assignment.tolist() == [0, 0, 0, 1, 1, 1]

    def test_two_k22_optimum(self):
        g = BipartiteGraph.from_edge_arrays(
            4, 4,
            [0, 0, 1, 1, 2, 2, 3, 3],
            [0, 1, 0, 1, 2, 3, 2, 3],
        )
        best = brute_force_best_partition(g)
        assert best.score == pytest.approx(0.5, abs=1e-12)
        assert best.assignment.tolist() == [0, 0, 1, 1, 0, 0, 1, 1]

    def test_refuses_large_graphs(self):
        g = clique_union([11])
        with pytest.raises(GraphError):
            brute_force_best_partition(g)

    def test_never_below_any_sampled_partition(self):
        rng = np.random.default_rng(41)
        g = random_weighted_graph(rng, n_max=7)
        best = brute_force_best_partition(g)
        for _ in range(50):
            labels = rng.integers(0, g.node_count, size=g.node_count)
            assert modularity_unipartite(g, labels) <= best.score + 1e-12
