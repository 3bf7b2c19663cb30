"""Partition quality functions and incremental move gains.

Two quality functions are implemented:

* Newman weighted modularity for one-mode graphs,
  ``Q = sum_C [ W_C / W - (S_C / 2W)^2 ]``,
  where ``W_C`` is the intra-community weight (self-loops counted once),
  ``S_C`` the community strength sum and ``W`` the total edge weight.
  The null model uses strengths, i.e. weighted degrees.

* The bipartite modularity variant
  ``Q_B = sum_C [ E_C / m - d_C * g_C / m^2 ]``,
  where ``E_C`` counts intra-community edges and ``d_C`` / ``g_C`` are the
  left / right degree sums of the community. Only left-right pairs take
  part in the null model, which is what makes the measure appropriate for
  two-mode graphs.

Community sums are accumulated per community with ``bincount`` and reduced
with ``math.fsum`` so that scores are bit-identical under any relabelling
of the communities.

The incremental-gain aggregates mirror a single Louvain move:

``dQ(u: D -> C) = (k_u->C - k_u->D') / W - s_u (S_C - S_D') / (2 W^2)``

with ``D' = D`` minus ``u``; self-loop terms cancel because a loop moves
with its node. The bipartite analogue replaces strengths by the degree
pair ``(d_u, g_u)``:

``dQ_B(u: D -> C) = (e_u->C - e_u->D') / m - (d_u g_C + g_u d_C - d_u g_D' - g_u d_D') / m^2``.
"""

from __future__ import annotations

import math
from typing import Iterator, Union

import numpy as np

from bibridge.graphs import BipartiteGraph, GraphError, Partition, WeightedGraph

LabelsLike = Union[Partition, np.ndarray, list]


def weighted_bincount(idx: np.ndarray, weights: np.ndarray, minlength: int) -> np.ndarray:
    """bincount that is float64 even for empty input (numpy returns int64 then)."""
    return np.bincount(idx, weights=weights, minlength=minlength).astype(
        np.float64, copy=False
    )


def _as_labels(partition: LabelsLike, n: int) -> np.ndarray:
    labels = partition.assignment if isinstance(partition, Partition) else partition
    labels = np.asarray(labels, dtype=np.int32)
    if labels.shape != (n,):
        raise GraphError(f"partition covers {labels.size} nodes, graph has {n}")
    if labels.size and labels.min() < 0:
        raise GraphError("community labels must be non-negative")
    return labels


def score_unipartite_arrays(
    eu: np.ndarray,
    ev: np.ndarray,
    ew: np.ndarray,
    self_loop_w: np.ndarray,
    strengths: np.ndarray,
    total_w: float,
    labels: np.ndarray,
) -> float:
    """Newman modularity from raw edge arrays (cross edges + loop vector)."""
    if total_w <= 0.0:
        raise GraphError("modularity undefined for a graph with zero total weight")
    k = int(labels.max()) + 1 if labels.size else 0
    cu = labels[eu]
    same = cu == labels[ev]
    internal = weighted_bincount(cu[same], ew[same], k)
    internal += weighted_bincount(labels, self_loop_w, k)
    strength_sum = weighted_bincount(labels, strengths, k)
    frac = strength_sum / (2.0 * total_w)
    terms = internal / total_w - frac * frac
    return math.fsum(terms.tolist())


def score_bipartite_arrays(
    eu: np.ndarray,
    ev: np.ndarray,
    ew: np.ndarray,
    self_loop_w: np.ndarray,
    d: np.ndarray,
    g: np.ndarray,
    m: float,
    labels: np.ndarray,
) -> float:
    """Bipartite modularity from generalized (meta-)node arrays.

    Every node carries a left-degree mass ``d`` and right-degree mass
    ``g`` (one of the two is zero for original nodes; aggregated community
    nodes carry both).
    """
    if m <= 0.0:
        raise GraphError("bipartite modularity undefined for an empty graph")
    k = int(labels.max()) + 1 if labels.size else 0
    cu = labels[eu]
    same = cu == labels[ev]
    internal = weighted_bincount(cu[same], ew[same], k)
    internal += weighted_bincount(labels, self_loop_w, k)
    d_sum = weighted_bincount(labels, d, k)
    g_sum = weighted_bincount(labels, g, k)
    terms = internal / m - (d_sum * g_sum) / (m * m)
    return math.fsum(terms.tolist())


def modularity_unipartite(graph: WeightedGraph, partition: LabelsLike) -> float:
    """Newman weighted modularity of a partition of ``graph``."""
    labels = _as_labels(partition, graph.node_count)
    cross = graph.u != graph.v
    return score_unipartite_arrays(
        graph.u[cross],
        graph.v[cross],
        graph.w[cross],
        graph.self_loop_weights(),
        graph.strengths(),
        graph.total_weight,
        labels,
    )


def modularity_bipartite(graph: BipartiteGraph, partition: LabelsLike) -> float:
    """Bipartite modularity of a partition over the combined node space.

    Combined indexing: left node ``i`` is ``i``, right node ``j`` is
    ``n_left + j``.
    """
    labels = _as_labels(partition, graph.combined_count)
    lefts, rights = graph.edges
    m = float(graph.edge_count)
    ld, rd = graph.degree_sequences()
    d = np.concatenate([ld.astype(np.float64), np.zeros(graph.n_right)])
    g = np.concatenate([np.zeros(graph.n_left), rd.astype(np.float64)])
    ew = np.ones(graph.edge_count, dtype=np.float64)
    return score_bipartite_arrays(
        lefts.astype(np.int64),
        (rights.astype(np.int64) + graph.n_left),
        ew,
        np.zeros(graph.combined_count),
        d,
        g,
        m,
        labels,
    )


class UnipartiteAggregates:
    """Per-community sums enabling O(deg) move gains on a weighted graph.

    Community ids may be any integers in ``[0, node_count)``; moves into
    currently empty communities are allowed. The object keeps its own copy
    of the label array.
    """

    def __init__(self, graph: WeightedGraph, partition: LabelsLike):
        self.graph = graph
        self.labels = _as_labels(partition, graph.node_count).copy()
        if self.labels.size and self.labels.max() >= graph.node_count:
            raise GraphError("community ids must stay below node_count")
        n = graph.node_count
        self.total_w = graph.total_weight
        self.strengths = graph.strengths()
        self.self_loop_w = graph.self_loop_weights()
        self.indptr, self.indices, self.edge_w = graph.adjacency()
        self.strength_sum = weighted_bincount(self.labels, self.strengths, n)
        cross = graph.u != graph.v
        cu = self.labels[graph.u[cross]]
        same = cu == self.labels[graph.v[cross]]
        self.internal_w = weighted_bincount(cu[same], graph.w[cross][same], n)
        self.internal_w += weighted_bincount(self.labels, self.self_loop_w, n)

    def neighbor_community_weights(self, node: int) -> dict[int, float]:
        """Weight from ``node`` to each community among its neighbors."""
        out: dict[int, float] = {}
        for e in range(self.indptr[node], self.indptr[node + 1]):
            c = int(self.labels[self.indices[e]])
            out[c] = out.get(c, 0.0) + float(self.edge_w[e])
        return out

    def move_gain(self, node: int, target: int) -> float:
        """Modularity change if ``node`` moved to community ``target``."""
        cu = int(self.labels[node])
        if target == cu:
            return 0.0
        if not (0 <= target < self.graph.node_count):
            raise GraphError("target community id out of range")
        ncw = self.neighbor_community_weights(node)
        k_cur = ncw.get(cu, 0.0)
        k_tgt = ncw.get(int(target), 0.0)
        s = self.strengths[node]
        s_cur = self.strength_sum[cu] - s
        s_tgt = self.strength_sum[target]
        w = self.total_w
        return (k_tgt - k_cur) / w - s * (s_tgt - s_cur) / (2.0 * w * w)

    def apply_move(self, node: int, target: int) -> None:
        """Move ``node`` and update all community sums."""
        cu = int(self.labels[node])
        if target == cu:
            return
        ncw = self.neighbor_community_weights(node)
        loop = self.self_loop_w[node]
        self.internal_w[cu] -= ncw.get(cu, 0.0) + loop
        self.internal_w[target] += ncw.get(int(target), 0.0) + loop
        s = self.strengths[node]
        self.strength_sum[cu] -= s
        self.strength_sum[target] += s
        self.labels[node] = target

    def score(self) -> float:
        """Modularity recomputed from the maintained sums."""
        w = self.total_w
        frac = self.strength_sum / (2.0 * w)
        terms = self.internal_w / w - frac * frac
        return math.fsum(terms.tolist())


class BipartiteAggregates:
    """Per-community sums for move gains under bipartite modularity.

    Operates on the combined node space of a :class:`BipartiteGraph`.
    """

    def __init__(self, graph: BipartiteGraph, partition: LabelsLike):
        self.graph = graph
        n = graph.combined_count
        self.labels = _as_labels(partition, n).copy()
        if self.labels.size and self.labels.max() >= n:
            raise GraphError("community ids must stay below combined node count")
        self.m = float(graph.edge_count)
        if self.m <= 0:
            raise GraphError("bipartite modularity undefined for an empty graph")
        ld, rd = graph.degree_sequences()
        self.d = np.concatenate([ld.astype(np.float64), np.zeros(graph.n_right)])
        self.g = np.concatenate([np.zeros(graph.n_left), rd.astype(np.float64)])
        self.indptr, self.indices = graph.combined_adjacency()
        self.d_sum = weighted_bincount(self.labels, self.d, n)
        self.g_sum = weighted_bincount(self.labels, self.g, n)
        lefts, rights = graph.edges
        cu = self.labels[lefts]
        same = cu == self.labels[rights + graph.n_left]
        self.internal_e = np.bincount(cu[same], minlength=n).astype(np.float64)

    def neighbor_community_counts(self, node: int) -> dict[int, int]:
        out: dict[int, int] = {}
        for e in range(self.indptr[node], self.indptr[node + 1]):
            c = int(self.labels[self.indices[e]])
            out[c] = out.get(c, 0) + 1
        return out

    def move_gain(self, node: int, target: int) -> float:
        cu = int(self.labels[node])
        if target == cu:
            return 0.0
        if not (0 <= target < self.graph.combined_count):
            raise GraphError("target community id out of range")
        ncc = self.neighbor_community_counts(node)
        e_cur = ncc.get(cu, 0)
        e_tgt = ncc.get(int(target), 0)
        du, gu = self.d[node], self.g[node]
        d_cur = self.d_sum[cu] - du
        g_cur = self.g_sum[cu] - gu
        d_tgt = self.d_sum[target]
        g_tgt = self.g_sum[target]
        m = self.m
        null = du * (g_tgt - g_cur) + gu * (d_tgt - d_cur)
        return (e_tgt - e_cur) / m - null / (m * m)

    def apply_move(self, node: int, target: int) -> None:
        cu = int(self.labels[node])
        if target == cu:
            return
        ncc = self.neighbor_community_counts(node)
        self.internal_e[cu] -= ncc.get(cu, 0)
        self.internal_e[target] += ncc.get(int(target), 0)
        self.d_sum[cu] -= self.d[node]
        self.d_sum[target] += self.d[node]
        self.g_sum[cu] -= self.g[node]
        self.g_sum[target] += self.g[node]
        self.labels[node] = target

    def score(self) -> float:
        m = self.m
        terms = self.internal_e / m - (self.d_sum * self.g_sum) / (m * m)
        return math.fsum(terms.tolist())


def iter_set_partitions(n: int) -> Iterator[np.ndarray]:
    """All set partitions of ``range(n)`` as restricted growth strings.

    Canonical enumeration: the all-zeros partition first, singletons last;
    Bell(n) partitions in total. Each yielded array is freshly allocated.
    """
    if n == 0:
        yield np.zeros(0, dtype=np.int32)
        return
    a = np.zeros(n, dtype=np.int32)
    # b[i] = 1 + max(a[:i]) caps the next value a[i] may take
    b = np.ones(n, dtype=np.int32)
    while True:
        yield a.copy()
        j = n - 1
        while j >= 1 and a[j] >= b[j]:
            j -= 1
        if j == 0:
            return
        a[j] += 1
        ceiling = max(int(b[j]), int(a[j]) + 1)
        for i in range(j + 1, n):
            a[i] = 0
            b[i] = ceiling


BRUTE_FORCE_MAX_NODES = 10


def brute_force_best_partition(
    graph: Union[WeightedGraph, BipartiteGraph],
    max_nodes: int = BRUTE_FORCE_MAX_NODES,
) -> Partition:
    """Exhaustive modularity maximum over all set partitions.

    Ground-truth oracle for optimizer tests. Ties are broken by canonical
    enumeration order (the first maximum encountered wins). Refuses graphs
    beyond ``max_nodes`` (combined count for bipartite graphs): Bell
    numbers explode.
    """
    if isinstance(graph, BipartiteGraph):
        n = graph.combined_count
        scorer = lambda labels: modularity_bipartite(graph, labels)  # noqa: E731
    else:
        n = graph.node_count
        scorer = lambda labels: modularity_unipartite(graph, labels)  # noqa: E731
    if n > max_nodes:
        raise GraphError(f"exhaustive search refused for {n} nodes (cap {max_nodes})")
    if n == 0:
        raise GraphError("cannot partition an empty node set")
    best_labels: np.ndarray | None = None
    best_score = -math.inf
    for labels in iter_set_partitions(n):
        score = scorer(labels)
        if score > best_score:
            best_score = score
            best_labels = labels
    assert best_labels is not None
    return Partition.from_labels(best_labels, best_score, seed=None)
