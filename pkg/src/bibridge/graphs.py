"""Core graph containers.

Two container types back everything else in the package:

* :class:`BipartiteGraph` -- an unweighted two-mode incidence structure
  (left nodes vs right nodes, edges only across the two sides).
* :class:`WeightedGraph` -- an undirected weighted one-mode graph with
  canonical ``u <= v`` edge storage.

Both store edges as parallel numpy arrays in a canonical sorted order so
that every downstream computation is reproducible byte for byte.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse


class GraphError(Exception):
    """Structural misuse of a graph container (bad index, empty graph, ...)."""


class NodeKind(enum.Enum):
    """Which side of the bipartite graph a node belongs to."""

    LEFT = "left"
    RIGHT = "right"


def dense_relabel(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """Renumber arbitrary integer labels to 0..k-1 by first appearance.

    Returns the dense label array (int32) and the number of distinct labels.
    Deterministic: the community that appears first in index order gets id 0.
    """
    labels = np.asarray(labels)
    uniq, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty(uniq.size, dtype=np.int32)
    rank[order] = np.arange(uniq.size, dtype=np.int32)
    return rank[inverse.reshape(-1)], int(uniq.size)


class BipartiteGraph:
    """Unweighted bipartite graph on ``n_left`` + ``n_right`` nodes.

    Edges connect a left node to a right node; duplicates are rejected at
    insertion. Edge arrays are kept sorted lexicographically by
    ``(left, right)`` which also makes per-node adjacency lists sorted.
    """

    __slots__ = ("n_left", "n_right", "_lefts", "_rights", "_cache")

    def __init__(self, n_left: int, n_right: int):
        if n_left < 0 or n_right < 0:
            raise GraphError("node counts must be non-negative")
        self.n_left = int(n_left)
        self.n_right = int(n_right)
        self._lefts = np.empty(0, dtype=np.int32)
        self._rights = np.empty(0, dtype=np.int32)
        self._cache: dict = {}

    # -- construction ----------------------------------------------------

    @classmethod
    def from_edge_arrays(
        cls,
        n_left: int,
        n_right: int,
        lefts: np.ndarray,
        rights: np.ndarray,
        *,
        assume_unique: bool = False,
    ) -> "BipartiteGraph":
        """Bulk-build from parallel index arrays.

        Duplicate pairs are collapsed unless the caller guarantees
        uniqueness. Indices are validated against the node counts.
        """
        g = cls(n_left, n_right)
        lefts = np.asarray(lefts, dtype=np.int32)
        rights = np.asarray(rights, dtype=np.int32)
        if lefts.shape != rights.shape or lefts.ndim != 1:
            raise GraphError("edge arrays must be parallel 1-d arrays")
        if lefts.size:
            if lefts.min() < 0 or lefts.max() >= n_left:
                raise GraphError("left index out of range")
            if rights.min() < 0 or rights.max() >= n_right:
                raise GraphError("right index out of range")
        # canonical order: lexicographic by (left, right)
        key = lefts.astype(np.int64) * np.int64(max(n_right, 1)) + rights
        if assume_unique:
            order = np.argsort(key, kind="stable")
            key_sorted = key[order]
            if key_sorted.size > 1 and np.any(key_sorted[1:] == key_sorted[:-1]):
                raise GraphError("duplicate edges in assume_unique input")
        else:
            key_sorted, order = np.unique(key, return_index=True)
        g._lefts = lefts[order]
        g._rights = rights[order]
        return g

    def add_edge(self, left: int, right: int) -> bool:
        """Insert one edge; returns False (and changes nothing) on duplicate.

        Intended for small graphs and tests; bulk paths should use
        :meth:`from_edge_arrays`.
        """
        if not (0 <= left < self.n_left) or not (0 <= right < self.n_right):
            raise GraphError(f"edge ({left}, {right}) out of range")
        key = self._lefts.astype(np.int64) * np.int64(max(self.n_right, 1)) + self._rights
        newkey = np.int64(left) * np.int64(max(self.n_right, 1)) + right
        pos = int(np.searchsorted(key, newkey))
        if pos < key.size and key[pos] == newkey:
            return False
        self._lefts = np.insert(self._lefts, pos, left).astype(np.int32)
        self._rights = np.insert(self._rights, pos, right).astype(np.int32)
        self._cache.clear()
        return True

    # -- basic accessors ---------------------------------------------------

    @property
    def edge_count(self) -> int:
        return int(self._lefts.size)

    @property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Canonical (lefts, rights) arrays, sorted by (left, right)."""
        return self._lefts, self._rights

    @property
    def combined_count(self) -> int:
        """Node count when both sides share one index space.

        Left node ``i`` keeps index ``i``; right node ``j`` becomes
        ``n_left + j``.
        """
        return self.n_left + self.n_right

    def left_degrees(self) -> np.ndarray:
        if "ldeg" not in self._cache:
            self._cache["ldeg"] = np.bincount(self._lefts, minlength=self.n_left).astype(np.int64)
        return self._cache["ldeg"]

    def right_degrees(self) -> np.ndarray:
        if "rdeg" not in self._cache:
            self._cache["rdeg"] = np.bincount(self._rights, minlength=self.n_right).astype(np.int64)
        return self._cache["rdeg"]

    def degree_sequences(self) -> tuple[np.ndarray, np.ndarray]:
        """Both degree arrays; each sums to the edge count."""
        return self.left_degrees(), self.right_degrees()

    def incidence_matrix(self) -> sparse.csr_matrix:
        """Sparse n_left x n_right 0/1 incidence matrix (float64 data)."""
        if "inc" not in self._cache:
            data = np.ones(self._lefts.size, dtype=np.float64)
            mat = sparse.coo_matrix(
                (data, (self._lefts, self._rights)),
                shape=(self.n_left, self.n_right),
            ).tocsr()
            self._cache["inc"] = mat
        return self._cache["inc"]

    def combined_adjacency(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR adjacency over the combined index space (indptr, indices)."""
        if "cadj" not in self._cache:
            n = self.combined_count
            rows = np.concatenate([self._lefts, self._rights + self.n_left])
            cols = np.concatenate([self._rights + self.n_left, self._lefts])
            deg = np.bincount(rows, minlength=n)
            indptr = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(deg, out=indptr[1:])
            order = np.argsort(rows, kind="stable")
            self._cache["cadj"] = (indptr, cols[order].astype(np.int32))
        return self._cache["cadj"]

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"BipartiteGraph(n_left={self.n_left}, n_right={self.n_right}, "
            f"edges={self.edge_count})"
        )


class WeightedGraph:
    """Undirected weighted graph with canonical ``u <= v`` edge storage.

    Weights must be strictly positive. Self-loops are rejected unless the
    graph is flagged as an aggregated community graph (Louvain levels),
    where a self-loop of weight ``w`` contributes ``2 w`` to its node's
    strength.
    """

    __slots__ = ("node_count", "u", "v", "w", "allow_self_loops", "_cache")

    def __init__(
        self,
        node_count: int,
        u: np.ndarray,
        v: np.ndarray,
        w: np.ndarray,
        *,
        allow_self_loops: bool = False,
        assume_canonical: bool = False,
    ):
        if node_count < 0:
            raise GraphError("node count must be non-negative")
        self.node_count = int(node_count)
        u = np.asarray(u, dtype=np.int32).reshape(-1)
        v = np.asarray(v, dtype=np.int32).reshape(-1)
        w = np.asarray(w, dtype=np.float64).reshape(-1)
        if not (u.size == v.size == w.size):
            raise GraphError("edge arrays must be parallel")
        if u.size:
            if min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= node_count:
                raise GraphError("edge endpoint out of range")
            if np.any(~np.isfinite(w)) or np.any(w <= 0.0):
                raise GraphError("edge weights must be finite and strictly positive")
        swap = u > v
        if np.any(swap):
            u = u.copy()
            v = v.copy()
            u[swap], v[swap] = v[swap], u[swap]
        if not allow_self_loops and np.any(u == v):
            raise GraphError("self-loops only allowed in aggregated graphs")
        if not assume_canonical and u.size:
            order = np.lexsort((v, u))
            u, v, w = u[order], v[order], w[order]
        if u.size > 1:
            dup = (u[1:] == u[:-1]) & (v[1:] == v[:-1])
            if np.any(dup):
                raise GraphError("duplicate edges")
        self.u = u
        self.v = v
        self.w = w
        self.allow_self_loops = bool(allow_self_loops)
        self._cache: dict = {}

    @classmethod
    def empty(cls, node_count: int) -> "WeightedGraph":
        z = np.empty(0)
        return cls(node_count, z, z, z)

    # -- derived quantities ------------------------------------------------

    @property
    def edge_count(self) -> int:
        return int(self.u.size)

    @property
    def total_weight(self) -> float:
        """W: sum of edge weights, each self-loop counted once."""
        if "W" not in self._cache:
            self._cache["W"] = float(self.w.sum())
        return self._cache["W"]

    def self_loop_weights(self) -> np.ndarray:
        """Per-node self-loop weight (zeros for plain graphs)."""
        if "selfw" not in self._cache:
            sl = self.u == self.v
            out = np.zeros(self.node_count, dtype=np.float64)
            if np.any(sl):
                np.add.at(out, self.u[sl], self.w[sl])
            self._cache["selfw"] = out
        return self._cache["selfw"]

    def strengths(self) -> np.ndarray:
        """Weighted degree per node; a self-loop contributes twice its weight."""
        if "strength" not in self._cache:
            s = np.zeros(self.node_count, dtype=np.float64)
            sl = self.u == self.v
            cross = ~sl
            s += np.bincount(self.u[cross], weights=self.w[cross], minlength=self.node_count)
            s += np.bincount(self.v[cross], weights=self.w[cross], minlength=self.node_count)
            s += 2.0 * self.self_loop_weights()
            self._cache["strength"] = s
        return self._cache["strength"]

    def adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symmetric CSR over cross edges only: (indptr, indices, weights).

        Self-loops are excluded here; optimizer code reads them from
        :meth:`self_loop_weights` because a loop never changes a move gain.
        """
        if "adj" not in self._cache:
            cross = self.u != self.v
            uu, vv, ww = self.u[cross], self.v[cross], self.w[cross]
            n = self.node_count
            mat = sparse.coo_matrix(
                (np.concatenate([ww, ww]),
                 (np.concatenate([uu, vv]), np.concatenate([vv, uu]))),
                shape=(n, n),
            ).tocsr()
            self._cache["adj"] = (
                mat.indptr.astype(np.int64),
                mat.indices.astype(np.int32),
                mat.data,
            )
        return self._cache["adj"]

    def __repr__(self) -> str:  # pragma: no cover
        return f"WeightedGraph(nodes={self.node_count}, edges={self.edge_count})"


@dataclass(frozen=True)
class Partition:
    """A hard assignment of nodes to communities.

    ``assignment`` uses dense community ids ``0..community_count-1``;
    ``score`` is the modularity value under which the partition was
    produced; ``seed`` records the RNG seed of the run that produced it
    (None for partitions not born from a seeded run).
    """

    assignment: np.ndarray
    community_count: int
    score: float
    seed: int | None = None

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int32)
        object.__setattr__(self, "assignment", a)
        if a.size:
            if a.min() < 0 or a.max() >= self.community_count:
                raise GraphError("assignment labels must be dense 0..k-1")
            if np.unique(a).size != self.community_count:
                raise GraphError("community_count does not match distinct labels")
        elif self.community_count != 0:
            raise GraphError("empty assignment with nonzero community_count")

    @classmethod
    def from_labels(
        cls, labels: np.ndarray, score: float, seed: int | None = None
    ) -> "Partition":
        dense, k = dense_relabel(np.asarray(labels))
        return cls(assignment=dense, community_count=k, score=float(score), seed=seed)

    def community_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.community_count).astype(np.int64)

    def members(self, community: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == community)


@dataclass(frozen=True)
class NodeMeta:
    """Metadata for one node: stable external id plus per-kind attributes.

    ``category`` is meaningful for left nodes (e.g. a subject class);
    ``generic`` flags right nodes too ubiquitous to carry signal.
    """

    external_id: str
    kind: NodeKind
    category: str | None = None
    generic: bool = False


class NodeTable:
    """Ordered collection of :class:`NodeMeta` for one node kind.

    Row order defines the node indexing used by the graphs; external ids
    must be unique within the table.
    """

    def __init__(self, kind: NodeKind):
        self.kind = kind
        self.ids: list[str] = []
        self.categories: list[str | None] = []
        self.generic: list[bool] = []
        self._index: dict[str, int] = {}

    def add(self, external_id: str, *, category: str | None = None, generic: bool = False) -> int:
        if external_id in self._index:
            raise GraphError(f"duplicate external id {external_id!r}")
        idx = len(self.ids)
        self.ids.append(external_id)
        self.categories.append(category)
        self.generic.append(bool(generic))
        self._index[external_id] = idx
        return idx

    def index(self, external_id: str) -> int | None:
        return self._index.get(external_id)

    def row(self, i: int) -> NodeMeta:
        return NodeMeta(self.ids[i], self.kind, self.categories[i], self.generic[i])

    def generic_mask(self) -> np.ndarray:
        return np.asarray(self.generic, dtype=bool)

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return (self.row(i) for i in range(len(self.ids)))
