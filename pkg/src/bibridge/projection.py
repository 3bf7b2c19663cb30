"""One-mode projections of the bipartite incidence graph.

Concept side: two concepts are linked when at least one article mentions
both; for simplicity every link carries unit weight (co-occurrence counts
are available separately as a diagnostic, they are not the projection's
weights).

Article side: each article becomes a sparse vector over concepts with
inverse-document-frequency components, idf(c) = log(N / N_c), and two
articles are linked by the cosine of their vectors:

    w_ij = sum_c a_ic * a_jc / (|a_i| |a_j|)

Concepts appearing in every article have idf 0 and drop out of the
vectors; concepts appearing nowhere have no defined idf and are excluded.
Cosine weights are invariant under the choice of logarithm base (the base
cancels in the normalization), which is covered by tests.

Both projections run as sparse matrix products; a dense reference
implementation lives in the test suite and the two are required to agree
edge by edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from bibridge.graphs import BipartiteGraph, GraphError, WeightedGraph


@dataclass(frozen=True)
class IdfTable:
    """Per-concept inverse document frequency.

    ``values[c]`` is NaN when concept ``c`` occurs in no article (idf
    undefined; the concept is excluded from vector space entirely).
    """

    values: np.ndarray
    doc_freq: np.ndarray
    n_docs: int
    log_base: float

    def positive_mask(self) -> np.ndarray:
        """Concepts that actually contribute to article vectors."""
        return (self.doc_freq > 0) & (self.values > 0.0)


def compute_idf(graph: BipartiteGraph, log_base: float = math.e) -> IdfTable:
    """idf(c) = log(N / N_c) with N articles and N_c containing concept c."""
    if graph.n_left < 1:
        raise GraphError("idf undefined without articles")
    if not (log_base > 0.0) or log_base == 1.0:
        raise GraphError("log base must be positive and != 1")
    doc_freq = graph.right_degrees()
    n = float(graph.n_left)
    values = np.full(graph.n_right, np.nan, dtype=np.float64)
    present = doc_freq > 0
    values[present] = np.log(n / doc_freq[present])
    if log_base != math.e:
        values = values / math.log(log_base)
    return IdfTable(
        values=values,
        doc_freq=doc_freq.astype(np.int64),
        n_docs=graph.n_left,
        log_base=float(log_base),
    )


def article_vectors(
    graph: BipartiteGraph, idf: IdfTable
) -> tuple[sparse.csr_matrix, np.ndarray]:
    """Sparse article-by-concept matrix of idf weights, plus row norms.

    Rows of articles whose every concept has zero or undefined idf are
    empty and get norm 0.
    """
    if idf.values.shape != (graph.n_right,):
        raise GraphError("idf table does not match the graph's concept count")
    lefts, rights = graph.edges
    weights = idf.values[rights]
    keep = np.isfinite(weights) & (weights > 0.0)
    mat = sparse.coo_matrix(
        (weights[keep], (lefts[keep], rights[keep])),
        shape=(graph.n_left, graph.n_right),
    ).tocsr()
    norms = np.sqrt(
        np.bincount(lefts[keep], weights=weights[keep] ** 2, minlength=graph.n_left)
    )
    return mat, norms


def project_articles(
    graph: BipartiteGraph, idf: IdfTable, threshold: float = 0.0
) -> WeightedGraph:
    """Cosine-similarity article network from idf-weighted vectors.

    Pairs with weight <= ``threshold`` are omitted (the default keeps
    every pair that shares at least one informative concept). Articles
    with empty vectors stay as isolated nodes.
    """
    if graph.edge_count == 0:
        raise GraphError("cannot project an incidence graph without edges")
    if threshold < 0.0:
        raise GraphError("threshold must be >= 0")
    mat, norms = article_vectors(graph, idf)
    scale = np.zeros_like(norms)
    nz = norms > 0.0
    scale[nz] = 1.0 / norms[nz]
    normed = sparse.diags(scale).tocsr() @ mat
    sim = (normed @ normed.T).tocsr()
    sim.sort_indices()
    upper = sparse.triu(sim, k=1).tocoo()
    keep = upper.data > threshold
    return WeightedGraph(
        graph.n_left,
        upper.row[keep],
        upper.col[keep],
        upper.data[keep],
        assume_canonical=True,
    )


def _cooccurrence(graph: BipartiteGraph) -> sparse.coo_matrix:
    if graph.edge_count == 0:
        raise GraphError("cannot project an incidence graph without edges")
    inc = graph.incidence_matrix()
    counts = (inc.T @ inc).tocsr()
    counts.sort_indices()
    return sparse.triu(counts, k=1).tocoo()


def project_concepts(graph: BipartiteGraph) -> WeightedGraph:
    """Unit-weight concept co-occurrence network."""
    upper = _cooccurrence(graph)
    return WeightedGraph(
        graph.n_right,
        upper.row,
        upper.col,
        np.ones(upper.nnz, dtype=np.float64),
        assume_canonical=True,
    )


def concept_cooccurrence_counts(
    graph: BipartiteGraph,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Diagnostic co-occurrence counts per concept pair (u, v, count)."""
    upper = _cooccurrence(graph)
    return (
        upper.row.astype(np.int32),
        upper.col.astype(np.int32),
        upper.data.astype(np.int64),
    )
