"""Linking the three partitions and inferring concept-cluster labels.

The bipartite partition groups articles and concepts *together*, so its
clusters act as a bridge between the two one-mode partitions: an article
cluster and a concept cluster that land in the same bipartite co-cluster
are about the same thing. The chain is:

1. overlap counts between each one-mode partition and the bipartite
   partition restricted to that node kind;
2. many-to-one linking: every bipartite cluster attaches to the one-mode
   cluster it overlaps most;
3. article clusters take the modal article category as their label;
4. concept clusters inherit labels through the bridge, with
   confidence = (concept-side coverage) * (article-side label share).

A concept cluster that no bipartite cluster links to stays "unbridged":
the method refuses to guess.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from bibridge.graphs import (
    BipartiteGraph,
    GraphError,
    NodeTable,
    Partition,
)
from bibridge.louvain import FilteredPartition, GraphKind, filter_clusters

SCHEMA_VERSION = 1
UNKNOWN_LABEL = "unknown"


# -- overlap and linking -------------------------------------------------------


@dataclass(frozen=True)
class OverlapMatrix:
    """Co-membership counts between two filtered partitions of one node set.

    ``counts[r, c]`` is the number of nodes in one-mode cluster ``r`` and
    bipartite cluster ``c``; ``row_totals`` / ``col_totals`` count every
    node of the cluster, including nodes the other partition filtered
    out, so coverage fractions have honest denominators.
    """

    counts: np.ndarray
    row_totals: np.ndarray
    col_totals: np.ndarray


def overlap(row_labels: np.ndarray, col_labels: np.ndarray) -> OverlapMatrix:
    """Overlap counts between two label arrays (-1 marks filtered nodes)."""
    row_labels = np.asarray(row_labels, dtype=np.int64)
    col_labels = np.asarray(col_labels, dtype=np.int64)
    if row_labels.shape != col_labels.shape:
        raise GraphError("overlap needs two labelings of the same node set")
    n_rows = int(row_labels.max()) + 1 if (row_labels >= 0).any() else 0
    n_cols = int(col_labels.max()) + 1 if (col_labels >= 0).any() else 0
    both = (row_labels >= 0) & (col_labels >= 0)
    counts = np.bincount(
        row_labels[both] * max(n_cols, 1) + col_labels[both],
        minlength=n_rows * max(n_cols, 1),
    ).reshape(n_rows, max(n_cols, 1))[:, :n_cols]
    row_totals = np.bincount(
        row_labels[row_labels >= 0], minlength=n_rows
    ).astype(np.int64)
    col_totals = np.bincount(
        col_labels[col_labels >= 0], minlength=n_cols
    ).astype(np.int64)
    return OverlapMatrix(
        counts=counts.astype(np.int64), row_totals=row_totals, col_totals=col_totals
    )


@dataclass(frozen=True)
class ClusterLinks:
    """Many-to-one attachment of bipartite clusters to one-mode clusters."""

    col_to_row: np.ndarray  # per bipartite cluster, -1 if nothing overlaps
    row_to_cols: tuple[tuple[int, ...], ...]
    coverage: np.ndarray  # per one-mode cluster, fraction recovered via links

    def to_dict(self) -> dict:
        return {
            "bipartite_to_cluster": self.col_to_row.tolist(),
            "cluster_to_bipartite": [list(cols) for cols in self.row_to_cols],
            "coverage": self.coverage.tolist(),
        }


def link_clusters(matrix: OverlapMatrix) -> ClusterLinks:
    """Attach each bipartite cluster to its plurality one-mode cluster.

    Ties go to the larger one-mode cluster, then to the lower cluster id.
    A one-mode cluster's coverage is the fraction of its members found in
    the bipartite clusters attached to it (0 when none attach).
    """
    n_rows, n_cols = matrix.counts.shape
    col_to_row = np.full(n_cols, -1, dtype=np.int32)
    for c in range(n_cols):
        column = matrix.counts[:, c]
        best = -1
        for r in range(n_rows):
            if column[r] == 0:
                continue
            if best < 0:
                best = r
                continue
            if column[r] > column[best]:
                best = r
            elif column[r] == column[best]:
                if (matrix.row_totals[r], -r) > (matrix.row_totals[best], -best):
                    best = r
        col_to_row[c] = best
    row_to_cols = tuple(
        tuple(int(c) for c in np.flatnonzero(col_to_row == r)) for r in range(n_rows)
    )
    coverage = np.zeros(n_rows, dtype=np.float64)
    for r in range(n_rows):
        if matrix.row_totals[r] > 0 and row_to_cols[r]:
            covered = int(matrix.counts[r, list(row_to_cols[r])].sum())
            coverage[r] = covered / float(matrix.row_totals[r])
    return ClusterLinks(
        col_to_row=col_to_row, row_to_cols=row_to_cols, coverage=coverage
    )


# -- labels --------------------------------------------------------------------


@dataclass(frozen=True)
class ClusterLabel:
    """Modal category of an article cluster."""

    cluster: int
    label: str
    share: float
    size: int

    def to_dict(self) -> dict:
        return {
            "cluster": self.cluster,
            "label": self.label,
            "share": self.share,
            "size": self.size,
        }


def label_article_clusters(
    filtered: FilteredPartition, articles: NodeTable
) -> list[ClusterLabel]:
    """Per surviving cluster: modal category and its share of members.

    Members without a category dilute the share; a cluster whose members
    carry no category at all gets the label "unknown" with share 0. Modal
    ties break to the lexicographically smallest category.
    """
    if filtered.assignment.size != len(articles):
        raise GraphError("partition does not match the article table")
    out: list[ClusterLabel] = []
    for cluster in range(filtered.cluster_count):
        members = np.flatnonzero(filtered.assignment == cluster)
        tally: dict[str, int] = {}
        for i in members.tolist():
            cat = articles.categories[i]
            if cat is not None:
                tally[cat] = tally.get(cat, 0) + 1
        if tally:
            label = min(tally, key=lambda c: (-tally[c], c))
            share = tally[label] / float(members.size)
        else:
            label, share = UNKNOWN_LABEL, 0.0
        out.append(
            ClusterLabel(cluster=cluster, label=label, share=share, size=int(members.size))
        )
    return out


@dataclass(frozen=True)
class InferredLabel:
    """One bridge path from a concept cluster to an article-cluster label."""

    label: str
    confidence: float
    article_cluster: int
    via_bipartite: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "confidence": self.confidence,
            "article_cluster": self.article_cluster,
            "via_bipartite": list(self.via_bipartite),
        }


@dataclass(frozen=True)
class ConceptClusterLabels:
    """Ranked label list inherited by one concept cluster (may be empty)."""

    cluster: int
    size: int
    coverage: float
    labels: tuple[InferredLabel, ...]

    @property
    def unbridged(self) -> bool:
        return not self.labels

    def to_dict(self) -> dict:
        return {
            "cluster": self.cluster,
            "size": self.size,
            "coverage": self.coverage,
            "unbridged": self.unbridged,
            "labels": [l.to_dict() for l in self.labels],
        }


def infer_concept_labels(
    concept_links: ClusterLinks,
    article_links: ClusterLinks,
    article_labels: list[ClusterLabel],
    concept_sizes: np.ndarray,
) -> list[ConceptClusterLabels]:
    """Carry article labels to concept clusters through shared co-clusters.

    For concept cluster r, every attached bipartite cluster leads to the
    article cluster it attaches to on the article side; each distinct
    article cluster becomes one label entry with

        confidence = coverage(concept cluster) * share(article label).

    Entries are ranked by confidence, then by article cluster id.
    """
    by_cluster = {l.cluster: l for l in article_labels}
    out: list[ConceptClusterLabels] = []
    for r, cols in enumerate(concept_links.row_to_cols):
        paths: dict[int, list[int]] = {}
        for b in cols:
            a = int(article_links.col_to_row[b])
            if a < 0:
                continue
            paths.setdefault(a, []).append(b)
        cov = float(concept_links.coverage[r])
        entries = []
        for a, via in paths.items():
            art = by_cluster[a]
            entries.append(
                InferredLabel(
                    label=art.label,
                    confidence=cov * art.share,
                    article_cluster=a,
                    via_bipartite=tuple(sorted(via)),
                )
            )
        entries.sort(key=lambda e: (-e.confidence, e.article_cluster))
        out.append(
            ConceptClusterLabels(
                cluster=r,
                size=int(concept_sizes[r]),
                coverage=cov,
                labels=tuple(entries),
            )
        )
    return out


# -- normalized mutual information ---------------------------------------------


def nmi(labels_a: np.ndarray, labels_b: np.ndarray) -> float:
    """NMI with arithmetic-mean normalization, natural log.

    Degenerate conventions: two single-cluster labelings agree perfectly
    (1.0); if only one side is single-cluster it shares no information
    with the other (0.0). The result is clamped to [0, 1].
    """
    a = np.asarray(labels_a, dtype=np.int64)
    b = np.asarray(labels_b, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise GraphError("nmi needs two equal-length non-empty label arrays")
    if a.min() < 0 or b.min() < 0:
        raise GraphError("nmi labels must be non-negative")
    n = a.size
    ka = int(a.max()) + 1
    kb = int(b.max()) + 1
    cont = np.bincount(a * kb + b, minlength=ka * kb).reshape(ka, kb)
    # identical up to label names -> exactly 1 by definition; skipping the
    # float path keeps the equality bit-exact
    occupied = cont > 0
    if occupied.sum(axis=1).max() <= 1 and occupied.sum(axis=0).max() <= 1:
        return 1.0
    pij = cont / float(n)
    pa = pij.sum(axis=1)
    pb = pij.sum(axis=0)
    ha = -math.fsum((p * math.log(p)) for p in pa.tolist() if p > 0.0)
    hb = -math.fsum((p * math.log(p)) for p in pb.tolist() if p > 0.0)
    if ha == 0.0 and hb == 0.0:
        return 1.0
    if ha == 0.0 or hb == 0.0:
        return 0.0
    terms = []
    nz = np.argwhere(cont > 0)
    for i, j in nz.tolist():
        p = pij[i, j]
        terms.append(p * math.log(p / (pa[i] * pb[j])))
    mi = math.fsum(terms)
    value = mi / (0.5 * (ha + hb))
    return min(1.0, max(0.0, value))


# -- planted benchmark ----------------------------------------------------------


@dataclass(frozen=True)
class PlantedConfig:
    """Block-structured bipartite benchmark parameters."""

    n_blocks: int
    left_per_block: int
    right_per_block: int
    p_in: float
    p_out: float
    seed: int

    def __post_init__(self):
        if self.n_blocks < 1 or self.left_per_block < 1 or self.right_per_block < 1:
            raise GraphError("block counts and sizes must be >= 1")
        if not (0.0 <= self.p_out <= self.p_in <= 1.0):
            raise GraphError("need 0 <= p_out <= p_in <= 1")
        if self.p_in == 0.0:
            raise GraphError("p_in must be positive")


@dataclass(frozen=True)
class PlantedDataset:
    graph: BipartiteGraph
    left_blocks: np.ndarray
    right_blocks: np.ndarray
    config: PlantedConfig

    def combined_blocks(self) -> np.ndarray:
        return np.concatenate([self.left_blocks, self.right_blocks])


_PLANTED_CHUNK_ROWS = 1 << 21  # cap per-draw memory at a few MB


def generate_planted(config: PlantedConfig) -> PlantedDataset:
    """Sample a planted-block bipartite graph (PCG64 stream, fixed order).

    Blocks are contiguous index ranges; each left-right pair draws a
    Bernoulli edge with p_in inside a block and p_out across blocks,
    block pair by block pair in row-major order, so a config reproduces
    its graph exactly.
    """
    b = config.n_blocks
    nl_b = config.left_per_block
    nr_b = config.right_per_block
    rng = np.random.default_rng(config.seed)
    lefts: list[np.ndarray] = []
    rights: list[np.ndarray] = []
    for bi in range(b):
        for bj in range(b):
            p = config.p_in if bi == bj else config.p_out
            if p == 0.0:
                continue
            row0 = bi * nl_b
            col0 = bj * nr_b
            rows_per_chunk = max(1, _PLANTED_CHUNK_ROWS // nr_b)
            for start in range(0, nl_b, rows_per_chunk):
                stop = min(nl_b, start + rows_per_chunk)
                mask = rng.random((stop - start, nr_b)) < p
                li, ri = np.nonzero(mask)
                lefts.append(li + (row0 + start))
                rights.append(ri + col0)
    all_l = np.concatenate(lefts) if lefts else np.empty(0, dtype=np.int64)
    all_r = np.concatenate(rights) if rights else np.empty(0, dtype=np.int64)
    graph = BipartiteGraph.from_edge_arrays(
        b * nl_b, b * nr_b, all_l, all_r, assume_unique=True
    )
    return PlantedDataset(
        graph=graph,
        left_blocks=np.repeat(np.arange(b, dtype=np.int32), nl_b),
        right_blocks=np.repeat(np.arange(b, dtype=np.int32), nr_b),
        config=config,
    )


# -- the full report -------------------------------------------------------------


@dataclass(frozen=True)
class BridgeReport:
    """Everything the cluster-bridging analysis produced, in one place."""

    article_partition: FilteredPartition
    concept_partition: FilteredPartition
    bipartite_partition: FilteredPartition
    article_overlap: OverlapMatrix
    concept_overlap: OverlapMatrix
    article_links: ClusterLinks
    concept_links: ClusterLinks
    article_labels: list[ClusterLabel]
    concept_labels: list[ConceptClusterLabels]
    bipartite_left_sizes: np.ndarray
    bipartite_right_sizes: np.ndarray
    consistency_nmi_articles: float
    consistency_nmi_concepts: float

    def to_dict(self) -> dict:
        def fp_section(fp: FilteredPartition) -> dict:
            return {
                "cluster_count": fp.cluster_count,
                "sizes": fp.kept_sizes.tolist(),
                "score": fp.source.score,
                "seed": fp.source.seed,
                "min_size": fp.min_size,
                "dropped_clusters": len(fp.dropped_communities),
                "dropped_nodes": fp.dropped_node_count,
            }

        return {
            "schema_version": SCHEMA_VERSION,
            "articles": {
                **fp_section(self.article_partition),
                "labels": [l.to_dict() for l in self.article_labels],
                "links": self.article_links.to_dict(),
                "overlap_counts": self.article_overlap.counts.tolist(),
            },
            "concepts": {
                **fp_section(self.concept_partition),
                "labels": [l.to_dict() for l in self.concept_labels],
                "links": self.concept_links.to_dict(),
                "overlap_counts": self.concept_overlap.counts.tolist(),
            },
            "bipartite": {
                **fp_section(self.bipartite_partition),
                "article_counts": self.bipartite_left_sizes.tolist(),
                "concept_counts": self.bipartite_right_sizes.tolist(),
            },
            "consistency_nmi": {
                "articles_vs_bipartite": self.consistency_nmi_articles,
                "concepts_vs_bipartite": self.consistency_nmi_concepts,
            },
        }

    def render_text(self) -> str:
        lines = ["Cluster bridge summary", "======================", ""]
        bp = self.bipartite_partition
        lines.append(
            f"Bipartite co-clusters: {bp.cluster_count} "
            f"(modularity {bp.source.score:.6f}, "
            f"{bp.dropped_node_count} nodes in dropped clusters)"
        )
        for i, (na, nc) in enumerate(
            zip(self.bipartite_left_sizes.tolist(), self.bipartite_right_sizes.tolist())
        ):
            lines.append(f"  B{i}: {na} articles + {nc} concepts")
        ap = self.article_partition
        lines.append("")
        lines.append(
            f"Article clusters: {ap.cluster_count} "
            f"(modularity {ap.source.score:.6f}, "
            f"consistency NMI vs bipartite {self.consistency_nmi_articles:.4f})"
        )
        for lab in self.article_labels:
            cols = ", ".join(f"B{c}" for c in self.article_links.row_to_cols[lab.cluster])
            cov = self.article_links.coverage[lab.cluster]
            lines.append(
                f"  A{lab.cluster}: {lab.size} articles, label {lab.label} "
                f"(share {lab.share:.1%}), coverage {cov:.1%}"
                + (f" via {cols}" if cols else "")
            )
        cp = self.concept_partition
        lines.append("")
        lines.append(
            f"Concept clusters: {cp.cluster_count} "
            f"(modularity {cp.source.score:.6f}, "
            f"consistency NMI vs bipartite {self.consistency_nmi_concepts:.4f})"
        )
        for cl in self.concept_labels:
            if cl.unbridged:
                lines.append(f"  C{cl.cluster}: {cl.size} concepts, unbridged")
                continue
            label_str = "; ".join(
                f"{e.label} (confidence {e.confidence:.2f}, via "
                + "+".join(f"B{b}" for b in e.via_bipartite)
                + ")"
                for e in cl.labels
            )
            lines.append(
                f"  C{cl.cluster}: {cl.size} concepts, coverage {cl.coverage:.1%}, "
                f"labels: {label_str}"
            )
        lines.append("")
        return "\n".join(lines)


def build_bridge_report(
    *,
    articles: NodeTable,
    concepts: NodeTable,
    article_partition: Partition,
    concept_partition: Partition,
    bipartite_partition: Partition,
) -> BridgeReport:
    """Filter the three partitions, link them, and assemble the report.

    The bipartite partition lives on the combined node space (articles
    first). Consistency NMI compares raw (unfiltered) partitions.
    """
    n_left = len(articles)
    n_right = len(concepts)
    if article_partition.assignment.size != n_left:
        raise GraphError("article partition does not match the article table")
    if concept_partition.assignment.size != n_right:
        raise GraphError("concept partition does not match the concept table")
    if bipartite_partition.assignment.size != n_left + n_right:
        raise GraphError("bipartite partition does not match the combined node space")
    art_f = filter_clusters(article_partition, GraphKind.UNIPARTITE)
    con_f = filter_clusters(concept_partition, GraphKind.UNIPARTITE)
    bip_f = filter_clusters(bipartite_partition, GraphKind.BIPARTITE)
    bip_art = bip_f.assignment[:n_left]
    bip_con = bip_f.assignment[n_left:]
    # keep the matrices rectangular even when a kind misses some clusters
    def padded_overlap(rows, cols, n_cols):
        m = overlap(rows, cols)
        if m.counts.shape[1] < n_cols:
            pad = n_cols - m.counts.shape[1]
            counts = np.pad(m.counts, ((0, 0), (0, pad)))
            col_totals = np.pad(m.col_totals, (0, pad))
            return OverlapMatrix(counts, m.row_totals, col_totals)
        return m

    art_overlap = padded_overlap(art_f.assignment, bip_art, bip_f.cluster_count)
    con_overlap = padded_overlap(con_f.assignment, bip_con, bip_f.cluster_count)
    art_links = link_clusters(art_overlap)
    con_links = link_clusters(con_overlap)
    art_labels = label_article_clusters(art_f, articles)
    con_labels = infer_concept_labels(
        con_links, art_links, art_labels, con_f.kept_sizes
    )
    bip_left_sizes = np.bincount(
        bip_art[bip_art >= 0], minlength=bip_f.cluster_count
    ).astype(np.int64)
    bip_right_sizes = np.bincount(
        bip_con[bip_con >= 0], minlength=bip_f.cluster_count
    ).astype(np.int64)
    return BridgeReport(
        article_partition=art_f,
        concept_partition=con_f,
        bipartite_partition=bip_f,
        article_overlap=art_overlap,
        concept_overlap=con_overlap,
        article_links=art_links,
        concept_links=con_links,
        article_labels=art_labels,
        concept_labels=con_labels,
        bipartite_left_sizes=bip_left_sizes,
        bipartite_right_sizes=bip_right_sizes,
        consistency_nmi_articles=nmi(
            article_partition.assignment, bipartite_partition.assignment[:n_left]
        ),
        consistency_nmi_concepts=nmi(
            concept_partition.assignment, bipartite_partition.assignment[n_left:]
        ),
    )
