"""Incidence-file ingestion.

Input is three tab-separated files:

* an edge list, one ``article_id<TAB>concept_id`` pair per line;
* an article table with header ``id`` or ``id<TAB>category``;
* a concept table with header ``id`` or ``id<TAB>generic`` (generic is
  0 or 1 and flags concepts too ubiquitous to carry topical signal).

Blank lines and lines starting with ``#`` are skipped everywhere.
Malformed lines (wrong field count, empty id) abort with a parse error
naming the file and line. Edge lines that reference unknown ids are
counted and dropped (or registered on the fly with ``auto_register``);
edges to generic concepts are dropped by default; duplicate pairs
collapse to one edge. Every data line lands in exactly one summary
counter, so ``lines_read == edges_added + duplicates + dropped_generic +
dropped_invalid`` always holds.

Node tables keep *all* declared nodes, including generic concepts: an
excluded concept simply has degree zero in the graph, which keeps one
stable index space per node kind across every artifact.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from bibridge.graphs import BipartiteGraph, GraphError, NodeKind, NodeTable

logger = logging.getLogger("bibridge.ingest")


class ParseError(Exception):
    """A malformed input line; carries file and line number."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class ValidationError(Exception):
    """Structurally valid input that violates a dataset-level rule."""


@dataclass(frozen=True)
class IngestOptions:
    exclude_generic: bool = True
    auto_register: bool = False


@dataclass
class IngestSummary:
    """Per-counter accounting of every data line in the edge file."""

    lines_read: int = 0
    edges_added: int = 0
    duplicates: int = 0
    dropped_generic: int = 0
    dropped_invalid: int = 0

    def consistent(self) -> bool:
        return self.lines_read == (
            self.edges_added + self.duplicates + self.dropped_generic + self.dropped_invalid
        )

    def to_dict(self) -> dict:
        return {
            "lines_read": self.lines_read,
            "edges_added": self.edges_added,
            "duplicates": self.duplicates,
            "dropped_generic": self.dropped_generic,
            "dropped_invalid": self.dropped_invalid,
        }


@dataclass(frozen=True)
class IngestResult:
    graph: BipartiteGraph
    articles: NodeTable
    concepts: NodeTable
    summary: IngestSummary
    options: IngestOptions


@dataclass(frozen=True)
class DatasetStats:
    """Corpus-level descriptive statistics of the built graph."""

    n_articles: int
    n_concepts: int
    n_generic_concepts: int
    edge_count: int
    mean_concepts_per_article: float
    min_concepts_per_article: int
    max_concepts_per_article: int

    def to_dict(self) -> dict:
        return {
            "n_articles": self.n_articles,
            "n_concepts": self.n_concepts,
            "n_generic_concepts": self.n_generic_concepts,
            "edge_count": self.edge_count,
            "mean_concepts_per_article": self.mean_concepts_per_article,
            "min_concepts_per_article": self.min_concepts_per_article,
            "max_concepts_per_article": self.max_concepts_per_article,
        }


def _data_lines(path):
    """Yield (line_no, stripped_line) skipping blanks and # comments."""
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield line_no, line


_TABLE_COLUMNS = {
    NodeKind.LEFT: ("id", "category"),
    NodeKind.RIGHT: ("id", "generic"),
}


def read_node_table(path, kind: NodeKind) -> NodeTable:
    """Read one node-metadata TSV; row order defines node indices."""
    allowed = _TABLE_COLUMNS[kind]
    table = NodeTable(kind)
    header: list[str] | None = None
    for line_no, line in _data_lines(path):
        fields = line.split("\t")
        if header is None:
            header = [f.strip() for f in fields]
            if not header or header[0] != "id":
                raise ParseError(path, line_no, "first header column must be 'id'")
            for col in header[1:]:
                if col not in allowed[1:]:
                    raise ParseError(
                        path, line_no,
                        f"unknown column {col!r} for {kind.value} nodes "
                        f"(allowed: {', '.join(allowed[1:])})",
                    )
            if len(set(header)) != len(header):
                raise ParseError(path, line_no, "duplicate header column")
            continue
        if len(fields) != len(header):
            raise ParseError(
                path, line_no,
                f"expected {len(header)} fields, found {len(fields)}",
            )
        row = dict(zip(header, fields))
        ext_id = row["id"]
        if not ext_id:
            raise ParseError(path, line_no, "empty id")
        kwargs = {}
        if "category" in row:
            kwargs["category"] = row["category"] or None
        if "generic" in row:
            flag = row["generic"]
            if flag not in ("0", "1"):
                raise ParseError(path, line_no, f"generic flag must be 0 or 1, got {flag!r}")
            kwargs["generic"] = flag == "1"
        try:
            table.add(ext_id, **kwargs)
        except GraphError as exc:
            raise ValidationError(f"{path}:{line_no}: {exc}") from exc
    if header is None:
        raise ValidationError(f"{path}: empty node table (missing header)")
    return table


def load_incidence(
    edges_path,
    articles_path,
    concepts_path,
    options: IngestOptions = IngestOptions(),
) -> IngestResult:
    """Build the bipartite graph plus its accounting summary."""
    articles = read_node_table(articles_path, NodeKind.LEFT)
    concepts = read_node_table(concepts_path, NodeKind.RIGHT)
    summary = IngestSummary()
    lefts: list[int] = []
    rights: list[int] = []
    seen: set[tuple[int, int]] = set()
    for line_no, line in _data_lines(edges_path):
        summary.lines_read += 1
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError(
                edges_path, line_no,
                f"expected 2 tab-separated fields, found {len(fields)}",
            )
        aid, cid = fields
        if not aid or not cid:
            raise ParseError(edges_path, line_no, "empty id field")
        li = articles.index(aid)
        if li is None:
            if options.auto_register:
                li = articles.add(aid)
            else:
                summary.dropped_invalid += 1
                logger.warning("%s:%d: unknown article id %r", edges_path, line_no, aid)
                continue
        ci = concepts.index(cid)
        if ci is None:
            if options.auto_register:
                ci = concepts.add(cid)
            else:
                summary.dropped_invalid += 1
                logger.warning("%s:%d: unknown concept id %r", edges_path, line_no, cid)
                continue
        if options.exclude_generic and concepts.generic[ci]:
            summary.dropped_generic += 1
            continue
        key = (li, ci)
        if key in seen:
            summary.duplicates += 1
            continue
        seen.add(key)
        lefts.append(li)
        rights.append(ci)
        summary.edges_added += 1
    graph = BipartiteGraph.from_edge_arrays(
        len(articles),
        len(concepts),
        np.asarray(lefts, dtype=np.int64),
        np.asarray(rights, dtype=np.int64),
        assume_unique=True,
    )
    if not summary.consistent():
        raise AssertionError(f"ingest accounting identity broken: {summary.to_dict()}")
    logger.info(
        "ingested %d edges (%d duplicate, %d generic, %d invalid of %d lines)",
        summary.edges_added, summary.duplicates, summary.dropped_generic,
        summary.dropped_invalid, summary.lines_read,
    )
    return IngestResult(
        graph=graph, articles=articles, concepts=concepts,
        summary=summary, options=options,
    )


def compute_stats(result: IngestResult) -> DatasetStats:
    """Descriptive statistics; the mean counts non-generic incidences only."""
    graph = result.graph
    n = graph.n_left
    gmask = result.concepts.generic_mask()
    _, rights = graph.edges
    nongeneric_edges = int((~gmask[rights]).sum()) if graph.edge_count else 0
    degrees = graph.left_degrees()
    return DatasetStats(
        n_articles=n,
        n_concepts=len(result.concepts),
        n_generic_concepts=int(gmask.sum()),
        edge_count=graph.edge_count,
        mean_concepts_per_article=(nongeneric_edges / n) if n else 0.0,
        min_concepts_per_article=int(degrees.min()) if n else 0,
        max_concepts_per_article=int(degrees.max()) if n else 0,
    )
