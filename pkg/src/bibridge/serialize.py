"""Readers and writers for every on-disk artifact.

All writers are deterministic: fixed column orders, ``%.12g`` for
weights, sorted JSON keys, ``\\n`` line endings. Reading back what was
written reproduces the in-memory objects exactly (covered by round-trip
tests), which is what makes byte-level pipeline comparisons meaningful.
"""

from __future__ import annotations

import hashlib
import json
import xml.etree.ElementTree as ET

import numpy as np

from bibridge.graphs import (
    BipartiteGraph,
    GraphError,
    NodeKind,
    NodeTable,
    WeightedGraph,
)
from bibridge.ingest import IngestResult, ParseError, ValidationError, _data_lines

WEIGHT_FORMAT = "%.12g"


def format_weight(w: float) -> str:
    return WEIGHT_FORMAT % w


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(obj, handle, indent=2, sort_keys=True)
        handle.write("\n")


# -- node tables and edge lists ---------------------------------------------


def write_node_table(path, table: NodeTable) -> None:
    attr = "category" if table.kind is NodeKind.LEFT else "generic"
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"id\t{attr}\n")
        for row in table:
            if table.kind is NodeKind.LEFT:
                handle.write(f"{row.external_id}\t{row.category or ''}\n")
            else:
                handle.write(f"{row.external_id}\t{1 if row.generic else 0}\n")


def write_edge_file(path, result: IngestResult) -> None:
    """Graph edges as external id pairs, canonical order (round-trips)."""
    lefts, rights = result.graph.edges
    a_ids = result.articles.ids
    c_ids = result.concepts.ids
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("# article_id\tconcept_id\n")
        for li, ri in zip(lefts.tolist(), rights.tolist()):
            handle.write(f"{a_ids[li]}\t{c_ids[ri]}\n")


# -- weighted one-mode networks ----------------------------------------------


def write_weighted_graph(path, graph: WeightedGraph, ids: list[str]) -> None:
    if len(ids) != graph.node_count:
        raise GraphError("id list does not match node count")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("# node_count\t%d\n" % graph.node_count)
        handle.write("# u\tv\tweight\n")
        for u, v, w in zip(graph.u.tolist(), graph.v.tolist(), graph.w.tolist()):
            handle.write(f"{ids[u]}\t{ids[v]}\t{format_weight(w)}\n")


def read_weighted_graph(path, table: NodeTable) -> WeightedGraph:
    """Read a network TSV back against the same node table."""
    us: list[int] = []
    vs: list[int] = []
    ws: list[float] = []
    for line_no, line in _data_lines(path):
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError(path, line_no, f"expected 3 fields, found {len(fields)}")
        ui = table.index(fields[0])
        vi = table.index(fields[1])
        if ui is None or vi is None:
            raise ValidationError(f"{path}:{line_no}: unknown node id")
        try:
            w = float(fields[2])
        except ValueError as exc:
            raise ParseError(path, line_no, f"bad weight {fields[2]!r}") from exc
        us.append(ui)
        vs.append(vi)
        ws.append(w)
    return WeightedGraph(
        len(table),
        np.asarray(us, dtype=np.int64),
        np.asarray(vs, dtype=np.int64),
        np.asarray(ws, dtype=np.float64),
    )


# -- partitions ---------------------------------------------------------------


def write_partition(path, ids: list[str], assignment: np.ndarray) -> None:
    if len(ids) != len(assignment):
        raise GraphError("id list does not match assignment length")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("# node_id\tcommunity\n")
        for ext, c in zip(ids, np.asarray(assignment).tolist()):
            handle.write(f"{ext}\t{c}\n")


def read_partition(path, table: NodeTable) -> np.ndarray:
    """Assignment array aligned to ``table``; every node must appear once."""
    assignment = np.full(len(table), -1, dtype=np.int64)
    seen = np.zeros(len(table), dtype=bool)
    for line_no, line in _data_lines(path):
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError(path, line_no, f"expected 2 fields, found {len(fields)}")
        idx = table.index(fields[0])
        if idx is None:
            raise ValidationError(f"{path}:{line_no}: unknown node id {fields[0]!r}")
        if seen[idx]:
            raise ValidationError(f"{path}:{line_no}: node {fields[0]!r} listed twice")
        try:
            assignment[idx] = int(fields[1])
        except ValueError as exc:
            raise ParseError(path, line_no, f"bad community id {fields[1]!r}") from exc
        seen[idx] = True
    if not seen.all():
        missing = int((~seen).sum())
        raise ValidationError(f"{path}: {missing} nodes missing from partition")
    return assignment


# -- GraphML ------------------------------------------------------------------


def write_graphml_weighted(path, graph: WeightedGraph, ids: list[str]) -> None:
    """Weighted one-mode graph for external tools."""
    root = ET.Element("graphml", xmlns="http://graphml.graphdrawing.org/xmlns")
    key = ET.SubElement(root, "key")
    key.set("id", "w")
    key.set("for", "edge")
    key.set("attr.name", "weight")
    key.set("attr.type", "double")
    g = ET.SubElement(root, "graph", edgedefault="undirected")
    for ext in ids:
        ET.SubElement(g, "node", id=ext)
    for u, v, w in zip(graph.u.tolist(), graph.v.tolist(), graph.w.tolist()):
        e = ET.SubElement(g, "edge", source=ids[u], target=ids[v])
        data = ET.SubElement(e, "data", key="w")
        data.text = format_weight(w)
    ET.indent(root)
    ET.ElementTree(root).write(path, encoding="utf-8", xml_declaration=True)


def write_graphml_bipartite(path, graph: BipartiteGraph, left_ids, right_ids) -> None:
    """Two-mode graph with a node-kind attribute; ids prefixed per kind."""
    root = ET.Element("graphml", xmlns="http://graphml.graphdrawing.org/xmlns")
    key = ET.SubElement(root, "key")
    key.set("id", "kind")
    key.set("for", "node")
    key.set("attr.name", "kind")
    key.set("attr.type", "string")
    g = ET.SubElement(root, "graph", edgedefault="undirected")

    def add_node(node_id: str, kind: str):
        n = ET.SubElement(g, "node", id=node_id)
        data = ET.SubElement(n, "data", key="kind")
        data.text = kind

    for ext in left_ids:
        add_node(f"L:{ext}", "left")
    for ext in right_ids:
        add_node(f"R:{ext}", "right")
    lefts, rights = graph.edges
    for li, ri in zip(lefts.tolist(), rights.tolist()):
        ET.SubElement(g, "edge", source=f"L:{left_ids[li]}", target=f"R:{right_ids[ri]}")
    ET.indent(root)
    ET.ElementTree(root).write(path, encoding="utf-8", xml_declaration=True)
