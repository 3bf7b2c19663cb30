"""Writer/reader round trips and byte determinism of the artifact formats."""

import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from bibridge.graphs import BipartiteGraph, NodeKind, NodeTable, WeightedGraph
from bibridge.ingest import ParseError, ValidationError, read_node_table
from bibridge.serialize import (
    format_weight,
    read_partition,
    read_weighted_graph,
    sha256_file,
    write_graphml_bipartite,
    write_graphml_weighted,
    write_json,
    write_node_table,
    write_partition,
    write_weighted_graph,
)


def make_table(ids, kind=NodeKind.LEFT):
    t = NodeTable(kind)
    for x in ids:
        t.add(x)
    return t


class TestWeightedGraphFiles:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        n = 8
        u, v = np.triu_indices(n, k=1)
        keep = rng.random(u.size) < 0.5
        g = WeightedGraph(n, u[keep], v[keep], rng.uniform(0.01, 2.0, int(keep.sum())))
        ids = [f"n{i}" for i in range(n)]
        path = tmp_path / "net.tsv"
        write_weighted_graph(path, g, ids)
        g2 = read_weighted_graph(path, make_table(ids))
        np.testing.assert_array_equal(g.u, g2.u)
        np.testing.assert_array_equal(g.v, g2.v)
        # %.12g keeps 12 significant digits
        np.testing.assert_allclose(g.w, g2.w, rtol=1e-11, atol=0)

    def test_deterministic_bytes(self, tmp_path):
        g = WeightedGraph(3, [0, 1], [1, 2], [1.0 / 3.0, 0.123456789012345])
        ids = ["a", "b", "c"]
        p1, p2 = tmp_path / "one.tsv", tmp_path / "two.tsv"
        write_weighted_graph(p1, g, ids)
        write_weighted_graph(p2, g, ids)
        assert sha256_file(p1) == sha256_file(p2)
        assert "0.333333333333" in p1.read_text()

    def test_weight_format(self):
        assert format_weight(1.0) == "1"
        assert format_weight(0.5) == "0.5"
        assert len(format_weight(1.0 / 3.0).lstrip("0.")) == 12

    def test_read_errors(self, tmp_path):
        t = make_table(["a", "b"])
        bad = tmp_path / "bad.tsv"
        bad.write_text("a\tb\n")
        with pytest.raises(ParseError):
            read_weighted_graph(bad, t)
        bad.write_text("a\tz\t1.0\n")
        with pytest.raises(ValidationError):
            read_weighted_graph(bad, t)
        bad.write_text("a\tb\theavy\n")
        with pytest.raises(ParseError):
            read_weighted_graph(bad, t)


class TestPartitionFiles:
    def test_round_trip_exact(self, tmp_path):
        ids = [f"a{i}" for i in range(6)]
        assignment = np.array([0, 0, 1, 2, 1, 2])
        path = tmp_path / "part.tsv"
        write_partition(path, ids, assignment)
        got = read_partition(path, make_table(ids))
        np.testing.assert_array_equal(got, assignment)

    def test_missing_node_rejected(self, tmp_path):
        path = tmp_path / "part.tsv"
        write_partition(path, ["a0", "a1"], np.array([0, 1]))
        with pytest.raises(ValidationError):
            read_partition(path, make_table(["a0", "a1", "a2"]))

    def test_duplicate_node_rejected(self, tmp_path):
        path = tmp_path / "part.tsv"
        path.write_text("a0\t0\na0\t1\n")
        with pytest.raises(ValidationError):
            read_partition(path, make_table(["a0"]))

    def test_unknown_node_rejected(self, tmp_path):
        path = tmp_path / "part.tsv"
        path.write_text("zz\t0\n")
        with pytest.raises(ValidationError):
            read_partition(path, make_table(["a0"]))


class TestNodeTableFiles:
    def test_left_round_trip(self, tmp_path):
        t = NodeTable(NodeKind.LEFT)
        t.add("a1", category="hep-th")
        t.add("a2", category=None)
        path = tmp_path / "arts.tsv"
        write_node_table(path, t)
        t2 = read_node_table(path, NodeKind.LEFT)
        assert t2.ids == t.ids
        assert t2.categories == t.categories

    def test_right_round_trip(self, tmp_path):
        t = NodeTable(NodeKind.RIGHT)
        t.add("c1", generic=True)
        t.add("c2", generic=False)
        path = tmp_path / "cons.tsv"
        write_node_table(path, t)
        t2 = read_node_table(path, NodeKind.RIGHT)
        assert t2.generic == t.generic


class TestGraphML:
    def test_weighted_parse_back(self, tmp_path):
        g = WeightedGraph(3, [0, 0], [1, 2], [0.25, 1.5])
        path = tmp_path / "net.graphml"
        write_graphml_weighted(path, g, ["x", "y", "z"])
        root = ET.parse(path).getroot()
        ns = "{http://graphml.graphdrawing.org/xmlns}"
        nodes = root.findall(f".//{ns}node")
        edges = root.findall(f".//{ns}edge")
        assert len(nodes) == 3
        assert len(edges) == 2
        assert edges[0].find(f"{ns}data").text == "0.25"

    def test_bipartite_parse_back(self, tmp_path):
        g = BipartiteGraph.from_edge_arrays(2, 2, [0, 1], [0, 1])
        path = tmp_path / "b.graphml"
        write_graphml_bipartite(path, g, ["a1", "a2"], ["c1", "c2"])
        root = ET.parse(path).getroot()
        ns = "{http://graphml.graphdrawing.org/xmlns}"
        kinds = [d.text for d in root.findall(f".//{ns}node/{ns}data")]
        assert kinds == ["left", "left", "right", "right"]
        assert len(root.findall(f".//{ns}edge")) == 2


class TestJson:
    def test_sorted_keys_and_trailing_newline(self, tmp_path):
        path = tmp_path / "x.json"
        write_json(path, {"b": 1, "a": {"z": 1, "y": 2}})
        text = path.read_text()
        assert text.endswith("\n")
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"b": 1, "a": {"z": 1, "y": 2}}
