"""End-to-end tests for the command-line interface."""

import json
import subprocess
import sys

import pytest

from bibridge import cli


def write_corpus(root):
    """A 5x5 corpus with two clean groups and one generic concept."""
    edges = root / "edges.tsv"
    articles = root / "articles.tsv"
    concepts = root / "concepts.tsv"
    articles.write_text(
        "id\tcategory\n"
        "a1\tphys\na2\tphys\na3\tbio\na4\tbio\na5\tbio\n"
    )
    concepts.write_text(
        "id\tgeneric\n"
        "quark\t0\nlepton\t0\ncell\t0\nenzyme\t0\nmodel\t1\n"
    )
    edges.write_text(
        "# article\tconcept\n"
        "a1\tquark\na1\tlepton\n"
        "a2\tquark\na2\tlepton\na2\tmodel\n"
        "a3\tcell\na3\tenzyme\n"
        "a4\tcell\na4\tenzyme\n"
        "a5\tcell\na5\tmodel\n"
    )
    return edges, articles, concepts


def run_pipeline(root, out, seed=7, extra=()):
    edges, articles, concepts = write_corpus(root)
    argv = [
        "pipeline",
        "--edges", str(edges),
        "--articles", str(articles),
        "--concepts", str(concepts),
        "--out", str(out),
        "--seed", str(seed),
        "--runs-bipartite", "20",
        "--runs-articles", "10",
        "--runs-concepts", "10",
        *extra,
    ]
    return cli.main(argv)


PIPELINE_FILES = [
    "graph_edges.tsv", "articles.tsv", "concepts.tsv",
    "ingest_summary.json", "stats.json",
    "network_articles.tsv", "network_concepts.tsv",
    "partition_articles.tsv", "partition_concepts.tsv",
    "partition_bipartite_articles.tsv", "partition_bipartite_concepts.tsv",
    "runs_articles.json", "runs_concepts.json", "runs_bipartite.json",
    "bridge_report.json", "bridge_summary.txt", "manifest.json",
]


class TestPipeline:
    def test_writes_all_artifacts(self, tmp_path, capsys):
        assert run_pipeline(tmp_path, tmp_path / "out") == 0
        for name in PIPELINE_FILES:
            assert (tmp_path / "out" / name).exists(), name
        assert "Concept clusters" in capsys.readouterr().out

    def test_manifest_contents(self, tmp_path):
        run_pipeline(tmp_path, tmp_path / "out")
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["tool"]["name"] == "bibridge"
        assert manifest["config"]["seed"] == 7
        assert manifest["config"]["runs"] == {
            "bipartite": 20, "articles": 10, "concepts": 10,
        }
        assert manifest["config"]["cluster_min_sizes"] == {
            "unipartite": 2, "bipartite": 3,
        }
        assert set(manifest["inputs"]) == {"edges", "articles", "concepts"}
        for entry in manifest["inputs"].values():
            assert len(entry["sha256"]) == 64
        stage_names = [s["name"] for s in manifest["stages"]]
        assert stage_names == [
            "ingest", "project", "cluster:bipartite",
            "cluster:articles", "cluster:concepts", "bridge",
        ]
        # every listed output exists and is hashed
        assert set(manifest["outputs"]) == set(PIPELINE_FILES) - {"manifest.json"}

    def test_seed_offsets_keep_stage_streams_apart(self, tmp_path):
        run_pipeline(tmp_path, tmp_path / "out", seed=7)
        seeds = {}
        for network in ("bipartite", "articles", "concepts"):
            payload = json.loads(
                (tmp_path / "out" / f"runs_{network}.json").read_text()
            )
            seeds[network] = payload["base_seed"]
        assert seeds == {
            "bipartite": 7, "articles": 10_000_007, "concepts": 20_000_007,
        }

    def test_rerun_is_byte_identical(self, tmp_path):
        run_pipeline(tmp_path, tmp_path / "a", seed=7)
        run_pipeline(tmp_path, tmp_path / "b", seed=7)
        volatile = {"manifest.json"} | {
            f"runs_{n}.json" for n in ("articles", "concepts", "bipartite")
        }
        for name in PIPELINE_FILES:
            if name in volatile:  # wall-clock times live here
                continue
            a = (tmp_path / "a" / name).read_bytes()
            b = (tmp_path / "b" / name).read_bytes()
            assert a == b, name
        ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
        mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
        stable = {k: v for k, v in ma["outputs"].items() if k not in volatile}
        assert stable == {k: v for k, v in mb["outputs"].items() if k not in volatile}

    def test_thread_count_does_not_change_results(self, tmp_path):
        run_pipeline(tmp_path, tmp_path / "t1", seed=3)
        run_pipeline(tmp_path, tmp_path / "t4", seed=3, extra=["--threads", "4"])
        for name in PIPELINE_FILES:
            if name.startswith("partition_") or name == "bridge_report.json":
                a = (tmp_path / "t1" / name).read_bytes()
                b = (tmp_path / "t4" / name).read_bytes()
                assert a == b, name

    def test_different_seed_changes_runs_log(self, tmp_path):
        run_pipeline(tmp_path, tmp_path / "a", seed=1)
        run_pipeline(tmp_path, tmp_path / "b", seed=2)
        ra = json.loads((tmp_path / "a" / "runs_bipartite.json").read_text())
        rb = json.loads((tmp_path / "b" / "runs_bipartite.json").read_text())
        assert ra["base_seed"] != rb["base_seed"]
        assert [s["seed"] for s in ra["run_summaries"]] != [
            s["seed"] for s in rb["run_summaries"]
        ]


class TestStageWise:
    def test_stages_reproduce_pipeline_partitions(self, tmp_path, capsys):
        run_pipeline(tmp_path, tmp_path / "pipe", seed=7)
        edges, articles, concepts = write_corpus(tmp_path)
        out = tmp_path / "stages"
        base = ["--out", str(out)]
        assert cli.main([
            "ingest", "--edges", str(edges), "--articles", str(articles),
            "--concepts", str(concepts), *base,
        ]) == 0
        assert cli.main(["project", *base]) == 0
        for network, runs in (("bipartite", 20), ("articles", 10), ("concepts", 10)):
            assert cli.main([
                "cluster", *base, "--network", network,
                "--runs", str(runs), "--seed", "7",
            ]) == 0
        assert cli.main(["bridge", *base]) == 0
        capsys.readouterr()
        for name in PIPELINE_FILES:
            if name.startswith("partition_") or name.startswith("network_"):
                a = (tmp_path / "pipe" / name).read_bytes()
                b = (out / name).read_bytes()
                assert a == b, name

    def test_ingest_stdout_summary(self, tmp_path, capsys):
        edges, articles, concepts = write_corpus(tmp_path)
        assert cli.main([
            "ingest", "--edges", str(edges), "--articles", str(articles),
            "--concepts", str(concepts), "--out", str(tmp_path / "out"),
        ]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["summary"]["edges_added"] == 9  # two generic edges dropped
        assert payload["summary"]["dropped_generic"] == 2
        assert payload["stats"]["n_articles"] == 5

    def test_ingest_summary_file(self, tmp_path, capsys):
        edges, articles, concepts = write_corpus(tmp_path)
        target = tmp_path / "summary.json"
        assert cli.main([
            "ingest", "--edges", str(edges), "--articles", str(articles),
            "--concepts", str(concepts), "--out", str(tmp_path / "out"),
            "--summary", str(target),
        ]) == 0
        assert capsys.readouterr().out == ""
        assert json.loads(target.read_text())["summary"]["edges_added"] == 9

    def test_include_generic_survives_reload(self, tmp_path, capsys):
        edges, articles, concepts = write_corpus(tmp_path)
        out = tmp_path / "out"
        assert cli.main([
            "ingest", "--edges", str(edges), "--articles", str(articles),
            "--concepts", str(concepts), "--out", str(out), "--include-generic",
        ]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["summary"]["edges_added"] == 11
        assert cli.main(["project", "--out", str(out)]) == 0
        # the generic concept keeps its edges through the restart
        lines = (out / "network_concepts.tsv").read_text().splitlines()
        assert any("model" in line for line in lines)


class TestVerify:
    def test_clean_run_verifies(self, tmp_path, capsys):
        run_pipeline(tmp_path, tmp_path / "out")
        assert cli.main(["verify", "--out", str(tmp_path / "out")]) == 0
        assert "all artifacts match" in capsys.readouterr().out

    def test_tampered_artifact_fails(self, tmp_path, capsys):
        out = tmp_path / "out"
        run_pipeline(tmp_path, out)
        with open(out / "partition_articles.tsv", "a") as handle:
            handle.write("rogue\t0\n")
        assert cli.main(["verify", "--out", str(out)]) == 3
        assert "MISMATCH partition_articles.tsv" in capsys.readouterr().out

    def test_missing_artifact_fails(self, tmp_path, capsys):
        out = tmp_path / "out"
        run_pipeline(tmp_path, out)
        (out / "bridge_report.json").unlink()
        assert cli.main(["verify", "--out", str(out)]) == 3
        assert "MISSING  bridge_report.json" in capsys.readouterr().out

    def test_no_manifest_is_input_error(self, tmp_path, capsys):
        assert cli.main(["verify", "--out", str(tmp_path)]) == 2
        assert "error:" in capsys.readouterr().err


class TestErrorPaths:
    def test_missing_input_file(self, tmp_path, capsys):
        assert cli.main([
            "ingest", "--edges", str(tmp_path / "nope.tsv"),
            "--articles", str(tmp_path / "a.tsv"),
            "--concepts", str(tmp_path / "c.tsv"),
            "--out", str(tmp_path / "out"),
        ]) == 2
        assert "error:" in capsys.readouterr().err

    def test_malformed_edge_line(self, tmp_path, capsys):
        edges, articles, concepts = write_corpus(tmp_path)
        edges.write_text(edges.read_text() + "only_one_field\n")
        assert cli.main([
            "ingest", "--edges", str(edges), "--articles", str(articles),
            "--concepts", str(concepts), "--out", str(tmp_path / "out"),
        ]) == 2
        assert "error:" in capsys.readouterr().err

    def test_cluster_before_ingest(self, tmp_path, capsys):
        assert cli.main([
            "cluster", "--out", str(tmp_path / "empty"),
            "--network", "articles",
        ]) == 2
        assert "ingest stage first" in capsys.readouterr().err

    def test_cluster_articles_before_project(self, tmp_path, capsys):
        edges, articles, concepts = write_corpus(tmp_path)
        out = tmp_path / "out"
        cli.main([
            "ingest", "--edges", str(edges), "--articles", str(articles),
            "--concepts", str(concepts), "--out", str(out),
        ])
        capsys.readouterr()
        assert cli.main([
            "cluster", "--out", str(out), "--network", "articles",
        ]) == 2
        assert "project stage first" in capsys.readouterr().err

    def test_bridge_before_cluster(self, tmp_path, capsys):
        edges, articles, concepts = write_corpus(tmp_path)
        out = tmp_path / "out"
        cli.main([
            "ingest", "--edges", str(edges), "--articles", str(articles),
            "--concepts", str(concepts), "--out", str(out),
        ])
        capsys.readouterr()
        assert cli.main(["bridge", "--out", str(out)]) == 2
        assert "cluster stage first" in capsys.readouterr().err

    def test_invalid_run_count(self, tmp_path, capsys):
        edges, articles, concepts = write_corpus(tmp_path)
        out = tmp_path / "out"
        cli.main([
            "ingest", "--edges", str(edges), "--articles", str(articles),
            "--concepts", str(concepts), "--out", str(out),
        ])
        cli.main(["project", "--out", str(out)])
        capsys.readouterr()
        assert cli.main([
            "cluster", "--out", str(out), "--network", "articles", "--runs", "0",
        ]) == 2

    def test_internal_assertion_exits_3(self, tmp_path, capsys, monkeypatch):
        def boom(args, out):
            raise AssertionError("synthetic invariant breach")

        monkeypatch.setattr(cli, "stage_ingest", boom)
        edges, articles, concepts = write_corpus(tmp_path)
        assert cli.main([
            "ingest", "--edges", str(edges), "--articles", str(articles),
            "--concepts", str(concepts), "--out", str(tmp_path / "out"),
        ]) == 3
        assert "internal error" in capsys.readouterr().err


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        edges, articles, concepts = write_corpus(tmp_path)
        proc = subprocess.run(
            [
                sys.executable, "-m", "bibridge.cli",
                "pipeline",
                "--edges", str(edges), "--articles", str(articles),
                "--concepts", str(concepts),
                "--out", str(tmp_path / "out"), "--seed", "1",
                "--runs-bipartite", "5", "--runs-articles", "5",
                "--runs-concepts", "5",
            ],
            capture_output=True, text=True, timeout=300,
        )
        assert proc.returncode == 0, proc.stderr
        assert "Concept clusters" in proc.stdout
        assert (tmp_path / "out" / "manifest.json").exists()

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            cli.main(["--version"])
        assert excinfo.value.code == 0
        assert "bibridge" in capsys.readouterr().out
