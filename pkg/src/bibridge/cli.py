"""Command-line interface.

Stages write their artifacts into one output directory so later stages
can pick up where earlier ones stopped:

    ingest    graph_edges.tsv articles.tsv concepts.tsv
              ingest_summary.json stats.json
    project   network_articles.tsv network_concepts.tsv [*.graphml]
    cluster   partition_<network>.tsv runs_<network>.json
              (bipartite partitions split into an article and a concept
              file: external ids are only unique within a node kind)
    bridge    bridge_report.json bridge_summary.txt
    pipeline  all of the above plus manifest.json with sha256 digests
    verify    re-hash artifacts against manifest.json

Repeated invocations with the same inputs and flags produce byte
identical artifacts; wall-clock times appear only in runs_*.json and
manifest.json. The pipeline command chains stages in memory, so weights
flow at full precision; running stages separately round-trips weights
through their 12-significant-digit file form in between.

Exit codes: 0 success, 2 input/usage error, 3 internal invariant or
integrity failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from bibridge import __version__
from bibridge.bridge import build_bridge_report
from bibridge.graphs import GraphError, NodeKind, Partition
from bibridge.ingest import (
    IngestOptions,
    IngestResult,
    ParseError,
    ValidationError,
    compute_stats,
    load_incidence,
    read_node_table,
)
from bibridge.louvain import (
    DEFAULT_MIN_GAIN,
    DEFAULT_RUNS_BIPARTITE,
    DEFAULT_RUNS_UNIPARTITE,
    MultiRunResult,
    OptimizerConfig,
    multi_run_bipartite,
    multi_run_unipartite,
)
from bibridge.modularity import modularity_bipartite, modularity_unipartite
from bibridge.projection import compute_idf, project_articles, project_concepts
from bibridge.serialize import (
    read_partition,
    read_weighted_graph,
    sha256_file,
    write_edge_file,
    write_graphml_bipartite,
    write_graphml_weighted,
    write_json,
    write_node_table,
    write_partition,
    write_weighted_graph,
)

logger = logging.getLogger("bibridge.cli")

MANIFEST_SCHEMA_VERSION = 1

# stage seeds stay far apart so per-run seeds (base + run index) never collide
SEED_STRIDE = 10_000_000
NETWORK_SEED_OFFSET = {"bipartite": 0, "articles": SEED_STRIDE, "concepts": 2 * SEED_STRIDE}

F_EDGES = "graph_edges.tsv"
F_ARTICLES = "articles.tsv"
F_CONCEPTS = "concepts.tsv"
F_SUMMARY = "ingest_summary.json"
F_STATS = "stats.json"
F_NET = {"articles": "network_articles.tsv", "concepts": "network_concepts.tsv"}
F_PARTITION = {
    "articles": ("partition_articles.tsv",),
    "concepts": ("partition_concepts.tsv",),
    "bipartite": ("partition_bipartite_articles.tsv", "partition_bipartite_concepts.tsv"),
}
F_RUNS = {
    "articles": "runs_articles.json",
    "concepts": "runs_concepts.json",
    "bipartite": "runs_bipartite.json",
}
F_REPORT = "bridge_report.json"
F_REPORT_TEXT = "bridge_summary.txt"
F_MANIFEST = "manifest.json"


# -- artifact helpers ----------------------------------------------------------


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_artifacts(out: Path) -> IngestResult:
    for name in (F_EDGES, F_ARTICLES, F_CONCEPTS):
        if not (out / name).exists():
            raise ValidationError(
                f"missing {name} in {out} (run the ingest stage first)"
            )
    # graph_edges.tsv is already the post-filter edge set, so reload verbatim
    # even when the original ingest kept generic concepts
    options = IngestOptions(exclude_generic=False, auto_register=False)
    return load_incidence(out / F_EDGES, out / F_ARTICLES, out / F_CONCEPTS, options)


def _write_ingest_artifacts(out: Path, result: IngestResult) -> list[str]:
    write_edge_file(out / F_EDGES, result)
    write_node_table(out / F_ARTICLES, result.articles)
    write_node_table(out / F_CONCEPTS, result.concepts)
    write_json(out / F_SUMMARY, result.summary.to_dict())
    write_json(out / F_STATS, compute_stats(result).to_dict())
    return [F_EDGES, F_ARTICLES, F_CONCEPTS, F_SUMMARY, F_STATS]


def _write_runs(out: Path, network: str, mr: MultiRunResult, config: OptimizerConfig):
    payload = {
        "network": network,
        "runs": config.runs,
        "base_seed": config.base_seed,
        "min_gain": config.min_gain,
        "max_levels": config.max_levels,
        "rng": "splitmix64",
        "best_seed": mr.best.seed,
        "best_score": mr.best.score,
        "best_community_count": mr.best.community_count,
        "run_summaries": [s.to_dict() for s in mr.summaries],
    }
    write_json(out / F_RUNS[network], payload)


def _write_partition_files(out: Path, network: str, result: IngestResult, p: Partition):
    files = F_PARTITION[network]
    if network == "bipartite":
        n_left = len(result.articles)
        write_partition(out / files[0], result.articles.ids, p.assignment[:n_left])
        write_partition(out / files[1], result.concepts.ids, p.assignment[n_left:])
    elif network == "articles":
        write_partition(out / files[0], result.articles.ids, p.assignment)
    else:
        write_partition(out / files[0], result.concepts.ids, p.assignment)


def _read_partition_files(out: Path, network: str, result: IngestResult) -> Partition:
    files = F_PARTITION[network]
    for name in files:
        if not (out / name).exists():
            raise ValidationError(
                f"missing {name} in {out} (run the cluster stage first)"
            )
    if network == "bipartite":
        a = read_partition(out / files[0], result.articles)
        c = read_partition(out / files[1], result.concepts)
        labels = np.concatenate([a, c])
        score = modularity_bipartite(result.graph, labels)
    else:
        table = result.articles if network == "articles" else result.concepts
        labels = read_partition(out / files[0], table)
        if not (out / F_NET[network]).exists():
            raise ValidationError(
                f"missing {F_NET[network]} in {out} (run the project stage first)"
            )
        graph = read_weighted_graph(out / F_NET[network], table)
        score = modularity_unipartite(graph, labels)
    return Partition.from_labels(labels, score=score)


# -- stage implementations -------------------------------------------------------


def stage_ingest(args, out: Path) -> IngestResult:
    options = IngestOptions(
        exclude_generic=not args.include_generic,
        auto_register=args.auto_register,
    )
    result = load_incidence(args.edges, args.articles, args.concepts, options)
    _write_ingest_artifacts(out, result)
    return result


def stage_project(args, out: Path, result: IngestResult) -> dict:
    networks = {}
    networks["concepts"] = project_concepts(result.graph)
    idf = compute_idf(result.graph)
    networks["articles"] = project_articles(result.graph, idf, threshold=args.threshold)
    ids = {"articles": result.articles.ids, "concepts": result.concepts.ids}
    for name, net in networks.items():
        write_weighted_graph(out / F_NET[name], net, ids[name])
    if getattr(args, "graphml", False):
        for name, net in networks.items():
            write_graphml_weighted(out / (F_NET[name][:-4] + ".graphml"), net, ids[name])
        write_graphml_bipartite(
            out / "graph.graphml", result.graph,
            result.articles.ids, result.concepts.ids,
        )
    return networks


def _cluster_one(args, out: Path, result: IngestResult, network: str,
                 runs: int, seed: int, networks: dict | None) -> Partition:
    config = OptimizerConfig(
        runs=runs,
        base_seed=seed + NETWORK_SEED_OFFSET[network],
        min_gain=args.min_gain,
        max_levels=args.max_levels,
        threads=args.threads,
    )
    if network == "bipartite":
        mr = multi_run_bipartite(result.graph, config)
    else:
        if networks is not None and network in networks:
            graph = networks[network]
        else:
            table = result.articles if network == "articles" else result.concepts
            if not (out / F_NET[network]).exists():
                raise ValidationError(
                    f"missing {F_NET[network]} in {out} (run the project stage first)"
                )
            graph = read_weighted_graph(out / F_NET[network], table)
        mr = multi_run_unipartite(graph, config)
    _write_partition_files(out, network, result, mr.best)
    _write_runs(out, network, mr, config)
    logger.info(
        "%s: best score %.6f (seed %d, %d communities)",
        network, mr.best.score, mr.best.seed, mr.best.community_count,
    )
    return mr.best


def stage_bridge(out: Path, result: IngestResult, partitions: dict) -> dict:
    report = build_bridge_report(
        articles=result.articles,
        concepts=result.concepts,
        article_partition=partitions["articles"],
        concept_partition=partitions["concepts"],
        bipartite_partition=partitions["bipartite"],
    )
    write_json(out / F_REPORT, report.to_dict())
    (out / F_REPORT_TEXT).write_text(report.render_text(), encoding="utf-8")
    return report.to_dict()


# -- commands ---------------------------------------------------------------------


def cmd_ingest(args) -> int:
    out = _out_dir(args)
    result = stage_ingest(args, out)
    payload = {
        "summary": result.summary.to_dict(),
        "stats": compute_stats(result).to_dict(),
    }
    if args.summary:
        write_json(args.summary, payload)
    else:
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    return 0


def cmd_project(args) -> int:
    out = _out_dir(args)
    result = _load_artifacts(out)
    networks = stage_project(args, out, result)
    for name, net in sorted(networks.items()):
        print(f"{name}: {net.node_count} nodes, {net.edge_count} edges")
    return 0


def cmd_cluster(args) -> int:
    out = _out_dir(args)
    result = _load_artifacts(out)
    runs = args.runs
    if runs is None:
        runs = DEFAULT_RUNS_BIPARTITE if args.network == "bipartite" else DEFAULT_RUNS_UNIPARTITE
    best = _cluster_one(args, out, result, args.network, runs, args.seed, None)
    print(
        f"{args.network}: {best.community_count} communities, "
        f"score {best.score:.6f}, best seed {best.seed}"
    )
    return 0


def cmd_bridge(args) -> int:
    out = _out_dir(args)
    result = _load_artifacts(out)
    partitions = {}
    for network in ("articles", "concepts", "bipartite"):
        partitions[network] = _read_partition_files(out, network, result)
    stage_bridge(out, result, partitions)
    print((out / F_REPORT_TEXT).read_text(), end="")
    return 0


def cmd_pipeline(args) -> int:
    out = _out_dir(args)
    stages = []
    digests: dict[str, str] = {}

    def record(name: str, t0: float, files: list[str]):
        stages.append({"name": name, "wall_time_s": time.perf_counter() - t0})
        for f in files:
            digests[f] = sha256_file(out / f)

    t0 = time.perf_counter()
    result = stage_ingest(args, out)
    record("ingest", t0, [F_EDGES, F_ARTICLES, F_CONCEPTS, F_SUMMARY, F_STATS])

    t0 = time.perf_counter()
    networks = stage_project(args, out, result)
    record("project", t0, list(F_NET.values()))

    partitions = {}
    run_counts = {
        "bipartite": args.runs_bipartite,
        "articles": args.runs_articles,
        "concepts": args.runs_concepts,
    }
    for network in ("bipartite", "articles", "concepts"):
        t0 = time.perf_counter()
        partitions[network] = _cluster_one(
            args, out, result, network, run_counts[network], args.seed, networks
        )
        record(f"cluster:{network}", t0, list(F_PARTITION[network]) + [F_RUNS[network]])

    t0 = time.perf_counter()
    stage_bridge(out, result, partitions)
    record("bridge", t0, [F_REPORT, F_REPORT_TEXT])

    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "tool": {"name": "bibridge", "version": __version__},
        "command": "pipeline",
        "config": {
            "seed": args.seed,
            "runs": run_counts,
            "min_gain": args.min_gain,
            "max_levels": args.max_levels,
            "threshold": args.threshold,
            "include_generic": args.include_generic,
            "auto_register": args.auto_register,
            "threads": args.threads,
            "cluster_min_sizes": {"unipartite": 2, "bipartite": 3},
            "rng": "splitmix64",
        },
        "inputs": {
            "edges": {"path": str(args.edges), "sha256": sha256_file(args.edges)},
            "articles": {"path": str(args.articles), "sha256": sha256_file(args.articles)},
            "concepts": {"path": str(args.concepts), "sha256": sha256_file(args.concepts)},
        },
        "outputs": digests,
        "stages": stages,
    }
    write_json(out / F_MANIFEST, manifest)
    print((out / F_REPORT_TEXT).read_text(), end="")
    return 0


def cmd_verify(args) -> int:
    out = Path(args.out)
    manifest_path = out / F_MANIFEST
    if not manifest_path.exists():
        raise ValidationError(f"no {F_MANIFEST} in {out}")
    with open(manifest_path, "r", encoding="utf-8") as handle:
        manifest = json.load(handle)
    failures = 0
    for name, expected in sorted(manifest.get("outputs", {}).items()):
        path = out / name
        if not path.exists():
            print(f"MISSING  {name}")
            failures += 1
            continue
        actual = sha256_file(path)
        if actual != expected:
            print(f"MISMATCH {name}")
            failures += 1
        else:
            print(f"ok       {name}")
    if failures:
        print(f"{failures} artifact(s) failed verification")
        return 3
    print("all artifacts match the manifest")
    return 0


# -- argument parsing ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bibridge",
        description=(
            "Build an article-concept bipartite graph, project it, cluster all "
            "three representations, and bridge the partitions."
        ),
    )
    parser.add_argument("--version", action="version", version=f"bibridge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", required=True, help="artifact directory")
    common.add_argument("-v", "--verbose", action="store_true", help="info logging")

    inputs = argparse.ArgumentParser(add_help=False)
    inputs.add_argument("--edges", required=True, help="edge list TSV")
    inputs.add_argument("--articles", required=True, help="article table TSV")
    inputs.add_argument("--concepts", required=True, help="concept table TSV")
    inputs.add_argument(
        "--include-generic", action="store_true",
        help="keep edges to generic concepts (default drops them)",
    )
    inputs.add_argument(
        "--auto-register", action="store_true",
        help="register ids seen only in the edge file instead of dropping them",
    )

    proj = argparse.ArgumentParser(add_help=False)
    proj.add_argument(
        "--threshold", type=float, default=0.0,
        help="drop article-network edges with cosine <= this (default 0)",
    )

    opt = argparse.ArgumentParser(add_help=False)
    opt.add_argument("--seed", type=int, default=0, help="base RNG seed (default 0)")
    opt.add_argument("--min-gain", type=float, default=DEFAULT_MIN_GAIN)
    opt.add_argument("--max-levels", type=int, default=0, help="0 = unlimited")
    opt.add_argument("--threads", type=int, default=1, help="parallel runs (default 1)")

    p = sub.add_parser("ingest", parents=[common, inputs], help="build the graph")
    p.add_argument("--summary", help="write the summary JSON here instead of stdout")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("project", parents=[common, proj], help="one-mode projections")
    p.add_argument("--graphml", action="store_true", help="also write GraphML files")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("cluster", parents=[common, opt], help="multi-run Louvain")
    p.add_argument(
        "--network", required=True, choices=("articles", "concepts", "bipartite")
    )
    p.add_argument(
        "--runs", type=int, default=None,
        help=f"default {DEFAULT_RUNS_UNIPARTITE} one-mode, "
             f"{DEFAULT_RUNS_BIPARTITE} bipartite",
    )
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("bridge", parents=[common], help="link the three partitions")
    p.set_defaults(func=cmd_bridge)

    p = sub.add_parser(
        "pipeline", parents=[common, inputs, proj, opt],
        help="ingest, project, cluster x3, bridge, manifest",
    )
    p.add_argument("--runs-bipartite", type=int, default=DEFAULT_RUNS_BIPARTITE)
    p.add_argument("--runs-articles", type=int, default=DEFAULT_RUNS_UNIPARTITE)
    p.add_argument("--runs-concepts", type=int, default=DEFAULT_RUNS_UNIPARTITE)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("verify", parents=[common], help="check artifacts vs manifest")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ParseError, ValidationError, GraphError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
