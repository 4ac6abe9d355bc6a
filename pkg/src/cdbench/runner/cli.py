"""Command-line entry point: ``cdbench <subcommand> ...``.

Exit codes: 0 success, 1 invalid input or config, 2 some matrix cells failed
(the report is still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from cdbench.centrality import CentralityKind, centrality_scores, community_centers, propensity
from cdbench.communities import ALGORITHMS, detect
from cdbench.communities.cover import read_cover, write_cover
from cdbench.datasets import labelled_anomalies, social_ratings, write_labelled, write_social_ratings
from cdbench.errors import ParseError, ValidationError
from cdbench.graph import load_edge_list
from cdbench.runner.config import load_config, validate_config
from cdbench.runner.matrix import run_matrix
from cdbench.runner.report import FORMATS, emit_report, from_json, to_json

log = logging.getLogger("cdbench")

EXIT_OK, EXIT_INVALID, EXIT_PARTIAL = 0, 1, 2


def _common(p: argparse.ArgumentParser, config: bool = False) -> None:
    if config:
        p.add_argument("--config", help="YAML or JSON experiment config")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--jobs", type=int, help="worker processes (overrides the config)")
    p.add_argument("--out-dir", help="output directory (overrides the config)")
    p.add_argument("--format", choices=FORMATS + ("md",), default="csv", help="report format printed to stdout")


def _graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("graph", help="edge list file")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--weighted", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cdbench", description="Community detection benchmark for downstream graph tasks.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect communities and write a cover file")
    _graph_args(p)
    p.add_argument("--algorithm", choices=ALGORITHMS, default="louvain")
    p.add_argument("--k", type=int, help="community count for spectral and bigclam")
    _common(p)

    p = sub.add_parser("centrality", help="node centralities, propensities or community centres")
    _graph_args(p)
    p.add_argument("--kind", choices=[k.value for k in CentralityKind], default="degree")
    p.add_argument("--cover", help="cover file; prints propensities (or centres with --centers)")
    p.add_argument("--centers", action="store_true")
    _common(p)

    for task in ("recommend", "trust", "anomaly"):
        p = sub.add_parser(task, help=f"run the {task} task over a config or a single dataset")
        _common(p, config=True)
        p.add_argument("--graph", help="edge list (instead of --config)")
        p.add_argument("--directed", action="store_true")
        p.add_argument("--weighted", action="store_true")
        if task == "anomaly":
            p.add_argument("--labels", help="node label file")
        else:
            p.add_argument("--ratings", help="ratings file")
        p.add_argument("--algorithms", nargs="+", choices=ALGORITHMS)
        if task != "anomaly":
            p.add_argument("--kinds", nargs="+", choices=[k.value for k in CentralityKind])
        p.add_argument("--folds", type=int)

    p = sub.add_parser("bench", help="run the full experiment matrix from a config")
    _common(p, config=True)
    p.add_argument("--artifacts", action="store_true", help="also write models, scored pairs and feature files")

    p = sub.add_parser("report", help="re-render a saved report.json")
    p.add_argument("report", help="report.json written by bench or a task command")
    p.add_argument("--format", choices=FORMATS + ("md",), default="markdown")
    p.add_argument("--out-dir")

    p = sub.add_parser("synth", help="write a synthetic dataset in the loader formats")
    p.add_argument("kind", choices=("social", "anomaly"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    return ap


def _write_or_print(text: str, out_dir, name: str) -> None:
    if out_dir:
        path = Path(out_dir) / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        log.info("wrote %s", path)
    else:
        sys.stdout.write(text)


def cmd_detect(a) -> int:
    g = load_edge_list(a.graph, directed=a.directed, weighted=a.weighted)
    params = {"k": a.k} if a.k else {}
    cover = detect(g.undirected, a.algorithm, seed=a.seed or 0, **params)
    if a.out_dir:
        Path(a.out_dir).mkdir(parents=True, exist_ok=True)
        write_cover(cover, Path(a.out_dir) / f"{a.algorithm}.cover.txt", g)
    else:
        write_cover(cover, sys.stdout, g)
    print(json.dumps({k: (v.item() if isinstance(v, np.generic) else v) for k, v in cover.stats().items()}),
          file=sys.stderr)
    return EXIT_OK


def cmd_centrality(a) -> int:
    g = load_edge_list(a.graph, directed=a.directed, weighted=a.weighted)
    seed = a.seed or 0
    if a.cover:
        cover = read_cover(a.cover, g)
        if a.centers:
            centers = community_centers(g, cover, a.kind, seed)
            lines = ["community,center"] + [f"{c},{g.node_ids[v]}" for c, v in enumerate(centers.tolist())]
        else:
            alpha = propensity(g, cover, a.kind, seed)
            lines = ["node,community,alpha"] + [f"{g.node_ids[u]},{c},{v!r}" for (u, c), v in sorted(alpha.items())]
    else:
        scores = centrality_scores(g, a.kind, seed)
        lines = ["node,score"] + [f"{g.node_ids[v]},{s!r}" for v, s in enumerate(scores.tolist())]
    _write_or_print("\n".join(lines) + "\n", a.out_dir, f"{a.kind}.csv")
    return EXIT_OK


def _task_config(a, task: str) -> dict:
    if a.config:
        raw = load_config(a.config)
        tasks = raw.get("tasks") or {}
        raw["tasks"] = {task: tasks.get(task) or {}}
        raw.pop("quality", None)
    else:
        if not a.graph:
            raise ValidationError("give --config or --graph")
        ds = {"name": Path(a.graph).stem, "graph": a.graph, "directed": a.directed, "weighted": a.weighted}
        extra = "labels" if task == "anomaly" else "ratings"
        if getattr(a, extra):
            ds[extra] = getattr(a, extra)
        raw = {"datasets": [ds], "tasks": {task: {}}, "base_dir": "."}
    t = raw["tasks"][task]
    if a.algorithms:
        t["algorithms"] = a.algorithms
    if getattr(a, "kinds", None):
        t["kinds"] = a.kinds
    if a.folds:
        t["folds"] = a.folds
    return raw


def _run(raw: dict, a, artifacts: bool) -> int:
    if a.seed is not None:
        raw["seed"] = a.seed
    if a.jobs is not None:
        raw["jobs"] = a.jobs
    if a.out_dir:
        raw["out_dir"] = a.out_dir
    cfg = validate_config(raw)
    out = Path(cfg["out_dir"])
    report, timings = run_matrix(cfg, out, artifacts=artifacts)
    fmt = "markdown" if a.format == "md" else a.format
    (out / "report.json").write_text(to_json(report), encoding="utf-8")
    (out / "report.csv").write_text(emit_report(report, "csv"), encoding="utf-8")
    (out / "report.md").write_text(emit_report(report, "markdown"), encoding="utf-8")
    (out / "timings.json").write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "config.resolved.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    sys.stdout.write(emit_report(report, fmt))
    if report.failed:
        for c in report.failed:
            log.error("cell %s failed: %s", c.key, c.error)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_task(a) -> int:
    return _run(_task_config(a, a.command), a, artifacts=True)


def cmd_bench(a) -> int:
    if not a.config:
        raise ValidationError("bench needs --config")
    return _run(load_config(a.config), a, artifacts=a.artifacts)


def cmd_report(a) -> int:
    report = from_json(Path(a.report).read_text(encoding="utf-8"))
    fmt = "markdown" if a.format == "md" else a.format
    ext = {"csv": "csv", "json": "json", "markdown": "md"}[fmt]
    _write_or_print(emit_report(report, fmt), a.out_dir, f"report.{ext}")
    return EXIT_OK


def cmd_synth(a) -> int:
    if a.kind == "social":
        paths = write_social_ratings(social_ratings(seed=a.seed), a.out_dir)
    else:
        paths = write_labelled(labelled_anomalies(seed=a.seed), a.out_dir)
    for k, p in paths.items():
        print(f"{k}: {p}")
    return EXIT_OK


COMMANDS = {
    "detect": cmd_detect,
    "centrality": cmd_centrality,
    "recommend": cmd_task,
    "trust": cmd_task,
    "anomaly": cmd_task,
    "bench": cmd_bench,
    "report": cmd_report,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if a.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[a.command](a)
    except (ValidationError, ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
