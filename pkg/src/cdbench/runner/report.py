"""Experiment report container and its csv / json / markdown renderings."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from cdbench.communities import OVERLAPPING_ALGORITHMS
from cdbench.metrics import MetricRow

CSV_COLUMNS = ("dataset", "task", "algorithm", "kind", "fold", "class_id", "metric", "value")
FORMATS = ("csv", "json", "markdown")

DISPLAY = {
    "louvain": "Louvain",
    "spectral": "Spectral",
    "label_propagation": "Label Propagation",
    "ego_splitting": "Ego-Splitting",
    "bigclam": "BIGCLAM",
    "single_community": "Single Community",
}
CENTER_DISPLAY = {
    "betweenness": "Betweenness",
    "degree": "MaxDegree",
    "indegree": "MaxTrustor",
    "outdegree": "MaxTrustee",
    "random": "Random",
    "eigenvector": "Eigenvector",
    "closeness": "Closeness",
}


@dataclass
class CellRecord:
    key: str
    status: str  # "ok" or "failed"
    seed: int
    error: str | None = None


@dataclass
class ExperimentReport:
    rows: list[MetricRow] = field(default_factory=list)
    cells: list[CellRecord] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def failed(self) -> list[CellRecord]:
        return [c for c in self.cells if c.status != "ok"]

    def value(self, dataset, task, algorithm, kind, metric, fold="mean", class_id=""):
        for r in self.rows:
            if r.key() == (dataset, task, algorithm, kind, fold, class_id, metric):
                return r.value
        raise KeyError((dataset, task, algorithm, kind, fold, class_id, metric))

    def to_dict(self) -> dict:
        return {"meta": self.meta, "cells": [asdict(c) for c in self.cells], "rows": [r.to_dict() for r in self.rows]}

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentReport:
        return cls(
            rows=[MetricRow(**r) for r in d.get("rows", [])],
            cells=[CellRecord(**c) for c in d.get("cells", [])],
            meta=d.get("meta", {}),
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, ExperimentReport) and self.to_dict() == other.to_dict()


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serialisable: {type(x).__name__}")


def _fmt(v: float | None) -> str:
    return "" if v is None else repr(float(v))


def to_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow([r.dataset, r.task, r.algorithm, r.kind, r.fold, r.class_id, r.metric, _fmt(r.value)])
    return buf.getvalue()


def to_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True, default=_jsonable) + "\n"


def from_json(text: str) -> ExperimentReport:
    return ExperimentReport.from_dict(json.loads(text))


def _num(v, digits=4) -> str:
    return "n/a" if v is None else f"{v:.{digits}f}"


def _blocks(algorithms):
    non = [a for a in algorithms if a not in OVERLAPPING_ALGORITHMS and a != "single_community"]
    over = [a for a in algorithms if a in OVERLAPPING_ALGORITHMS]
    base = [a for a in algorithms if a == "single_community"]
    return [("Non-Overlapping", non), ("Overlapping", over), ("Baseline", base)]


def _center_name(kind: str) -> str:
    return CENTER_DISPLAY.get(kind, kind)


def _index(report: ExperimentReport) -> dict:
    return {r.key(): r.value for r in report.rows}


def _ordered(seq):
    seen = []
    for x in seq:
        if x not in seen:
            seen.append(x)
    return seen


def to_markdown(report: ExperimentReport) -> str:
    """Tables grouped by dataset and task; algorithms split into non-overlapping and overlapping blocks."""
    idx = _index(report)
    out: list[str] = []
    groups = _ordered((r.dataset, r.task) for r in report.rows)
    for dataset, task in groups:
        rows = [r for r in report.rows if r.dataset == dataset and r.task == task]
        algs = _ordered(r.algorithm for r in rows)
        kinds = _ordered(r.kind for r in rows)
        out.append(f"## {dataset}: {task}\n")
        if task == "recommend":
            cols = ["C.D. algorithm", "Centrality", "RMSE", "MAE"]
            metrics = [("rmse", "mean", ""), ("mae", "mean", "")]
            label = str.capitalize
        elif task == "trust":
            cols = ["C.D. algorithm", "Center", "Precision", "Recall", "F1", "AUC"]
            metrics = [(m, "all", "") for m in ("precision", "recall", "f1", "auc")]
            label = _center_name
        elif task == "anomaly":
            classes = _ordered(r.class_id for r in rows if r.class_id)
            cols = ["C.D. algorithm", "Model", "Accuracy", "AUC"] + [f"F1 class {c}" for c in classes]
            metrics = [("accuracy", "mean", ""), ("auc", "mean", "")] + [("f1", "mean", c) for c in classes]
            label = str
        else:
            cols = ["C.D. algorithm", "Modularity", "Mean density"]
            out.append("| " + " | ".join(cols) + " |")
            out.append("|" + "---|" * len(cols))
            for a in algs:
                mod = idx.get((dataset, task, a, "cover", "all", "", "modularity"))
                den = idx.get((dataset, task, a, "cover", "all", "", "mean_density"))
                out.append(f"| {DISPLAY.get(a, a)} | {_num(mod)} | {_num(den)} |")
            out.append("")
            continue
        out.append("| " + " | ".join(cols) + " |")
        out.append("|" + "---|" * len(cols))
        for block, members in _blocks(algs):
            if not members:
                continue
            out.append(f"| **{block}** |" + " |" * (len(cols) - 1))
            for a in members:
                first = True
                for k in kinds:
                    vals = [idx.get((dataset, task, a, k, fold, c, m), "missing") for m, fold, c in metrics]
                    if all(v == "missing" for v in vals):
                        continue
                    cells = ["-" if v == "missing" else _num(v) for v in vals]
                    name = DISPLAY.get(a, a) if first else ""
                    first = False
                    out.append("| " + " | ".join([name, label(k), *cells]) + " |")
        out.append("")
    failed = report.failed
    if failed:
        out.append("## Failed cells\n")
        for c in failed:
            out.append(f"- `{c.key}`: {c.error}")
        out.append("")
    return "\n".join(out) if out else "_empty report_\n"


def emit_report(report: ExperimentReport, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(report)
    if fmt == "json":
        return to_json(report)
    if fmt in ("markdown", "md"):
        return to_markdown(report)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
