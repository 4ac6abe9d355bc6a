"""Experiment matrix: datasets x algorithms x kinds x tasks, with cached covers."""

from __future__ import annotations

import hashlib
import json
import logging
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from cdbench import anomaly as an
from cdbench.centrality import community_centers, propensity
from cdbench.communities import OVERLAPPING_ALGORITHMS, detect
from cdbench.communities.cover import read_cover, write_cover
from cdbench.communities.quality import density, modularity
from cdbench.datasets import labelled_anomalies, social_ratings
from cdbench.errors import ValidationError
from cdbench.graph import Graph, load_edge_list, load_node_labels
from cdbench.metrics import MetricRow, fold_mean, roc_auc
from cdbench.recsys import RatingsTable, TrainConfig, evaluate_ratings, fit_consvd, kfold_split, load_ratings, save_model
from cdbench.runner.config import config_hash
from cdbench.runner.report import CellRecord, ExperimentReport
from cdbench.trust import (
    TrustPair, best_threshold, evaluate_trust, node_similarity, sample_pairs, score_pairs, write_scored_pairs,
)

log = logging.getLogger(__name__)


def sub_seed(master: int, *parts) -> int:
    """Stable 32-bit seed for a named piece of work."""
    digest = hashlib.sha256(json.dumps([master, *map(str, parts)]).encode()).hexdigest()
    return int(digest[:8], 16)


@dataclass
class Dataset:
    name: str
    graph: Graph
    ratings: RatingsTable | None = None
    labels: np.ndarray | None = None

    def summary(self) -> dict:
        out = {"n": self.graph.n, "m": self.graph.m, "directed": self.graph.directed, "hash": self.graph.content_hash[:16]}
        if self.ratings is not None:
            out["ratings"] = len(self.ratings)
        if self.labels is not None:
            lab = self.labels[self.labels >= 0]
            out["label_counts"] = np.bincount(lab).tolist()
        return out


def load_dataset(entry: dict, master_seed: int) -> Dataset:
    gen = entry.get("generator")
    if gen is not None:
        params = dict(gen["params"])
        params.setdefault("seed", master_seed)
        if gen["kind"] == "social_ratings":
            data = social_ratings(**params)
            return Dataset(entry["name"], data.graph, ratings=data.ratings)
        data = labelled_anomalies(**params)
        return Dataset(entry["name"], data.graph, labels=data.labels)
    g = load_edge_list(entry["graph"], directed=entry["directed"], weighted=entry["weighted"])
    ratings = load_ratings(entry["ratings"]) if "ratings" in entry else None
    labels = load_node_labels(entry["labels"], g) if "labels" in entry else None
    return Dataset(entry["name"], g, ratings, labels)


@dataclass(frozen=True)
class Cell:
    dataset: str
    task: str
    algorithm: str
    kind: str

    @property
    def key(self) -> str:
        return "/".join((self.dataset, self.task, self.algorithm, self.kind))


def plan_cells(cfg: dict) -> list[Cell]:
    cells = []
    quality = cfg.get("quality")
    if quality:
        for ds in quality["datasets"]:
            for alg in quality["algorithms"]:
                cells.append(Cell(ds, "quality", alg, "cover"))
    for task in ("recommend", "trust", "anomaly"):
        t = cfg["tasks"].get(task)
        if t is None:
            continue
        kinds = t["kinds"] if task != "anomaly" else ["classifier"] + (["linear"] if t["linear_scorer"] else [])
        for ds in t["datasets"]:
            for alg in t["algorithms"]:
                for kind in kinds:
                    cells.append(Cell(ds, task, alg, kind))
    return cells


# ---------------------------------------------------------------- covers


def _cover_key(g: Graph, alg: str, params: dict, seed: int) -> str:
    blob = json.dumps([g.undirected.content_hash, alg, params, seed], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


def _detect_job(args):
    name, alg, params, seed = args
    g = _CTX["datasets"][name].graph.undirected
    t0 = time.perf_counter()
    try:
        cover = detect(g, alg, seed=seed, **params)
    except Exception as exc:  # recorded on every cell that needs this cover
        return name, alg, None, f"{type(exc).__name__}: {exc}", time.perf_counter() - t0
    cover.meta = {}
    return name, alg, cover, None, time.perf_counter() - t0


# ---------------------------------------------------------------- cells

_CTX: dict = {}


def _init_worker(ctx):
    _CTX.clear()
    _CTX.update(ctx)


def _row(cell: Cell, fold, metric, value, class_id="") -> MetricRow:
    return MetricRow(cell.dataset, cell.task, cell.algorithm, cell.kind, str(fold), metric,
                     None if value is None else float(value), class_id)


def _artifact_dir(cell: Cell, sub: str) -> Path | None:
    if not _CTX["artifacts"]:
        return None
    d = Path(_CTX["out_dir"]) / sub / cell.dataset
    d.mkdir(parents=True, exist_ok=True)
    return d


def _run_quality(cell, ds, cover, seed):
    g = ds.graph.undirected
    rows = []
    metrics = _CTX["cfg"]["quality"]["metrics"]
    if "modularity" in metrics:
        rows.append(_row(cell, "all", "modularity", modularity(g, cover).value))
    if "density" in metrics:
        rows.append(_row(cell, "all", "mean_density", np.mean([density(g, c).value for c in cover.communities])))
    return rows


def _run_recommend(cell, ds, cover, seed):
    t = _CTX["cfg"]["tasks"]["recommend"]
    folds = _CTX["shared"][(cell.dataset, "recommend")]
    alpha = propensity(ds.graph, cover, cell.kind, seed)
    rows, rmses, maes = [], [], []
    out = _artifact_dir(cell, "models")
    for f, (train, test, fold_seed) in enumerate(folds):
        model = fit_consvd(train, cover, alpha, TrainConfig(**{**t["train"], "seed": fold_seed}), graph=ds.graph)
        rmse, mae = evaluate_ratings(model, test)
        rmses.append(rmse)
        maes.append(mae)
        rows += [_row(cell, f, "rmse", rmse), _row(cell, f, "mae", mae)]
        if out is not None:
            save_model(model, out / f"{cell.algorithm}-{cell.kind}-fold{f}.npz")
    rows += [_row(cell, "mean", "rmse", fold_mean(rmses)), _row(cell, "mean", "mae", fold_mean(maes))]
    return rows


def _run_trust(cell, ds, cover, seed):
    t = _CTX["cfg"]["tasks"]["trust"]
    base_pairs = _CTX["shared"][(cell.dataset, "trust")]
    sim = _CTX.setdefault("sims", {}).get(cell.dataset)
    if sim is None:
        sim = _CTX["sims"][cell.dataset] = node_similarity(ds.graph, ds.ratings)
    centers = community_centers(ds.graph, cover, cell.kind, seed)
    pairs = score_pairs([TrustPair(p.i, p.j, p.label) for p in base_pairs], cover, centers, sim)
    threshold = t["thresholds"][cell.algorithm]
    res = evaluate_trust(pairs, threshold)
    rows = [_row(cell, "all", m, res[m]) for m in ("precision", "recall", "f1", "auc")]
    rows.append(_row(cell, "all", "threshold", threshold))
    if t["sweep"]:
        th, f1 = best_threshold(pairs)
        rows += [_row(cell, "all", "best_threshold", th), _row(cell, "all", "best_f1", f1)]
    out = _artifact_dir(cell, "pairs")
    if out is not None:
        write_scored_pairs(pairs, threshold, out / f"{cell.algorithm}-{cell.kind}.csv", ds.graph)
    return rows


def _run_anomaly(cell, ds, cover, seed):
    t = _CTX["cfg"]["tasks"]["anomaly"]
    nodes, folds = _CTX["shared"][(cell.dataset, "anomaly")]
    X_all = an.feature_matrix(ds.graph, an.anomaly_cover(ds.graph, cover))
    X = X_all[nodes]
    y = ds.labels[nodes]
    rows = []
    out = _artifact_dir(cell, "anomaly")
    if cell.kind == "linear":
        aucs = []
        for f, (tr, te) in enumerate(folds):
            scorer = an.ScorerConfig.from_training(X[tr], t["weights"])
            s = an.linear_score(X[te], scorer)
            yt = y[te] != 0
            auc = roc_auc(yt, s) if 0 < yt.sum() < len(yt) else None
            aucs.append(auc)
            rows.append(_row(cell, f, "auc", auc))
        rows.append(_row(cell, "mean", "auc", fold_mean(aucs)))
        return rows
    results = []
    for f, (tr, te) in enumerate(folds):
        clf = an.fit_anomaly_classifier(X[tr], y[tr], t["rounds"], seed, t["learning_rate"])
        r = an.evaluate_anomaly(clf, X[te], y[te])
        results.append(r)
        rows += [_row(cell, f, "accuracy", r["accuracy"]), _row(cell, f, "auc", r["auc"])]
        for c, pc in r["per_class"].items():
            rows += [_row(cell, f, m, pc[m], str(c)) for m in ("precision", "recall", "f1", "support")]
        if out is not None:
            (out / f"{cell.algorithm}-fold{f}.json").write_text(clf.to_json(), encoding="utf-8")
    rows += [
        _row(cell, "mean", "accuracy", fold_mean(r["accuracy"] for r in results)),
        _row(cell, "mean", "auc", fold_mean(r["auc"] for r in results)),
    ]
    for c in sorted(results[0]["per_class"]):
        for m in ("precision", "recall", "f1", "support"):
            rows.append(_row(cell, "mean", m, fold_mean(r["per_class"][c][m] for r in results), str(c)))
    if out is not None:
        an.write_feature_csv(ds.graph, X_all, np.where(ds.labels >= 0, ds.labels, -1), out / f"{cell.algorithm}-features.csv")
    return rows


_RUNNERS = {"quality": _run_quality, "recommend": _run_recommend, "trust": _run_trust, "anomaly": _run_anomaly}


def _cell_job(cell: Cell):
    seed = sub_seed(_CTX["cfg"]["seed"], cell.key)
    t0 = time.perf_counter()
    cover_err = _CTX["cover_errors"].get((cell.dataset, cell.algorithm))
    if cover_err:
        return cell, [], CellRecord(cell.key, "failed", seed, f"detection failed: {cover_err}"), time.perf_counter() - t0
    try:
        ds = _CTX["datasets"][cell.dataset]
        cover = _CTX["covers"][(cell.dataset, cell.algorithm)]
        rows = _RUNNERS[cell.task](cell, ds, cover, seed)
        rec = CellRecord(cell.key, "ok", seed, None)
    except Exception as exc:
        log.debug("cell %s failed\n%s", cell.key, traceback.format_exc())
        rows = []
        rec = CellRecord(cell.key, "failed", seed, f"{type(exc).__name__}: {exc}")
    return cell, rows, rec, time.perf_counter() - t0


# ---------------------------------------------------------------- driver


def _shared_inputs(cfg: dict, datasets: dict[str, Dataset]) -> dict:
    """Splits and samples shared by every cell of a (dataset, task), so cells compare on equal footing."""
    master = cfg["seed"]
    shared = {}
    for task, t in cfg["tasks"].items():
        for name in t["datasets"]:
            ds = datasets[name]
            if task == "recommend":
                splits = kfold_split(ds.ratings, t["folds"], sub_seed(master, name, task, "folds"))
                shared[(name, task)] = [
                    (tr, te, sub_seed(master, name, task, "fold", f)) for f, (tr, te) in enumerate(splits)
                ]
            elif task == "trust":
                shared[(name, task)] = sample_pairs(ds.graph, t["n_pos"], t["n_neg"], sub_seed(master, name, task, "pairs"))
            else:
                nodes = np.flatnonzero(ds.labels >= 0)
                y = ds.labels[nodes]
                if len(np.unique(y)) < 2:
                    raise ValidationError(f"dataset {name!r}: anomaly task needs at least two label classes")
                shared[(name, task)] = (nodes, an.stratified_folds(y, t["folds"], sub_seed(master, name, task, "folds")))
    return shared


def run_matrix(cfg: dict, out_dir=None, artifacts: bool = False) -> tuple[ExperimentReport, dict]:
    """Run every configured cell; returns the report and a timing/diagnostics record.

    Dataset problems raise before any cell runs. A failing cell is recorded
    with its error and the remaining cells still run.
    """
    out = Path(out_dir or cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    master = cfg["seed"]
    t_start = time.perf_counter()

    needed = sorted({ds for t in cfg["tasks"].values() for ds in t["datasets"]}
                    | set((cfg.get("quality") or {}).get("datasets", [])))
    entries = {d["name"]: d for d in cfg["datasets"]}
    datasets = {name: load_dataset(entries[name], master) for name in needed}
    cells = plan_cells(cfg)
    shared = _shared_inputs(cfg, datasets)

    ctx = {"cfg": cfg, "datasets": datasets, "shared": shared, "out_dir": str(out), "artifacts": artifacts,
           "covers": {}, "cover_errors": {}}
    _init_worker(ctx)

    pairs = sorted({(c.dataset, c.algorithm) for c in cells})
    cache_dir = out / "cache" / "covers"
    use_cache = cfg["cache"]["enabled"]
    if use_cache:
        cache_dir.mkdir(parents=True, exist_ok=True)
    timings: dict = {"detect": {}, "cells": {}, "cache": {"hits": [], "spot_check": None}}
    jobs = []
    for name, alg in pairs:
        params = dict(cfg["algorithm_params"].get(alg, {}))
        seed = sub_seed(master, name, alg)
        g = datasets[name].graph
        path = cache_dir / f"{_cover_key(g, alg, params, seed)}.txt"
        if use_cache and path.is_file():
            ctx["covers"][(name, alg)] = read_cover(path, g)
            timings["cache"]["hits"].append(f"{name}/{alg}")
        else:
            jobs.append((name, alg, params, seed))
    if use_cache and cfg["cache"]["spot_check"] and timings["cache"]["hits"]:
        name, alg = timings["cache"]["hits"][0].split("/", 1)
        params = dict(cfg["algorithm_params"].get(alg, {}))
        fresh = _detect_job((name, alg, params, sub_seed(master, name, alg)))[2]
        ok = fresh is not None and fresh == ctx["covers"][(name, alg)]
        timings["cache"]["spot_check"] = {"cover": f"{name}/{alg}", "match": ok}
        if not ok:
            log.warning("cached cover %s/%s differs from a fresh run; recomputing all covers", name, alg)
            for hit in timings["cache"]["hits"]:
                n_, a_ = hit.split("/", 1)
                jobs.append((n_, a_, dict(cfg["algorithm_params"].get(a_, {})), sub_seed(master, n_, a_)))
            jobs.sort()

    pool = ProcessPoolExecutor(cfg["jobs"], initializer=_init_worker, initargs=(ctx,)) if cfg["jobs"] > 1 else None
    try:
        results = list(pool.map(_detect_job, jobs)) if pool else [_detect_job(j) for j in jobs]
        for name, alg, cover, err, secs in results:
            timings["detect"][f"{name}/{alg}"] = secs
            if err:
                ctx["cover_errors"][(name, alg)] = err
                continue
            ctx["covers"][(name, alg)] = cover
            if use_cache:
                g = datasets[name].graph
                params = dict(cfg["algorithm_params"].get(alg, {}))
                write_cover(cover, cache_dir / f"{_cover_key(g, alg, params, sub_seed(master, name, alg))}.txt", g)
        if pool:
            pool.shutdown()
            pool = ProcessPoolExecutor(cfg["jobs"], initializer=_init_worker, initargs=(ctx,))
            outcomes = list(pool.map(_cell_job, cells))
        else:
            outcomes = [_cell_job(c) for c in cells]
    finally:
        if pool:
            pool.shutdown()

    report = ExperimentReport()
    for cell, rows, rec, secs in outcomes:
        report.rows.extend(rows)
        report.cells.append(rec)
        timings["cells"][cell.key] = secs
    cover_stats = {}
    for (name, alg), cover in sorted(ctx["covers"].items()):
        st = cover.stats()
        st["overlapping_algorithm"] = alg in OVERLAPPING_ALGORITHMS
        st["seed"] = sub_seed(master, name, alg)
        st["digest"] = cover.digest()[:16]
        cover_stats[f"{name}/{alg}"] = st
    report.meta = {
        "config_hash": config_hash(cfg),
        "seed": master,
        "datasets": {name: ds.summary() for name, ds in datasets.items()},
        "covers": cover_stats,
        "failed_cells": sum(1 for c in report.cells if c.status != "ok"),
    }
    timings["total"] = time.perf_counter() - t_start
    return report, timings
