"""Experiment configuration: parsing, total validation, defaults."""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path
from typing import Any

import yaml

from cdbench.centrality import CentralityKind, PROPENSITY_KINDS
from cdbench.communities import ALGORITHMS, OVERLAPPING_ALGORITHMS
from cdbench.errors import ValidationError
from cdbench.recsys import TrainConfig
from cdbench.trust import DEFAULT_THRESHOLDS

TASKS = ("recommend", "trust", "anomaly")
DETECTORS = tuple(a for a in ALGORITHMS if a != "single_community")
CENTER_KINDS = ("betweenness", "degree", "indegree", "outdegree", "random")
GENERATORS = ("social_ratings", "labelled_anomalies")
QUALITY_METRICS = ("modularity", "density")

TASK_DEFAULTS: dict[str, dict[str, Any]] = {
    "recommend": {
        "algorithms": list(DETECTORS),
        "kinds": [k.value for k in PROPENSITY_KINDS],
        "folds": 5,
        "train": {},
    },
    "trust": {
        "algorithms": list(DETECTORS),
        "kinds": list(CENTER_KINDS),
        "n_pos": 6700,
        "n_neg": 3300,
        "thresholds": {},
        "sweep": True,
    },
    "anomaly": {
        "algorithms": list(ALGORITHMS),
        "folds": 5,
        "rounds": 200,
        "learning_rate": 0.1,
        "linear_scorer": True,
        "weights": None,
    },
}


class ConfigErrors(ValidationError):
    """All problems found in one config, each prefixed by its field path."""

    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("invalid config:\n" + "\n".join(f"  {e}" for e in errors))


def load_config(path) -> dict:
    """Read a YAML or JSON config file; relative dataset paths resolve against its directory."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigErrors([f"config: cannot read {p}: {exc.strerror}"]) from None
    try:
        doc = json.loads(text) if p.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigErrors([f"config: not parseable: {exc}"]) from None
    if not isinstance(doc, dict):
        raise ConfigErrors(["config: top level must be a mapping"])
    doc.setdefault("base_dir", str(p.resolve().parent))
    return doc


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _check_list(errors, path, value, allowed) -> list:
    if not isinstance(value, list) or not value:
        errors.append(f"{path}: expected a non-empty list")
        return []
    for i, v in enumerate(value):
        if v not in allowed:
            errors.append(f"{path}[{i}]: {v!r} is not one of {list(allowed)}")
    if len(set(map(str, value))) != len(value):
        errors.append(f"{path}: duplicate entries")
    return [v for v in value if v in allowed]


def validate_config(raw: dict) -> dict:
    """Check every field and cross-field constraint; return a filled-in copy.

    Every violation is collected before raising, so one run reports them all.
    """
    cfg = copy.deepcopy(raw)
    errors: list[str] = []
    base = Path(cfg.pop("base_dir", "."))

    known = {"seed", "jobs", "out_dir", "datasets", "tasks", "algorithm_params", "quality", "cache"}
    for key in sorted(set(cfg) - known):
        errors.append(f"{key}: unknown field")

    cfg.setdefault("seed", 0)
    if not _is_int(cfg["seed"]) or cfg["seed"] < 0:
        errors.append("seed: expected a non-negative integer")
    cfg.setdefault("jobs", 1)
    if not _is_int(cfg["jobs"]) or cfg["jobs"] < 1:
        errors.append("jobs: expected an integer >= 1")
    cfg.setdefault("out_dir", "out")
    if not isinstance(cfg["out_dir"], str):
        errors.append("out_dir: expected a string")
    cache = cfg.setdefault("cache", {})
    if not isinstance(cache, dict):
        errors.append("cache: expected a mapping")
        cache = cfg["cache"] = {}
    cache.setdefault("enabled", True)
    cache.setdefault("spot_check", True)

    # datasets
    datasets = cfg.get("datasets")
    names: dict[str, dict] = {}
    if not isinstance(datasets, list) or not datasets:
        errors.append("datasets: expected a non-empty list")
        datasets = []
    for i, ds in enumerate(datasets):
        path = f"datasets[{i}]"
        if not isinstance(ds, dict):
            errors.append(f"{path}: expected a mapping")
            continue
        name = ds.get("name")
        if not isinstance(name, str) or not name:
            errors.append(f"{path}.name: required string")
        elif name in names:
            errors.append(f"{path}.name: duplicate dataset name {name!r}")
        else:
            names[name] = ds
        ds.setdefault("weighted", False)
        gen = ds.get("generator")
        if gen is not None:
            if not isinstance(gen, dict) or gen.get("kind") not in GENERATORS:
                errors.append(f"{path}.generator.kind: expected one of {list(GENERATORS)}")
            else:
                gen.setdefault("params", {})
                if not isinstance(gen["params"], dict):
                    errors.append(f"{path}.generator.params: expected a mapping")
                ds.setdefault("directed", gen["kind"] == "social_ratings")
                ds["has_ratings"] = gen["kind"] == "social_ratings"
                ds["has_labels"] = gen["kind"] == "labelled_anomalies"
            for key in ("graph", "ratings", "labels"):
                if key in ds:
                    errors.append(f"{path}.{key}: not allowed together with generator")
            continue
        ds.setdefault("directed", False)
        if "graph" not in ds:
            errors.append(f"{path}.graph: missing dataset path")
        for key in ("graph", "ratings", "labels"):
            if key not in ds:
                continue
            if not isinstance(ds[key], str):
                errors.append(f"{path}.{key}: expected a path string")
                continue
            full = (base / ds[key]).resolve()
            if not full.is_file():
                errors.append(f"{path}.{key}: file not found: {ds[key]}")
            ds[key] = str(full)
        ds["has_ratings"] = "ratings" in ds
        ds["has_labels"] = "labels" in ds
        for key in ("directed", "weighted"):
            if not isinstance(ds[key], bool):
                errors.append(f"{path}.{key}: expected true or false")

    # algorithm parameters
    params = cfg.setdefault("algorithm_params", {})
    if not isinstance(params, dict):
        errors.append("algorithm_params: expected a mapping")
        params = cfg["algorithm_params"] = {}
    for alg, p in params.items():
        if alg not in ALGORITHMS:
            errors.append(f"algorithm_params.{alg}: unknown algorithm")
        elif not isinstance(p, dict):
            errors.append(f"algorithm_params.{alg}: expected a mapping")
        else:
            for key in ("k", "iters", "max_iters"):
                if key in p and (not _is_int(p[key]) or p[key] < 1):
                    errors.append(f"algorithm_params.{alg}.{key}: expected a positive integer")

    # tasks
    tasks = cfg.get("tasks")
    if not isinstance(tasks, dict) or not tasks:
        errors.append("tasks: expected a mapping with at least one of " + ", ".join(TASKS))
        tasks = {}
    for task in sorted(set(tasks) - set(TASKS)):
        errors.append(f"tasks.{task}: unknown task")
    for task in TASKS:
        if task not in tasks:
            continue
        t = tasks[task] if tasks[task] is not None else {}
        if not isinstance(t, dict):
            errors.append(f"tasks.{task}: expected a mapping")
            continue
        tasks[task] = t
        for key, val in TASK_DEFAULTS[task].items():
            t.setdefault(key, copy.deepcopy(val))
        unknown = set(t) - set(TASK_DEFAULTS[task]) - {"datasets"}
        for key in sorted(unknown):
            errors.append(f"tasks.{task}.{key}: unknown field")
        need = {"recommend": "has_ratings", "trust": "has_ratings", "anomaly": "has_labels"}[task]
        if "datasets" not in t:
            t["datasets"] = [n for n, ds in names.items() if ds.get(need)]
            if not t["datasets"]:
                errors.append(f"tasks.{task}.datasets: no dataset provides what this task needs")
        else:
            for n in _check_list(errors, f"tasks.{task}.datasets", t["datasets"], names):
                if not names[n].get(need):
                    what = "ratings" if need == "has_ratings" else "labels"
                    errors.append(f"tasks.{task}.datasets: {n!r} has no {what}")
        allowed = DETECTORS if task != "anomaly" else ALGORITHMS
        algs = _check_list(errors, f"tasks.{task}.algorithms", t["algorithms"], allowed)
        if task == "recommend":
            _check_list(errors, "tasks.recommend.kinds", t["kinds"], [k.value for k in PROPENSITY_KINDS])
            if not _is_int(t["folds"]) or t["folds"] < 2:
                errors.append("tasks.recommend.folds: expected an integer >= 2")
            if not isinstance(t["train"], dict):
                errors.append("tasks.recommend.train: expected a mapping")
            else:
                try:
                    TrainConfig(**t["train"])
                except (TypeError, ValueError) as exc:
                    errors.append(f"tasks.recommend.train: {exc}")
        elif task == "trust":
            kinds = _check_list(errors, "tasks.trust.kinds", t["kinds"], [k.value for k in CentralityKind])
            directed_needed = [k for k in kinds if k in ("indegree", "outdegree")]
            for n in t["datasets"] if isinstance(t["datasets"], list) else []:
                if directed_needed and n in names and not names[n].get("directed"):
                    errors.append(f"tasks.trust.kinds: {directed_needed} need a directed graph but {n!r} is undirected")
                if n in names and not names[n].get("directed"):
                    errors.append(f"tasks.trust.datasets: {n!r} must be a directed trust graph")
            for key in ("n_pos", "n_neg"):
                if not _is_int(t[key]) or t[key] < 0:
                    errors.append(f"tasks.trust.{key}: expected a non-negative integer")
            if _is_int(t["n_pos"]) and t["n_pos"] < 1:
                errors.append("tasks.trust.n_pos: need at least one trust pair")
            th = t["thresholds"]
            if not isinstance(th, dict):
                errors.append("tasks.trust.thresholds: expected a mapping")
            else:
                for alg, val in th.items():
                    if alg not in DETECTORS:
                        errors.append(f"tasks.trust.thresholds.{alg}: unknown algorithm")
                    elif not isinstance(val, (int, float)) or not 0 < val < 1:
                        errors.append(f"tasks.trust.thresholds.{alg}: expected a value in (0, 1)")
                for alg in algs:
                    th.setdefault(alg, DEFAULT_THRESHOLDS.get(alg, 0.5))
            if not isinstance(t["sweep"], bool):
                errors.append("tasks.trust.sweep: expected true or false")
        else:
            if not _is_int(t["folds"]) or t["folds"] < 2:
                errors.append("tasks.anomaly.folds: expected an integer >= 2")
            if not _is_int(t["rounds"]) or t["rounds"] < 0:
                errors.append("tasks.anomaly.rounds: expected a non-negative integer")
            if not isinstance(t["learning_rate"], (int, float)) or t["learning_rate"] <= 0:
                errors.append("tasks.anomaly.learning_rate: expected a positive number")
            w = t["weights"]
            if w is not None and (not isinstance(w, list) or len(w) != 6):
                errors.append("tasks.anomaly.weights: expected a list of 6 numbers")

    # cover quality
    quality = cfg.get("quality")
    if quality is not None:
        if not isinstance(quality, dict):
            errors.append("quality: expected a mapping")
        else:
            quality.setdefault("datasets", list(names))
            quality.setdefault("metrics", list(QUALITY_METRICS))
            quality.setdefault("algorithms", ["louvain", "spectral", "label_propagation"])
            _check_list(errors, "quality.datasets", quality["datasets"], names)
            metrics = _check_list(errors, "quality.metrics", quality["metrics"], QUALITY_METRICS)
            algs = _check_list(errors, "quality.algorithms", quality["algorithms"], ALGORITHMS)
            if "modularity" in metrics:
                for i, alg in enumerate(quality["algorithms"]):
                    if alg in OVERLAPPING_ALGORITHMS:
                        errors.append(
                            f"quality.algorithms[{i}]: modularity needs a partition but {alg!r} yields overlapping covers"
                        )
            del algs

    if errors:
        raise ConfigErrors(errors)
    return cfg


def config_hash(cfg: dict) -> str:
    """Hash of everything that affects results (not out_dir, jobs or caching)."""
    body = {k: v for k, v in cfg.items() if k not in ("out_dir", "jobs", "cache")}
    body["datasets"] = [{k: v for k, v in ds.items() if k not in ("graph", "ratings", "labels")} for ds in cfg["datasets"]]
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()[:16]
