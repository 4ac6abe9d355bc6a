"""Community-derived node features, the indicator scorer and a boosted-stump classifier."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.model_selection import StratifiedKFold

from cdbench._accel import njit
from cdbench.errors import ValidationError
from cdbench.graph import Graph
from cdbench.communities import auxiliary_communities
from cdbench.communities.cover import Cover
from cdbench.metrics import accuracy, fold_mean, macro_ovr_auc, precision_recall_f1, roc_auc

FEATURE_NAMES = (
    "n_communities",
    "communities_per_neighbor",
    "one_minus_cc",
    "degree_over_weight",
    "cliqueness",
    "starkness",
)


@njit
def local_structure(indptr, indices, weights):
    """Per node: degree, incident weight, and edges among neighbours (triangles through v)."""
    n = len(indptr) - 1
    deg = np.zeros(n)
    wsum = np.zeros(n)
    tri = np.zeros(n)
    mark = np.zeros(n, dtype=np.bool_)
    for v in range(n):
        lo = indptr[v]
        hi = indptr[v + 1]
        deg[v] = hi - lo
        for p in range(lo, hi):
            wsum[v] += weights[p]
            mark[indices[p]] = True
        t = 0
        for p in range(lo, hi):
            u = indices[p]
            for q in range(indptr[u], indptr[u + 1]):
                if mark[indices[q]]:
                    t += 1
        tri[v] = t / 2
        for p in range(lo, hi):
            mark[indices[p]] = False
    return deg, wsum, tri


def feature_matrix(g: Graph, cover: Cover) -> np.ndarray:
    """Six features per node, columns in ``FEATURE_NAMES`` order.

    cliqueness is the density of the closed ego-net; starkness is deg / (edges
    in the closed ego-net), 1 for a star and 2 / (deg + 1) for a clique.
    Isolated nodes get one_minus_cc = 1, cliqueness = 0, starkness = 0.
    """
    h = g.undirected
    w = h.weights if h.weights is not None else np.ones(len(h.indices))
    deg, wsum, tri = local_structure(h.indptr, h.indices, w)
    n_comm = cover.membership_counts.astype(np.float64)
    pairs = deg * (deg - 1) / 2
    cc = np.divide(tri, pairs, out=np.zeros_like(tri), where=deg >= 2)
    m_ego = deg + tri
    n_ego = deg + 1
    cliq = np.divide(2 * m_ego, n_ego * deg, out=np.zeros_like(deg), where=deg > 0)
    stark = np.divide(deg, m_ego, out=np.zeros_like(deg), where=m_ego > 0)
    f2 = np.divide(n_comm, deg, out=n_comm.copy(), where=deg > 0)
    f4 = np.divide(deg, wsum, out=np.ones_like(deg), where=wsum > 0)
    return np.column_stack([n_comm, f2, 1.0 - cc, f4, cliq, stark])


@dataclass(frozen=True)
class FeatureVector:
    n_communities: float
    communities_per_neighbor: float
    one_minus_cc: float
    degree_over_weight: float
    cliqueness: float
    starkness: float
    isolated: bool = False

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in FEATURE_NAMES])


def extract_features(g: Graph, cover_with_aux: Cover, v: int) -> FeatureVector:
    row = feature_matrix(g, cover_with_aux)[v]
    return FeatureVector(*row.tolist(), isolated=g.undirected.degree[v] == 0)


def anomaly_cover(g: Graph, cover: Cover) -> Cover:
    """Partitions get their auxiliary border communities; overlapping covers pass through."""
    if cover.is_partition and cover.k > 1:
        return auxiliary_communities(g, cover)
    return cover


@dataclass
class ScorerConfig:
    weights: tuple[float, ...] = (1.0,) * 6
    thresholds: tuple[float, ...] = (0.0,) * 6

    def __post_init__(self):
        if len(self.weights) != 6 or len(self.thresholds) != 6:
            raise ValidationError("scorer needs exactly 6 weights and 6 thresholds")

    @classmethod
    def from_training(cls, X: np.ndarray, weights=None) -> ScorerConfig:
        return cls(tuple(weights or (1.0,) * 6), tuple(np.median(X, axis=0).tolist()))


def linear_score(features, cfg: ScorerConfig) -> float | np.ndarray:
    """sum_i w_i * [phi_i > T_i] for one feature vector or a matrix of them."""
    x = features.as_array() if isinstance(features, FeatureVector) else np.asarray(features, dtype=np.float64)
    ind = (x > np.asarray(cfg.thresholds)).astype(np.float64)
    out = ind @ np.asarray(cfg.weights, dtype=np.float64)
    return float(out) if np.ndim(out) == 0 else out


def _logistic_loss(y, F, w):
    return float(np.sum(w * (np.logaddexp(0.0, F) - y * F)))


def _sigmoid(F):
    return 0.5 * (1.0 + np.tanh(0.5 * F))


def _best_stump(X, order, g, h, reg):
    """Best single-feature split by second-order gain: (feature, threshold, left, right)."""
    G, H = g.sum(), h.sum()
    best = (-1, 0.0, 0.0, 0.0)
    best_gain = 0.0
    base = G * G / (H + reg)
    for f in range(X.shape[1]):
        idx = order[:, f]
        xs = X[idx, f]
        gl = np.cumsum(g[idx])[:-1]
        hl = np.cumsum(h[idx])[:-1]
        valid = xs[1:] > xs[:-1]
        if not valid.any():
            continue
        gr, hr = G - gl, H - hl
        gain = gl**2 / (hl + reg) + gr**2 / (hr + reg) - base
        gain[~valid] = -np.inf
        j = int(np.argmax(gain))
        if gain[j] > best_gain + 1e-12:
            best_gain = float(gain[j])
            best = (f, 0.5 * (xs[j] + xs[j + 1]), -gl[j] / (hl[j] + reg), -gr[j] / (hr[j] + reg))
    return best


@dataclass
class StumpEnsemble:
    """Binary boosted stumps on logistic loss."""

    base: float
    stumps: list = field(default_factory=list)  # (feature, threshold, left, right)

    def decision(self, X: np.ndarray) -> np.ndarray:
        F = np.full(len(X), self.base)
        for f, t, left, right in self.stumps:
            F += np.where(X[:, f] <= t, left, right)
        return F


def _fit_binary(X, y, w, rounds, lr, reg, trace):
    p0 = float(np.clip(y.mean(), 1e-6, 1 - 1e-6))
    model = StumpEnsemble(math.log(p0 / (1 - p0)))
    F = np.full(len(y), model.base)
    order = np.argsort(X, axis=0, kind="stable")
    loss = _logistic_loss(y, F, w)
    trace.append(loss)
    for _ in range(rounds):
        p = _sigmoid(F)
        g = w * (p - y)
        h = w * p * (1 - p)
        f, t, left, right = _best_stump(X, order, g, h, reg)
        if f < 0:
            break
        step = lr
        while step > 1e-8:
            upd = np.where(X[:, f] <= t, left, right) * step
            new_loss = _logistic_loss(y, F + upd, w)
            if new_loss <= loss:
                break
            step /= 2
        else:
            break
        F = F + upd
        loss = new_loss
        trace.append(loss)
        model.stumps.append((f, float(t), float(left * step), float(right * step)))
    return model


@dataclass
class BoostedStumps:
    """Gradient-boosted decision stumps; one-vs-rest ensembles for more than two classes.

    Each class ensemble weights samples inversely to class frequency so the
    positive and negative sides carry equal total weight.
    """

    n_classes: int
    models: list[StumpEnsemble]
    rounds: int
    learning_rate: float
    seed: int
    loss_trace: list[list[float]] = field(default_factory=list)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.n_classes == 2:
            p = _sigmoid(self.models[0].decision(X))
            return np.column_stack([1 - p, p])
        P = np.column_stack([_sigmoid(m.decision(X)) for m in self.models])
        return P / P.sum(axis=1, keepdims=True)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def to_json(self) -> str:
        return json.dumps({
            "n_classes": self.n_classes, "rounds": self.rounds, "learning_rate": self.learning_rate,
            "seed": self.seed, "models": [{"base": m.base, "stumps": m.stumps} for m in self.models],
        })

    @classmethod
    def from_json(cls, text: str) -> BoostedStumps:
        d = json.loads(text)
        models = [StumpEnsemble(m["base"], [tuple(s) for s in m["stumps"]]) for m in d["models"]]
        return cls(d["n_classes"], models, d["rounds"], d["learning_rate"], d["seed"])


def fit_anomaly_classifier(
    X: np.ndarray, labels, rounds: int = 200, seed: int = 0, learning_rate: float = 0.1, reg: float = 1e-6
) -> BoostedStumps:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValidationError("need at least two classes")
    n_classes = int(y.max()) + 1
    targets = [1] if n_classes == 2 else list(range(n_classes))
    models, traces = [], []
    for c in targets:
        yc = (y == c).astype(np.float64)
        npos = yc.sum()
        nneg = len(yc) - npos
        w = np.where(yc == 1, 0.5 / max(npos, 1), 0.5 / max(nneg, 1))
        trace: list[float] = []
        models.append(_fit_binary(X, yc, w, rounds, learning_rate, reg, trace))
        traces.append(trace)
    return BoostedStumps(n_classes, models, rounds, learning_rate, seed, traces)


def evaluate_anomaly(clf: BoostedStumps, X: np.ndarray, labels) -> dict:
    """Per-class precision/recall/F1/support, accuracy and AUC (macro one-vs-rest for multiclass)."""
    y = np.asarray(labels, dtype=np.int64)
    if len(y) == 0:
        raise ValidationError("empty test set")
    proba = clf.predict_proba(X)
    pred = np.argmax(proba, axis=1)
    per_class = {}
    for c in range(clf.n_classes):
        support = int(np.sum(y == c))
        if support == 0:
            per_class[c] = {"precision": None, "recall": None, "f1": None, "support": 0}
            continue
        p, r, f1 = precision_recall_f1(pred, y, positive=c)
        per_class[c] = {"precision": p, "recall": r, "f1": f1, "support": support}
    if clf.n_classes == 2:
        auc = roc_auc(y == 1, proba[:, 1]) if 0 < y.sum() < len(y) else None
    else:
        auc = macro_ovr_auc(y, proba)
    return {"per_class": per_class, "accuracy": accuracy(pred, y), "auc": auc}


def stratified_folds(labels, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    y = np.asarray(labels)
    skf = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    return list(skf.split(np.zeros(len(y)), y))


def cross_validate(X: np.ndarray, labels, folds: int = 5, seed: int = 0, rounds: int = 200) -> dict:
    """Stratified k-fold evaluation; per-fold results plus fold means."""
    y = np.asarray(labels, dtype=np.int64)
    results = []
    for f, (tr, te) in enumerate(stratified_folds(y, folds, seed)):
        clf = fit_anomaly_classifier(X[tr], y[tr], rounds, seed + f)
        results.append(evaluate_anomaly(clf, X[te], y[te]))
    classes = sorted(results[0]["per_class"])
    mean = {
        "accuracy": fold_mean(r["accuracy"] for r in results),
        "auc": fold_mean(r["auc"] for r in results),
        "per_class": {
            c: {m: fold_mean(r["per_class"][c][m] for r in results) for m in ("precision", "recall", "f1", "support")}
            for c in classes
        },
    }
    return {"folds": results, "mean": mean}


def write_feature_csv(g: Graph, X: np.ndarray, labels, dest) -> None:
    with open(dest, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "f1", "f2", "f3", "f4", "f5", "f6", "label"])
        for v in range(g.n):
            w.writerow([g.node_ids[v], *[repr(float(x)) for x in X[v]], int(labels[v])])
