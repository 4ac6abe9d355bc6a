"""Evaluation metrics. Undefined cells are ``None``, never a silent 0."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from cdbench.errors import ValidationError


@dataclass(frozen=True)
class MetricRow:
    dataset: str
    task: str
    algorithm: str
    kind: str
    fold: str
    metric: str
    value: float | None
    class_id: str = ""

    def key(self) -> tuple:
        return (self.dataset, self.task, self.algorithm, self.kind, self.fold, self.class_id, self.metric)

    def to_dict(self) -> dict:
        return asdict(self)


def roc_auc(labels: Sequence[int], scores: Sequence[float]) -> float:
    """P(score_pos > score_neg) + 0.5 P(tie), from average ranks (Mann-Whitney U)."""
    y = np.asarray(labels).astype(bool)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape != s.shape:
        raise ValidationError("labels and scores differ in length")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("AUC needs both classes")
    ranks = rankdata(s)
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def macro_ovr_auc(labels: Sequence[int], proba: np.ndarray) -> float | None:
    """Mean one-vs-rest AUC over the classes present on both sides."""
    y = np.asarray(labels)
    proba = np.asarray(proba)
    aucs = []
    for c in range(proba.shape[1]):
        pos = y == c
        if pos.any() and (~pos).any():
            aucs.append(roc_auc(pos, proba[:, c]))
    return float(np.mean(aucs)) if aucs else None


def _ratio(num: float, den: float) -> float | None:
    return num / den if den > 0 else None


def precision_recall_f1(predictions, labels, positive=1) -> tuple[float | None, float | None, float | None]:
    pred = np.asarray(predictions) == positive
    true = np.asarray(labels) == positive
    if pred.size == 0:
        raise ValidationError("empty input")
    tp = float(np.sum(pred & true))
    fp = float(np.sum(pred & ~true))
    fn = float(np.sum(~pred & true))
    p = _ratio(tp, tp + fp)
    r = _ratio(tp, tp + fn)
    if r is None:
        f1 = None
    elif tp == 0:
        f1 = 0.0
    else:
        f1 = 2 * p * r / (p + r)
    return p, r, f1


def accuracy(predictions, labels) -> float:
    pred = np.asarray(predictions)
    return float(np.mean(pred == np.asarray(labels)))


def confusion_matrix(predictions, labels, n_classes: int) -> np.ndarray:
    out = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(out, (np.asarray(labels), np.asarray(predictions)), 1)
    return out


def rmse_mae(pred, truth) -> tuple[float, float]:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValidationError("length mismatch")
    if pred.size == 0:
        raise ValidationError("empty input")
    err = pred - truth
    return float(np.sqrt(np.mean(err**2))), float(np.mean(np.abs(err)))


def fold_mean(values: Iterable[float | None]) -> float | None:
    """Mean over folds, skipping undefined cells; undefined if all are."""
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None
