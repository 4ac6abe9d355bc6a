import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cdbench.errors import ValidationError
from cdbench.metrics import (
    MetricRow, accuracy, confusion_matrix, fold_mean, macro_ovr_auc, precision_recall_f1, rmse_mae, roc_auc,
)


def auc_pairwise(labels, scores):
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    total = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return total / (len(pos) * len(neg))


def test_examples():
    assert roc_auc([1, 0], [0.9, 0.1]) == 1.0
    assert roc_auc([1, 0], [0.1, 0.9]) == 0.0
    assert roc_auc([1, 0, 1, 0], [0.5] * 4) == 0.5
    assert precision_recall_f1([1, 1, 0, 0], [1, 0, 1, 0]) == (0.5, 0.5, 0.5)
    assert precision_recall_f1([0, 0], [1, 0]) == (None, 0.0, 0.0)
    assert precision_recall_f1([0, 0], [0, 0]) == (None, None, None)
    assert rmse_mae([3, 3], [1, 5]) == (2.0, 2.0)
    assert accuracy([1, 2, 3], [1, 2, 0]) == pytest.approx(2 / 3)
    assert confusion_matrix([0, 1, 1], [0, 0, 1], 2).tolist() == [[1, 1], [0, 1]]
    assert fold_mean([1.0, None, 3.0]) == 2.0
    assert fold_mean([None]) is None


def test_errors():
    with pytest.raises(ValidationError):
        roc_auc([1, 1], [0.1, 0.2])
    with pytest.raises(ValidationError):
        roc_auc([1, 0], [0.1])
    with pytest.raises(ValidationError):
        rmse_mae([], [])
    with pytest.raises(ValidationError):
        precision_recall_f1([], [])


def test_metric_row():
    row = MetricRow("d", "trust", "louvain", "degree", "mean", "f1", 0.5)
    assert row.to_dict()["value"] == 0.5
    assert row.key() == ("d", "trust", "louvain", "degree", "mean", "", "f1")


cases = st.integers(2, 30).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 1), min_size=n, max_size=n).filter(lambda y: 0 < sum(y) < len(y)),
        st.lists(st.integers(0, 6).map(lambda v: v / 6), min_size=n, max_size=n),
    )
)


@settings(max_examples=300)
@given(cases)
def test_auc_matches_pairwise_and_invariants(case):
    labels, scores = case
    auc = roc_auc(labels, scores)
    assert abs(auc - auc_pairwise(labels, scores)) < 1e-12
    assert abs(roc_auc(labels, np.exp(3 * np.asarray(scores))) - auc) < 1e-12
    assert abs(roc_auc([1 - y for y in labels], scores) - (1 - auc)) < 1e-12


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1))
def test_macro_ovr_matches_naive(seed):
    rng = np.random.default_rng(seed)
    n, k = int(rng.integers(4, 30)), int(rng.integers(2, 5))
    labels = rng.integers(0, k, n)
    proba = rng.random((n, k))
    naive = [auc_pairwise(labels == c, proba[:, c]) for c in range(k) if 0 < (labels == c).sum() < n]
    got = macro_ovr_auc(labels, proba)
    if naive:
        assert abs(got - np.mean(naive)) < 1e-12
    else:
        assert got is None


@settings(max_examples=200)
@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=1, max_size=40))
def test_rmse_at_least_mae(pairs):
    pred, truth = zip(*pairs)
    rmse, mae = rmse_mae(pred, truth)
    assert rmse >= mae - 1e-9 * max(1.0, mae)
    assert mae >= 0


@settings(max_examples=100)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=40))
def test_f1_is_harmonic_mean(pairs):
    pred, true = zip(*pairs)
    p, r, f1 = precision_recall_f1(pred, true)
    if p and r:
        assert f1 == pytest.approx(2 * p * r / (p + r))
    if f1 is not None:
        assert 0.0 <= f1 <= 1.0
