import csv
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cdbench.communities.cover import Cover
from cdbench.errors import ValidationError
from cdbench.graph import Graph
from cdbench.recsys import RatingsTable
from cdbench.trust import (
    RatingSimilarity, TrustPair, best_threshold, evaluate_trust, node_similarity, predict_trust, rating_similarity,
    sample_pairs, score_pairs, write_scored_pairs,
)
from helpers import graph


def ratings_of(rows: dict[str, dict[str, float]]) -> RatingsTable:
    return RatingsTable.from_triples((u, i, r) for u, items in rows.items() for i, r in items.items())


def cosine_oracle(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), 0.0, 1.0))


def trust_oracle(i, j, memberships, centers, S):
    best = None
    for c1, c2 in itertools.product(memberships[i], memberships[j]):
        e1, e2 = centers[c1], centers[c2]
        val = (S[i, e1] + S[j, e2] + S[e1, e2]) / 3.0
        best = val if best is None else max(best, val)
    return 0.0 if best is None else best


# ------------------------------------------------------------------ similarity


def test_similarity_examples():
    r = ratings_of({"a": {"x": 1, "y": 2}, "b": {"x": 2, "y": 1}, "c": {"x": 3, "y": 6}, "d": {"z": 4}})
    assert rating_similarity(r, "a", "c") == pytest.approx(1.0)
    assert rating_similarity(r, "a", "d") == 0.0
    assert rating_similarity(r, "a", "b") == pytest.approx(0.8)
    sim = RatingSimilarity(r)
    assert sim("a", "nobody") == 0.0 and sim.unknown_lookups == 1


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0))
def test_similarity_symmetric_scale_invariant_and_matches_dense(seed, scale):
    rng = np.random.default_rng(seed)
    n_items = int(rng.integers(1, 8))
    M = np.where(rng.random((3, n_items)) < 0.6, rng.integers(1, 6, (3, n_items)), 0).astype(float)
    rows = {f"u{u}": {f"i{i}": M[u, i] for i in range(n_items) if M[u, i]} for u in range(3)}
    rows["u3"] = {k: v * scale for k, v in rows["u0"].items()}
    rows["pad"] = {f"i{i}": 1.0 for i in range(n_items)}  # pins the item axis
    sim = RatingSimilarity(ratings_of(rows))
    for a, b in itertools.combinations(range(3), 2):
        got = sim(f"u{a}", f"u{b}")
        assert got == sim(f"u{b}", f"u{a}")
        assert abs(got - cosine_oracle(M[a], M[b])) < 1e-12
    for b in (1, 2):
        assert abs(sim("u3", f"u{b}") - sim("u0", f"u{b}")) < 1e-12


# ------------------------------------------------------------------ prediction


def test_predict_trust_examples():
    # nodes 0..3; community 0 = {0, 2} centred at 2, community 1 = {1, 3} centred at 3
    S = np.array([
        [1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
        [1.0, 0.0, 1.0, 0.8],
        [0.0, 1.0, 0.8, 1.0],
    ])
    cover = Cover(5, [[0, 2], [1, 3]])

    def s(a, b):
        return float(S[a, b])

    assert predict_trust(0, 1, cover, [2, 3], s) == pytest.approx((1 + 1 + 0.8) / 3)
    assert predict_trust(0, 4, cover, [2, 3], s) == 0.0


def test_predict_trust_two_by_two():
    rng = np.random.default_rng(3)
    S = rng.random((6, 6))
    S = (S + S.T) / 2
    cover = Cover(6, [[0, 2, 3], [0, 1, 4], [1, 5], [2, 5]])
    centers = [3, 4, 5, 2]

    def s(a, b):
        return float(S[a, b])

    best = max((S[0, centers[a]] + S[1, centers[b]] + S[centers[a], centers[b]]) / 3 for a in (0, 1) for b in (1, 2))
    assert predict_trust(0, 1, cover, centers, s) == pytest.approx(best, abs=1e-15)


def test_predict_trust_matches_enumeration_fuzz():
    rng = np.random.default_rng(12)
    for _ in range(200):
        n = int(rng.integers(2, 10))
        S = rng.random((n, n))
        S = (S + S.T) / 2
        k = int(rng.integers(1, 5))
        memberships = [sorted(set(rng.choice(k, size=int(rng.integers(0, 3)), replace=True).tolist())) for _ in range(n)]
        groups = [[v for v in range(n) if c in memberships[v]] for c in range(k)]
        keep = [c for c in range(k) if groups[c]]
        remap = {c: t for t, c in enumerate(keep)}
        memberships = [[remap[c] for c in m if c in remap] for m in memberships]
        groups = [groups[c] for c in keep]
        cover = Cover(n, groups)
        centers = [int(rng.choice(g)) for g in groups]
        i, j = rng.choice(n, 2, replace=False).tolist()

        def s(a, b):
            return float(S[a, b])

        assert abs(predict_trust(i, j, cover, centers, s) - trust_oracle(i, j, memberships, centers, S)) <= 1e-12


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1))
def test_predict_trust_symmetric_and_monotone(seed):
    rng = np.random.default_rng(seed)
    n = 6
    S = rng.random((n, n))
    S = (S + S.T) / 2
    cover = Cover(n, [[0, 1, 2], [2, 3, 4], [4, 5, 0]])
    centers = [1, 3, 5]

    def s(a, b):
        return float(S[a, b])

    i, j = rng.choice(n, 2, replace=False).tolist()
    base = predict_trust(i, j, cover, centers, s)
    assert base == pytest.approx(predict_trust(j, i, cover, centers, s), abs=1e-15)
    a, b = rng.integers(0, n, 2).tolist()
    S[a, b] = S[b, a] = min(1.0, S[a, b] + 0.3)
    assert predict_trust(i, j, cover, centers, s) >= base - 1e-15


def test_partition_is_single_community_case():
    S = np.random.default_rng(1).random((4, 4))
    part = Cover.from_labels([0, 0, 1, 1])
    centers = [0, 3]

    def s(a, b):
        return float(S[a, b])

    expected = (S[1, 0] + S[2, 3] + S[0, 3]) / 3
    assert predict_trust(1, 2, part, centers, s) == pytest.approx(expected, abs=1e-15)


def test_node_similarity_matches_ids():
    g = graph("a b\nb c\n", directed=True)
    r = ratings_of({"a": {"x": 1, "y": 2}, "b": {"x": 2, "y": 1}})
    sim = node_similarity(g, r)
    assert sim(0, 1) == pytest.approx(0.8)
    assert sim(0, 2) == 0.0 and sim.missing == 1


# ------------------------------------------------------------------ pairs


def directed_random(seed, n=30, p=0.15):
    rng = np.random.default_rng(seed)
    src, dst = np.nonzero((rng.random((n, n)) < p) & ~np.eye(n, dtype=bool))
    return Graph.from_arrays(n, src, dst, directed=True)


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_sample_pairs_properties(seed):
    g = directed_random(seed % 1000)
    n_pos = min(20, g.m)
    pairs = sample_pairs(g, n_pos, 25, seed=seed)
    pos = [p for p in pairs if p.label == 1]
    neg = [p for p in pairs if p.label == 0]
    assert len(pos) == n_pos and len(neg) == 25
    assert all(g.has_edge(p.i, p.j) for p in pos)
    assert all(not g.has_edge(p.i, p.j) and p.i != p.j for p in neg)
    assert len({(p.i, p.j) for p in pairs}) == len(pairs)
    again = sample_pairs(g, n_pos, 25, seed=seed)
    assert [(p.i, p.j, p.label) for p in again] == [(p.i, p.j, p.label) for p in pairs]


def test_sample_pairs_limits():
    g = directed_random(0)
    assert all(p.label == 1 for p in sample_pairs(g, 5, 0))
    with pytest.raises(ValidationError):
        sample_pairs(g, g.m + 1, 0)
    with pytest.raises(ValidationError):
        sample_pairs(g, 0, g.n * (g.n - 1) - g.m + 1)
    with pytest.raises(ValidationError):
        sample_pairs(g.undirected, 1, 1)


# ------------------------------------------------------------------ evaluation


def scored(labels, scores):
    return [TrustPair(k, k + 1, lab, s) for k, (lab, s) in enumerate(zip(labels, scores))]


def test_evaluate_examples():
    res = evaluate_trust(scored([1, 1, 0, 0], [1.0, 1.0, 0.0, 0.0]), 0.5)
    assert res == {"precision": 1.0, "recall": 1.0, "f1": 1.0, "auc": 1.0}
    assert evaluate_trust(scored([1, 0, 1, 0], [0.4] * 4), 0.2)["auc"] == 0.5
    res = evaluate_trust(scored([1, 0], [0.9, 0.1]), 1.01)
    assert res["recall"] == 0.0 and res["precision"] is None
    with pytest.raises(ValidationError):
        evaluate_trust(scored([0, 0], [0.1, 0.2]), 0.5)
    with pytest.raises(ValidationError):
        evaluate_trust([TrustPair(0, 1, 1)], 0.5)


def test_best_threshold_is_optimal():
    rng = np.random.default_rng(4)
    labels = rng.integers(0, 2, 60)
    labels[0] = 1
    pairs = scored(labels, np.round(rng.random(60), 2))
    t, f1 = best_threshold(pairs)
    assert evaluate_trust(pairs, t)["f1"] == pytest.approx(f1)
    for cand in np.linspace(-0.01, 1.0, 103):
        assert (evaluate_trust(pairs, cand)["f1"] or 0.0) <= f1 + 1e-12


def test_score_and_write_pairs(tmp_path):
    g = graph("a b\nb c\nc a\n", directed=True)
    cover = Cover(3, [[0, 1, 2]])
    pairs = score_pairs([TrustPair(0, 1, 1), TrustPair(1, 0, 0)], cover, [0], lambda a, b: 0.5)
    assert [p.score for p in pairs] == [0.5, 0.5]
    write_scored_pairs(pairs, 0.4, tmp_path / "p.csv", g)
    rows = list(csv.reader(open(tmp_path / "p.csv")))
    assert rows[0] == ["i", "j", "label", "score", "predicted"]
    assert rows[1] == ["a", "b", "1", "0.5", "1"]
