"""Trust prediction from rating similarity through community centres."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from cdbench._accel import njit
from cdbench.errors import ValidationError
from cdbench.graph import Graph
from cdbench.communities.cover import Cover
from cdbench.metrics import precision_recall_f1, roc_auc
from cdbench.recsys import RatingsTable

log = logging.getLogger(__name__)

DEFAULT_THRESHOLDS = {
    "louvain": 0.45,
    "label_propagation": 0.6,
    "spectral": 0.6,
    "ego_splitting": 0.45,
    "bigclam": 0.55,
}


@dataclass
class TrustPair:
    i: int
    j: int
    label: int  # 1 trust, 0 no-trust
    score: float | None = None


@njit
def sparse_row_dot(indptr, indices, data, a, b):
    p = indptr[a]
    q = indptr[b]
    pe = indptr[a + 1]
    qe = indptr[b + 1]
    acc = 0.0
    while p < pe and q < qe:
        if indices[p] == indices[q]:
            acc += data[p] * data[q]
            p += 1
            q += 1
        elif indices[p] < indices[q]:
            p += 1
        else:
            q += 1
    return acc


class RatingSimilarity:
    """Cosine similarity of users' rating vectors over the full item axis.

    Missing ratings count as 0. Users unknown to the ratings table score 0
    against everyone; ``unknown_lookups`` counts those queries.
    """

    def __init__(self, ratings: RatingsTable):
        mat = sp.csr_matrix(
            (ratings.values, (ratings.users, ratings.items)),
            shape=(len(ratings.user_ids), len(ratings.item_ids)),
        )
        norms = np.sqrt(np.asarray(mat.multiply(mat).sum(axis=1)).ravel())
        inv = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
        unit = (sp.diags(inv) @ mat).tocsr()
        unit.sort_indices()
        self._ptr = unit.indptr.astype(np.int64)
        self._idx = unit.indices.astype(np.int64)
        self._data = unit.data.astype(np.float64)
        self._index = ratings.user_index
        self._cache: dict[tuple[int, int], float] = {}
        self.unknown_lookups = 0

    def row(self, user: str) -> int:
        r = self._index.get(str(user), -1)
        if r < 0:
            self.unknown_lookups += 1
        return r

    def by_row(self, a: int, b: int) -> float:
        if a < 0 or b < 0:
            return 0.0
        key = (a, b) if a <= b else (b, a)
        val = self._cache.get(key)
        if val is None:
            val = float(sparse_row_dot(self._ptr, self._idx, self._data, a, b))
            val = min(max(val, 0.0), 1.0)
            self._cache[key] = val
        return val

    def __call__(self, i: str, j: str) -> float:
        return self.by_row(self.row(i), self.row(j))


def rating_similarity(ratings: RatingsTable, i: str, j: str) -> float:
    return RatingSimilarity(ratings)(i, j)


def predict_trust(i: int, j: int, cover: Cover, centers, sim) -> float:
    """max over C1 in C(i), C2 in C(j) of mean(R(i, ce1), R(j, ce2), R(ce1, ce2)).

    ``sim(a, b)`` takes node indices. 0 when either user has no community.
    """
    ci = cover.communities_of(i)
    cj = cover.communities_of(j)
    if ci.size == 0 or cj.size == 0:
        return 0.0
    best = -np.inf
    for c1 in ci.tolist():
        e1 = int(centers[c1])
        r1 = sim(i, e1)
        for c2 in cj.tolist():
            e2 = int(centers[c2])
            val = (r1 + sim(j, e2) + sim(e1, e2)) / 3.0
            if val > best:
                best = val
    return float(best)


def node_similarity(g: Graph, ratings: RatingsTable):
    """Similarity callable over graph node indices, matched to rating users by external id."""
    rs = RatingSimilarity(ratings)
    rows = np.array([rs._index.get(x, -1) for x in g.node_ids], dtype=np.int64)
    missing = int(np.sum(rows < 0))
    if missing:
        log.warning("%d graph users have no ratings; their similarities are 0", missing)

    def sim(a: int, b: int) -> float:
        return rs.by_row(int(rows[a]), int(rows[b]))

    sim.missing = missing
    return sim


def score_pairs(pairs: list[TrustPair], cover: Cover, centers, sim) -> list[TrustPair]:
    for p in pairs:
        p.score = predict_trust(p.i, p.j, cover, centers, sim)
    return pairs


def sample_pairs(g: Graph, n_pos: int, n_neg: int, seed: int = 0) -> list[TrustPair]:
    """Distinct existing edges labelled trust plus distinct non-edges labelled no-trust."""
    if not g.directed:
        raise ValidationError("trust pairs are sampled from a directed graph")
    if n_pos > g.m:
        raise ValidationError(f"n_pos={n_pos} exceeds edge count {g.m}")
    available = g.n * (g.n - 1) - g.m
    if n_neg > available:
        raise ValidationError(f"n_neg={n_neg} exceeds available non-edges {available}")
    rng = np.random.default_rng(seed)
    src = g.row_sources()
    pick = np.sort(rng.choice(g.m, size=n_pos, replace=False)) if n_pos else np.zeros(0, np.int64)
    pairs = [TrustPair(int(src[e]), int(g.indices[e]), 1) for e in pick.tolist()]
    taken: set[tuple[int, int]] = set()
    while len(taken) < n_neg:
        need = n_neg - len(taken)
        a = rng.integers(g.n, size=2 * need + 16)
        b = rng.integers(g.n, size=2 * need + 16)
        for x, y in zip(a.tolist(), b.tolist()):
            if x == y or (x, y) in taken or g.has_edge(x, y):
                continue
            taken.add((x, y))
            pairs.append(TrustPair(x, y, 0))
            if len(taken) == n_neg:
                break
    return pairs


def evaluate_trust(pairs: list[TrustPair], threshold: float) -> dict[str, float | None]:
    """Precision, recall and F1 at ``score > threshold``, plus threshold-free AUC."""
    if any(p.score is None for p in pairs):
        raise ValidationError("unscored pair")
    labels = np.array([p.label for p in pairs])
    scores = np.array([p.score for p in pairs], dtype=np.float64)
    if not labels.any():
        raise ValidationError("no positive labels")
    prec, rec, f1 = precision_recall_f1((scores > threshold).astype(int), labels)
    auc = roc_auc(labels, scores) if (labels == 0).any() else None
    return {"precision": prec, "recall": rec, "f1": f1, "auc": auc}


def best_threshold(pairs: list[TrustPair]) -> tuple[float, float]:
    """F1-optimal threshold over the observed scores: (threshold, f1)."""
    labels = np.array([p.label for p in pairs]).astype(bool)
    scores = np.array([p.score for p in pairs], dtype=np.float64)
    cand = np.unique(scores)
    pos = np.sort(scores[labels])
    neg = np.sort(scores[~labels])
    tp = len(pos) - np.searchsorted(pos, cand, side="left")
    fp = len(neg) - np.searchsorted(neg, cand, side="left")
    f1 = 2.0 * tp / np.maximum(tp + fp + len(pos), 1)
    best = int(np.argmax(f1))
    return float(np.nextafter(cand[best], -np.inf)), float(f1[best])


def write_scored_pairs(pairs: list[TrustPair], threshold: float, dest, g: Graph | None = None) -> None:
    ids = g.node_ids if g is not None else None
    with open(dest, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "label", "score", "predicted"])
        for p in pairs:
            w.writerow([
                ids[p.i] if ids else p.i, ids[p.j] if ids else p.j, p.label, repr(p.score), int(p.score > threshold),
            ])
