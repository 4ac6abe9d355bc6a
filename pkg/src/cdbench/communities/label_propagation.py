from __future__ import annotations

import numpy as np

from cdbench._accel import njit
from cdbench.graph import Graph
from cdbench.communities.cover import Cover


@njit
def lp_sweep(indptr, indices, weights, order, ties, labels):
    """One asynchronous sweep; returns how many nodes changed label.

    A node keeps its label when it is already among the most frequent
    neighbour labels; otherwise it takes one of the maximal labels chosen by
    ``ties[v]`` in [0, 1).
    """
    n = len(order)
    score = np.zeros(len(labels))
    seen = np.zeros(len(labels), dtype=np.bool_)
    touched = np.empty(len(labels), dtype=np.int64)
    best = np.empty(len(labels), dtype=np.int64)
    changed = 0
    for idx in range(n):
        v = order[idx]
        lo = indptr[v]
        hi = indptr[v + 1]
        if lo == hi:
            continue
        nt = 0
        for p in range(lo, hi):
            lab = labels[indices[p]]
            if not seen[lab]:
                seen[lab] = True
                touched[nt] = lab
                nt += 1
            score[lab] += weights[p]
        top = 0.0
        for t in range(nt):
            if score[touched[t]] > top:
                top = score[touched[t]]
        nb = 0
        keep = False
        for t in range(nt):
            lab = touched[t]
            if score[lab] >= top - 1e-12 * top:
                best[nb] = lab
                nb += 1
                if lab == labels[v]:
                    keep = True
        if not keep:
            pick = int(ties[v] * nb)
            if pick >= nb:
                pick = nb - 1
            labels[v] = best[pick]
            changed += 1
        for t in range(nt):
            score[touched[t]] = 0.0
            seen[touched[t]] = False
    return changed


def propagate(indptr, indices, weights, rng: np.random.Generator, max_iters: int) -> np.ndarray:
    n = len(indptr) - 1
    labels = np.arange(n, dtype=np.int64)
    if weights is None:
        weights = np.ones(len(indices))
    for _ in range(max_iters):
        order = rng.permutation(n).astype(np.int64)
        ties = rng.random(n)
        if lp_sweep(indptr, indices, weights, order, ties, labels) == 0:
            break
    return labels


def label_propagation(g: Graph, seed: int = 0, max_iters: int = 100) -> Cover:
    """Asynchronous label propagation with seeded visit order and tie-breaking."""
    h = g.undirected
    rng = np.random.default_rng(seed)
    labels = propagate(h.indptr, h.indices, h.weights, rng, max_iters)
    return Cover.from_labels(labels, meta={"algorithm": "label_propagation", "seed": seed})
