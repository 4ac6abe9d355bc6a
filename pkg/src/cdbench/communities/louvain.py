"""Multi-level greedy modularity maximisation (Louvain) at resolution 1."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from cdbench._accel import njit
from cdbench.graph import Graph
from cdbench.communities.cover import Cover

_GAIN_EPS = 1e-12


@njit
def move_nodes(indptr, indices, weights, degree, order, labels, tot, two_m):
    """Move single nodes to the neighbouring community with the largest gain until none helps.

    ``weights`` may contain self-loop entries (aggregated graphs); those are
    never counted as links to another community. Returns the number of moves.
    """
    n = len(degree)
    link = np.zeros(n)
    seen = np.zeros(n, dtype=np.bool_)
    touched = np.empty(n, dtype=np.int64)
    moves = 0
    improved = True
    while improved:
        improved = False
        for idx in range(n):
            a = order[idx]
            ca = labels[a]
            ka = degree[a]
            nt = 0
            for p in range(indptr[a], indptr[a + 1]):
                b = indices[p]
                if b == a:
                    continue
                c = labels[b]
                if not seen[c]:
                    seen[c] = True
                    touched[nt] = c
                    nt += 1
                link[c] += weights[p]
            tot[ca] -= ka
            best = ca
            best_gain = link[ca] - ka * tot[ca] / two_m
            for t in range(nt):
                c = touched[t]
                gain = link[c] - ka * tot[c] / two_m
                if gain > best_gain + _GAIN_EPS:
                    best_gain = gain
                    best = c
            tot[best] += ka
            if best != ca:
                labels[a] = best
                moves += 1
                improved = True
            for t in range(nt):
                c = touched[t]
                link[c] = 0.0
                seen[c] = False
            link[ca] = 0.0
    return moves


def _dense(labels: np.ndarray) -> tuple[np.ndarray, int]:
    _, inv = np.unique(labels, return_inverse=True)
    inv = inv.ravel()
    return inv.astype(np.int64), int(inv.max()) + 1 if len(inv) else 0


def louvain(g: Graph, seed: int = 0, max_levels: int = 64) -> Cover:
    """Louvain partition of the symmetrised graph.

    Node visit order at each level is a seeded permutation. After the last
    aggregation a final single-node pass on the original graph guarantees that
    no single move raises modularity.
    """
    h = g.undirected
    n = h.n
    if n == 0:
        return Cover(0, [])
    rng = np.random.default_rng(seed)
    w = h.weights if h.weights is not None else np.ones(len(h.indices))
    adj = sp.csr_matrix((w, h.indices, h.indptr), shape=(n, n))
    two_m = float(adj.sum())
    if two_m == 0:
        return Cover.from_labels(np.arange(n))

    membership = np.arange(n, dtype=np.int64)
    level_adj = adj
    for _ in range(max_levels):
        nl = level_adj.shape[0]
        degree = np.asarray(level_adj.sum(axis=1)).ravel()
        labels = np.arange(nl, dtype=np.int64)
        tot = degree.copy()
        moves = move_nodes(
            level_adj.indptr.astype(np.int64),
            level_adj.indices.astype(np.int64),
            level_adj.data.astype(np.float64),
            degree,
            rng.permutation(nl).astype(np.int64),
            labels,
            tot,
            two_m,
        )
        if moves == 0:
            break
        dense, kc = _dense(labels)
        membership = dense[membership]
        agg = sp.csr_matrix((np.ones(nl), (np.arange(nl), dense)), shape=(nl, kc))
        level_adj = (agg.T @ level_adj @ agg).tocsr()
        level_adj.sort_indices()
        if kc == 1:
            break

    labels = membership.copy()
    tot = np.bincount(labels, weights=h.strength, minlength=n).astype(np.float64)
    move_nodes(
        h.indptr, h.indices, w.astype(np.float64), h.strength.astype(np.float64),
        rng.permutation(n).astype(np.int64), labels, tot, two_m,
    )
    return Cover.from_labels(labels, meta={"algorithm": "louvain", "seed": seed})
