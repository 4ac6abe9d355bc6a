"""Cluster affiliation model (BIGCLAM) fitted by block-coordinate projected gradient ascent.

The log-likelihood over unordered node pairs is

    sum_{(u,v) in E} log(1 - exp(-F_u . F_v)) - sum_{(u,v) not in E} F_u . F_v

Each sweep updates one node row at a time with a backtracking (Armijo) line
search on that row's terms, so the total likelihood never decreases.
"""

from __future__ import annotations

import math

import numpy as np

from cdbench._accel import njit
from cdbench.graph import Graph
from cdbench.communities.cover import Cover

MIN_DOT = 1e-8
MAX_F = 1000.0


@njit
def _row_ll(indptr, indices, F, u, f, rest):
    ll = 0.0
    for p in range(indptr[u], indptr[u + 1]):
        x = 0.0
        v = indices[p]
        for c in range(F.shape[1]):
            x += f[c] * F[v, c]
        if x < MIN_DOT:
            x = MIN_DOT
        ll += math.log(1.0 - math.exp(-x))
    for c in range(F.shape[1]):
        ll -= f[c] * rest[c]
    return ll


@njit
def bigclam_sweep(indptr, indices, F, sum_f, order, step0, beta, alpha, max_tries):
    """One pass of per-node line-searched updates; returns the number of accepted steps."""
    k = F.shape[1]
    grad = np.empty(k)
    rest = np.empty(k)
    trial = np.empty(k)
    accepted = 0
    for idx in range(len(order)):
        u = order[idx]
        for c in range(k):
            grad[c] = 0.0
            rest[c] = sum_f[c] - F[u, c]
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            x = 0.0
            for c in range(k):
                x += F[u, c] * F[v, c]
            if x < MIN_DOT:
                x = MIN_DOT
            e = math.exp(-x)
            coef = e / (1.0 - e)
            for c in range(k):
                grad[c] += F[v, c] * coef
                rest[c] -= F[v, c]
        for c in range(k):
            grad[c] -= rest[c]
        ll_old = _row_ll(indptr, indices, F, u, F[u], rest)
        step = step0
        for _ in range(max_tries):
            ascent = 0.0
            for c in range(k):
                val = F[u, c] + step * grad[c]
                if val < 0.0:
                    val = 0.0
                elif val > MAX_F:
                    val = MAX_F
                trial[c] = val
                ascent += grad[c] * (val - F[u, c])
            if ascent <= 0.0:
                break
            ll_new = _row_ll(indptr, indices, F, u, trial, rest)
            if ll_new >= ll_old + alpha * ascent:
                for c in range(k):
                    sum_f[c] += trial[c] - F[u, c]
                    F[u, c] = trial[c]
                accepted += 1
                break
            step *= beta
    return accepted


@njit
def log_likelihood(indptr, indices, F):
    n, k = F.shape
    edge_ll = 0.0
    edge_dot = 0.0
    for u in range(n):
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            if v <= u:
                continue
            x = 0.0
            for c in range(k):
                x += F[u, c] * F[v, c]
            edge_dot += x
            if x < MIN_DOT:
                x = MIN_DOT
            edge_ll += math.log(1.0 - math.exp(-x))
    total = np.zeros(k)
    self_dot = 0.0
    for u in range(n):
        for c in range(k):
            total[c] += F[u, c]
            self_dot += F[u, c] * F[u, c]
    all_pairs = 0.0
    for c in range(k):
        all_pairs += total[c] * total[c]
    all_pairs = 0.5 * (all_pairs - self_dot)
    return edge_ll - (all_pairs - edge_dot)


def _conductance(g: Graph, nodes: np.ndarray, vol_total: float) -> float:
    inside = np.zeros(g.n, dtype=bool)
    inside[nodes] = True
    vol = float(g.degree[nodes].sum())
    cut = 0
    for v in nodes.tolist():
        cut += int(np.sum(~inside[g.neighbors(v)]))
    denom = min(vol, vol_total - vol)
    if denom <= 0:
        return 0.0 if cut == 0 and vol > 0 else 1.0
    return cut / denom


def seed_affiliations(g: Graph, k: int, rng: np.random.Generator) -> np.ndarray:
    """Initial F from locally minimal conductance ego-neighbourhoods.

    A node is a candidate when its closed neighbourhood has lower (conductance,
    index) than every neighbour's. Candidates are taken in that order, skipping
    neighbourhoods that are mostly already covered; leftover columns are filled
    uniformly at random, and non-isolated nodes still uncovered get a random
    weight in one random community.
    """
    n = g.n
    vol_total = float(g.degree.sum())
    phi = np.ones(n)
    hoods = []
    for v in range(n):
        hood = np.union1d(g.neighbors(v), [v])
        hoods.append(hood)
        if g.degree[v] > 0:
            phi[v] = _conductance(g, hood, vol_total)
    rank = np.lexsort((np.arange(n), phi))
    pos = np.empty(n, dtype=np.int64)
    pos[rank] = np.arange(n)
    local_min = [v for v in rank.tolist() if g.degree[v] > 0 and all(pos[v] < pos[u] for u in g.neighbors(v).tolist())]
    chosen = set(local_min)
    others = [v for v in rank.tolist() if g.degree[v] > 0 and v not in chosen]
    F = np.zeros((n, k))
    covered = np.zeros(n, dtype=bool)
    c = 0
    for pool in (local_min, others):
        for v in pool:
            if c >= k:
                break
            hood = hoods[v]
            if covered[hood].mean() >= 0.5:
                continue
            F[hood, c] = 1.0
            covered[hood] = True
            c += 1
    while c < k:
        F[:, c] = rng.random(n)
        c += 1
    # a zero row has no upward gradient, so give uncovered nodes a foothold
    stuck = np.flatnonzero((F.sum(axis=1) == 0) & (g.degree > 0))
    F[stuck, rng.integers(k, size=len(stuck))] = rng.random(len(stuck))
    return F


def bigclam(g: Graph, k: int, iters: int = 500, seed: int = 0, tol: float = 1e-4) -> Cover:
    """Overlapping cover from a fitted affiliation matrix.

    Node u joins community c iff F[u, c] >= sqrt(-log(1 - 1/n)). Nodes below
    the threshold everywhere join their strongest community, or a singleton
    community when their row is all zero. ``meta`` keeps the affiliation
    matrix and the per-sweep log-likelihood trace.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    h = g.undirected
    n = h.n
    rng = np.random.default_rng(seed)
    F = seed_affiliations(h, k, rng)
    sum_f = F.sum(axis=0)
    trace = [log_likelihood(h.indptr, h.indices, F)]
    for _ in range(iters):
        bigclam_sweep(h.indptr, h.indices, F, sum_f, rng.permutation(n).astype(np.int64), 0.1, 0.3, 0.05, 30)
        trace.append(log_likelihood(h.indptr, h.indices, F))
        if abs(trace[-1] - trace[-2]) <= tol * abs(trace[-2]):
            break
    delta = math.sqrt(-math.log(1.0 - 1.0 / n)) if n > 1 else 0.0
    member = F >= delta
    if n == 1:
        member = np.ones((1, k), dtype=bool)
    nodes, comms = np.nonzero(member)
    extra_nodes, extra_comms = [], []
    next_id = k
    for u in np.flatnonzero(~member.any(axis=1)).tolist():
        extra_nodes.append(u)
        if F[u].max() > 0:
            extra_comms.append(int(np.argmax(F[u])))
        else:
            extra_comms.append(next_id)
            next_id += 1
    nodes = np.concatenate([nodes, np.asarray(extra_nodes, dtype=np.int64)])
    comms = np.concatenate([comms, np.asarray(extra_comms, dtype=np.int64)])
    return Cover.from_memberships(
        n, nodes, comms,
        meta={"algorithm": "bigclam", "seed": seed, "k": k, "threshold": delta, "affiliation": F, "loglik": trace},
    )
