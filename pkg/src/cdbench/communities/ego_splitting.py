"""Ego-net splitting into personas followed by a global partition of the persona graph."""

from __future__ import annotations

import numpy as np

from cdbench._accel import njit
from cdbench.graph import Graph
from cdbench.communities.cover import Cover
from cdbench.communities.label_propagation import propagate


@njit
def ego_csr(indptr, indices, v, local):
    """CSR of the subgraph induced by N(v), excluding v.

    ``local`` is scratch of length n filled with -1 and restored on return.
    """
    lo = indptr[v]
    hi = indptr[v + 1]
    k = hi - lo
    for t in range(k):
        local[indices[lo + t]] = t
    sub_ptr = np.zeros(k + 1, dtype=np.int64)
    count = 0
    for t in range(k):
        u = indices[lo + t]
        for p in range(indptr[u], indptr[u + 1]):
            if local[indices[p]] >= 0:
                count += 1
        sub_ptr[t + 1] = count
    sub_idx = np.empty(count, dtype=np.int64)
    pos = 0
    for t in range(k):
        u = indices[lo + t]
        for p in range(indptr[u], indptr[u + 1]):
            j = local[indices[p]]
            if j >= 0:
                sub_idx[pos] = j
                pos += 1
    for t in range(k):
        local[indices[lo + t]] = -1
    return sub_ptr, sub_idx


@njit
def persona_edges(indptr, indices, offset, local_labels):
    """Rewire every edge (u, v), u < v, to the personas that own it on each side."""
    n = len(indptr) - 1
    m = 0
    for u in range(n):
        for p in range(indptr[u], indptr[u + 1]):
            if indices[p] > u:
                m += 1
    src = np.empty(m, dtype=np.int64)
    dst = np.empty(m, dtype=np.int64)
    e = 0
    for u in range(n):
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            if v <= u:
                continue
            # position of u inside v's row
            lo = indptr[v]
            hi = indptr[v + 1]
            while lo < hi:
                mid = (lo + hi) // 2
                if indices[mid] < u:
                    lo = mid + 1
                else:
                    hi = mid
            src[e] = offset[u] + local_labels[p]
            dst[e] = offset[v] + local_labels[lo]
            e += 1
    return src, dst


def persona_graph(g: Graph, seed: int = 0, max_iters: int = 100) -> tuple[Graph, np.ndarray]:
    """Persona graph and the owner (original node) of every persona."""
    h = g.undirected
    n = h.n
    rng = np.random.default_rng(seed)
    local = np.full(n, -1, dtype=np.int64)
    local_labels = np.zeros(len(h.indices), dtype=np.int64)
    n_personas = np.ones(n, dtype=np.int64)
    for v in range(n):
        lo, hi = h.indptr[v], h.indptr[v + 1]
        if lo == hi:
            continue
        sub_ptr, sub_idx = ego_csr(h.indptr, h.indices, v, local)
        labels = propagate(sub_ptr, sub_idx, None, rng, max_iters)
        _, dense = np.unique(labels, return_inverse=True)
        local_labels[lo:hi] = dense.ravel()
        n_personas[v] = int(dense.max()) + 1
    offset = np.zeros(n, dtype=np.int64)
    offset[1:] = np.cumsum(n_personas)[:-1]
    owner = np.repeat(np.arange(n, dtype=np.int64), n_personas)
    src, dst = persona_edges(h.indptr, h.indices, offset, local_labels)
    pg = Graph.from_arrays(len(owner), src, dst, directed=False)
    return pg, owner


def ego_splitting(g: Graph, seed: int = 0, max_iters: int = 100) -> Cover:
    """Overlapping cover: label propagation inside each ego-net and on the persona graph."""
    n = g.n
    pg, owner = persona_graph(g, seed, max_iters)
    rng = np.random.default_rng([seed, 1])
    global_labels = propagate(pg.indptr, pg.indices, None, rng, max_iters)
    pairs = np.unique(np.stack([global_labels, owner], axis=1), axis=0)
    return Cover.from_memberships(
        n, pairs[:, 1], pairs[:, 0], meta={"algorithm": "ego_splitting", "seed": seed, "personas": pg.n}
    )
