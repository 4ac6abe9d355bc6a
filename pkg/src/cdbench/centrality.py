"""Node centralities, community propensities and community centres."""

from __future__ import annotations

from enum import Enum

import numpy as np
import scipy.sparse as sp

from cdbench._accel import njit
from cdbench.errors import ValidationError
from cdbench.graph import Graph, id_key, subgraph
from cdbench.communities.cover import Cover


class CentralityKind(str, Enum):
    DEGREE = "degree"
    BETWEENNESS = "betweenness"
    CLOSENESS = "closeness"
    EIGENVECTOR = "eigenvector"
    INDEGREE = "indegree"
    OUTDEGREE = "outdegree"
    RANDOM = "random"


PROPENSITY_KINDS = (CentralityKind.DEGREE, CentralityKind.BETWEENNESS, CentralityKind.CLOSENESS)


@njit
def brandes(indptr, indices):
    """Unnormalised betweenness over hop-count shortest paths, counting each ordered pair."""
    n = len(indptr) - 1
    bc = np.zeros(n)
    sigma = np.zeros(n)
    dist = np.empty(n, dtype=np.int64)
    delta = np.zeros(n)
    stack = np.empty(n, dtype=np.int64)
    for s in range(n):
        for v in range(n):
            sigma[v] = 0.0
            dist[v] = -1
            delta[v] = 0.0
        sigma[s] = 1.0
        dist[s] = 0
        stack[0] = s
        head = 0
        tail = 1
        while head < tail:
            v = stack[head]
            head += 1
            for p in range(indptr[v], indptr[v + 1]):
                w = indices[p]
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    stack[tail] = w
                    tail += 1
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
        for t in range(tail - 1, 0, -1):
            w = stack[t]
            for p in range(indptr[w], indptr[w + 1]):
                v = indices[p]
                if dist[v] == dist[w] - 1:
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            bc[w] += delta[w]
    return bc


@njit
def closeness_kernel(indptr, indices):
    """(reachable - 1)^2 / ((n - 1) * sum of distances), 0 for isolated nodes."""
    n = len(indptr) - 1
    out = np.zeros(n)
    dist = np.empty(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        for v in range(n):
            dist[v] = -1
        dist[s] = 0
        queue[0] = s
        head = 0
        tail = 1
        total = 0
        while head < tail:
            v = queue[head]
            head += 1
            total += dist[v]
            for p in range(indptr[v], indptr[v + 1]):
                w = indices[p]
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue[tail] = w
                    tail += 1
        if total > 0 and n > 1:
            out[s] = (tail - 1) ** 2 / ((n - 1) * total)
    return out


def eigenvector(g: Graph, tol: float = 1e-9, max_iter: int = 1000) -> np.ndarray:
    """Leading eigenvector of the symmetrised adjacency, L2-normalised and nonnegative.

    Iterates with A + I, which has the same eigenvectors but no oscillation
    on bipartite graphs.
    """
    h = g.undirected
    n = h.n
    w = h.weights if h.weights is not None else np.ones(len(h.indices))
    adj = sp.csr_matrix((w, h.indices, h.indptr), shape=(n, n))
    x = np.full(n, 1.0 / np.sqrt(n))
    for _ in range(max_iter):
        y = adj @ x + x
        y /= np.linalg.norm(y)
        if np.abs(y - x).sum() < n * tol:
            x = y
            break
        x = y
    return x


def centrality_scores(g: Graph, kind, seed: int = 0) -> np.ndarray:
    kind = CentralityKind(kind)
    if g.n == 0:
        raise ValidationError("centrality of an empty graph")
    if kind in (CentralityKind.INDEGREE, CentralityKind.OUTDEGREE):
        if not g.directed:
            raise ValidationError(f"{kind.value} needs a directed graph")
        deg = g.in_degree if kind is CentralityKind.INDEGREE else g.degree
        return deg.astype(np.float64)
    h = g.undirected
    if kind is CentralityKind.DEGREE:
        return h.degree.astype(np.float64)
    if kind is CentralityKind.BETWEENNESS:
        return brandes(h.indptr, h.indices) / 2.0
    if kind is CentralityKind.CLOSENESS:
        return closeness_kernel(h.indptr, h.indices)
    if kind is CentralityKind.EIGENVECTOR:
        return eigenvector(h)
    return np.random.default_rng(seed).random(g.n)


def propensity(g: Graph, cover: Cover, kind, seed: int = 0) -> dict[tuple[int, int], float]:
    """alpha[(u, c)]: centrality of u inside community c's subgraph, divided by the community maximum."""
    kind = CentralityKind(kind)
    if kind not in PROPENSITY_KINDS:
        raise ValidationError(f"propensity kind must be one of {[k.value for k in PROPENSITY_KINDS]}")
    alpha: dict[tuple[int, int], float] = {}
    for c, members in enumerate(cover.communities):
        scores = centrality_scores(subgraph(g, members), kind, seed + c)
        top = scores.max()
        vals = scores / top if top > 0 else np.zeros(len(scores))
        for u, a in zip(members.tolist(), vals.tolist()):
            alpha[(u, c)] = a
    return alpha


def community_center(g: Graph, community, kind, seed: int = 0) -> int:
    """Member maximising ``kind`` on the community subgraph; ties go to the smallest external id."""
    kind = CentralityKind(kind)
    members = np.unique(np.asarray(community, dtype=np.int64))
    if members.size == 0:
        raise ValidationError("empty community")
    if members.size == 1:
        return int(members[0])
    if kind is CentralityKind.RANDOM:
        return int(members[np.random.default_rng(seed).integers(len(members))])
    scores = centrality_scores(subgraph(g, members), kind, seed)
    top = scores.max()
    tied = members[np.isclose(scores, top, rtol=1e-12, atol=0.0) | (scores == top)]
    return int(min(tied.tolist(), key=lambda v: id_key(g.node_ids[v])))


def community_centers(g: Graph, cover: Cover, kind, seed: int = 0) -> np.ndarray:
    """Centre node of every community; community c uses sub-seed ``seed + c``."""
    return np.array(
        [community_center(g, members, kind, seed + c) for c, members in enumerate(cover.communities)],
        dtype=np.int64,
    )
