"""Graph builders and brute-force oracles shared by the tests."""

import io
import itertools
from collections import deque

import numpy as np

from cdbench.graph import Graph, load_edge_list


def graph(text: str, directed=False, weighted=False) -> Graph:
    return load_edge_list(io.StringIO(text), directed=directed, weighted=weighted)


def from_pairs(n, pairs, directed=False) -> Graph:
    pairs = list(pairs)
    src = np.array([p[0] for p in pairs], dtype=np.int64)
    dst = np.array([p[1] for p in pairs], dtype=np.int64)
    return Graph.from_arrays(n, src, dst, None, directed=directed)


TWO_TRIANGLES = "0 1\n1 2\n0 2\n3 4\n4 5\n3 5\n"
BOWTIE = "0 1\n1 2\n0 2\n2 3\n3 4\n2 4\n"  # two triangles sharing node 2
BRIDGED = TWO_TRIANGLES + "2 3\n"
STAR4 = "0 1\n0 2\n0 3\n0 4\n"


def random_graph(rng, n, p):
    pairs = [(u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < p]
    return from_pairs(n, pairs)


def dense(g: Graph) -> np.ndarray:
    A = np.zeros((g.n, g.n))
    h = g.undirected
    for u in range(h.n):
        for p in range(h.indptr[u], h.indptr[u + 1]):
            A[u, h.indices[p]] = 1.0 if h.weights is None else h.weights[p]
    return A


def modularity_bruteforce(A: np.ndarray, labels) -> float:
    n = len(A)
    deg = A.sum(axis=1)
    two_m = A.sum()
    total = 0.0
    for u in range(n):
        for v in range(n):
            if labels[u] == labels[v]:
                total += A[u, v] - deg[u] * deg[v] / two_m
    return total / two_m


def betweenness_bruteforce(A: np.ndarray) -> np.ndarray:
    """Unordered-pair dependency counts from explicit shortest-path enumeration."""
    n = len(A)
    adj = [np.flatnonzero(A[u]).tolist() for u in range(n)]

    def paths(s, t):
        dist = {s: 0}
        q = deque([s])
        while q:
            x = q.popleft()
            for y in adj[x]:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    q.append(y)
        if t not in dist:
            return []
        out = []

        def walk(path):
            x = path[-1]
            if x == t:
                out.append(path)
                return
            for y in adj[x]:
                if dist.get(y) == dist[x] + 1 and y in dist:
                    walk(path + [y])

        walk([s])
        return [p for p in out if len(p) - 1 == dist[t]]

    bc = np.zeros(n)
    for s, t in itertools.combinations(range(n), 2):
        ps = paths(s, t)
        if not ps:
            continue
        for p in ps:
            for v in p[1:-1]:
                bc[v] += 1.0 / len(ps)
    return bc


def best_permutation_agreement(labels, truth) -> float:
    """Fraction of nodes agreeing under the best one-to-one label matching."""
    from scipy.optimize import linear_sum_assignment

    a = np.unique(labels, return_inverse=True)[1]
    b = np.unique(truth, return_inverse=True)[1]
    M = np.zeros((a.max() + 1, b.max() + 1))
    np.add.at(M, (a, b), 1)
    r, c = linear_sum_assignment(-M)
    return M[r, c].sum() / len(labels)


def dominated_fraction(cover, truth_labels) -> float:
    """Fraction of nodes in at least one community whose strict majority is their own block."""
    good = 0
    for v in range(cover.n):
        for c in cover.communities_of(v).tolist():
            members = cover.communities[c]
            counts = np.bincount(truth_labels[members])
            if counts.argmax() == truth_labels[v] and counts.max() * 2 > len(members):
                good += 1
                break
    return good / cover.n
