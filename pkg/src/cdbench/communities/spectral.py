from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh
from sklearn.cluster import KMeans

from cdbench.errors import ValidationError
from cdbench.graph import Graph
from cdbench.communities.cover import Cover

EIG_TOL = 1e-6
_DENSE_LIMIT = 400


def laplacian_embedding(g: Graph, k: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors for the ``k`` smallest eigenvalues of I - D^-1/2 A D^-1/2.

    Isolated nodes get a zero row in the normalised adjacency. Small graphs are
    solved densely; larger ones use Lanczos on I + D^-1/2 A D^-1/2, whose top
    eigenvectors are the Laplacian's bottom ones.
    """
    h = g.undirected
    n = h.n
    w = h.weights if h.weights is not None else np.ones(len(h.indices))
    adj = sp.csr_matrix((w, h.indices, h.indptr), shape=(n, n))
    deg = h.strength
    inv_sqrt = np.zeros(n)
    inv_sqrt[deg > 0] = 1.0 / np.sqrt(deg[deg > 0])
    d = sp.diags(inv_sqrt)
    norm_adj = (d @ adj @ d).tocsr()
    if n <= _DENSE_LIMIT or k >= n - 1:
        vals, vecs = np.linalg.eigh(np.eye(n) - norm_adj.toarray())
        return vals[:k], vecs[:, :k]
    shifted = sp.identity(n, format="csr") + norm_adj
    v0 = np.random.default_rng(seed).random(n) + 0.5
    vals, vecs = eigsh(shifted, k=k, which="LA", tol=EIG_TOL, v0=v0, maxiter=max(1000, 20 * n))
    order = np.argsort(-vals)
    return 2.0 - vals[order], vecs[:, order]


def spectral(g: Graph, k: int, seed: int = 0, n_init: int = 10) -> Cover:
    """Normalised spectral clustering: Laplacian embedding, row normalisation, k-means."""
    n = g.n
    if k < 1:
        raise ValidationError("k must be >= 1")
    if k > n:
        raise ValidationError(f"k={k} exceeds node count {n}")
    if k == 1:
        return Cover.from_labels(np.zeros(n, dtype=np.int64), meta={"algorithm": "spectral", "seed": seed})
    _, emb = laplacian_embedding(g, k, seed)
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    emb = np.divide(emb, norms, out=np.zeros_like(emb), where=norms > 1e-12)
    km = KMeans(n_clusters=k, n_init=n_init, random_state=seed)
    labels = km.fit_predict(emb)
    return Cover.from_labels(labels, meta={"algorithm": "spectral", "seed": seed, "k": k})
