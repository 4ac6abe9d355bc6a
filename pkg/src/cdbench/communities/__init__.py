"""Community detection algorithms, covers and quality functions."""

from __future__ import annotations

import numpy as np

from cdbench.communities.auxiliary import auxiliary_communities, border_nodes
from cdbench.communities.bigclam import bigclam
from cdbench.communities.cover import Cover, read_cover, write_cover
from cdbench.communities.ego_splitting import ego_splitting
from cdbench.communities.label_propagation import label_propagation
from cdbench.communities.louvain import louvain
from cdbench.communities.quality import QualityScore, density, modularity
from cdbench.communities.spectral import spectral

PARTITION_ALGORITHMS = ("louvain", "spectral", "label_propagation", "single_community")
OVERLAPPING_ALGORITHMS = ("ego_splitting", "bigclam")
ALGORITHMS = ("louvain", "spectral", "label_propagation", "ego_splitting", "bigclam", "single_community")


def single_community(g) -> Cover:
    return Cover.from_labels(np.zeros(g.n, dtype=np.int64), meta={"algorithm": "single_community"})


def detect(g, algorithm: str, seed: int = 0, **params) -> Cover:
    """Run one of the named algorithms.

    ``spectral`` and ``bigclam`` take ``k``; when it is missing it defaults to
    the number of Louvain communities on the same graph.
    """
    if algorithm == "louvain":
        return louvain(g, seed)
    if algorithm == "label_propagation":
        return label_propagation(g, seed, params.get("max_iters", 100))
    if algorithm == "ego_splitting":
        return ego_splitting(g, seed, params.get("max_iters", 100))
    if algorithm == "single_community":
        return single_community(g)
    if algorithm in ("spectral", "bigclam"):
        k = params.get("k")
        if k is None:
            k = louvain(g, seed).k
        if algorithm == "spectral":
            return spectral(g, int(k), seed)
        return bigclam(g, int(k), params.get("iters", 500), seed)
    raise ValueError(f"unknown algorithm {algorithm!r}")


__all__ = [
    "ALGORITHMS",
    "Cover",
    "OVERLAPPING_ALGORITHMS",
    "PARTITION_ALGORITHMS",
    "QualityScore",
    "auxiliary_communities",
    "bigclam",
    "border_nodes",
    "density",
    "detect",
    "ego_splitting",
    "label_propagation",
    "louvain",
    "modularity",
    "read_cover",
    "single_community",
    "spectral",
    "write_cover",
]
