from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cdbench.errors import ValidationError
from cdbench.graph import Graph, as_nodeset, subgraph
from cdbench.communities.cover import Cover


@dataclass(frozen=True)
class QualityScore:
    value: float
    kind: str  # "modularity" | "density"

    def __float__(self) -> float:
        return self.value


def modularity(g: Graph, cover: Cover) -> QualityScore:
    """Newman modularity of a partition on the symmetrised graph.

    Summed over ordered node pairs (including u == v) as
    (1/2m) * sum [A_uv - deg(u) deg(v) / 2m] * [same community].
    Edge weights enter A and the degrees when present.
    """
    if not cover.is_partition:
        raise ValidationError("modularity requires a non-overlapping partition")
    if cover.n != g.n:
        raise ValidationError("cover and graph sizes differ")
    h = g.undirected
    strength = h.strength
    two_m = float(strength.sum())
    if two_m == 0:
        raise ValidationError("modularity undefined for a graph without edges")
    labels = cover.labels()
    src = h.row_sources()
    w = h.weights if h.weights is not None else np.ones(len(h.indices))
    internal = float(w[labels[src] == labels[h.indices]].sum())
    tot = np.bincount(labels, weights=strength, minlength=cover.k)
    return QualityScore(internal / two_m - float(np.dot(tot, tot)) / two_m**2, "modularity")


def density(g: Graph, community) -> QualityScore:
    """Fraction of realised node pairs inside ``community``; 0 for a singleton."""
    nodes = as_nodeset(community, g.n)
    if nodes.size == 0:
        raise ValidationError("density of an empty community")
    nc = len(nodes)
    if nc < 2:
        return QualityScore(0.0, "density")
    mc = subgraph(g.undirected, nodes).m
    return QualityScore(2.0 * mc / (nc * (nc - 1)), "density")
