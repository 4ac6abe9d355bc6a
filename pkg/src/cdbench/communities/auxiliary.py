from __future__ import annotations

import numpy as np

from cdbench.errors import ValidationError
from cdbench.graph import Graph
from cdbench.communities.cover import Cover


def border_nodes(g: Graph, partition: Cover) -> np.ndarray:
    """Boolean mask of nodes with at least one neighbour in another community."""
    labels = partition.labels()
    h = g.undirected
    src = h.row_sources()
    cross = labels[src] != labels[h.indices]
    return np.bincount(src[cross], minlength=h.n) > 0


def auxiliary_communities(g: Graph, partition: Cover) -> Cover:
    """Keep the partition and add, per community, one community of its border nodes."""
    if not partition.is_partition:
        raise ValidationError("auxiliary communities are built from a partition")
    border = border_nodes(g, partition)
    comms = list(partition.communities)
    for c in range(partition.k):
        members = partition.communities[c]
        edge = members[border[members]]
        if edge.size:
            comms.append(edge)
    meta = dict(partition.meta)
    meta["auxiliary"] = len(comms) - partition.k
    return Cover(partition.n, comms, meta)
