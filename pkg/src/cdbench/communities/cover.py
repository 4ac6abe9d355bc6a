from __future__ import annotations

import hashlib
import os
from typing import Iterable, Sequence

import numpy as np

from cdbench.errors import ParseError, ValidationError
from cdbench.graph import Graph, id_key, iter_records


class Cover:
    """Assignment of nodes to (possibly overlapping) communities.

    ``communities[c]`` is the sorted member array of community ``c``. Ids are
    dense 0..k-1 and no community is empty. A partition is the special case
    where every node has exactly one id.
    """

    def __init__(self, n: int, communities: Sequence[Iterable[int]], meta: dict | None = None):
        comms = []
        for c in communities:
            arr = np.unique(np.asarray(c if isinstance(c, np.ndarray) else list(c), dtype=np.int64))
            if arr.size == 0:
                raise ValidationError("empty community")
            if arr[0] < 0 or arr[-1] >= n:
                raise ValidationError("community member out of range")
            comms.append(arr)
        self.n = int(n)
        self.communities: tuple[np.ndarray, ...] = tuple(comms)
        self.meta = dict(meta or {})
        counts = np.zeros(self.n + 1, dtype=np.int64)
        if comms:
            members = np.concatenate(comms)
            ids = np.repeat(np.arange(len(comms)), [len(c) for c in comms])
            order = np.lexsort((ids, members))
            np.cumsum(np.bincount(members, minlength=self.n), out=counts[1:])
            self._node_ptr = counts
            self._node_comms = ids[order]
        else:
            self._node_ptr = counts
            self._node_comms = np.zeros(0, dtype=np.int64)

    @classmethod
    def from_labels(cls, labels: Sequence[int], meta: dict | None = None) -> Cover:
        """Partition from a label per node; ids renumbered by first appearance."""
        labels = np.asarray(labels, dtype=np.int64)
        _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
        rank = np.empty(len(first), dtype=np.int64)
        rank[np.argsort(first, kind="stable")] = np.arange(len(first))
        dense = rank[inv.ravel()]
        order = np.argsort(dense, kind="stable")
        bounds = np.cumsum(np.bincount(dense, minlength=len(first)))[:-1]
        return cls(len(labels), np.split(order, bounds) if len(labels) else [], meta)

    @classmethod
    def from_memberships(cls, n: int, nodes: Iterable[int], comms: Iterable[int], meta: dict | None = None) -> Cover:
        """Cover from (node, community label) pairs, canonically ordered."""
        nodes = np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes, dtype=np.int64)
        comms = np.asarray(list(comms) if not isinstance(comms, np.ndarray) else comms, dtype=np.int64)
        groups: dict[int, list[int]] = {}
        for v, c in zip(nodes.tolist(), comms.tolist()):
            groups.setdefault(c, []).append(v)
        return cls(n, [np.array(g) for g in groups.values()], meta).canonical()

    def canonical(self) -> Cover:
        """Same cover with communities ordered by their member lists."""
        order = sorted(range(self.k), key=lambda c: self.communities[c].tolist())
        out = Cover(self.n, [self.communities[c] for c in order], self.meta)
        return out

    @property
    def k(self) -> int:
        return len(self.communities)

    def communities_of(self, v: int) -> np.ndarray:
        return self._node_comms[self._node_ptr[v] : self._node_ptr[v + 1]]

    @property
    def membership_counts(self) -> np.ndarray:
        return np.diff(self._node_ptr)

    @property
    def is_partition(self) -> bool:
        return bool(np.all(self.membership_counts == 1))

    @property
    def covers_all(self) -> bool:
        return bool(np.all(self.membership_counts >= 1))

    def labels(self) -> np.ndarray:
        if not self.is_partition:
            raise ValidationError("cover is not a partition")
        return self._node_comms.copy()

    def sizes(self) -> np.ndarray:
        return np.array([len(c) for c in self.communities], dtype=np.int64)

    def same_community(self, u: int, v: int) -> bool:
        return bool(np.intersect1d(self.communities_of(u), self.communities_of(v)).size)

    def stats(self) -> dict:
        sizes = self.sizes()
        counts = self.membership_counts
        return {
            "k": self.k,
            "partition": self.is_partition,
            "min_size": int(sizes.min()) if self.k else 0,
            "median_size": float(np.median(sizes)) if self.k else 0.0,
            "max_size": int(sizes.max()) if self.k else 0,
            "overlap_rate": float(np.mean(counts > 1)) if self.n else 0.0,
            "uncovered": int(np.sum(counts == 0)),
        }

    def to_lines(self, node_ids: Sequence[str] | None = None) -> list[str]:
        ids = node_ids if node_ids is not None else [str(i) for i in range(self.n)]
        return [" ".join(sorted((ids[v] for v in c.tolist()), key=id_key)) for c in self.communities]

    def digest(self) -> str:
        h = hashlib.sha256(str(self.n).encode())
        for c in self.communities:
            h.update(c.tobytes())
            h.update(b"|")
        return h.hexdigest()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Cover):
            return NotImplemented
        return self.n == other.n and self.k == other.k and all(
            np.array_equal(a, b) for a, b in zip(self.communities, other.communities)
        )

    def __repr__(self) -> str:
        kind = "partition" if self.is_partition else "cover"
        return f"Cover({kind}, n={self.n}, k={self.k})"


def write_cover(cover: Cover, dest, g: Graph | None = None) -> None:
    text = "".join(line + "\n" for line in cover.to_lines(g.node_ids if g is not None else None))
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        dest.write(text)


def read_cover(source, g: Graph) -> Cover:
    comms = []
    for lineno, fields in iter_records(source, 1):
        try:
            comms.append([g.index[f] for f in fields])
        except KeyError as exc:
            raise ParseError(f"unknown node id {exc.args[0]!r}", lineno) from None
    return Cover(g.n, comms)
