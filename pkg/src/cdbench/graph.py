"""Immutable CSR graph, edge-list I/O, induced subgraphs and a planted-partition generator."""

from __future__ import annotations

import hashlib
import io
import os
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Iterable, Sequence

import numpy as np

from cdbench.errors import ParseError, ValidationError

_SPLIT = re.compile(r"[,\s]+")

NodeSet = np.ndarray  # strictly increasing int64 indices


def id_key(ext: str):
    """Sort key for external ids: numeric ids numerically, then the rest lexically."""
    try:
        return (0, int(ext), "")
    except ValueError:
        return (1, 0, ext)


def as_nodeset(nodes: Iterable[int], n: int) -> NodeSet:
    arr = np.unique(np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes, dtype=np.int64))
    if arr.size and (arr[0] < 0 or arr[-1] >= n):
        raise ValidationError(f"node index out of range 0..{n - 1}")
    return arr


@dataclass(frozen=True, eq=False)
class Graph:
    """Sparse adjacency in CSR form.

    Undirected graphs store every edge in both endpoint rows. Directed graphs
    store out-neighbours. Rows are sorted, duplicate-free and loop-free.
    ``weights`` is None for unweighted graphs, which behave as weight 1.
    ``origin`` maps node indices back to the parent graph for subgraphs.
    """

    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray | None
    directed: bool
    node_ids: tuple[str, ...]
    origin: np.ndarray | None = field(default=None)

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def m(self) -> int:
        nnz = len(self.indices)
        return nnz if self.directed else nnz // 2

    @property
    def weighted(self) -> bool:
        return self.weights is not None

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def edge_weights(self, v: int) -> np.ndarray:
        lo, hi = self.indptr[v], self.indptr[v + 1]
        if self.weights is None:
            return np.ones(hi - lo)
        return self.weights[lo:hi]

    @cached_property
    def degree(self) -> np.ndarray:
        """Row lengths (out-degree for directed graphs)."""
        return np.diff(self.indptr)

    @cached_property
    def in_degree(self) -> np.ndarray:
        return np.bincount(self.indices, minlength=self.n).astype(np.int64)

    @cached_property
    def strength(self) -> np.ndarray:
        if self.weights is None:
            return self.degree.astype(np.float64)
        return np.bincount(self.row_sources(), weights=self.weights, minlength=self.n)

    @cached_property
    def index(self) -> dict[str, int]:
        return {ext: i for i, ext in enumerate(self.node_ids)}

    def index_of(self, ext: str) -> int:
        return self.index[str(ext)]

    def row_sources(self) -> np.ndarray:
        return np.repeat(np.arange(self.n, dtype=np.int64), self.degree)

    def edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(src, dst, weight) with each undirected edge listed once as src < dst."""
        src = self.row_sources()
        dst = self.indices
        w = self.weights if self.weights is not None else np.ones(len(dst))
        if not self.directed:
            keep = src < dst
            src, dst, w = src[keep], dst[keep], w[keep]
        return src, dst, w

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        pos = np.searchsorted(row, v)
        return bool(pos < len(row) and row[pos] == v)

    @cached_property
    def undirected(self) -> Graph:
        """Symmetrised copy; an edge exists if either direction does, weights summed."""
        if not self.directed:
            return self
        return Graph.from_arrays(
            self.n,
            self.row_sources(),
            self.indices,
            self.weights,
            directed=False,
            node_ids=self.node_ids,
            sum_duplicates=True,
        )

    @cached_property
    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(b"D" if self.directed else b"U")
        h.update(np.ascontiguousarray(self.indptr, dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.indices, dtype=np.int64).tobytes())
        if self.weights is not None:
            h.update(np.ascontiguousarray(self.weights, dtype=np.float64).tobytes())
        h.update("\n".join(self.node_ids).encode())
        return h.hexdigest()

    @classmethod
    def from_arrays(
        cls,
        n: int,
        src: np.ndarray,
        dst: np.ndarray,
        weights: np.ndarray | None = None,
        *,
        directed: bool = False,
        node_ids: Sequence[str] | None = None,
        sum_duplicates: bool = True,
        origin: np.ndarray | None = None,
    ) -> Graph:
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if src.shape != dst.shape:
            raise ValidationError("src and dst lengths differ")
        if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise ValidationError("edge endpoint out of range")
        w = None if weights is None else np.asarray(weights, dtype=np.float64)
        if w is not None and np.any(w < 0):
            raise ValidationError("negative edge weight")
        keep = src != dst
        if w is not None:
            keep &= w > 0
        src, dst = src[keep], dst[keep]
        w = None if w is None else w[keep]
        if not directed:
            src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
            if w is not None:
                w = np.concatenate([w, w])
        key = src * max(n, 1) + dst
        order = np.argsort(key, kind="stable")
        key = key[order]
        uniq, first = np.unique(key, return_index=True)
        if w is not None:
            w = w[order]
            w = np.add.reduceat(w, first) if sum_duplicates else w[first]
        s = uniq // max(n, 1)
        d = uniq % max(n, 1)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(s, minlength=n), out=indptr[1:])
        ids = tuple(str(x) for x in node_ids) if node_ids is not None else tuple(str(i) for i in range(n))
        if len(ids) != n:
            raise ValidationError("node_ids length must equal n")
        return cls(indptr, d.astype(np.int64), w, directed, ids, origin)


def _open_text(source) -> IO[str]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8")
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8"))
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8")


def iter_records(source, min_fields: int):
    """Yield (lineno, fields) for non-comment lines of a delimited text source."""
    fh = _open_text(source)
    close = isinstance(source, (str, os.PathLike))
    try:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f for f in _SPLIT.split(line) if f]
            if len(fields) < min_fields:
                raise ParseError(f"expected at least {min_fields} fields, got {len(fields)}", lineno)
            yield lineno, fields
    finally:
        if close:
            fh.close()


def load_edge_list(source, directed: bool = False, weighted: bool = False) -> Graph:
    """Read ``src dst [weight]`` lines separated by tab, space or comma."""
    src_ext: list[str] = []
    dst_ext: list[str] = []
    wts: list[float] = []
    for lineno, fields in iter_records(source, 2):
        if weighted:
            if len(fields) < 3:
                raise ParseError("missing edge weight", lineno)
            try:
                w = float(fields[2])
            except ValueError:
                raise ParseError(f"bad weight {fields[2]!r}", lineno) from None
            if not np.isfinite(w):
                raise ParseError(f"bad weight {fields[2]!r}", lineno)
            if w < 0:
                raise ValidationError(f"line {lineno}: negative weight {w}")
            wts.append(w)
        src_ext.append(fields[0])
        dst_ext.append(fields[1])
    ids = sorted(set(src_ext) | set(dst_ext), key=id_key)
    index = {e: i for i, e in enumerate(ids)}
    src = np.fromiter((index[e] for e in src_ext), dtype=np.int64, count=len(src_ext))
    dst = np.fromiter((index[e] for e in dst_ext), dtype=np.int64, count=len(dst_ext))
    return Graph.from_arrays(
        len(ids), src, dst, np.asarray(wts) if weighted else None, directed=directed, node_ids=ids
    )


def write_edge_list(g: Graph, dest, sep: str = "\t") -> None:
    src, dst, w = g.edges()
    lines = []
    for s, d, x in zip(src.tolist(), dst.tolist(), w.tolist()):
        row = f"{g.node_ids[s]}{sep}{g.node_ids[d]}"
        if g.weighted:
            row += f"{sep}{x!r}"
        lines.append(row)
    text = "\n".join(lines) + ("\n" if lines else "")
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        dest.write(text)


def load_node_labels(source, g: Graph | None = None) -> dict[str, int] | np.ndarray:
    """Read ``node label`` lines with integer labels.

    Returns an array aligned with ``g`` (-1 for unlabelled nodes) when a graph
    is given, otherwise a dict keyed by external id.
    """
    labels: dict[str, int] = {}
    for lineno, fields in iter_records(source, 2):
        try:
            labels[fields[0]] = int(fields[1])
        except ValueError:
            raise ParseError(f"bad label {fields[1]!r}", lineno) from None
    present = sorted(set(labels.values()))
    if present and present != list(range(len(present))):
        raise ValidationError(f"labels must be dense integers from 0, got {present}")
    if g is None:
        return labels
    out = np.full(g.n, -1, dtype=np.int64)
    for ext, lab in labels.items():
        if ext in g.index:
            out[g.index[ext]] = lab
    return out


def subgraph(g: Graph, nodes: Iterable[int]) -> Graph:
    """Induced subgraph, densely re-indexed; ``origin`` holds the parent indices."""
    keep = as_nodeset(nodes, g.n)
    local = np.full(g.n, -1, dtype=np.int64)
    local[keep] = np.arange(len(keep))
    lo = g.indptr[keep]
    hi = g.indptr[keep + 1]
    counts = hi - lo
    rows = np.repeat(np.arange(len(keep)), counts)
    starts = np.cumsum(counts) - counts
    pos = np.arange(int(counts.sum()), dtype=np.int64) - np.repeat(starts, counts) + np.repeat(lo, counts)
    cols = local[g.indices[pos]]
    mask = cols >= 0
    rows, cols, pos = rows[mask], cols[mask], pos[mask]
    indptr = np.zeros(len(keep) + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=len(keep)), out=indptr[1:])
    w = None if g.weights is None else g.weights[pos]
    ids = tuple(g.node_ids[i] for i in keep.tolist())
    origin = keep if g.origin is None else g.origin[keep]
    return Graph(indptr, cols.astype(np.int64), w, g.directed, ids, origin)


def ego_network(g: Graph, v: int, include_ego: bool = True) -> Graph:
    """Subgraph induced by the neighbours of ``v`` (plus ``v`` unless excluded)."""
    if not 0 <= v < g.n:
        raise ValidationError(f"node {v} out of range")
    h = g.undirected
    nodes = h.neighbors(v)
    if include_ego:
        nodes = np.union1d(nodes, [v])
    return subgraph(g, nodes)


def planted_partition(k: int, size: int, p_in: float, p_out: float, seed: int):
    """Random graph with ``k`` blocks of ``size`` nodes and its ground-truth partition."""
    from cdbench.communities.cover import Cover

    if k < 1 or size < 1:
        raise ValidationError("k and size must be positive")
    if not 0.0 <= p_out <= p_in <= 1.0:
        raise ValidationError("require 0 <= p_out <= p_in <= 1")
    n = k * size
    if n > 50_000:
        raise ValidationError(f"k*size = {n} too large for dense pair sampling")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    block = np.arange(n) // size
    prob = np.where(block[iu] == block[ju], p_in, p_out)
    hit = rng.random(len(iu)) < prob
    g = Graph.from_arrays(n, iu[hit], ju[hit], directed=False)
    truth = Cover.from_labels(block)
    return g, truth
