"""Synthetic stand-ins for the rating/trust and labelled-anomaly datasets.

Both generators are seeded and write the same text formats the loaders read,
so the real files can be dropped in place of the synthetic ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from cdbench.errors import ValidationError
from cdbench.graph import Graph, write_edge_list
from cdbench.recsys import RatingsTable, write_ratings


@dataclass
class SocialRatings:
    graph: Graph  # directed trust graph
    ratings: RatingsTable
    blocks: np.ndarray  # planted community of each user


@dataclass
class LabelledGraph:
    graph: Graph
    labels: np.ndarray  # 0 normal, 1 anomaly
    blocks: np.ndarray


def _block_sizes(rng, n, k, min_size):
    w = rng.dirichlet(np.full(k, 3.0))
    sizes = np.maximum(min_size, np.floor(w * (n - k * min_size)).astype(int) + min_size)
    sizes[-1] += n - sizes.sum()
    if sizes[-1] < 1:
        raise ValidationError("block sizes do not fit")
    return sizes


def social_ratings(
    n_users: int = 2000,
    n_items: int = 3000,
    n_blocks: int = 16,
    mean_out_degree: float = 6.0,
    p_internal: float = 0.85,
    pool_size: int = 120,
    mean_ratings: float = 7.0,
    latent_dim: int = 5,
    seed: int = 0,
) -> SocialRatings:
    """Directed trust graph with planted communities plus community-driven ratings.

    Out-degrees and popularity are heavy tailed. Users mostly trust members of
    their own block and mostly rate items from their block's pool; a block's
    shared taste vector drives the latent part of every member's ratings.
    """
    rng = np.random.default_rng(seed)
    sizes = _block_sizes(rng, n_users, n_blocks, 20)
    blocks = np.repeat(np.arange(n_blocks), sizes)
    members = [np.flatnonzero(blocks == b) for b in range(n_blocks)]
    activity = rng.pareto(2.5, n_users) + 1.0
    popularity = rng.pareto(2.0, n_users) + 1.0

    out_deg = np.clip(np.round(activity * mean_out_degree / 1.67), 1, 150).astype(int)
    src, dst = [], []
    for u in range(n_users):
        d = out_deg[u]
        inside = rng.random(d) < p_internal
        pool = members[blocks[u]]
        p = popularity[pool] / popularity[pool].sum()
        n_in = int(inside.sum())
        if n_in:
            src.append(np.full(n_in, u))
            dst.append(rng.choice(pool, size=n_in, p=p))
        n_out = d - n_in
        if n_out:
            src.append(np.full(n_out, u))
            dst.append(rng.integers(n_users, size=n_out))
    src = np.concatenate(src)
    dst = np.concatenate(dst)
    ids = tuple(f"u{i}" for i in range(n_users))
    graph = Graph.from_arrays(n_users, src, dst, None, directed=True, node_ids=ids)

    taste = rng.normal(0.0, 1.0, (n_blocks, latent_dim))
    user_vec = taste[blocks] + rng.normal(0.0, 0.3, (n_users, latent_dim))
    item_vec = rng.normal(0.0, 1.0 / np.sqrt(latent_dim), (n_items, latent_dim))
    user_bias = rng.normal(0.0, 0.3, n_users)
    item_bias = rng.normal(0.0, 0.3, n_items)
    pools = [rng.choice(n_items, size=pool_size, replace=False) for _ in range(n_blocks)]
    n_rate = np.clip(np.round(activity * mean_ratings / 1.67), 2, pool_size // 2).astype(int)

    triples = []
    for u in range(n_users):
        k = n_rate[u]
        from_pool = rng.random(k) < p_internal
        items = np.where(from_pool, rng.choice(pools[blocks[u]], size=k), rng.integers(n_items, size=k))
        items = np.unique(items)
        raw = 3.6 + user_bias[u] + item_bias[items] + 0.8 * item_vec[items] @ user_vec[u]
        raw = raw + rng.normal(0.0, 0.5, len(items))
        vals = np.clip(np.round(raw), 1, 5)
        triples.extend((ids[u], f"i{i}", float(r)) for i, r in zip(items.tolist(), vals.tolist()))
    return SocialRatings(graph, RatingsTable.from_triples(triples), blocks)


def labelled_anomalies(
    n_nodes: int = 2288,
    n_anomalies: int = 250,
    n_blocks: int = 24,
    p_in: float = 0.12,
    p_out_edges: float = 0.3,
    anomaly_degree: float = 8.0,
    seed: int = 0,
) -> LabelledGraph:
    """Planted-partition graph with injected bridge-like anomaly nodes.

    Normal nodes sit in dense blocks and occasionally link out (``p_out_edges``
    expected external edges each). Anomaly nodes keep the degree profile of a
    normal node but scatter their links across many blocks with few links
    among their own neighbours, giving them many communities per neighbour and
    a star-like ego-net.
    """
    rng = np.random.default_rng(seed)
    n_normal = n_nodes - n_anomalies
    if n_normal < n_blocks:
        raise ValidationError("too few normal nodes")
    sizes = _block_sizes(rng, n_normal, n_blocks, 20)
    blocks = np.concatenate([np.repeat(np.arange(n_blocks), sizes), np.full(n_anomalies, -1)])
    src, dst = [], []
    start = 0
    for s in sizes.tolist():
        iu, ju = np.triu_indices(s, 1)
        keep = rng.random(len(iu)) < p_in
        src.append(iu[keep] + start)
        dst.append(ju[keep] + start)
        start += s
    n_ext = rng.poisson(p_out_edges * n_normal / 2)
    src.append(rng.integers(n_normal, size=n_ext))
    dst.append(rng.integers(n_normal, size=n_ext))

    members = [np.flatnonzero(blocks == b) for b in range(n_blocks)]
    for a in range(n_normal, n_nodes):
        home = int(rng.integers(n_blocks))
        blocks[a] = home
        d = max(2, int(rng.poisson(anomaly_degree)))
        n_home = d // 2
        src.append(np.full(d, a))
        targets = [rng.choice(members[home], size=n_home, replace=False)]
        others = rng.choice(np.delete(np.arange(n_blocks), home), size=d - n_home)
        targets.append(np.array([rng.choice(members[b]) for b in others.tolist()], dtype=np.int64))
        dst.append(np.concatenate(targets))
    src = np.concatenate(src)
    dst = np.concatenate(dst)

    perm = rng.permutation(n_nodes)  # hide the anomalies' position in the id order
    ids = tuple(str(int(perm[v])) for v in range(n_nodes))
    g = Graph.from_arrays(n_nodes, src, dst, None, directed=False, node_ids=ids)
    labels = np.zeros(n_nodes, dtype=np.int64)
    labels[n_normal:] = 1
    return LabelledGraph(g, labels, blocks)


def write_social_ratings(data: SocialRatings, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"graph": out / "trust.txt", "ratings": out / "ratings.txt"}
    write_edge_list(data.graph, paths["graph"])
    write_ratings(data.ratings, paths["ratings"])
    return paths


def write_labelled(data: LabelledGraph, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"graph": out / "graph.txt", "labels": out / "labels.txt"}
    write_edge_list(data.graph, paths["graph"])
    with open(paths["labels"], "w", encoding="utf-8") as fh:
        for v in range(data.graph.n):
            fh.write(f"{data.graph.node_ids[v]}\t{int(data.labels[v])}\n")
    return paths
