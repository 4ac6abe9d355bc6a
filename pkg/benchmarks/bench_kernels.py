#!/usr/bin/env python3
"""Time each compiled kernel against its pure-Python fallback and check they agree.

    python benchmarks/bench_kernels.py [--n 600] [--repeat 3] [--pipeline]

``--pipeline`` additionally times a full ``cdbench detect`` run in two
subprocesses, one with CDBENCH_DISABLE_NUMBA=1.
"""

import argparse
import os
import subprocess
import sys
import tempfile
import time

import numpy as np

from cdbench._accel import BACKEND, py
from cdbench.anomaly import local_structure
from cdbench.centrality import brandes, closeness_kernel
from cdbench.communities.bigclam import bigclam_sweep, seed_affiliations
from cdbench.communities.label_propagation import lp_sweep
from cdbench.communities.louvain import move_nodes
from cdbench.datasets import social_ratings
from cdbench.graph import planted_partition, write_edge_list
from cdbench.recsys import TrainConfig, init_model, sgd_epoch


def best_of(fn, make_args, repeat):
    times = []
    out = None
    for _ in range(repeat):
        args = make_args()
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
        out = (out, args)
    return min(times), out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return a.shape == b.shape and np.allclose(a, b, rtol=1e-9, atol=1e-12)
    if isinstance(a, (int, float, np.number)):
        return np.isclose(a, b, rtol=1e-9, atol=1e-12)
    return a == b


def cases(n):
    g, _ = planted_partition(8, n // 8, 0.2, 0.01, seed=0)
    w = np.ones(len(g.indices))
    rng = np.random.default_rng(0)
    order = rng.permutation(g.n).astype(np.int64)
    ties = rng.random(g.n)
    deg = g.degree.astype(np.float64)

    def louvain_args():
        labels = np.arange(g.n, dtype=np.int64)
        return g.indptr, g.indices, w, deg, order, labels, deg.copy(), float(deg.sum())

    def lp_args():
        return g.indptr, g.indices, w, order, ties, np.arange(g.n, dtype=np.int64)

    F0 = seed_affiliations(g, 8, np.random.default_rng(0))

    def bigclam_args():
        F = F0.copy()
        return g.indptr, g.indices, F, F.sum(axis=0), order, 0.1, 0.3, 0.05, 30

    data = social_ratings(n_users=n * 2, n_items=n * 2, seed=0)
    model = init_model(data.ratings, None, None, TrainConfig())
    r = data.ratings
    perm = rng.permutation(len(r)).astype(np.int64)

    def sgd_args():
        m = model.copy()
        return (r.users, r.items, r.values, perm, m.mu, m.bu, m.bi, m.P, m.Q, m.Pc,
                m.comm_ptr, m.comm_idx, m.comm_alpha, 0.005, 0.02)

    return [
        ("louvain.move_nodes", move_nodes, louvain_args),
        ("label_propagation.lp_sweep", lp_sweep, lp_args),
        ("centrality.brandes", brandes, lambda: (g.indptr, g.indices)),
        ("centrality.closeness", closeness_kernel, lambda: (g.indptr, g.indices)),
        ("bigclam.sweep", bigclam_sweep, bigclam_args),
        ("anomaly.local_structure", local_structure, lambda: (g.indptr, g.indices, w)),
        ("recsys.sgd_epoch", sgd_epoch, sgd_args),
    ]


def pipeline(n):
    g, _ = planted_partition(8, n // 8, 0.2, 0.01, seed=0)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "g.txt")
        write_edge_list(g, path)
        for label, flag in (("numba", "0"), ("python", "1")):
            env = dict(os.environ, CDBENCH_DISABLE_NUMBA=flag)
            for alg in ("louvain", "label_propagation", "bigclam"):
                t0 = time.perf_counter()
                subprocess.run([sys.executable, "-m", "cdbench", "detect", path, "--algorithm", alg],
                               env=env, check=True, capture_output=True)
                print(f"  detect {alg:<18} {label:<7} {time.perf_counter() - t0:8.2f} s (incl. startup)")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=600)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--pipeline", action="store_true")
    a = ap.parse_args()
    print(f"backend in this process: {BACKEND}; n = {a.n}")
    if BACKEND != "numba":
        print("numba disabled; unset CDBENCH_DISABLE_NUMBA to compare")
        return
    print(f"{'kernel':<30}{'numba':>12}{'python':>12}{'speedup':>10}  agree")
    for name, kernel, make_args in cases(a.n):
        kernel(*make_args())  # compile
        t_jit, (out_jit, args_jit) = best_of(kernel, make_args, a.repeat)
        t_py, (out_py, args_py) = best_of(py(kernel), make_args, 1)
        ok = same(out_jit, out_py) and all(
            same(x, y) for x, y in zip(args_jit, args_py) if isinstance(x, np.ndarray)
        )
        print(f"{name:<30}{t_jit * 1e3:10.2f}ms{t_py * 1e3:10.1f}ms{t_py / max(t_jit, 1e-9):9.0f}x  {'yes' if ok else 'NO'}")
    if a.pipeline:
        pipeline(a.n)


if __name__ == "__main__":
    main()
