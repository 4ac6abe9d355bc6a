import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cdbench.centrality import (
    CentralityKind, centrality_scores, community_center, community_centers, eigenvector, propensity,
)
from cdbench.communities.cover import Cover
from cdbench.errors import ValidationError
from cdbench.graph import Graph
from helpers import STAR4, betweenness_bruteforce, dense, from_pairs, graph, random_graph


def test_betweenness_examples():
    path = graph("0 1\n1 2\n")
    assert centrality_scores(path, "betweenness").tolist() == [0.0, 1.0, 0.0]
    star = graph(STAR4)
    assert centrality_scores(star, "betweenness").tolist() == [6.0, 0, 0, 0, 0]


@settings(max_examples=150)
@given(st.integers(0, 2**32 - 1))
def test_brandes_matches_path_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    g = random_graph(rng, n, rng.uniform(0.1, 0.8))
    got = centrality_scores(g, "betweenness")
    np.testing.assert_allclose(got, betweenness_bruteforce(dense(g)), atol=1e-9)


def test_closeness_component_scaled():
    # path 0-1-2 plus isolated 3: middle reaches 2 nodes at distance 1 each
    g = from_pairs(4, [(0, 1), (1, 2)])
    c = centrality_scores(g, "closeness")
    assert c[1] == pytest.approx(2**2 / (3 * 2))
    assert c[0] == pytest.approx(2**2 / (3 * 3))
    assert c[3] == 0.0


def test_eigenvector_cycle_and_residual():
    c5 = from_pairs(5, [(i, (i + 1) % 5) for i in range(5)])
    x = centrality_scores(c5, "eigenvector")
    np.testing.assert_allclose(x, x[0], atol=1e-9)
    rng = np.random.default_rng(1)
    g = random_graph(rng, 12, 0.4)
    x = eigenvector(g)
    A = dense(g)
    lam = x @ A @ x
    assert np.linalg.norm(A @ x - lam * x) < 1e-6
    assert np.linalg.norm(x) == pytest.approx(1.0)


def test_directed_kinds():
    g = graph("a b\nc b\nb d\n", directed=True)
    assert centrality_scores(g, "indegree").tolist() == [0, 2, 0, 1]
    assert centrality_scores(g, "outdegree").tolist() == [1, 1, 1, 0]
    with pytest.raises(ValidationError):
        centrality_scores(g.undirected, "indegree")


def test_random_kind_is_seeded():
    g = graph(STAR4)
    assert (centrality_scores(g, "random", 3) == centrality_scores(g, "random", 3)).all()
    assert not (centrality_scores(g, "random", 3) == centrality_scores(g, "random", 4)).all()


def test_propensity_examples():
    g = from_pairs(9, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (6, 7)])
    cover = Cover(9, [[0, 1, 2], [3, 4, 5], [8]])
    a = propensity(g, cover, "degree")
    assert [a[(u, 0)] for u in range(3)] == [1.0, 1.0, 1.0]
    b = propensity(g, cover, "betweenness")
    assert [b[(u, 1)] for u in (3, 4, 5)] == [0.0, 1.0, 0.0]
    assert b[(8, 2)] == 0.0
    with pytest.raises(ValidationError):
        propensity(g, Cover.from_labels([0] * g.n), "eigenvector")


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["degree", "betweenness", "closeness"]))
def test_propensity_permutation_equivariant(seed, kind):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 10))
    g = random_graph(rng, n, 0.5)
    labels = rng.integers(0, 3, n)
    perm = rng.permutation(n)  # new index of old node v is perm[v]
    src, dst, _ = g.edges()
    h = Graph.from_arrays(n, perm[src], perm[dst], directed=False)
    relabelled = np.empty(n, dtype=np.int64)
    relabelled[perm] = labels
    cover_g = Cover.from_labels(labels)
    cover_h = Cover.from_labels(relabelled)
    ag = propensity(g, cover_g, kind)
    ah = propensity(h, cover_h, kind)
    for (u, c), val in ag.items():
        members = cover_g.communities[c]
        ch = cover_h.communities_of(int(perm[members[0]]))[0]
        assert ah[(int(perm[u]), int(ch))] == pytest.approx(val, abs=1e-12)
    assert all(0.0 <= v <= 1.0 for v in ag.values())


def test_center_examples():
    star = graph(STAR4)
    assert community_center(star, range(5), "degree") == star.index_of("0")
    assert community_center(star, [3], "betweenness") == 3
    g = graph("b a\nc d\n")  # ids sorted: a b c d, all degree 1
    assert g.node_ids[community_center(g, range(4), "degree")] == "a"
    assert community_center(star, range(5), "random", seed=1) in range(5)


def test_center_tie_break_uses_external_id_order():
    g = graph("10 2\n")  # ids sort numerically: "2" < "10"
    assert g.node_ids[community_center(g, [0, 1], "degree")] == "2"


def test_center_weight_scaling_invariant():
    g = graph("a b 1\nb c 2\nc d 3\na c 1\n", weighted=True, directed=True)
    src, dst, w = g.edges()
    h = Graph.from_arrays(g.n, src, dst, w * 7.5, directed=True, node_ids=g.node_ids)
    for kind in ("degree", "indegree", "outdegree"):
        assert community_center(g, range(4), kind) == community_center(h, range(4), kind)


def test_community_centers_sub_seeds():
    g = graph("0 1\n1 2\n2 3\n3 4\n4 5\n")
    cover = Cover(6, [[0, 1, 2], [3, 4, 5]])
    centers = community_centers(g, cover, CentralityKind.BETWEENNESS)
    assert centers.tolist() == [1, 4]
