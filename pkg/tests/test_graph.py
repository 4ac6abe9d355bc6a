import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cdbench.errors import ParseError, ValidationError
from cdbench.graph import (
    Graph, ego_network, id_key, load_edge_list, load_node_labels, planted_partition, subgraph, write_edge_list,
)
from helpers import STAR4, graph


def test_path_graph():
    g = graph("1 2\n2 3\n")
    assert (g.n, g.m) == (3, 2)
    assert g.degree[g.index_of("2")] == 2


def test_duplicate_edges_collapse_and_weights_sum():
    assert graph("1 2\n1 2\n").m == 1
    g = graph("1 2 0.5\n2 1 1.5\n", weighted=True)
    assert g.m == 1
    assert g.edge_weights(0).tolist() == [2.0]


def test_self_loops_dropped_and_separators():
    g = graph("# comment\n1,1\n1\t2\n\n2 3\n")
    assert g.m == 2
    assert not g.has_edge(0, 0)


def test_parse_error_reports_line():
    with pytest.raises(ParseError) as exc:
        graph("1 2\n3\n")
    assert exc.value.lineno == 2
    assert "line 2" in str(exc.value)


def test_bad_weight_and_negative_weight():
    with pytest.raises(ParseError):
        graph("1 2 x\n", weighted=True)
    with pytest.raises(ValidationError):
        graph("1 2 -1\n", weighted=True)


def test_external_ids_sorted_numerically_then_lexically():
    g = graph("10 2\nb a\n2 a\n")
    assert g.node_ids == ("2", "10", "a", "b")
    assert sorted(["b", "10", "2"], key=id_key) == ["2", "10", "b"]


def test_directed_storage_and_symmetrisation():
    g = graph("1 2\n2 1\n2 3\n", directed=True)
    assert g.m == 3
    assert g.has_edge(1, 2) and not g.has_edge(2, 1)
    h = g.undirected
    assert not h.directed and h.m == 2
    assert g.in_degree.tolist() == [1, 1, 1]


def test_round_trip(tmp_path):
    g = graph("1 2 2.5\n2 3 1\n3 1 4\n", weighted=True)
    path = tmp_path / "g.txt"
    write_edge_list(g, path)
    g2 = load_edge_list(path, weighted=True)
    assert g2.content_hash == g.content_hash


def test_subgraph_examples():
    tri = graph("0 1\n1 2\n0 2\n")
    s = subgraph(tri, [0, 1])
    assert (s.n, s.m) == (2, 1)
    assert s.origin.tolist() == [0, 1]
    leaves = subgraph(graph(STAR4), [1, 2, 3, 4])
    assert (leaves.n, leaves.m) == (4, 0)
    with pytest.raises(ValidationError):
        subgraph(tri, [5])


def test_ego_network_examples():
    tri = graph("0 1\n1 2\n0 2\n")
    assert ego_network(tri, 0).m == 3
    star = graph(STAR4)
    e = ego_network(star, star.index_of("0"), include_ego=False)
    assert (e.n, e.m) == (4, 0)
    path = graph("a b\nb c\n")
    e = ego_network(path, path.index_of("b"), include_ego=False)
    assert e.node_ids == ("a", "c") and e.m == 0


def test_planted_partition_extremes_and_determinism():
    g, truth = planted_partition(2, 3, 1.0, 0.0, seed=0)
    assert g.m == 6 and truth.k == 2
    g1, _ = planted_partition(3, 10, 0.5, 0.1, seed=4)
    g2, _ = planted_partition(3, 10, 0.5, 0.1, seed=4)
    assert g1.content_hash == g2.content_hash
    with pytest.raises(ValidationError):
        planted_partition(2, 3, 0.1, 0.5, seed=0)
    with pytest.raises(ValidationError):
        planted_partition(1000, 100, 0.5, 0.1, seed=0)


def test_planted_components_match_truth():
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components

    g, truth = planted_partition(3, 10, 1.0, 0.0, seed=1)
    A = csr_matrix((np.ones(len(g.indices)), g.indices, g.indptr), shape=(g.n, g.n))
    k, comp = connected_components(A)
    assert k == 3
    assert (comp == truth.labels()).all()


def test_node_labels(tmp_path):
    g = graph("a b\nb c\n")
    labels = load_node_labels(io.StringIO("a 0\nc 1\n"), g)
    assert labels.tolist() == [0, -1, 1]
    with pytest.raises(ValidationError):
        load_node_labels(io.StringIO("a 0\nb 2\n"))
    with pytest.raises(ParseError):
        load_node_labels(io.StringIO("a zero\n"))


edge_lists = st.integers(1, 12).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=40))
)


@given(edge_lists, st.booleans())
def test_csr_invariants(data, directed):
    n, pairs = data
    src = np.array([p[0] for p in pairs], dtype=np.int64)
    dst = np.array([p[1] for p in pairs], dtype=np.int64)
    g = Graph.from_arrays(n, src, dst, directed=directed)
    for v in range(n):
        row = g.neighbors(v)
        assert np.all(np.diff(row) > 0)
        assert v not in row
    if not directed:
        assert g.degree.sum() == 2 * g.m
        for u, v, _ in zip(*g.edges()):
            assert g.has_edge(v, u)
    s = subgraph(g, range(n))
    assert s.m == g.m and (s.degree == g.degree).all()


@given(edge_lists)
def test_text_round_trip(data):
    n, pairs = data
    text = "".join(f"n{u} n{v}\n" for u, v in pairs)
    g = load_edge_list(io.StringIO(text))
    buf = io.StringIO()
    write_edge_list(g, buf)
    g2 = load_edge_list(io.StringIO(buf.getvalue()))
    assert g2.m == g.m

    def named(h):
        src, dst, _ = h.edges()
        return {frozenset((h.node_ids[a], h.node_ids[b])) for a, b in zip(src.tolist(), dst.tolist())}

    assert named(g2) == named(g)
