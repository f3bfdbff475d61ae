import gzip
import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from attrsumm.evaluation import DatasetMissing, load_dataset
from attrsumm.graph import GraphFormatError, count_triangles, from_edges, load_attributes, load_edge_list
from oracles import dense_adjacency, triangle_count


def test_path_graph():
    g = load_edge_list(b"0 1\n1 2")
    assert (g.n, g.m) == (3, 2)
    assert g.degrees().tolist() == [1, 2, 1]
    assert g.degree(1) == 2


def test_duplicates_and_self_loops_dropped():
    g = load_edge_list(b"0 1\n1 0\n0 0")
    assert (g.n, g.m) == (2, 1)


def test_comments_extra_columns_and_string_labels():
    g = load_edge_list(b"# header\n% other\nb a 0.5\nc a 7\n\n")
    assert g.labels == ("a", "b", "c")
    assert g.m == 2
    assert g.degree(g.index_of("a")) == 2


def test_numeric_labels_sorted_numerically():
    g = load_edge_list(b"10 2\n2 1")
    assert g.labels == ("1", "2", "10")


def test_isolated_vertex_degree():
    g = from_edges([(0, 1)], 3)
    assert g.degree(2) == 0


def test_malformed_line_reports_line_number():
    with pytest.raises(GraphFormatError) as exc:
        load_edge_list(b"0 1\n# c\n7\n")
    assert exc.value.lineno == 3


@pytest.mark.parametrize("text", [b"", b"# only comments\n", b"3 3\n"])
def test_empty_graph_is_an_error(text):
    with pytest.raises(GraphFormatError):
        load_edge_list(text)


def test_gzip_input(tmp_path):
    p = tmp_path / "g.txt.gz"
    with gzip.open(p, "wt") as fh:
        fh.write("0 1\n1 2\n2 0\n")
    assert load_edge_list(p).m == 3


def test_attributes_single_class():
    g = load_attributes(load_edge_list(b"0 1\n1 2"), b"0\tM\n1\tM\n2\tM\n")
    assert g.n_classes == 1
    assert g.attr.tolist() == [0, 0, 0]


def test_attributes_unlisted_vertex_gets_unknown():
    g = load_attributes(load_edge_list(b"0 1\n1 2"), b"0\tM\n1\tF\n")
    assert g.n_classes == 3
    assert g.attr_labels[g.attr[2]] == "unknown"
    assert {g.attr_labels[g.attr[0]], g.attr_labels[g.attr[1]]} == {"M", "F"}


def test_attributes_errors():
    g = load_edge_list(b"0 1\n1 2")
    with pytest.raises(GraphFormatError, match="unknown vertex"):
        load_attributes(g, b"9\tM\n")
    with pytest.raises(GraphFormatError, match="both"):
        load_attributes(g, b"0\tM\n0\tF\n")
    # repeating the same value is fine
    assert load_attributes(g, b"0\tM\n0\tM\n").n_classes == 2


def test_triangle_counts():
    k3 = from_edges([(0, 1), (1, 2), (0, 2)], 3)
    assert count_triangles(k3) == 1
    assert count_triangles(from_edges([(0, 1), (1, 2), (2, 3)], 4)) == 0
    k4 = from_edges([(u, v) for u in range(4) for v in range(u + 1, 4)], 4)
    # every one of the C(4,3) vertex triples of K4 is a triangle
    assert count_triangles(k4) == 4


@st.composite
def edge_lists(draw):
    n = draw(st.integers(2, 40))
    edges = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=150))
    return n, edges


@given(edge_lists())
def test_cross_links_are_involutions(data):
    n, edges = data
    g = from_edges(edges, n)
    for u in range(n):
        for p, (v, q) in enumerate(g.adjacency(u)):
            back, r = g.adjacency(v)[q]
            assert back == u and r == p
    assert int(g.degrees().sum()) == 2 * g.m
    # no self loops, no parallel edges, symmetric
    a = g.adjacency_matrix().toarray()
    assert (np.diag(a) == 0).all() and (a == a.T).all() and a.max(initial=0) <= 1


@given(edge_lists())
def test_reingest_is_identical(data):
    n, edges = data
    edges = [e for e in edges if e[0] != e[1]]
    if not edges:
        return
    g = load_edge_list("\n".join(f"{u} {v}" for u, v in edges).encode())
    buf = io.StringIO()
    g.write_edge_list(buf)
    assert load_edge_list(buf.getvalue().encode()) == g


@given(edge_lists())
def test_triangle_count_matches_enumeration(data):
    n, edges = data
    g = from_edges(edges, n)
    assert count_triangles(g) == triangle_count(dense_adjacency(n, edges))


def _facebook():
    try:
        return load_dataset("facebook")
    except DatasetMissing:
        pytest.skip("facebook dataset not available")


def test_facebook_size():
    g = _facebook()
    assert (g.n, g.m) == (4039, 88234)


def test_facebook_max_degree_matches_raw_scan():
    g = _facebook()
    from attrsumm.evaluation import _find, DATASETS

    path = _find(DATASETS["facebook"][0])
    seen = set()
    deg = {}
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rt") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            u, v = line.split()[:2]
            if u == v or (u, v) in seen or (v, u) in seen:
                continue
            seen.add((u, v))
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
    assert int(g.degrees().max()) == max(deg.values())
