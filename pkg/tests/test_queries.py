import numpy as np
import pytest
from hypothesis import given, settings

from attrsumm.graph import count_triangles, from_edges
from attrsumm.queries import (
    adjacency_query,
    attribute_query,
    centrality_query,
    degree_query,
    estimated_degrees,
    triangle_density_error,
    triangle_estimate,
    triangle_query,
)
from attrsumm.sparsify import irreducible_bits, sparsify
from attrsumm.summary import initial_summary, storage_cost_bits
from conftest import graph_and_partition, random_graph, summary_from_partition
from oracles import block_expectation, dense_adjacency, expected_triangles, triangle_count

STAR = [(0, 1), (0, 2), (0, 3)]


def one_block(edges, n, attrs=None):
    g = from_edges(edges, n)
    if attrs is not None:
        g = g.with_attributes(np.asarray(attrs), ["x", "y"])
    s, head = summary_from_partition(g, [0] * n)
    return g, s


def test_degree_examples():
    _, s = one_block(STAR, 4)
    assert [degree_query(s, v).value for v in range(4)] == [1.5] * 4
    for m in (3, 5, 8):
        _, s = one_block([(u, v) for u in range(m) for v in range(u + 1, m)], m)
        assert degree_query(s, m - 1).value == m - 1
    with pytest.raises(IndexError):
        degree_query(s, 99)


def test_centrality_examples(rng):
    _, s = one_block(STAR, 4)
    assert centrality_query(s, 2).value == 0.25
    g, _ = random_graph(rng, 30, 0.2)
    ident = initial_summary(g)
    vals = [centrality_query(ident, v).value for v in range(30)]
    np.testing.assert_allclose(vals, g.degrees() / (2 * g.m))
    assert sum(vals) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        centrality_query(initial_summary(from_edges([], 3)), 0)


def test_attribute_examples():
    _, s = one_block(STAR, 4, attrs=[1, 1, 1, 1])
    rng = np.random.default_rng(0)
    assert {attribute_query(s, 0, rng).value for _ in range(50)} == {"y"}
    _, s = one_block(STAR, 4, attrs=[0, 1, 1, 0])
    assert attribute_query(s, 3, deterministic=True).value == "x"
    _, s = one_block(STAR, 4, attrs=[0, 0, 1, 0])
    rng = np.random.default_rng(7)
    draws = [attribute_query(s, 1, rng).value for _ in range(100_000)]
    assert draws.count("x") / len(draws) == pytest.approx(0.75, abs=0.01)


def test_adjacency_answers(rng):
    g, edges = random_graph(rng, 25, 0.3)
    labels = rng.integers(0, 5, 25).tolist()
    s, _ = summary_from_partition(g, labels)
    approx = block_expectation(dense_adjacency(25, edges), labels)
    for u in range(25):
        for v in range(25):
            ans = adjacency_query(s, u, v)
            assert 0.0 <= ans.value <= 1.0
            assert ans.value == pytest.approx(approx[u, v])


def test_triangle_examples():
    _, s = one_block([(0, 1), (1, 2), (0, 2)], 3)
    assert triangle_query(s).value == 1.0
    # two blocks of two, each with its inner edge, fully joined: a K_4
    edges = [(0, 1), (2, 3), (0, 2), (0, 3), (1, 2), (1, 3)]
    g = from_edges(edges, 4)
    s, _ = summary_from_partition(g, [0, 0, 1, 1])
    approx = block_expectation(dense_adjacency(4, edges), [0, 0, 1, 1])
    assert triangle_estimate(s) == pytest.approx(expected_triangles(approx)) == 4.0
    _, s = one_block([(u, v) for u in range(6) for v in range(u + 1, 6)], 6)
    g = from_edges([(u, v) for u in range(6) for v in range(u + 1, 6)], 6)
    assert triangle_density_error(s, g) == 0.0
    assert triangle_density_error(initial_summary(from_edges(STAR, 4)), from_edges(STAR, 4)) is None


@given(graph_and_partition(max_n=25))
@settings(max_examples=80)
def test_triangle_estimate_matches_brute_force(case):
    g, edges, labels, _ = case
    s, _ = summary_from_partition(g, labels)
    approx = block_expectation(dense_adjacency(g.n, edges), labels)
    assert triangle_estimate(s) == pytest.approx(expected_triangles(approx), abs=1e-6)


@given(graph_and_partition(max_n=40, n_classes=2))
def test_identity_summary_is_exact(case):
    g, edges, _, rng = case
    s = initial_summary(g)
    np.testing.assert_array_equal(estimated_degrees(s), g.degrees())
    assert triangle_estimate(s) == count_triangles(g) == triangle_count(dense_adjacency(g.n, edges))
    adj = dense_adjacency(g.n, edges)
    for u, v in rng.integers(0, g.n, (20, 2)).tolist():
        assert adjacency_query(s, u, v).value == adj[u, v]
    for v in range(g.n):
        assert attribute_query(s, v, rng).value == g.attr_labels[g.attr[v]]
        if g.m:
            assert centrality_query(s, v).value == g.degrees()[v] / (2 * g.m)


@given(graph_and_partition(max_n=60))
def test_degree_mass_is_conserved(case):
    g, _, labels, _ = case
    s, _ = summary_from_partition(g, labels)
    assert estimated_degrees(s).sum() == pytest.approx(2 * g.m, abs=1e-6)


def test_sparsified_summary_loses_degree_mass(rng):
    # dropped superedges are no longer represented, so the conserved total is 2m - 2*dropped
    g, _ = random_graph(rng, 40, 0.3)
    s, _ = summary_from_partition(g, rng.integers(0, 5, 40).tolist())
    t = sparsify(s, (storage_cost_bits(s) + irreducible_bits(s)) // 2)
    assert t.dropped > 0
    assert estimated_degrees(t).sum() == pytest.approx(2 * (g.m - t.dropped))
