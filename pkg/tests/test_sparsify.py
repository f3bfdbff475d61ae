import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings

from attrsumm.graph import from_edges
from attrsumm.sparsify import (
    edge_drop_key,
    irreducible_bits,
    plan_sparsify,
    sparsify,
    true_delta_re,
)
from attrsumm.summary import (
    bits_per_superedge,
    purity,
    reconstruction_error_closed_form,
    reconstruction_error_exact,
    storage_cost_bits,
)
from conftest import graph_and_partition, random_graph, summary_from_partition
from oracles import block_expectation, dense_adjacency, lp_error


def two_blocks(na, nb, cross):
    """Blocks {0..na-1} and {na..na+nb-1} joined by the given cross edges."""
    g = from_edges(cross, na + nb)
    s, head = summary_from_partition(g, [0] * na + [1] * nb)
    return g, s, head[0], head[1]


def test_printed_key_examples():
    _, s, a, b = two_blocks(10, 10, [(0, 10)])
    assert edge_drop_key(s, a, b) == pytest.approx(-1.98)
    full = [(u, v) for u in range(3) for v in range(3, 5)]
    _, s, a, b = two_blocks(3, 2, full)
    assert edge_drop_key(s, a, b) == 0.0


def test_true_delta_examples():
    full = [(u, v) for u in range(3) for v in range(3, 5)]
    _, s, a, b = two_blocks(3, 2, full)
    assert true_delta_re(s, a, b) == 2 * 6
    half = [(0, 2), (1, 3)]
    _, s, a, b = two_blocks(2, 2, half)
    assert true_delta_re(s, a, b) == 0.0
    with pytest.raises(KeyError):
        true_delta_re(s, a, a)


def test_equal_inputs_give_equal_keys():
    _, s, a, b = two_blocks(4, 3, [(0, 4), (1, 5), (2, 6)])
    _, t, c, d = two_blocks(6, 2, [(0, 6), (3, 7), (5, 6)])
    assert edge_drop_key(s, a, b) == edge_drop_key(t, c, d)


@given(graph_and_partition(max_n=40))
def test_true_delta_matches_exact_oracle(case):
    g, edges, labels, rng = case
    s, head = summary_from_partition(g, labels)
    edges_s = list(s.superedges())
    if not edges_s:
        return
    a, b, _ = edges_s[int(rng.integers(len(edges_s)))]
    before = reconstruction_error_exact(g, s)
    delta = true_delta_re(s, a, b)
    t = s.copy()
    t.remove_superedge(a, b)
    assert reconstruction_error_exact(g, t) - before == pytest.approx(delta, abs=1e-6)
    assert reconstruction_error_closed_form(t) == pytest.approx(before + delta, abs=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_drop_three_is_additive(seed):
    rng = np.random.default_rng(seed)
    g, edges = random_graph(rng, 60, 0.15)
    labels = rng.integers(0, 8, 60).tolist()
    s, head = summary_from_partition(g, labels)
    block = {sid: lab for lab, sid in head.items()}
    chosen = [tuple(e[:2]) for e in list(s.superedges())[:3]]
    assert len(chosen) == 3
    expect = reconstruction_error_closed_form(s) + sum(true_delta_re(s, a, b) for a, b in chosen)
    t = s.copy()
    for a, b in chosen:
        t.remove_superedge(a, b)
    assert reconstruction_error_closed_form(t) == pytest.approx(expect, abs=1e-6)
    adj = dense_adjacency(60, edges)
    dropped = {frozenset((block[a], block[b])) for a, b in chosen}
    assert lp_error(adj, block_expectation(adj, labels, dropped)) == pytest.approx(expect, abs=1e-6)


def exhaustive_best(s, count):
    edges = [(a, b) for a, b, _ in s.superedges()]
    deltas = {e: true_delta_re(s, *e) for e in edges}
    return min(sum(deltas[e] for e in combo) for combo in itertools.combinations(edges, count))


@given(graph_and_partition(max_n=30))
@settings(max_examples=100)
def test_greedy_matches_exhaustive(case):
    g, _, labels, rng = case
    s, _ = summary_from_partition(g, labels)
    n_e = s.n_superedges()
    if not 1 <= n_e <= 12:
        return
    floor = irreducible_bits(s)
    target = int(rng.integers(floor, storage_cost_bits(s) + 1))
    plan = plan_sparsify(s, target)
    if plan.del_count == 0:
        return
    assert plan.predicted_delta_re == pytest.approx(exhaustive_best(s, plan.del_count), abs=1e-9)
    out = sparsify(s, target)
    assert storage_cost_bits(out) <= target + math.ceil(bits_per_superedge(s))
    assert reconstruction_error_closed_form(out) == pytest.approx(
        reconstruction_error_closed_form(s) + plan.predicted_delta_re, abs=1e-6)


@given(graph_and_partition(max_n=50, n_classes=3))
def test_sparsify_preserves_partition_and_lowers_cost(case):
    g, _, labels, rng = case
    s, _ = summary_from_partition(g, labels)
    floor = irreducible_bits(s)
    target = int(rng.integers(floor, storage_cost_bits(s) + 1))
    out = sparsify(s, target)
    assert (out.membership() == s.membership()).all()
    assert purity(out) == purity(s)
    assert [out.size[a] for a in out.live] == [s.size[a] for a in s.live]
    assert [out.internal[a] for a in out.live] == [s.internal[a] for a in s.live]
    assert storage_cost_bits(out) <= target
    out.audit()


@given(graph_and_partition(max_n=40))
def test_each_deletion_lowers_cost(case):
    g, _, labels, _ = case
    s, _ = summary_from_partition(g, labels)
    cost = storage_cost_bits(s)
    for a, b, _ in sorted(s.superedges()):
        s.remove_superedge(a, b)
        now = storage_cost_bits(s)
        assert now < cost
        cost = now


def test_target_above_cost_is_a_no_op(rng):
    g, _ = random_graph(rng, 40, 0.2)
    s, _ = summary_from_partition(g, rng.integers(0, 6, 40).tolist())
    out = sparsify(s, storage_cost_bits(s))
    assert out == s and out is not s
    assert plan_sparsify(s, 10 ** 9).del_count == 0


def test_drop_everything_leaves_membership_cost(rng):
    g, _ = random_graph(rng, 40, 0.3)
    s, _ = summary_from_partition(g, rng.integers(0, 8, 40).tolist())
    assert s.k == 8
    out = sparsify(s, irreducible_bits(s))
    assert out.n_superedges() == 0
    assert storage_cost_bits(out) == 40 * 3


def test_target_below_membership_cost_is_rejected(rng):
    g, _ = random_graph(rng, 30, 0.3)
    s, _ = summary_from_partition(g, rng.integers(0, 4, 30).tolist())
    with pytest.raises(ValueError):
        sparsify(s, irreducible_bits(s) - 1)
    with pytest.raises(ValueError):
        plan_sparsify(s, 10 ** 6, key="random")


def test_ranking_ties_and_alternative_key():
    # equal delta keys break by smaller weight, then endpoint ids
    g = from_edges([(0, 4), (1, 5), (2, 6), (3, 7), (0, 5)], 8)
    s, head = summary_from_partition(g, [0, 0, 1, 1, 2, 2, 3, 3])
    plan = plan_sparsify(s, irreducible_bits(s))
    keys = [(r[0], r[1], r[2], r[3]) for r in plan.ranked]
    assert keys == sorted(keys)
    # the printed key prefers a denser pair with more edges; the error-change key does not
    g = from_edges([(0, 10), (20, 22), (21, 23)], 24)
    labels = [0] * 10 + [1] * 10 + [2, 2, 3, 3]
    s, head = summary_from_partition(g, labels)
    target = storage_cost_bits(s) - 1
    sparse_pair = tuple(sorted((head[0], head[1])))
    half_pair = tuple(sorted((head[2], head[3])))
    assert edge_drop_key(s, *half_pair) < edge_drop_key(s, *sparse_pair)
    assert true_delta_re(s, *sparse_pair) < true_delta_re(s, *half_pair)
    assert plan_sparsify(s, target, key="printed").dropped == [half_pair]
    assert plan_sparsify(s, target, key="delta").dropped == [sparse_pair]
