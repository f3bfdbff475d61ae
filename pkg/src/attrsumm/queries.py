"""Answer graph queries from a summary alone."""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .graph import Graph, count_triangles
from .summary import Summary, expected_adjacency

KINDS = ("degree", "centrality", "attribute", "adjacency", "triangles")


@dataclass(frozen=True)
class QueryAnswer:
    kind: str
    value: float | str
    basis: tuple[int, ...]  # supernode ids consulted; empty for whole-summary queries

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value, "basis": list(self.basis)}


def _owner(summary: Summary, v: int) -> int:
    if not 0 <= v < summary.n:
        raise IndexError(f"vertex {v} out of range")
    return int(summary.membership()[v])


def supernode_degree(summary: Summary, a: int) -> float:
    """Expected degree of any member of supernode a."""
    return (2 * summary.internal[a] + sum(summary.wts[a])) / summary.size[a]


def degree_query(summary: Summary, v: int) -> QueryAnswer:
    a = _owner(summary, v)
    return QueryAnswer("degree", supernode_degree(summary, a), (a,))


def estimated_degrees(summary: Summary) -> np.ndarray:
    """deg'(v) for every vertex, in vertex order."""
    per = np.zeros(summary.capacity)
    for a in summary.live:
        per[a] = supernode_degree(summary, a)
    return per[summary.membership()]


def centrality_query(summary: Summary, v: int, m: int | None = None) -> QueryAnswer:
    m = summary.m if m is None else m
    if m == 0:
        raise ValueError("centrality is undefined for a graph with no edges")
    a = _owner(summary, v)
    return QueryAnswer("centrality", supernode_degree(summary, a) / (2 * m), (a,))


def attribute_query(summary: Summary, u: int, rng: np.random.Generator | None = None,
                    deterministic: bool = False) -> QueryAnswer:
    """Class of u drawn from its supernode's histogram, or the majority class."""
    a = _owner(summary, u)
    hist = summary.hist[a]
    if deterministic or rng is None:
        cls = int(np.argmax(hist))  # first maximum, so ties go to the smaller index
    else:
        cls = int(rng.choice(len(hist), p=hist / hist.sum()))
    return QueryAnswer("attribute", summary.attr_labels[cls], (a,))


def adjacency_query(summary: Summary, u: int, v: int) -> QueryAnswer:
    a, b = _owner(summary, u), _owner(summary, v)
    return QueryAnswer("adjacency", expected_adjacency(summary, u, v),
                       (a,) if a == b else (a, b))


def triangle_estimate(summary: Summary) -> float:
    """Expected triangle count when every vertex pair is an independent edge
    with its expected-adjacency probability.

    Three kinds of triangle: all three vertices in one supernode, two in one
    and one in another, or one in each of three mutually adjacent supernodes.
    """
    size, internal = summary.size, summary.internal
    dens = {}
    for a in summary.live:
        p = comb(size[a], 2)
        dens[a] = internal[a] / p if p else 0.0
    inside = 0.0
    two_one = 0.0
    for a in summary.live:
        n_a, d_a = size[a], dens[a]
        inside += comb(n_a, 3) * d_a ** 3
        pairs_a = comb(n_a, 2)
        for c, w in zip(summary.nbrs[a], summary.wts[a]):
            pi = w / (n_a * size[c])
            # two vertices in a, one in c
            two_one += pairs_a * size[c] * d_a * pi * pi
    spread = 0.0
    index = summary.index
    for a in summary.live:
        idx_a = index[a]
        n_a = size[a]
        for c, w_ac in zip(summary.nbrs[a], summary.wts[a]):
            if c <= a:
                continue
            for l, w_cl in zip(summary.nbrs[c], summary.wts[c]):
                if l <= c:
                    continue
                p = idx_a.get(l)
                if p is None:
                    continue
                w_al = summary.wts[a][p]
                # n_a n_c n_l * (w_ac/(n_a n_c)) (w_cl/(n_c n_l)) (w_al/(n_a n_l))
                spread += w_ac * w_cl * w_al / (n_a * size[c] * size[l])
    return inside + two_one + spread


def triangle_query(summary: Summary) -> QueryAnswer:
    return QueryAnswer("triangles", triangle_estimate(summary), ())


def triangle_density_error(summary: Summary, graph: Graph,
                           true_count: int | None = None) -> float | None:
    """(estimate - t) / t, or None when the graph has no triangles."""
    t = count_triangles(graph) if true_count is None else true_count
    if t == 0:
        return None
    return (triangle_estimate(summary) - t) / t
