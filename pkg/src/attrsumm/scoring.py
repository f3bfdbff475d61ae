"""Pair scores for merging and the node weights used to sample candidates."""
from __future__ import annotations

from dataclasses import dataclass

from .summary import Summary

EXACT = "exact"
SKETCH = "sketch"


@dataclass(frozen=True)
class ScoreParams:
    alpha: float = 1.0
    mode: str = SKETCH
    width: int = 200
    depth: int = 2

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.mode not in (EXACT, SKETCH):
            raise ValueError(f"unknown score mode {self.mode!r}")
        if self.width < 1 or self.depth < 1:
            raise ValueError("sketch width and depth must be >= 1")


@dataclass(frozen=True)
class PairScore:
    pair: tuple[int, int]
    re_component: float
    attr_component: int
    combined: float


def re_gain(n_a: int, n_b: int, e_a: int, e_b: int, e_ab: int,
            d_a: float, d_b: float, cross: float) -> float:
    """RE(before) - RE(after merging a and b), given the cross term
    sum_{i != a,b} e_ai e_bi / n_i.

    The compiled core evaluates the same expression in the same order, so
    both produce identical floats.
    """
    n_z = n_a + n_b
    e_z = e_a + e_b + e_ab
    pairs_a = n_a * (n_a - 1) // 2
    pairs_b = n_b * (n_b - 1) // 2
    s = 0.0
    if pairs_a:
        s -= 4 * e_a * e_a / pairs_a
    s -= 4.0 * d_a / n_a
    s += 4 * e_ab * e_ab / (n_a * n_b)
    if pairs_b:
        s -= 4 * e_b * e_b / pairs_b
    s -= 4.0 * d_b / n_b
    s += 4 * e_z * e_z / (n_z * (n_z - 1) // 2)
    rest_a = d_a - e_ab * e_ab / n_b
    rest_b = d_b - e_ab * e_ab / n_a
    s += (4.0 / n_z) * (rest_a + rest_b + 2.0 * cross)
    return s


def exact_cross(summary: Summary, a: int, b: int) -> float:
    """sum_{i != a,b} e_ai e_bi / n_i, walking the shorter superedge list."""
    if len(summary.nbrs[a]) <= len(summary.nbrs[b]):
        short, other = a, b
    else:
        short, other = b, a
    idx = summary.index[other]
    wo = summary.wts[other]
    size = summary.size
    cross = 0.0
    for c, w in zip(summary.nbrs[short], summary.wts[short]):
        if c == other:
            continue
        q = idx.get(c)
        if q is not None:
            cross += w * wo[q] / size[c]
    return cross


def _check_pair(summary: Summary, a: int, b: int) -> None:
    if a == b:
        raise ValueError("score of a supernode with itself")
    if not (summary.alive[a] and summary.alive[b]):
        raise ValueError(f"score of dead supernode pair ({a}, {b})")


def _gain(summary: Summary, a: int, b: int, cross: float) -> float:
    return re_gain(summary.size[a], summary.size[b], summary.internal[a],
                   summary.internal[b], summary.edge_weight(a, b),
                   summary.dsum[a], summary.dsum[b], cross)


def score_re_exact(summary: Summary, a: int, b: int) -> float:
    _check_pair(summary, a, b)
    return _gain(summary, a, b, exact_cross(summary, a, b))


def score_re_sketch(summary: Summary, a: int, b: int, sketches) -> float:
    _check_pair(summary, a, b)
    cross = sketches.cross_estimate(a, b, summary.edge_weight(a, b),
                                    summary.size[a], summary.size[b])
    return _gain(summary, a, b, cross)


def score_attr(summary: Summary, a: int, b: int) -> int:
    """Size of the largest attribute class in the union of a and b."""
    return int((summary.hist[a] + summary.hist[b]).max())


def combine(alpha: float, re: float, attr: int, n_sq: float, n_ab: int) -> float:
    return alpha * (re / n_sq) + (1.0 - alpha) * (attr / n_ab)


def score_combined(summary: Summary, a: int, b: int, params: ScoreParams,
                   sketches=None) -> PairScore:
    if params.mode == SKETCH and sketches is not None:
        re = score_re_sketch(summary, a, b, sketches)
    else:
        re = score_re_exact(summary, a, b)
    attr = score_attr(summary, a, b)
    n = summary.n
    combined = combine(params.alpha, re, attr, float(n * n), summary.size[a] + summary.size[b])
    return PairScore((min(a, b), max(a, b)), re, attr, combined)


def node_weight(summary: Summary, a: int) -> float:
    """Sampling weight -1/f(a), f(a) = -4e_a^2/C(n_a,2) - 4 D_a / n_a; 0 when f = 0."""
    return weight_from(summary.size[a], summary.internal[a], summary.dsum[a])


def weight_from(n_a: int, e_a: int, d_a: float) -> float:
    pairs = n_a * (n_a - 1) // 2
    f = 0.0
    if pairs:
        f -= 4 * e_a * e_a / pairs
    f -= 4.0 * d_a / n_a
    if f == 0.0:
        return 0.0
    w = -1.0 / f
    # D can drift to a tiny negative value after cancellation
    return w if w > 0.0 else 0.0
