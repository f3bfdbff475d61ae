"""Drop low-impact superedges until a summary fits a storage budget."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .summary import Summary, bits_per_superedge, storage_cost_bits

KEYS = ("delta", "printed")


def true_delta_re(summary: Summary, a: int, b: int) -> float:
    """Change in l1 reconstruction error if superedge (a, b) is dropped.

    The block's error goes from 4e - 4e^2/(n_a n_b) (both orientations) to
    2e, since every real edge in it is then predicted absent.
    """
    e = summary.edge_weight(a, b)
    if e == 0:
        raise KeyError(f"no superedge between {a} and {b}")
    return 4 * e * e / (summary.size[a] * summary.size[b]) - 2 * e


def edge_drop_key(summary: Summary, a: int, b: int) -> float:
    """Alternative ranking key 2 (density - 1) e, kept for comparison runs."""
    e = summary.edge_weight(a, b)
    if e == 0:
        raise KeyError(f"no superedge between {a} and {b}")
    return 2 * (e / (summary.size[a] * summary.size[b]) - 1) * e


def irreducible_bits(summary: Summary) -> int:
    k = summary.k
    lk = math.log2(k) if k > 1 else 1.0
    return math.ceil(summary.n * lk - 1e-9)


@dataclass
class SparsifyPlan:
    del_count: int
    ranked: list[tuple[float, int, int, int]]  # (key, e_ab, a, b), ascending
    predicted_delta_re: float
    cost_before: int
    predicted_cost_bits: int

    @property
    def dropped(self) -> list[tuple[int, int]]:
        return [(a, b) for _, _, a, b in self.ranked[:self.del_count]]


def plan_sparsify(summary: Summary, target_bits: int, key: str = "delta") -> SparsifyPlan:
    if key not in KEYS:
        raise ValueError(f"unknown ranking key {key!r}; expected one of {KEYS}")
    floor_bits = irreducible_bits(summary)
    if target_bits < floor_bits:
        raise ValueError(f"target {target_bits} bits is below the membership cost "
                         f"{floor_bits} bits for k={summary.k}")
    keyf = true_delta_re if key == "delta" else edge_drop_key
    ranked = sorted((keyf(summary, a, b), w, a, b) for a, b, w in summary.superedges())
    cost = storage_cost_bits(summary)
    if cost <= target_bits or not ranked:
        del_count = 0
    else:
        del_count = math.ceil((cost - target_bits) / bits_per_superedge(summary))
        del_count = min(max(del_count, 0), len(ranked))
    delta = 0.0
    for _, _, a, b in ranked[:del_count]:
        delta += true_delta_re(summary, a, b)
    # max e_ab can only shrink, so this is an upper bound on the result
    predicted = math.ceil((len(ranked) - del_count) * bits_per_superedge(summary)
                          + summary.n * (math.log2(summary.k) if summary.k > 1 else 1.0) - 1e-9)
    return SparsifyPlan(del_count, ranked, delta, cost, predicted)


def sparsify(summary: Summary, target_bits: int, key: str = "delta") -> Summary:
    """Copy of ``summary`` with the lowest-ranked superedges removed.

    Membership, sizes, internal counts and histograms are untouched; D-values
    of the endpoints are adjusted as each superedge goes.
    """
    plan = plan_sparsify(summary, target_bits, key)
    out = summary.copy()
    for a, b in plan.dropped:
        out.remove_superedge(a, b)
    return out
