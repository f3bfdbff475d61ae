"""Weighted sampling tree over supernode weights.

A complete binary tree stored implicitly in a heap-ordered array.  Leaves
hold (id, weight), every internal node holds the sum of its two children.
Internal sums are recomputed from the children on each update rather than
adjusted by a delta, so they never drift and an all-zero subtree sums to
exactly 0.
"""
from __future__ import annotations

from typing import Iterable


class SamplingTree:
    def __init__(self, n_slots: int):
        if n_slots < 1:
            raise ValueError("sampling tree needs at least one slot")
        self.n_slots = n_slots
        cap = 1
        while cap < n_slots:
            cap <<= 1
        self._cap = cap
        self.height = cap.bit_length() - 1  # == ceil(log2 n_slots)
        self._w = [0.0] * (2 * cap)
        self._slot_id = [-1] * n_slots
        self._slot_of: dict[int, int] = {}
        self._free: list[int] = list(range(n_slots - 1, -1, -1))
        self.visits = 0  # nodes touched by the last sample/update
        self.n_positive = 0  # leaves with weight > 0

    @classmethod
    def build(cls, weights: Iterable[tuple[int, float]]) -> "SamplingTree":
        """O(n) construction from (id, weight) pairs."""
        items = list(weights)
        if not items:
            raise ValueError("cannot build a sampling tree from no weights")
        tree = cls(len(items))
        w = tree._w
        cap = tree._cap
        for slot, (ident, weight) in enumerate(items):
            if weight < 0:
                raise ValueError(f"negative weight {weight} for id {ident}")
            if ident in tree._slot_of:
                raise ValueError(f"duplicate id {ident}")
            tree._slot_id[slot] = ident
            tree._slot_of[ident] = slot
            w[cap + slot] = float(weight)
            if weight > 0:
                tree.n_positive += 1
        tree._free = []
        for i in range(cap - 1, 0, -1):
            w[i] = w[2 * i] + w[2 * i + 1]
        return tree

    @property
    def total(self) -> float:
        return self._w[1]

    def __len__(self) -> int:
        return len(self._slot_of)

    def __contains__(self, ident: int) -> bool:
        return ident in self._slot_of

    def weight(self, ident: int) -> float:
        return self._w[self._cap + self._slot_of[ident]]

    def sample(self, r: float) -> int:
        """Return the id whose cumulative weight interval contains ``r``.

        ``r`` must lie in [0, total).  Ties at a subtree boundary go right; a
        subtree of weight 0 is never entered.
        """
        w = self._w
        if not w[1] > 0.0:
            raise ValueError("no sampleable node: total weight is 0")
        i = 1
        visits = 1
        cap = self._cap
        while i < cap:
            left = w[2 * i]
            if r < left or w[2 * i + 1] == 0.0:
                i = 2 * i
            else:
                r -= left
                i = 2 * i + 1
            visits += 1
        self.visits = visits
        return self._slot_id[i - cap]

    def _set_slot(self, slot: int, weight: float) -> None:
        w = self._w
        i = self._cap + slot
        self.n_positive += (weight > 0.0) - (w[i] > 0.0)
        w[i] = weight
        visits = 1
        i >>= 1
        while i:
            w[i] = w[2 * i] + w[2 * i + 1]
            i >>= 1
            visits += 1
        self.visits = visits

    def update_weight(self, ident: int, weight: float) -> None:
        if weight < 0:
            raise ValueError(f"negative weight {weight}")
        try:
            slot = self._slot_of[ident]
        except KeyError:
            raise KeyError(f"id {ident} has no leaf") from None
        self._set_slot(slot, float(weight))

    def insert(self, ident: int, weight: float) -> int:
        if ident in self._slot_of:
            raise ValueError(f"id {ident} already present")
        if not self._free:
            raise RuntimeError("sampling tree has no free slot")
        if weight < 0:
            raise ValueError(f"negative weight {weight}")
        slot = self._free.pop()
        self._slot_id[slot] = ident
        self._slot_of[ident] = slot
        self._set_slot(slot, float(weight))
        return slot

    def delete(self, ident: int) -> None:
        """Zero the leaf and release its slot for the next insert."""
        try:
            slot = self._slot_of.pop(ident)
        except KeyError:
            raise KeyError(f"id {ident} has no leaf") from None
        self._slot_id[slot] = -1
        self._set_slot(slot, 0.0)
        self._free.append(slot)

    def rebuild(self) -> None:
        w = self._w
        for i in range(self._cap - 1, 0, -1):
            w[i] = w[2 * i] + w[2 * i + 1]

    def audit(self, rel_tol: float = 1e-9) -> None:
        """Check every internal node against its children; raise on mismatch."""
        w = self._w
        for i in range(1, self._cap):
            s = w[2 * i] + w[2 * i + 1]
            if abs(w[i] - s) > rel_tol * max(abs(s), 1.0):
                raise AssertionError(f"tree node {i}: stored {w[i]} != children sum {s}")
        for slot in range(self.n_slots, self._cap):
            if w[self._cap + slot] != 0.0:
                raise AssertionError(f"padding leaf {slot} has nonzero weight")
        for slot, ident in enumerate(self._slot_id):
            if ident == -1 and w[self._cap + slot] != 0.0:
                raise AssertionError(f"free slot {slot} has nonzero weight")
        pos = sum(1 for x in w[self._cap:] if x > 0.0)
        if pos != self.n_positive:
            raise AssertionError(f"positive-leaf count {self.n_positive} != {pos}")
