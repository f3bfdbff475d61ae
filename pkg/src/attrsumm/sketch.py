"""Count-min sketches of supernode superedge vectors.

The vector sketched for supernode ``a`` has coordinate ``e_ai / sqrt(n_i)``
at every neighbour ``i``, so the inner product of two such vectors is the
cross term ``sum_i e_ai * e_bi / n_i`` of the merge score.  Sketches are
linear maps, so merging two supernodes adds their tables and signed updates
retarget individual coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finaliser, elementwise over a uint64 array."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = (x ^ (x >> np.uint64(30))) * _M1
        x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


@dataclass(frozen=True)
class SketchParams:
    width: int
    depth: int
    seeds: tuple[int, ...]

    def __post_init__(self):
        if self.width < 1 or self.depth < 1:
            raise ValueError("sketch width and depth must be >= 1")
        if len(self.seeds) != self.depth:
            raise ValueError("need exactly one seed per row")

    @classmethod
    def from_seed(cls, width: int, depth: int, seed: int) -> "SketchParams":
        ss = np.random.SeedSequence([int(seed), 0x5EED5CE7])
        seeds = ss.generate_state(depth, dtype=np.uint64)
        return cls(int(width), int(depth), tuple(int(s) for s in seeds))

    @classmethod
    def from_error(cls, eps: float, delta: float, seed: int = 0) -> "SketchParams":
        """Width ceil(1/eps), depth ceil(ln(1/delta))."""
        if not (0 < eps < 1 and 0 < delta < 1):
            raise ValueError("eps and delta must lie in (0, 1)")
        return cls.from_seed(math.ceil(1 / eps), max(1, math.ceil(math.log(1 / delta))), seed)

    def columns(self, ids) -> np.ndarray:
        """(depth, len(ids)) array of hashed column indices."""
        ids = np.asarray(ids, dtype=np.uint64)
        out = np.empty((self.depth, len(ids)), dtype=np.int64)
        with np.errstate(over="ignore"):
            for r, seed in enumerate(self.seeds):
                h = mix64(ids * _GOLDEN + np.uint64(seed))
                out[r] = (h % np.uint64(self.width)).astype(np.int64)
        return out

    def column(self, row: int, index: int) -> int:
        return int(self.columns([index])[row, 0])


class NodeSketch:
    """d x w count-min table for one vector."""

    __slots__ = ("params", "table", "owner")

    def __init__(self, params: SketchParams, owner: int = -1, table: np.ndarray | None = None):
        self.params = params
        self.owner = owner
        if table is None:
            table = np.zeros((params.depth, params.width))
        self.table = table

    @classmethod
    def from_vector(cls, params: SketchParams, vector: dict[int, float], owner: int = -1):
        sk = cls(params, owner)
        if vector:
            idx = np.fromiter(vector.keys(), dtype=np.int64)
            val = np.fromiter(vector.values(), dtype=np.float64)
            cols = params.columns(idx)
            for r in range(params.depth):
                np.add.at(sk.table[r], cols[r], val)
        return sk

    def copy(self) -> "NodeSketch":
        return NodeSketch(self.params, self.owner, self.table.copy())


def sketch_update(sk: NodeSketch, index: int, delta: float) -> None:
    """Add ``delta`` to coordinate ``index``; negative deltas are allowed."""
    cols = sk.params.columns([index])[:, 0]
    sk.table[np.arange(sk.params.depth), cols] += delta


def inner_product_estimate(a: NodeSketch, b: NodeSketch) -> float:
    """Minimum over rows of the row-wise dot product."""
    if a.params != b.params:
        raise ValueError("sketches built with different parameters")
    return float(np.min(np.einsum("rc,rc->r", a.table, b.table)))


class SketchStore:
    """Sketches for every live supernode of a summary, in one 3-d array.

    A merged supernode reuses the storage row of its first endpoint, so
    memory stays at (#initial supernodes, depth, width).
    """

    def __init__(self, params: SketchParams, n_rows: int, id_capacity: int,
                 correct_neighbors: bool = True):
        self.params = params
        self.tables = np.zeros((n_rows, params.depth, params.width))
        self.cols = params.columns(np.arange(id_capacity))
        self.row_of: dict[int, int] = {}
        self.correct_neighbors = correct_neighbors
        self._rows = np.arange(params.depth)

    @classmethod
    def for_summary(cls, summary, params: SketchParams, correct_neighbors: bool = True):
        live = list(summary.live_ids())
        store = cls(params, len(live), summary.capacity, correct_neighbors)
        size = summary.size
        for row, a in enumerate(live):
            store.row_of[a] = row
            nb = summary.nbrs[a]
            if not nb:
                continue
            idx = np.asarray(nb, dtype=np.int64)
            val = np.asarray(summary.wts[a], dtype=np.float64) / np.sqrt(
                np.asarray([size[c] for c in nb], dtype=np.float64))
            t = store.tables[row]
            for r in range(params.depth):
                np.add.at(t[r], store.cols[r, idx], val)
        return store

    def sketch(self, a: int) -> NodeSketch:
        return NodeSketch(self.params, a, self.tables[self.row_of[a]])

    def update(self, owner: int, index: int, delta: float) -> None:
        self.tables[self.row_of[owner], self._rows, self.cols[:, index]] += delta

    def cross_estimate(self, a: int, b: int, e_ab: int, n_a: int, n_b: int) -> float:
        """Estimate sum_{i != a,b} e_ai e_bi / n_i.

        The coordinate of ``b`` in ``a``'s vector and of ``a`` in ``b``'s are
        known exactly and removed row by row before taking the minimum.
        """
        ta = self.tables[self.row_of[a]]
        tb = self.tables[self.row_of[b]]
        dots = np.einsum("rc,rc->r", ta, tb)
        if e_ab == 0:
            return float(dots.min())
        x = e_ab / math.sqrt(n_b)
        y = e_ab / math.sqrt(n_a)
        best = math.inf
        cols = self.cols
        for r in range(self.params.depth):
            cb = cols[r, b]
            ca = cols[r, a]
            est = float(dots[r]) - x * float(tb[r, cb]) - y * float(ta[r, ca])
            if ca == cb:
                est += x * y
            if est < best:
                best = est
        return best

    def merge(self, a: int, b: int, z: int, e_ab: int, n_a: int, n_b: int,
              neighbor_updates) -> None:
        """Form z's sketch and retarget neighbours' coordinates for a and b.

        ``neighbor_updates`` yields ``(c, e_ac, e_bc)`` for every neighbour c
        of the merged supernode.
        """
        ra = self.row_of.pop(a)
        rb = self.row_of.pop(b)
        t = self.tables
        t[ra] += t[rb]
        t[rb] = 0.0
        if e_ab:
            t[ra, self._rows, self.cols[:, b]] -= e_ab / math.sqrt(n_b)
            t[ra, self._rows, self.cols[:, a]] -= e_ab / math.sqrt(n_a)
        self.row_of[z] = ra
        if not self.correct_neighbors:
            return
        n_z = n_a + n_b
        sa, sb, sz = math.sqrt(n_a), math.sqrt(n_b), math.sqrt(n_z)
        ca, cb, cz = self.cols[:, a], self.cols[:, b], self.cols[:, z]
        rows = self._rows
        for c, e_ac, e_bc in neighbor_updates:
            tc = t[self.row_of[c]]
            if e_ac:
                tc[rows, ca] -= e_ac / sa
            if e_bc:
                tc[rows, cb] -= e_bc / sb
            tc[rows, cz] += (e_ac + e_bc) / sz

    def rebuilt_table(self, summary, a: int) -> np.ndarray:
        """Table recomputed from scratch from a's current superedge list."""
        vec = {c: w / math.sqrt(summary.size[c]) for c, w in zip(summary.nbrs[a], summary.wts[a])}
        return NodeSketch.from_vector(self.params, vec).table
