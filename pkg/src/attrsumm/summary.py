"""Summary graph: supernodes, weighted superedges, and the quality measures
computed from them (reconstruction error, purity, storage cost).

Supernode ids are dense integers that are never reused: the n singletons of
the initial summary are 0..n-1 and each merge creates the next id.  Superedge
lists are parallel Python lists (neighbour, weight, cross-link) per supernode;
the cross-link is the position of the mirror entry in the neighbour's list.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from typing import IO, Iterator, NamedTuple

import numpy as np
from scipy import sparse

from .graph import Graph

FORMAT_NAME = "attrsumm-summary"
FORMAT_VERSION = 1


class AuditError(AssertionError):
    pass


class SummaryFormatError(ValueError):
    pass


class ChecksumError(SummaryFormatError):
    pass


class VersionError(SummaryFormatError):
    pass


class MergeDelta(NamedTuple):
    z: int
    e_ab: int
    n_a: int
    n_b: int
    neighbors: list      # neighbour ids of z, in z's list order
    from_a: list         # e_ac for each neighbour
    from_b: list         # e_bc for each neighbour


def _pairs(n: int) -> int:
    return n * (n - 1) // 2


class Summary:
    def __init__(self, n: int, m: int, n_classes: int, capacity: int | None = None,
                 vertex_labels=None, attr_labels=None):
        capacity = max(capacity or 2 * n, 1)
        self.n = n
        self.m = m
        self.n_classes = n_classes
        self.capacity = capacity
        self.vertex_labels = tuple(vertex_labels) if vertex_labels is not None else tuple(
            str(i) for i in range(n))
        self.attr_labels = tuple(attr_labels) if attr_labels is not None else tuple(
            str(i) for i in range(n_classes))
        self.size = [0] * capacity
        self.internal = [0] * capacity
        self.dsum = [0.0] * capacity
        self.hist = np.zeros((capacity, n_classes), dtype=np.int64)
        self.alive = [False] * capacity
        self.parent = list(range(capacity))
        self.nbrs: list[list[int]] = [[] for _ in range(capacity)]
        self.wts: list[list[int]] = [[] for _ in range(capacity)]
        self.xpos: list[list[int]] = [[] for _ in range(capacity)]
        self.index: list[dict[int, int]] = [{} for _ in range(capacity)]
        self.live: list[int] = []
        self.live_pos = [-1] * capacity
        self.next_id = 0
        self.dropped = 0  # total weight of superedges removed by sparsification
        self._membership = None

    # -- structure -------------------------------------------------------
    @property
    def k(self) -> int:
        return len(self.live)

    def live_ids(self) -> list[int]:
        return list(self.live)

    def _add_live(self, a: int) -> None:
        self.alive[a] = True
        self.live_pos[a] = len(self.live)
        self.live.append(a)

    def _drop_live(self, a: int) -> None:
        p = self.live_pos[a]
        last = self.live.pop()
        if last != a:
            self.live[p] = last
            self.live_pos[last] = p
        self.live_pos[a] = -1
        self.alive[a] = False

    def degree(self, a: int) -> int:
        """Number of superedges at supernode ``a``."""
        return len(self.nbrs[a])

    def edge_weight(self, a: int, b: int) -> int:
        p = self.index[a].get(b)
        return 0 if p is None else self.wts[a][p]

    def superedges(self) -> Iterator[tuple[int, int, int]]:
        """Each superedge once as (a, b, e_ab) with a < b."""
        for a in self.live:
            for c, w in zip(self.nbrs[a], self.wts[a]):
                if a < c:
                    yield a, c, w

    def n_superedges(self) -> int:
        return sum(len(self.nbrs[a]) for a in self.live) // 2

    def _remove_entry(self, x: int, p: int) -> None:
        nbrs, wts, xpos = self.nbrs[x], self.wts[x], self.xpos[x]
        gone = nbrs[p]
        last = len(nbrs) - 1
        if p != last:
            c, w, q = nbrs[last], wts[last], xpos[last]
            nbrs[p] = c
            wts[p] = w
            xpos[p] = q
            self.xpos[c][q] = p
            self.index[x][c] = p
        nbrs.pop()
        wts.pop()
        xpos.pop()
        del self.index[x][gone]

    def _append_pair(self, x: int, y: int, w: int) -> None:
        px, py = len(self.nbrs[x]), len(self.nbrs[y])
        self.nbrs[x].append(y)
        self.wts[x].append(w)
        self.xpos[x].append(py)
        self.index[x][y] = px
        self.nbrs[y].append(x)
        self.wts[y].append(w)
        self.xpos[y].append(px)
        self.index[y][x] = py

    def remove_superedge(self, a: int, b: int) -> int:
        """Delete superedge (a, b), keep D-values consistent, return its weight."""
        p = self.index[a].get(b)
        if p is None:
            raise KeyError(f"no superedge between {a} and {b}")
        w = self.wts[a][p]
        q = self.xpos[a][p]
        self._remove_entry(b, q)
        self._remove_entry(a, self.index[a][b])
        self.dsum[a] = self.dsum[a] - w * w / self.size[b]
        self.dsum[b] = self.dsum[b] - w * w / self.size[a]
        self.dropped += w
        return w

    def merge(self, a: int, b: int) -> MergeDelta:
        """Merge supernodes a and b into a fresh supernode.

        Touches only the two superedge lists and, through the cross-links,
        the mirror entries at each neighbour.  Neighbour D-values are updated
        incrementally; the new supernode's D is summed from its list.
        """
        if a == b:
            raise ValueError("cannot merge a supernode with itself")
        if not (self.alive[a] and self.alive[b]):
            raise ValueError(f"merge of dead supernode ({a}, {b})")
        if self.next_id >= self.capacity:
            raise RuntimeError("supernode id capacity exhausted")
        size, nbrs, wts, xpos = self.size, self.nbrs, self.wts, self.xpos
        z = self.next_id
        self.next_id += 1
        n_a, n_b = size[a], size[b]
        pa = self.index[a].get(b)
        e_ab = 0
        if pa is not None:
            e_ab = wts[a][pa]
            self._remove_entry(b, xpos[a][pa])
            self._remove_entry(a, pa)

        zn: list[int] = []
        from_a: list[int] = []
        from_b: list[int] = []
        slot: dict[int, int] = {}
        la, wa, xa = nbrs[a], wts[a], xpos[a]
        for p in range(len(la)):
            c = la[p]
            self._remove_entry(c, xa[p])
            slot[c] = len(zn)
            zn.append(c)
            from_a.append(wa[p])
            from_b.append(0)
        lb, wb, xb = nbrs[b], wts[b], xpos[b]
        for p in range(len(lb)):
            c = lb[p]
            self._remove_entry(c, xb[p])
            j = slot.get(c)
            if j is None:
                slot[c] = len(zn)
                zn.append(c)
                from_a.append(0)
                from_b.append(wb[p])
            else:
                from_b[j] = wb[p]
        for x in (a, b):
            nbrs[x] = []
            wts[x] = []
            xpos[x] = []
            self.index[x] = {}

        n_z = n_a + n_b
        size[z] = n_z
        self.internal[z] = self.internal[a] + self.internal[b] + e_ab
        self.hist[z] = self.hist[a] + self.hist[b]
        dsum = self.dsum
        d_z = 0.0
        for j, c in enumerate(zn):
            ea, eb = from_a[j], from_b[j]
            w = ea + eb
            self._append_pair(z, c, w)
            dsum[c] = dsum[c] - ea * ea / n_a - eb * eb / n_b + w * w / n_z
            d_z += w * w / size[c]
        dsum[z] = d_z
        self.parent[a] = z
        self.parent[b] = z
        self._drop_live(a)
        self._drop_live(b)
        self._add_live(z)
        self._membership = None
        return MergeDelta(z, e_ab, n_a, n_b, zn, from_a, from_b)

    # -- membership ------------------------------------------------------
    def find(self, v: int) -> int:
        parent = self.parent
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    def membership(self) -> np.ndarray:
        """Supernode id of every original vertex."""
        if self._membership is None:
            mem = np.fromiter((self.find(v) for v in range(self.n)), dtype=np.int64, count=self.n)
            mem.flags.writeable = False
            self._membership = mem
        return self._membership

    def members(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {a: [] for a in self.live}
        for v, a in enumerate(self.membership().tolist()):
            out[a].append(v)
        return out

    # -- copying / comparison -------------------------------------------
    def copy(self) -> "Summary":
        s = Summary.__new__(Summary)
        s.__dict__.update(self.__dict__)
        s.size = list(self.size)
        s.internal = list(self.internal)
        s.dsum = list(self.dsum)
        s.hist = self.hist.copy()
        s.alive = list(self.alive)
        s.parent = list(self.parent)
        s.nbrs = [list(x) for x in self.nbrs]
        s.wts = [list(x) for x in self.wts]
        s.xpos = [list(x) for x in self.xpos]
        s.index = [dict(x) for x in self.index]
        s.live = list(self.live)
        s.live_pos = list(self.live_pos)
        return s

    def to_payload(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "n_classes": self.n_classes,
            "capacity": self.capacity,
            "next_id": self.next_id,
            "dropped": self.dropped,
            "vertex_labels": list(self.vertex_labels),
            "attr_labels": list(self.attr_labels),
            "membership": self.membership().tolist(),
            "supernodes": [
                [a, self.size[a], self.internal[a], self.dsum[a], self.hist[a].tolist()]
                for a in self.live
            ],
            "superedges": [
                [a, [[c, w] for c, w in zip(self.nbrs[a], self.wts[a])]]
                for a in self.live
            ],
        }

    def __eq__(self, other):
        if not isinstance(other, Summary):
            return NotImplemented
        return self.to_payload() == other.to_payload()

    __hash__ = None

    def __repr__(self):
        return (f"Summary(n={self.n}, m={self.m}, k={self.k}, "
                f"superedges={self.n_superedges()})")

    # -- consistency -------------------------------------------------------
    def audit(self, graph: Graph | None = None, rel_tol: float = 1e-9) -> None:
        """Verify every structural invariant; raise AuditError on the first failure.

        With ``graph`` the counters are also recomputed from the original edges.
        """
        def fail(msg):
            raise AuditError(msg)

        if sorted(self.live) != [a for a in range(self.capacity) if self.alive[a]]:
            fail("live list disagrees with alive flags")
        for p, a in enumerate(self.live):
            if self.live_pos[a] != p:
                fail(f"live_pos[{a}] stale")
        mem = self.membership()
        counts = np.bincount(mem, minlength=self.capacity)
        if sum(self.size[a] for a in self.live) != self.n:
            fail("supernode sizes do not sum to n")
        present = 0
        for a in self.live:
            n_a = self.size[a]
            if n_a < 1 or counts[a] != n_a:
                fail(f"supernode {a}: size {n_a} but {counts[a]} members")
            if not 0 <= self.internal[a] <= _pairs(n_a):
                fail(f"supernode {a}: internal edge count {self.internal[a]} out of range")
            if self.hist[a].sum() != n_a or (self.hist[a] < 0).any():
                fail(f"supernode {a}: attribute histogram inconsistent")
            present += self.internal[a]
            nb, wt, xp, idx = self.nbrs[a], self.wts[a], self.xpos[a], self.index[a]
            if not (len(nb) == len(wt) == len(xp) == len(idx)):
                fail(f"supernode {a}: adjacency arrays have different lengths")
            d = 0.0
            for p, (c, w, q) in enumerate(zip(nb, wt, xp)):
                if c == a or not self.alive[c]:
                    fail(f"superedge ({a}, {c}) points at invalid supernode")
                if not 1 <= w <= n_a * self.size[c]:
                    fail(f"superedge ({a}, {c}) weight {w} out of range")
                if q >= len(self.nbrs[c]) or self.nbrs[c][q] != a or self.xpos[c][q] != p \
                        or self.wts[c][q] != w:
                    fail(f"superedge ({a}, {c}) cross-link broken")
                if idx.get(c) != p:
                    fail(f"superedge ({a}, {c}) index stale")
                if a < c:
                    present += w
                d += w * w / self.size[c]
            if abs(d - self.dsum[a]) > rel_tol * max(abs(d), 1.0):
                fail(f"supernode {a}: D={self.dsum[a]!r} but recomputed {d!r}")
        if present + self.dropped != self.m:
            fail(f"edge conservation: {present} kept + {self.dropped} dropped != m={self.m}")

        if graph is not None:
            if graph.n != self.n or graph.m != self.m:
                fail("summary does not belong to this graph")
            hist = np.zeros((self.capacity, self.n_classes), dtype=np.int64)
            np.add.at(hist, (mem, graph.attr), 1)
            for a in self.live:
                if not np.array_equal(hist[a], self.hist[a]):
                    fail(f"supernode {a}: histogram differs from members' attributes")
            e = graph.edge_array()
            su, sv = mem[e[:, 0]], mem[e[:, 1]]
            inside = su == sv
            internal = np.bincount(su[inside], minlength=self.capacity)
            for a in self.live:
                if internal[a] != self.internal[a]:
                    fail(f"supernode {a}: e_i={self.internal[a]} but graph has {internal[a]}")
            lo = np.minimum(su[~inside], sv[~inside])
            hi = np.maximum(su[~inside], sv[~inside])
            keys, cnt = np.unique(lo * self.capacity + hi, return_counts=True)
            real = dict(zip(keys.tolist(), cnt.tolist()))
            for a, c, w in self.superedges():
                if real.get(a * self.capacity + c) != w:
                    fail(f"superedge ({a}, {c}) weight {w} differs from graph")
            if self.dropped == 0 and len(real) != self.n_superedges():
                fail("graph has cross edges with no superedge")


# -- construction --------------------------------------------------------

def initial_summary(graph: Graph) -> Summary:
    """Every vertex its own supernode; every edge a weight-1 superedge."""
    n = graph.n
    s = Summary(n, graph.m, graph.n_classes, 2 * n, graph.labels, graph.attr_labels)
    deg = graph.degrees()
    for v in range(n):
        lo, hi = graph.indptr[v], graph.indptr[v + 1]
        nb = graph.indices[lo:hi].tolist()
        s.nbrs[v] = nb
        s.wts[v] = [1] * len(nb)
        s.xpos[v] = graph.xlink[lo:hi].tolist()
        s.index[v] = {c: p for p, c in enumerate(nb)}
        s.size[v] = 1
        s.dsum[v] = float(deg[v])
        s.alive[v] = True
        s.live_pos[v] = v
    s.live = list(range(n))
    s.hist[np.arange(n), graph.attr] = 1
    s.next_id = n
    return s


def from_arrays(n: int, m: int, n_classes: int, capacity: int, next_id: int,
                parent, size, internal, dsum, hist, live, adj_ptr, adj_nbr, adj_w,
                vertex_labels=None, attr_labels=None, dropped: int = 0) -> Summary:
    """Rebuild a Summary from flat arrays (used by the compiled core and loaders).

    ``adj_ptr`` indexes ``adj_nbr``/``adj_w`` in the order of ``live``; list order
    is preserved and cross-links are recomputed from it.
    """
    s = Summary(n, m, n_classes, capacity, vertex_labels, attr_labels)
    s.next_id = next_id
    s.dropped = dropped
    s.parent = [int(x) for x in parent]
    size_l = [int(x) for x in size]
    s.size = size_l
    s.internal = [int(x) for x in internal]
    s.dsum = [float(x) for x in dsum]
    s.hist = np.asarray(hist, dtype=np.int64).reshape(capacity, n_classes).copy()
    adj_ptr = np.asarray(adj_ptr).tolist()
    adj_nbr = np.asarray(adj_nbr).tolist()
    adj_w = np.asarray(adj_w).tolist()
    for i, a in enumerate(int(x) for x in live):
        s._add_live(a)
        lo, hi = adj_ptr[i], adj_ptr[i + 1]
        s.nbrs[a] = adj_nbr[lo:hi]
        s.wts[a] = adj_w[lo:hi]
        s.index[a] = {c: p for p, c in enumerate(s.nbrs[a])}
    for a in s.live:
        s.xpos[a] = [s.index[c][a] for c in s.nbrs[a]]
    return s


# -- reconstruction and error ------------------------------------------

def expected_adjacency(summary: Summary, u: int, v: int) -> float:
    """Edge probability between vertices u and v implied by the summary."""
    if not (0 <= u < summary.n and 0 <= v < summary.n):
        raise IndexError("vertex out of range")
    if u == v:
        return 0.0
    a, b = summary.find(u), summary.find(v)
    if a == b:
        pairs = _pairs(summary.size[a])
        return summary.internal[a] / pairs if pairs else 0.0
    return summary.edge_weight(a, b) / (summary.size[a] * summary.size[b])


def density_matrix(summary: Summary) -> tuple[sparse.csr_matrix, dict[int, int]]:
    """k x k sparse matrix of block densities, plus the id -> row map."""
    pos = {a: i for i, a in enumerate(summary.live)}
    rows, cols, vals = [], [], []
    for a in summary.live:
        i = pos[a]
        pairs = _pairs(summary.size[a])
        if pairs and summary.internal[a]:
            rows.append(i)
            cols.append(i)
            vals.append(summary.internal[a] / pairs)
        for c, w in zip(summary.nbrs[a], summary.wts[a]):
            rows.append(i)
            cols.append(pos[c])
            vals.append(w / (summary.size[a] * summary.size[c]))
    k = len(pos)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(k, k)), pos


def reconstruction_error_exact(graph: Graph, summary: Summary, p: float = 1,
                               max_n: int = 20000) -> float:
    """l_p norm of A - A' by enumerating all n^2 cells (test oracle)."""
    n = graph.n
    if n > max_n:
        raise ValueError(f"n={n} exceeds the O(n^2) enumeration cap of {max_n}")
    if p <= 0:
        raise ValueError("p must be positive")
    dens, pos = density_matrix(summary)
    mem = np.array([pos[a] for a in summary.membership().tolist()], dtype=np.int64)
    member = sparse.csr_matrix((np.ones(n), (np.arange(n), mem)), shape=(n, len(pos)))
    adj = graph.adjacency_matrix()
    chunk = max(1, 4_000_000 // max(n, 1))
    total = 0.0
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        approx = np.asarray((member[lo:hi] @ dens @ member.T).todense())
        approx[np.arange(hi - lo), np.arange(lo, hi)] = 0.0
        diff = np.abs(adj[lo:hi].toarray() - approx)
        total += float(np.sum(diff ** p))
    return total ** (1.0 / p)


def reconstruction_error_closed_form(summary: Summary) -> float:
    """l1 reconstruction error from the supernode and superedge counters alone.

    Superedges dropped by sparsification contribute 2 * weight (every real
    edge in those blocks is predicted absent).
    """
    size, internal = summary.size, summary.internal
    total = 0.0
    for a in summary.live:
        e, n_a = internal[a], size[a]
        pairs = _pairs(n_a)
        total += 4 * e - (4 * e * e / pairs if pairs else 0.0)
        for c, w in zip(summary.nbrs[a], summary.wts[a]):
            total += 2 * w - 2 * w * w / (n_a * size[c])
    return total + 2 * summary.dropped


def normalized_re(summary: Summary, n: int | None = None) -> float:
    n = summary.n if n is None else n
    return reconstruction_error_closed_form(summary) / (n * n)


def purity(summary: Summary) -> float:
    live = np.asarray(summary.live, dtype=np.int64)
    return float(summary.hist[live].max(axis=1).sum()) / summary.n


def storage_cost_formula(n: int, k: int, n_superedges: int, max_weight: int) -> int:
    """|E_S| (2 log2 k + log2 max e_ab) + n log2 k, rounded up.

    log2 k is taken as 1 when k = 1 and max e_ab is floored at 2.
    """
    lk = math.log2(k) if k > 1 else 1.0
    bits = n_superedges * (2 * lk + math.log2(max(max_weight, 2))) + n * lk
    return math.ceil(bits - 1e-9)


def storage_cost_bits(summary: Summary) -> int:
    max_w = 2
    for a in summary.live:
        if summary.wts[a]:
            max_w = max(max_w, max(summary.wts[a]))
    return storage_cost_formula(summary.n, summary.k, summary.n_superedges(), max_w)


def bits_per_superedge(summary: Summary) -> float:
    k = summary.k
    lk = math.log2(k) if k > 1 else 1.0
    max_w = max([2] + [max(summary.wts[a]) for a in summary.live if summary.wts[a]])
    return 2 * lk + math.log2(max_w)


# -- serialization -------------------------------------------------------

def _digest(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return "sha256:" + hashlib.sha256(blob).hexdigest()


def serialize_summary(summary: Summary, sink: IO[str] | str | os.PathLike,
                      manifest: dict | None = None) -> None:
    payload = summary.to_payload()
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "manifest": manifest or {},
        "checksum": _digest(payload),
        "payload": payload,
    }
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
            fh.write("\n")
    else:
        json.dump(doc, sink)
        sink.write("\n")


def read_summary_document(source: IO[str] | str | os.PathLike) -> dict:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChecksumError(f"summary file is truncated or corrupt: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise SummaryFormatError("not a summary file")
    if doc.get("version") != FORMAT_VERSION:
        raise VersionError(f"unsupported summary version {doc.get('version')!r}")
    if "payload" not in doc or doc.get("checksum") != _digest(doc["payload"]):
        raise ChecksumError("summary checksum mismatch")
    return doc


def deserialize_summary(source: IO[str] | str | os.PathLike) -> Summary:
    p = read_summary_document(source)["payload"]
    cap, l = p["capacity"], p["n_classes"]
    parent = list(range(cap))
    for v, a in enumerate(p["membership"]):
        parent[v] = a
    size = [0] * cap
    internal = [0] * cap
    dsum = [0.0] * cap
    hist = np.zeros((cap, l), dtype=np.int64)
    live = []
    for a, n_a, e_a, d_a, h in p["supernodes"]:
        live.append(a)
        size[a], internal[a], dsum[a] = n_a, e_a, d_a
        hist[a] = h
    adj_ptr = [0]
    nbr, w = [], []
    for a, entries in p["superedges"]:
        for c, x in entries:
            nbr.append(c)
            w.append(x)
        adj_ptr.append(len(nbr))
    return from_arrays(p["n"], p["m"], l, cap, p["next_id"], parent, size, internal, dsum,
                       hist, live, adj_ptr, nbr, w, p["vertex_labels"], p["attr_labels"],
                       p["dropped"])
