"""Input graph: loading, validation and an immutable CSR representation.

Every adjacency entry carries a cross-link, the position of its mirror entry
inside the neighbour's list, so code walking a list can reach the mirror in
O(1) without searching.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Iterator, TextIO, Union

import numpy as np
from scipy import sparse

UNKNOWN_ATTRIBUTE = "unknown"

Source = Union[str, os.PathLike, bytes, BinaryIO, TextIO]


class GraphFormatError(ValueError):
    """Raised for malformed edge-list or attribute input."""

    def __init__(self, message: str, lineno: int | None = None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


def _open_text(source: Source) -> TextIO:
    if isinstance(source, (str, os.PathLike)):
        path = os.fspath(source)
        if path.endswith(".gz"):
            import gzip

            return gzip.open(path, "rt", encoding="utf-8")
        return open(path, "r", encoding="utf-8")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8")


def _label_order(labels: Iterable[str]) -> list[str]:
    labels = list(labels)
    try:
        return sorted(labels, key=int)
    except ValueError:
        return sorted(labels)


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph with one nominal attribute per vertex.

    ``indptr``/``indices`` are CSR arrays sorted by neighbour id.  ``xlink[p]``
    is the offset of the mirror of entry ``p`` within the neighbour's list.
    """

    indptr: np.ndarray
    indices: np.ndarray
    xlink: np.ndarray
    labels: tuple[str, ...]
    attr: np.ndarray = field(default=None)
    attr_labels: tuple[str, ...] = (UNKNOWN_ATTRIBUTE,)

    def __post_init__(self):
        if self.attr is None:
            object.__setattr__(self, "attr", np.zeros(self.n, dtype=np.int64))
        for arr in (self.indptr, self.indices, self.xlink, self.attr):
            arr.flags.writeable = False

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def m(self) -> int:
        return len(self.indices) // 2

    @property
    def n_classes(self) -> int:
        return len(self.attr_labels)

    def degree(self, v: int) -> int:
        if not 0 <= v < self.n:
            raise IndexError(f"vertex {v} out of range")
        return int(self.indptr[v + 1] - self.indptr[v])

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def adjacency(self, v: int) -> list[tuple[int, int]]:
        """(neighbour, cross-link position) pairs of vertex ``v``."""
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return list(zip(self.indices[lo:hi].tolist(), self.xlink[lo:hi].tolist()))

    def edges(self) -> Iterator[tuple[int, int]]:
        """Each undirected edge once, as (u, v) with u < v."""
        for u in range(self.n):
            for v in self.neighbors(u).tolist():
                if u < v:
                    yield u, v

    def edge_array(self) -> np.ndarray:
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees())
        keep = src < self.indices
        return np.stack([src[keep], self.indices[keep]], axis=1)

    def index_of(self, label: str) -> int:
        try:
            return self._label_index[label]
        except KeyError:
            raise KeyError(f"unknown vertex label {label!r}") from None

    @property
    def _label_index(self) -> dict[str, int]:
        cached = self.__dict__.get("_label_index_cache")
        if cached is None:
            cached = {lab: i for i, lab in enumerate(self.labels)}
            object.__setattr__(self, "_label_index_cache", cached)
        return cached

    def adjacency_matrix(self) -> sparse.csr_matrix:
        data = np.ones(len(self.indices), dtype=np.int64)
        return sparse.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def with_attributes(self, attr: np.ndarray, attr_labels: Iterable[str]) -> "Graph":
        return Graph(self.indptr, self.indices, self.xlink, self.labels,
                     np.asarray(attr, dtype=np.int64).copy(), tuple(attr_labels))

    def write_edge_list(self, sink: TextIO) -> None:
        """Canonical re-emission: one ``u v`` line per edge, original labels."""
        labels = self.labels
        for u, v in self.edges():
            sink.write(f"{labels[u]} {labels[v]}\n")

    def write_attributes(self, sink: TextIO) -> None:
        for v in range(self.n):
            sink.write(f"{self.labels[v]}\t{self.attr_labels[self.attr[v]]}\n")

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.labels == other.labels
                and self.attr_labels == other.attr_labels
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.xlink, other.xlink)
                and np.array_equal(self.attr, other.attr))

    __hash__ = None


def from_edges(edges: np.ndarray, n: int, labels: Iterable[str] | None = None) -> Graph:
    """Build a Graph from an (E, 2) array of dense ids.

    Self-loops are dropped and both orientations of a pair collapse into one edge.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(edges):
        if edges.min() < 0 or edges.max() >= n:
            raise ValueError("edge endpoint out of range")
    edges = edges[edges[:, 0] != edges[:, 1]]
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    und = np.unique(lo * n + hi)
    lo, hi = und // n, und % n
    m = len(und)

    src = np.concatenate([lo, hi])
    dst = np.concatenate([hi, lo])
    order = np.lexsort((dst, src))
    pos = np.empty(2 * m, dtype=np.int64)
    pos[order] = np.arange(2 * m, dtype=np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    mirror = np.concatenate([np.arange(m, 2 * m), np.arange(m)])
    xlink = np.empty(2 * m, dtype=np.int64)
    xlink[pos] = pos[mirror] - indptr[dst]
    if labels is None:
        labels = [str(i) for i in range(n)]
    return Graph(indptr, dst[order].copy(), xlink, tuple(labels))


def load_edge_list(source: Source) -> Graph:
    """Parse a whitespace-separated edge list (SNAP style).

    Lines starting with ``#`` or ``%`` are comments; columns past the second
    (weights, timestamps) are ignored.  Labels are remapped to dense ids in
    numeric order when every label is an integer, lexicographic otherwise.
    """
    pairs = []
    fh = _open_text(source)
    try:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line[0] in "#%":
                continue
            parts = line.split()
            if len(parts) < 2:
                raise GraphFormatError(f"expected two vertex labels, got {line!r}", lineno)
            pairs.append((parts[0], parts[1]))
    finally:
        if isinstance(source, (str, os.PathLike)):
            fh.close()
    if not pairs:
        raise GraphFormatError("edge list contains no edges")

    labels = _label_order({lab for p in pairs for lab in p})
    index = {lab: i for i, lab in enumerate(labels)}
    edges = np.fromiter((index[lab] for p in pairs for lab in p), dtype=np.int64,
                        count=2 * len(pairs)).reshape(-1, 2)
    g = from_edges(edges, len(labels), labels)
    if g.m == 0:
        raise GraphFormatError("graph has no edges after removing self-loops")
    return g


def load_attributes(graph: Graph, source: Source) -> Graph:
    """Attach one nominal attribute per vertex from ``label<TAB>value`` lines.

    Vertices missing from the file get the reserved ``unknown`` class.
    """
    assigned: dict[int, str] = {}
    fh = _open_text(source)
    try:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.lstrip()[0] in "#%":
                continue
            if "\t" in line:
                label, value = line.split("\t", 1)
            else:
                parts = line.split(None, 1)
                if len(parts) < 2:
                    raise GraphFormatError(f"expected label and attribute, got {line!r}", lineno)
                label, value = parts
            label, value = label.strip(), value.strip()
            try:
                v = graph.index_of(label)
            except KeyError:
                raise GraphFormatError(f"unknown vertex label {label!r}", lineno) from None
            prev = assigned.get(v)
            if prev is not None and prev != value:
                raise GraphFormatError(
                    f"vertex {label!r} assigned both {prev!r} and {value!r}", lineno)
            assigned[v] = value
    finally:
        if isinstance(source, (str, os.PathLike)):
            fh.close()

    values = sorted(set(assigned.values()))
    if len(assigned) < graph.n and UNKNOWN_ATTRIBUTE not in values:
        values.append(UNKNOWN_ATTRIBUTE)
    if not values:
        values = [UNKNOWN_ATTRIBUTE]
    code = {val: i for i, val in enumerate(values)}
    attr = np.full(graph.n, code.get(UNKNOWN_ATTRIBUTE, 0), dtype=np.int64)
    for v, val in assigned.items():
        attr[v] = code[val]
    return graph.with_attributes(attr, values)


def count_triangles(graph: Graph) -> int:
    """Exact triangle count, trace(A^3)/6 via sparse products."""
    a = graph.adjacency_matrix()
    return int((a @ a).multiply(a).sum()) // 6
