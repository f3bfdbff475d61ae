"""Agglomerative summarization loop.

Each iteration draws ``s`` candidate pairs by weighted sampling, scores them,
merges the best pair, and refreshes the weights of the merged supernode and
its neighbours.  Two interchangeable backends run the loop: the compiled core
(``attrsumm._core``) and the pure-Python reference below.  In exact mode both
produce identical traces for the same seed.
"""
from __future__ import annotations

import json
import logging
import math
import os
import re
import time
from dataclasses import asdict, dataclass, field
from typing import IO

import numpy as np

from .graph import Graph
from .sampling import SamplingTree
from .scoring import EXACT, SKETCH, ScoreParams, combine, exact_cross, re_gain, weight_from
from .sketch import SketchParams, SketchStore
from .summary import Summary, initial_summary

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

log = logging.getLogger(__name__)

MAX_REDRAWS = 16
_POLICY = re.compile(r"^(?:(\d+(?:\.\d+)?)\*?)?logn$")


def have_core() -> bool:
    return _core is not None


def default_backend() -> str:
    env = os.environ.get("ATTRSUMM_BACKEND", "").lower()
    if env in ("python", "cython"):
        return env
    return "cython" if _core is not None else "python"


def parse_policy(policy: str) -> tuple[str, float]:
    """Map a policy string to (kind, coefficient).

    ``logn``, ``<c>logn`` (e.g. ``5logn``), ``log2n`` and ``sqrtn``; logs are natural.
    """
    p = policy.replace(" ", "").lower()
    if p in ("log2n", "log^2n", "logsqn"):
        return "log2", 1.0
    if p in ("sqrtn", "sqrt"):
        return "sqrt", 1.0
    mt = _POLICY.match(p)
    if mt:
        c = float(mt.group(1)) if mt.group(1) else 1.0
        if c <= 0:
            raise ValueError("sample coefficient must be positive")
        return "log", c
    raise ValueError(f"unknown sample policy {policy!r}")


def sample_count(policy: str, n_t: int) -> int:
    kind, c = parse_policy(policy)
    return _sample_count(kind, c, n_t)


def _sample_count(kind: str, c: float, n_t: int) -> int:
    if kind == "log":
        s = c * math.log(n_t)
    elif kind == "log2":
        s = math.log(n_t) ** 2
    else:
        s = math.sqrt(n_t)
    return max(1, int(s))


@dataclass
class SummarizerConfig:
    k_target: int
    sample_policy: str = "5logn"
    alpha: float = 1.0
    mode: str = SKETCH
    width: int = 200
    depth: int = 2
    seed: int = 0
    target_size_bits: int | None = None
    sketch_correction: str = "signed"   # or "none": neighbours' sketches are left stale
    sparsify_key: str = "delta"         # or "printed"
    backend: str = "auto"

    def __post_init__(self):
        if self.k_target < 1:
            raise ValueError("k_target must be >= 1")
        parse_policy(self.sample_policy)
        ScoreParams(self.alpha, self.mode, self.width, self.depth)
        if self.sketch_correction not in ("signed", "none"):
            raise ValueError("sketch_correction must be 'signed' or 'none'")
        if self.backend not in ("auto", "python", "cython"):
            raise ValueError(f"unknown backend {self.backend!r}")

    @property
    def score_params(self) -> ScoreParams:
        return ScoreParams(self.alpha, self.mode, self.width, self.depth)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class MergeTrace:
    """One row per merge: endpoints, new id, score parts, candidates, seconds."""

    a: list = field(default_factory=list)
    b: list = field(default_factory=list)
    z: list = field(default_factory=list)
    combined: list = field(default_factory=list)
    re_component: list = field(default_factory=list)
    attr_component: list = field(default_factory=list)
    candidates: list = field(default_factory=list)
    elapsed: list = field(default_factory=list)

    def __len__(self):
        return len(self.a)

    def append(self, a, b, z, combined, re, attr, candidates, elapsed):
        self.a.append(a)
        self.b.append(b)
        self.z.append(z)
        self.combined.append(combined)
        self.re_component.append(re)
        self.attr_component.append(attr)
        self.candidates.append(candidates)
        self.elapsed.append(elapsed)

    def records(self):
        for t in range(len(self)):
            yield {
                "iteration": t + 1,
                "pair": [self.a[t], self.b[t]],
                "merged": self.z[t],
                "combined": self.combined[t],
                "re_component": self.re_component[t],
                "attr_component": self.attr_component[t],
                "candidates": self.candidates[t],
                "elapsed": self.elapsed[t],
            }

    def key(self) -> list:
        """Everything except timings, for determinism checks."""
        return list(zip(self.a, self.b, self.z, self.combined, self.re_component,
                        self.attr_component, self.candidates))

    def write_jsonl(self, sink: IO[str]) -> None:
        for rec in self.records():
            sink.write(json.dumps(rec) + "\n")


# -- candidate drawing --------------------------------------------------

def _uniform_other(live: list[int], live_pos, a: int, u: float) -> int:
    n_live = len(live)
    j = min(int(u * (n_live - 1)), n_live - 2)
    if j >= live_pos[a]:
        j += 1
    return live[j]


def _draw_pair(tree: SamplingTree, rng, live: list[int], live_pos) -> tuple[int, int]:
    if tree.n_positive >= 2:
        total = tree.total
        a = tree.sample(rng.random() * total)
        for _ in range(MAX_REDRAWS):
            b = tree.sample(rng.random() * total)
            if b != a:
                break
        else:
            b = _uniform_other(live, live_pos, a, rng.random())
    else:
        n_live = len(live)
        a = live[min(int(rng.random() * n_live), n_live - 1)]
        b = _uniform_other(live, live_pos, a, rng.random())
    return (a, b) if a < b else (b, a)


def draw_candidates(tree: SamplingTree, s: int, rng, live: list[int] | None = None,
                    live_pos=None) -> list[tuple[int, int]]:
    """``s`` pairs, each from two weighted draws with distinct endpoints.

    With fewer than two positive-weight leaves the pair is drawn uniformly
    from ``live`` instead.
    """
    if live is None:
        live = [tree._slot_id[i] for i in range(tree.n_slots) if tree._slot_id[i] != -1]
    if live_pos is None:
        live_pos = {a: i for i, a in enumerate(live)}
    if len(live) < 2:
        raise ValueError("need at least two live supernodes to form a pair")
    return [_draw_pair(tree, rng, live, live_pos) for _ in range(s)]


# -- merging ----------------------------------------------------------------

def merge_pair(summary: Summary, a: int, b: int, sketches: SketchStore | None = None,
               tree: SamplingTree | None = None) -> int:
    """Merge a and b; keep sketches and sampling weights consistent. Returns the new id."""
    delta = summary.merge(a, b)
    z = delta.z
    if sketches is not None:
        sketches.merge(a, b, z, delta.e_ab, delta.n_a, delta.n_b,
                       zip(delta.neighbors, delta.from_a, delta.from_b))
    if tree is not None:
        size, internal, dsum = summary.size, summary.internal, summary.dsum
        tree.delete(a)
        tree.delete(b)
        tree.insert(z, weight_from(size[z], internal[z], dsum[z]))
        for c in delta.neighbors:
            tree.update_weight(c, weight_from(size[c], internal[c], dsum[c]))
    return z


def initial_tree(summary: Summary) -> SamplingTree:
    size, internal, dsum = summary.size, summary.internal, summary.dsum
    return SamplingTree.build(
        (a, weight_from(size[a], internal[a], dsum[a])) for a in summary.live)


# -- main loop -------------------------------------------------------------

def _resolve_backend(config: SummarizerConfig) -> str:
    backend = default_backend() if config.backend == "auto" else config.backend
    if backend == "cython" and _core is None:
        raise RuntimeError("compiled core requested but attrsumm._core is not built")
    return backend


def summarize(graph: Graph, config: SummarizerConfig) -> tuple[Summary, MergeTrace]:
    """Merge down to ``config.k_target`` supernodes, then sparsify if a size target is set."""
    if config.k_target > graph.n:
        raise ValueError(f"k_target={config.k_target} exceeds n={graph.n}")
    backend = _resolve_backend(config)
    t0 = time.perf_counter()
    if backend == "cython":
        summary, trace = _summarize_core(graph, config)
    else:
        summary, trace = _summarize_python(graph, config)
    log.info("summarized n=%d to k=%d in %.3fs (%s backend)", graph.n, summary.k,
             time.perf_counter() - t0, backend)
    if config.target_size_bits is not None:
        from .sparsify import sparsify

        summary = sparsify(summary, config.target_size_bits, key=config.sparsify_key)
    return summary, trace


def _summarize_python(graph: Graph, config: SummarizerConfig) -> tuple[Summary, MergeTrace]:
    summary = initial_summary(graph)
    trace = MergeTrace()
    kind, coef = parse_policy(config.sample_policy)
    rng = np.random.Generator(np.random.PCG64(config.seed))
    sketches = None
    if config.mode == SKETCH:
        params = SketchParams.from_seed(config.width, config.depth, config.seed)
        sketches = SketchStore.for_summary(summary, params,
                                           correct_neighbors=config.sketch_correction == "signed")
    tree = initial_tree(summary)
    alpha = config.alpha
    n_sq = float(graph.n * graph.n)
    size, internal, dsum, hist = summary.size, summary.internal, summary.dsum, summary.hist
    live, live_pos = summary.live, summary.live_pos

    while len(live) > config.k_target:
        t_start = time.perf_counter()
        s = _sample_count(kind, coef, len(live))
        best = None
        for _ in range(s):
            a, b = _draw_pair(tree, rng, live, live_pos)
            e_ab = summary.edge_weight(a, b)
            if sketches is None:
                cross = exact_cross(summary, a, b)
            else:
                cross = sketches.cross_estimate(a, b, e_ab, size[a], size[b])
            re = re_gain(size[a], size[b], internal[a], internal[b], e_ab,
                         dsum[a], dsum[b], cross)
            attr = int((hist[a] + hist[b]).max())
            score = combine(alpha, re, attr, n_sq, size[a] + size[b])
            if best is None or score > best[0] or (score == best[0] and (a, b) < best[1]):
                best = (score, (a, b), re, attr)
        score, (a, b), re, attr = best
        z = merge_pair(summary, a, b, sketches, tree)
        trace.append(a, b, z, score, re, attr, s, time.perf_counter() - t_start)
    return summary, trace


def _summarize_core(graph: Graph, config: SummarizerConfig) -> tuple[Summary, MergeTrace]:
    from .summary import from_arrays

    kind, coef = parse_policy(config.sample_policy)
    n = graph.n
    capacity = 2 * n
    if config.mode == SKETCH:
        params = SketchParams.from_seed(config.width, config.depth, config.seed)
        cols = params.columns(np.arange(capacity))
    else:
        cols = np.zeros((1, 1), dtype=np.int64)
    bitgen = np.random.PCG64(config.seed)
    engine = _core.Engine(graph.indptr, graph.indices, graph.attr, graph.n_classes)
    engine.run(
        config.k_target,
        config.mode == SKETCH,
        config.sketch_correction == "signed",
        float(config.alpha),
        {"log": 0, "log2": 1, "sqrt": 2}[kind],
        float(coef),
        config.width,
        config.depth,
        cols,
        bitgen,
    )
    out = engine.export()
    summary = from_arrays(n, graph.m, graph.n_classes, capacity, out["next_id"],
                          out["parent"], out["size"], out["internal"], out["dsum"],
                          out["hist"], out["live"], out["adj_ptr"], out["adj_nbr"],
                          out["adj_w"], graph.labels, graph.attr_labels)
    t = out["trace"]
    trace = MergeTrace(
        a=t["a"].tolist(), b=t["b"].tolist(), z=t["z"].tolist(),
        combined=t["combined"].tolist(), re_component=t["re"].tolist(),
        attr_component=t["attr"].tolist(), candidates=t["candidates"].tolist(),
        elapsed=t["elapsed"].tolist(),
    )
    return summary, trace
