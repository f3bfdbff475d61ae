from __future__ import annotations

import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from attrsumm.graph import from_edges  # noqa: E402
from attrsumm.summary import initial_summary  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_graph(rng: np.random.Generator, n: int, p: float, n_classes: int = 1):
    iu = np.triu_indices(n, 1)
    keep = rng.random(len(iu[0])) < p
    edges = np.stack([iu[0][keep], iu[1][keep]], axis=1)
    g = from_edges(edges, n)
    if n_classes > 1:
        g = g.with_attributes(rng.integers(0, n_classes, n), [f"c{i}" for i in range(n_classes)])
    return g, [tuple(e) for e in edges.tolist()]


def summary_from_partition(graph, labels):
    """Merge vertices block by block; returns the summary and block -> supernode id."""
    s = initial_summary(graph)
    head = {}
    for v, b in enumerate(labels):
        if b in head:
            head[b] = s.merge(head[b], v).z
        else:
            head[b] = v
    return s, head


def random_partition(rng: np.random.Generator, n: int, k: int | None = None):
    k = k if k is not None else int(rng.integers(1, n + 1))
    return rng.integers(0, k, n).tolist()


@st.composite
def graph_and_partition(draw, max_n=60, min_n=2, n_classes=1):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    n = draw(st.integers(min_n, max_n))
    p = draw(st.floats(0.0, 1.0))
    g, edges = random_graph(rng, n, p, n_classes)
    labels = random_partition(rng, n)
    return g, edges, labels, rng


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
