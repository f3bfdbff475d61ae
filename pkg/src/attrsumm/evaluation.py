"""Evaluation harness: metrics, repeated parameter sweeps and report tables."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable

import numpy as np

from .graph import Graph, count_triangles, from_edges, load_attributes, load_edge_list
from .queries import estimated_degrees, triangle_estimate
from .summarizer import SummarizerConfig, summarize
from .summary import Summary, normalized_re, purity, reconstruction_error_closed_form, storage_cost_bits

log = logging.getLogger(__name__)

DATA_ENV = "ATTRSUMM_DATA"

# name -> (edge-list candidates, attribute candidates)
DATASETS = {
    "facebook": (("facebook_combined.txt", "facebook_combined.txt.gz"), ()),
    "polblogs": (("polblogs.txt", "polblogs.edges", "polblogs.txt.gz"),
                 ("polblogs_attrs.tsv", "polblogs.attrs")),
}


class DatasetMissing(FileNotFoundError):
    pass


def data_dirs() -> list[Path]:
    dirs = []
    if os.environ.get(DATA_ENV):
        dirs.append(Path(os.environ[DATA_ENV]))
    dirs.append(Path.cwd() / "data")
    dirs.append(Path(__file__).resolve().parents[2] / "data")
    return list(dict.fromkeys(dirs))


def _find(names: Iterable[str]) -> Path | None:
    for d in data_dirs():
        for name in names:
            p = d / name
            if p.is_file():
                return p
    return None


def load_dataset(name: str) -> Graph:
    """Load a named dataset from $ATTRSUMM_DATA or ./data."""
    try:
        edge_names, attr_names = DATASETS[name]
    except KeyError:
        raise ValueError(f"unknown dataset {name!r}; known: {sorted(DATASETS)}") from None
    path = _find(edge_names)
    if path is None:
        raise DatasetMissing(
            f"dataset {name!r} missing: looked for {list(edge_names)} in "
            f"{[str(d) for d in data_dirs()]} (set ${DATA_ENV})")
    graph = load_edge_list(path)
    if attr_names:
        apath = _find(attr_names)
        if apath is None:
            raise DatasetMissing(f"attribute file for {name!r} missing: looked for {list(attr_names)}")
        graph = load_attributes(graph, apath)
    return graph


def powerlaw_graph(n: int, avg_degree: float = 10.0, exponent: float = 2.5,
                   seed: int = 0, n_classes: int = 2) -> Graph:
    """Chung-Lu style random graph with a power-law expected degree sequence."""
    rng = np.random.default_rng(seed)
    w = (np.arange(1, n + 1, dtype=np.float64)) ** (-1.0 / (exponent - 1.0))
    p = w / w.sum()
    m = int(n * avg_degree / 2)
    edges = np.stack([rng.choice(n, m, p=p), rng.choice(n, m, p=p)], axis=1)
    g = from_edges(edges, n)
    return g.with_attributes(rng.integers(0, n_classes, n), [f"c{i}" for i in range(n_classes)])


# -- metrics -----------------------------------------------------------------

def degree_error_stats(graph: Graph, summary: Summary) -> tuple[float, float]:
    """Mean and population std of |deg(v) - deg'(v)| over all vertices."""
    err = np.abs(graph.degrees() - estimated_degrees(summary))
    return float(err.mean()), float(err.std())


def percent_improvement(ours: float, baseline: float) -> float:
    if baseline == 0:
        raise ZeroDivisionError("baseline value is 0")
    return (ours - baseline) / baseline * 100.0


@dataclass
class SummaryReport:
    dataset: str
    config: dict
    seed: int
    n: int
    m: int
    k: int
    re: float
    normalized_re: float
    purity: float
    storage_bits: int
    storage_kb: float
    degree_error_mean: float
    degree_error_std: float
    triangle_density_error: float | None
    time_summarize: float
    time_eval: float

    def to_dict(self) -> dict:
        return asdict(self)

    def comparable(self) -> dict:
        """Everything except wall times."""
        d = self.to_dict()
        d.pop("time_summarize")
        d.pop("time_eval")
        return d


def evaluate(graph: Graph, summary: Summary, *, dataset: str = "", config: dict | None = None,
             seed: int = 0, time_summarize: float = 0.0,
             true_triangles: int | None = None) -> SummaryReport:
    t0 = time.perf_counter()
    bits = storage_cost_bits(summary)
    mean, std = degree_error_stats(graph, summary)
    t = count_triangles(graph) if true_triangles is None else true_triangles
    tde = (triangle_estimate(summary) - t) / t if t else None
    return SummaryReport(
        dataset=dataset, config=dict(config or {}), seed=seed,
        n=graph.n, m=graph.m, k=summary.k,
        re=reconstruction_error_closed_form(summary),
        normalized_re=normalized_re(summary),
        purity=purity(summary),
        storage_bits=bits, storage_kb=bits / 8192,
        degree_error_mean=mean, degree_error_std=std,
        triangle_density_error=tde,
        time_summarize=time_summarize,
        time_eval=time.perf_counter() - t0,
    )


def run_once(graph: Graph, config: SummarizerConfig, dataset: str = "",
             true_triangles: int | None = None) -> tuple[Summary, SummaryReport]:
    t0 = time.perf_counter()
    summary, _ = summarize(graph, config)
    elapsed = time.perf_counter() - t0
    return summary, evaluate(graph, summary, dataset=dataset, config=config.to_dict(),
                             seed=config.seed, time_summarize=elapsed,
                             true_triangles=true_triangles)


def repeat_seeds(base_seed: int, repeats: int) -> list[int]:
    """Seeds for repeats 0..R-1; the same list for every grid point, so runs are paired."""
    ss = np.random.SeedSequence(base_seed)
    return [int(c.generate_state(1)[0]) for c in ss.spawn(repeats)]


@dataclass
class SweepPoint:
    params: dict
    reports: list[SummaryReport] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    def stat(self, attr: str) -> tuple[float, float]:
        vals = [getattr(r, attr) for r in self.reports if getattr(r, attr) is not None]
        if not vals:
            return math.nan, math.nan
        return float(np.mean(vals)), float(np.std(vals))

    def row(self) -> dict:
        row = dict(self.params)
        row["runs"] = len(self.reports)
        row["failures"] = len(self.errors)
        for attr in ("normalized_re", "purity", "storage_kb", "degree_error_mean",
                     "triangle_density_error", "time_summarize"):
            mu, sd = self.stat(attr)
            row[f"{attr}_mean"] = mu
            row[f"{attr}_std"] = sd
        return row


def run_sweep(graph: Graph, grid: list[dict], repeats: int = 5, base_seed: int = 0,
              dataset: str = "") -> list[SweepPoint]:
    """One SweepPoint per grid entry, each run ``repeats`` times with paired seeds.

    A failing run is recorded on its point and the sweep carries on.
    """
    seeds = repeat_seeds(base_seed, repeats)
    t = count_triangles(graph)
    points = []
    for params in grid:
        point = SweepPoint(dict(params))
        for seed in seeds:
            try:
                config = SummarizerConfig(**{**params, "seed": seed})
                _, rep = run_once(graph, config, dataset, true_triangles=t)
                point.reports.append(rep)
            except Exception as exc:  # noqa: BLE001 - reported per point
                log.warning("grid point %s seed %d failed: %s", params, seed, exc)
                point.errors.append(f"{type(exc).__name__}: {exc}")
        points.append(point)
    return points


# -- output ------------------------------------------------------------------

REPORT_FIELDS = [f.name for f in fields(SummaryReport)]


def write_reports_csv(reports: list[SummaryReport], sink) -> None:
    w = csv.DictWriter(sink, fieldnames=REPORT_FIELDS)
    w.writeheader()
    for r in reports:
        d = r.to_dict()
        d["config"] = json.dumps(d["config"], sort_keys=True)
        w.writerow(d)


def write_rows_csv(rows: list[dict], sink) -> None:
    if not rows:
        return
    keys = list(rows[0])
    for r in rows[1:]:
        keys += [k for k in r if k not in keys]
    w = csv.DictWriter(sink, fieldnames=keys)
    w.writeheader()
    w.writerows(rows)


def sweep_to_json(points: list[SweepPoint], manifest: dict | None = None) -> dict:
    return {
        "manifest": manifest or {},
        "points": [
            {"params": p.params, "summary": p.row(), "errors": p.errors,
             "reports": [r.to_dict() for r in p.reports]}
            for p in points
        ],
    }


def _fmt(mu: float, sd: float, fmt: str) -> str:
    if math.isnan(mu):
        return "n/a"
    return f"{mu:{fmt}}±{sd:{fmt}}"


def format_table(points: list[SweepPoint]) -> str:
    """Plain-text table: config, RE, storage, degree error, triangle error, time."""
    head = ["k", "sample", "alpha", "RE", "Storage (KB)", "Avg. Degree Error",
            "Triangle Density Error", "Time (s)"]
    lines = []
    for p in points:
        pr = p.params
        lines.append([
            str(pr.get("k_target", "")), str(pr.get("sample_policy", "5logn")),
            str(pr.get("alpha", 1.0)),
            _fmt(*p.stat("normalized_re"), ".2E"),
            _fmt(*p.stat("storage_kb"), ".2f"),
            _fmt(*p.stat("degree_error_mean"), ".2f"),
            _fmt(*p.stat("triangle_density_error"), ".2f"),
            _fmt(*p.stat("time_summarize"), ".3f"),
        ])
    widths = [max(len(h), *(len(r[i]) for r in lines)) if lines else len(h)
              for i, h in enumerate(head)]
    out = io.StringIO()
    out.write("  ".join(h.ljust(w) for h, w in zip(head, widths)) + "\n")
    for r in lines:
        out.write("  ".join(c.ljust(w) for c, w in zip(r, widths)) + "\n")
    return out.getvalue()
