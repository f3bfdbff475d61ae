"""Compare the pure-Python and compiled summarizer backends.

    python benchmarks/bench_backends.py --sizes 1024 4096 --repeats 3

Prints one row per (n, mode) with the median wall time of each backend, the
speedup, and whether both produced the same merge sequence.
"""
from __future__ import annotations

import argparse
import json
import statistics
import sys
import time

from attrsumm.evaluation import powerlaw_graph
from attrsumm.summarizer import SummarizerConfig, have_core, summarize


def timed(graph, config):
    t0 = time.perf_counter()
    summary, trace = summarize(graph, config)
    return time.perf_counter() - t0, summary, trace


def bench(n: int, mode: str, repeats: int, seed: int) -> dict:
    graph = powerlaw_graph(n, seed=seed)
    row = {"n": n, "m": graph.m, "mode": mode}
    traces = {}
    for backend in ("python", "cython"):
        cfg = SummarizerConfig(k_target=max(1, n // 16), mode=mode, seed=seed, backend=backend)
        times = []
        for _ in range(repeats):
            secs, _, trace = timed(graph, cfg)
            times.append(secs)
        row[backend] = statistics.median(times)
        traces[backend] = trace
    row["speedup"] = row["python"] / row["cython"]
    tp, tc = traces["python"], traces["cython"]
    row["same_merges"] = (tp.a, tp.b) == (tc.a, tc.b)
    return row


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1024, 4096, 16384])
    ap.add_argument("--modes", nargs="+", choices=("exact", "sketch"), default=["exact", "sketch"])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="also write rows to this file")
    args = ap.parse_args(argv)
    if not have_core():
        print("compiled core is not built; run `pip install -e . --no-build-isolation`",
              file=sys.stderr)
        return 1
    rows = []
    print(f"{'n':>7} {'m':>9} {'mode':>6} {'python s':>9} {'cython s':>9} {'speedup':>8}  same")
    for n in args.sizes:
        for mode in args.modes:
            r = bench(n, mode, args.repeats, args.seed)
            rows.append(r)
            print(f"{r['n']:>7} {r['m']:>9} {r['mode']:>6} {r['python']:>9.3f} "
                  f"{r['cython']:>9.3f} {r['speedup']:>7.1f}x  {r['same_merges']}", flush=True)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
