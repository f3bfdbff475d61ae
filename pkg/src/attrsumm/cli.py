"""Command-line entry point: ``attrsumm summarize | query | eval``.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 validation error.
"""
from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import logging
import os
import sys
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .evaluation import (
    DatasetMissing,
    evaluate,
    format_table,
    run_sweep,
    sweep_to_json,
    write_rows_csv,
)
from .graph import GraphFormatError, count_triangles, load_attributes, load_edge_list
from .queries import KINDS, QueryAnswer, adjacency_query, attribute_query, centrality_query, degree_query, triangle_query
from .summarizer import SummarizerConfig, summarize
from .summary import SummaryFormatError, deserialize_summary, serialize_summary

EXIT_USAGE, EXIT_IO, EXIT_VALIDATION = 1, 2, 3

log = logging.getLogger("attrsumm")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    inputs: dict
    seed: int | None
    version: str = __version__

    @classmethod
    def build(cls, command: str, config: dict, paths: dict, seed: int | None):
        inputs = {k: {"path": p, "digest": file_digest(p)} for k, p in paths.items() if p}
        return cls(command, config, inputs, seed)

    def to_dict(self) -> dict:
        return asdict(self)


@contextmanager
def _sink(path: str):
    if path == "-":
        yield sys.stdout
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _load_graph(path: str, attrs: str | None):
    g = load_edge_list(path)
    if attrs:
        g = load_attributes(g, attrs)
    return g


# -- summarize ---------------------------------------------------------------

def cmd_summarize(args) -> int:
    graph = _load_graph(args.input, args.attrs)
    config = SummarizerConfig(
        k_target=args.k,
        sample_policy=args.sample,
        alpha=args.alpha,
        mode=args.mode,
        width=args.width,
        depth=args.depth,
        seed=args.seed,
        target_size_bits=None if args.target_bytes is None else 8 * args.target_bytes,
        sketch_correction=args.sketch_correction,
        sparsify_key=args.sparsify_key,
        backend=args.backend,
    )
    manifest = RunManifest.build("summarize", config.to_dict(),
                                 {"input": args.input, "attrs": args.attrs}, args.seed)
    t0 = time.perf_counter()
    summary, trace = summarize(graph, config)
    elapsed = time.perf_counter() - t0
    serialize_summary(summary, args.out, manifest.to_dict())
    if args.trace:
        with _sink(args.trace) as fh:
            trace.write_jsonl(fh)
    report = evaluate(graph, summary, dataset=os.path.basename(args.input),
                      config=config.to_dict(), seed=args.seed, time_summarize=elapsed)
    with _sink(args.report) as fh:
        json.dump({"manifest": manifest.to_dict(), "report": report.to_dict()}, fh, indent=2)
        fh.write("\n")
    return 0


# -- query -------------------------------------------------------------------

def _vertex(summary, label_index, label: str) -> int:
    try:
        return label_index[label]
    except KeyError:
        raise ValueError(f"unknown vertex label {label!r}") from None


def cmd_query(args) -> int:
    summary = deserialize_summary(args.summary)
    label_index = {lab: i for i, lab in enumerate(summary.vertex_labels)}
    graph = _load_graph(args.graph, args.attrs) if args.graph else None
    if graph is not None and graph.n != summary.n:
        raise ValueError("--graph does not match the summary's vertex count")
    rng = np.random.default_rng(args.seed)
    manifest = RunManifest.build("query", {"kind": args.kind},
                                 {"summary": args.summary, "graph": args.graph}, args.seed)
    records = []
    if args.kind == "triangles":
        ans = triangle_query(summary)
        rec = _record(ans)
        if graph is not None:
            t = count_triangles(graph)
            rec["truth"] = t
            rec["error"] = (ans.value - t) / t if t else None
        records.append(rec)
    elif args.kind == "adjacency":
        if not args.pairs:
            raise UsageError("adjacency queries need --pairs U,V [U,V ...]")
        for pair in args.pairs:
            try:
                lu, lv = pair.split(",")
            except ValueError:
                raise UsageError(f"bad pair {pair!r}; expected U,V") from None
            u, v = _vertex(summary, label_index, lu), _vertex(summary, label_index, lv)
            rec = _record(adjacency_query(summary, u, v), pair=[lu, lv])
            if graph is not None:
                truth = float(v in set(graph.neighbors(u).tolist()))
                rec["truth"] = truth
                rec["error"] = abs(rec["answer"] - truth)
            records.append(rec)
    else:
        labels = args.nodes if args.nodes else list(summary.vertex_labels)
        deg = graph.degrees() if graph is not None else None
        for lab in labels:
            v = _vertex(summary, label_index, lab)
            if args.kind == "degree":
                ans = degree_query(summary, v)
                truth = None if deg is None else int(deg[v])
            elif args.kind == "centrality":
                ans = centrality_query(summary, v)
                truth = None if deg is None else float(deg[v]) / (2 * graph.m)
            else:
                ans = attribute_query(summary, v, rng, deterministic=args.deterministic)
                truth = None if graph is None else graph.attr_labels[graph.attr[v]]
            rec = _record(ans, node=lab)
            if truth is not None:
                rec["truth"] = truth
                rec["error"] = (float(ans.value != truth) if args.kind == "attribute"
                                else abs(ans.value - truth))
            records.append(rec)
    with _sink(args.out) as fh:
        fh.write(json.dumps({"manifest": manifest.to_dict()}) + "\n")
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return 0


def _record(ans: QueryAnswer, **extra) -> dict:
    rec = {"kind": ans.kind, **extra, "answer": ans.value, "basis": list(ans.basis)}
    return rec


# -- eval --------------------------------------------------------------------

def _parse_grid(text: str) -> list[dict]:
    if os.path.isfile(text):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    try:
        grid = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--grid is neither a file nor valid JSON: {exc}") from None
    if isinstance(grid, dict):
        # {"k_target": [100, 500], "alpha": [1.0]} -> cartesian product
        keys = list(grid)
        vals = [v if isinstance(v, list) else [v] for v in grid.values()]
        grid = [dict(zip(keys, combo)) for combo in itertools.product(*vals)]
    if not isinstance(grid, list) or not all(isinstance(g, dict) for g in grid):
        raise UsageError("--grid must be a JSON list of objects or an object of lists")
    for g in grid:
        if "k_target" not in g:
            raise UsageError("every grid point needs k_target")
    return grid


def cmd_eval(args) -> int:
    grid = _parse_grid(args.grid)
    graph = _load_graph(args.input, args.attrs)
    manifest = RunManifest.build("eval", {"grid": grid, "repeats": args.repeats},
                                 {"input": args.input, "attrs": args.attrs}, args.seed)
    points = run_sweep(graph, grid, repeats=args.repeats, base_seed=args.seed,
                       dataset=os.path.basename(args.input))
    with _sink(args.out) as fh:
        if args.format == "json":
            json.dump(sweep_to_json(points, manifest.to_dict()), fh, indent=2)
            fh.write("\n")
        elif args.format == "csv":
            fh.write("# manifest: " + json.dumps(manifest.to_dict()) + "\n")
            write_rows_csv([p.row() for p in points], fh)
        else:
            fh.write(format_table(points))
    failed = sum(len(p.errors) for p in points)
    if failed:
        print(f"attrsumm eval: {failed} run(s) failed; see the errors in the report",
              file=sys.stderr)
    return 0


# -- wiring ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="attrsumm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"attrsumm {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("summarize", help="summarize a graph to k supernodes")
    s.add_argument("--input", required=True, help="edge list (optionally .gz)")
    s.add_argument("--attrs", help="attribute TSV: label<TAB>value")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--sample", default="5logn", help="logn | <c>logn | log2n | sqrtn")
    s.add_argument("--mode", choices=("exact", "sketch"), default="sketch")
    s.add_argument("--width", type=int, default=200)
    s.add_argument("--depth", type=int, default=2)
    s.add_argument("--target-bytes", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="summary file to write")
    s.add_argument("--report", default="-", help="report path (default stdout)")
    s.add_argument("--trace", help="write one JSON line per merge here")
    s.add_argument("--sketch-correction", choices=("signed", "none"), default="signed")
    s.add_argument("--sparsify-key", choices=("delta", "printed"), default="delta")
    s.add_argument("--backend", choices=("auto", "python", "cython"), default="auto")
    s.set_defaults(func=cmd_summarize)

    q = sub.add_parser("query", help="answer queries from a summary")
    q.add_argument("--summary", required=True)
    q.add_argument("--kind", choices=KINDS, required=True)
    q.add_argument("--nodes", nargs="*", help="vertex labels (default: all vertices)")
    q.add_argument("--pairs", nargs="*", help="U,V label pairs for adjacency")
    q.add_argument("--graph", help="original edge list, for error columns")
    q.add_argument("--attrs", help="attribute TSV for the original graph")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--deterministic", action="store_true",
                   help="attribute queries return the majority class")
    q.add_argument("--out", default="-")
    q.set_defaults(func=cmd_query)

    e = sub.add_parser("eval", help="run a repeated parameter sweep")
    e.add_argument("--input", required=True)
    e.add_argument("--attrs")
    e.add_argument("--grid", required=True, help="JSON (inline or file) of grid points")
    e.add_argument("--repeats", type=int, default=5)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--format", choices=("csv", "json", "table"), default="csv")
    e.add_argument("--out", default="-")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"attrsumm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetMissing, FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"attrsumm: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (GraphFormatError, SummaryFormatError, ValueError, KeyError, IndexError) as exc:
        print(f"attrsumm: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"attrsumm: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
