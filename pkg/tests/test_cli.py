import json
import subprocess
import sys

import pytest

from attrsumm.cli import main
from attrsumm.evaluation import degree_error_stats
from attrsumm.graph import load_edge_list
from attrsumm.summary import bits_per_superedge, deserialize_summary, read_summary_document


@pytest.fixture
def files(tmp_path):
    edges = tmp_path / "g.txt"
    lines = ["# toy graph", "a b", "b c", "a c", "c d", "d e", "e f", "d f", "f g", "g h", "h a"]
    edges.write_text("\n".join(lines) + "\n")
    attrs = tmp_path / "g.tsv"
    attrs.write_text("".join(f"{v}\t{'L' if v in 'abcd' else 'R'}\n" for v in "abcdefgh"))
    tri = tmp_path / "tri.txt"
    tri.write_text("1 2\n2 3\n1 3\n")
    return tmp_path, str(edges), str(attrs), str(tri)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def jsonl(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def test_summarize_identity(files, capsys):
    tmp, edges, attrs, _ = files
    out = tmp / "s.json"
    code, stdout, _ = run(["summarize", "--input", edges, "--attrs", attrs, "--k", "8",
                           "--out", str(out)], capsys)
    assert code == 0
    doc = json.loads(stdout)
    assert doc["report"]["re"] == 0.0 and doc["report"]["purity"] == 1.0
    man = doc["manifest"]
    assert man["config"]["width"] == 200 and man["config"]["depth"] == 2
    assert man["config"]["sample_policy"] == "5logn" and man["config"]["mode"] == "sketch"
    assert man["inputs"]["input"]["digest"].startswith("sha256:")
    assert read_summary_document(out)["manifest"] == man


def test_summarize_with_budget_and_trace(files, capsys):
    tmp, edges, _, _ = files
    out, trace, rep = tmp / "s.json", tmp / "t.jsonl", tmp / "r.json"
    code, _, _ = run(["summarize", "--input", edges, "--k", "4", "--target-bytes", "3",
                      "--out", str(out), "--trace", str(trace), "--report", str(rep)], capsys)
    assert code == 0
    report = json.loads(rep.read_text())["report"]
    s = deserialize_summary(out)
    assert report["storage_bits"] <= 24 + bits_per_superedge(s)
    assert len(jsonl(trace.read_text())) == 4


def test_summarize_is_reproducible(files, capsys):
    tmp, edges, _, _ = files
    docs = []
    for name in ("x.json", "y.json"):
        code, _, _ = run(["summarize", "--input", edges, "--k", "3", "--seed", "4",
                          "--out", str(tmp / name), "--report", str(tmp / "rep.json")], capsys)
        assert code == 0
        docs.append(read_summary_document(tmp / name))
    assert docs[0] == docs[1]


def test_query_degree_on_identity(files, capsys):
    tmp, edges, _, _ = files
    out = tmp / "s.json"
    run(["summarize", "--input", edges, "--k", "8", "--out", str(out), "--report", str(tmp / "r")],
        capsys)
    code, stdout, _ = run(["query", "--summary", str(out), "--kind", "degree",
                           "--graph", edges], capsys)
    assert code == 0
    recs = jsonl(stdout)
    assert "manifest" in recs[0]
    assert len(recs) == 9 and all(r["error"] == 0 for r in recs[1:])


def test_query_triangles_on_one_supernode(files, capsys):
    tmp, _, _, tri = files
    out = tmp / "s.json"
    run(["summarize", "--input", tri, "--k", "1", "--out", str(out), "--report", str(tmp / "r")],
        capsys)
    code, stdout, _ = run(["query", "--summary", str(out), "--kind", "triangles",
                           "--graph", tri], capsys)
    rec = jsonl(stdout)[1]
    assert code == 0 and rec["answer"] == 1.0 and rec["error"] == 0.0


def test_batch_degree_queries_match_error_stats(tmp_path, capsys):
    edges = tmp_path / "pl.txt"
    from attrsumm.evaluation import powerlaw_graph
    g = powerlaw_graph(1000, 6, seed=3)
    edges.write_text("".join(f"{u} {v}\n" for u, v in g.edges()))
    out = tmp_path / "s.json"
    run(["summarize", "--input", str(edges), "--k", "100", "--out", str(out),
         "--report", str(tmp_path / "r")], capsys)
    code, stdout, _ = run(["query", "--summary", str(out), "--kind", "degree",
                           "--graph", str(edges)], capsys)
    recs = jsonl(stdout)[1:]
    graph = load_edge_list(edges)
    mean, _ = degree_error_stats(graph, deserialize_summary(out))
    assert len(recs) == graph.n
    assert sum(r["error"] for r in recs) / len(recs) == pytest.approx(mean)


def test_query_kinds(files, capsys):
    tmp, edges, attrs, _ = files
    out = tmp / "s.json"
    run(["summarize", "--input", edges, "--attrs", attrs, "--k", "3", "--out", str(out),
         "--report", str(tmp / "r")], capsys)
    code, stdout, _ = run(["query", "--summary", str(out), "--kind", "adjacency",
                           "--pairs", "a,b", "a,e", "--graph", edges], capsys)
    recs = jsonl(stdout)[1:]
    assert code == 0 and [r["pair"] for r in recs] == [["a", "b"], ["a", "e"]]
    assert all(0 <= r["answer"] <= 1 for r in recs)
    code, stdout, _ = run(["query", "--summary", str(out), "--kind", "attribute",
                           "--nodes", "a", "h", "--deterministic"], capsys)
    assert code == 0 and all(r["answer"] in ("L", "R") for r in jsonl(stdout)[1:])
    code, stdout, _ = run(["query", "--summary", str(out), "--kind", "centrality",
                           "--nodes", "c"], capsys)
    assert code == 0 and len(jsonl(stdout)) == 2


def test_eval_outputs(files, capsys):
    tmp, edges, _, _ = files
    code, stdout, _ = run(["eval", "--input", edges, "--grid", '[{"k_target": 4}]',
                           "--repeats", "1"], capsys)
    lines = stdout.strip().splitlines()
    assert code == 0 and lines[0].startswith("# manifest:") and len(lines) == 3
    grid = tmp / "grid.json"
    grid.write_text(json.dumps({"k_target": [3, 5], "alpha": [1.0]}))
    code, stdout, _ = run(["eval", "--input", edges, "--grid", str(grid), "--repeats", "5",
                           "--format", "json"], capsys)
    doc = json.loads(stdout)
    assert code == 0 and len(doc["points"]) == 2
    assert all(len(p["reports"]) == 5 for p in doc["points"])
    assert doc["points"][0]["summary"]["normalized_re_std"] >= 0
    code, stdout, _ = run(["eval", "--input", edges, "--grid", '[{"k_target": 4}]',
                           "--repeats", "1", "--format", "table"], capsys)
    assert code == 0 and "Avg. Degree Error" in stdout


def test_eval_point_failure_keeps_going(files, capsys):
    _, edges, _, _ = files
    code, stdout, err = run(["eval", "--input", edges, "--grid",
                             '[{"k_target": 99}, {"k_target": 2}]', "--repeats", "1",
                             "--format", "json"], capsys)
    doc = json.loads(stdout)
    assert code == 0 and doc["points"][0]["errors"] and doc["points"][1]["reports"]
    assert "failed" in err


@pytest.mark.parametrize("argv", [["summarize", "--input", "x"], ["bogus"], []])
def test_usage_errors_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 1


def test_io_errors_exit_2(tmp_path, capsys):
    assert main(["summarize", "--input", "/nonexistent/g.txt", "--k", "2", "--out", "o"]) == 2
    assert main(["query", "--summary", "/nonexistent/s.json", "--kind", "degree"]) == 2


def test_validation_exit_codes(files, capsys):
    tmp, edges, _, _ = files
    out = tmp / "s.json"
    assert main(["summarize", "--input", edges, "--k", "99", "--out", str(out)]) == 3
    assert main(["summarize", "--input", edges, "--k", "2", "--sample", "cubic",
                 "--out", str(out)]) == 3
    bad = tmp / "bad.txt"
    bad.write_text("a\n")
    assert main(["summarize", "--input", str(bad), "--k", "1", "--out", str(out)]) == 3
    run(["summarize", "--input", edges, "--k", "3", "--out", str(out), "--report", str(tmp / "r")],
        capsys)
    assert main(["query", "--summary", str(out), "--kind", "degree", "--nodes", "zz"]) == 3
    assert main(["query", "--summary", str(out), "--kind", "adjacency"]) == 1
    assert main(["eval", "--input", edges, "--grid", "{not json"]) == 1
    assert main(["summarize", "--input", edges, "--k", "2", "--target-bytes", "0",
                 "--out", str(out)]) == 3


def test_console_script_runs(files):
    tmp, edges, _, _ = files
    res = subprocess.run([sys.executable, "-m", "attrsumm.cli", "summarize", "--input", edges,
                          "--k", "2", "--out", str(tmp / "s.json")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert json.loads(res.stdout)["report"]["k"] == 2
