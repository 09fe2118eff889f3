import csv
import io
import json

import pytest

from pdflow import cli
from pdflow.cli import CORPUS_FIELDS, cmd_corpus, main, rows_to_csv
from pdflow.corpus import bundled_dir
from pdflow.diff import Verdict
from pdflow.emit import load_json

CORPUS = bundled_dir()


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def test_analyze_identity(tmp_path, capsys):
    path = write(tmp_path, "id.scm", "((λ (x) x) (λ (y) y))")
    assert main(["analyze", path]) == 0
    out = capsys.readouterr().out
    assert "results   {(λ (y) y)}" in out


def test_analyze_omega_terminates(capsys):
    assert main(["analyze", str(CORPUS / "omega.scm")]) == 0
    assert "results   {}" in capsys.readouterr().out


def test_analyze_writes_json(tmp_path, capsys):
    out = tmp_path / "g.json"
    assert main(["analyze", str(CORPUS / "two-callers.scm"), "--format", "json", "--out", str(out)]) == 0
    data = load_json(out.read_text(encoding="utf-8"))
    assert data["machine"] == "pushdown" and data["results"] == ["#f"]
    assert "states" in capsys.readouterr().out


def test_graph_to_stdout_moves_summary_to_stderr(capsys):
    assert main(["analyze", str(CORPUS / "identity.scm"), "--format", "dot"]) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("digraph")
    assert "states" in captured.err


def test_header_selects_machine(capsys):
    assert main(["analyze", str(CORPUS / "sr-direct.scm")]) == 0
    assert "shift-reset" in capsys.readouterr().out


def test_exit_parse_error(tmp_path, capsys):
    assert main(["analyze", write(tmp_path, "bad.scm", "(λ (x)")]) == 1
    assert "line 1" in capsys.readouterr().err


def test_exit_unreadable(tmp_path):
    assert main(["analyze", str(tmp_path / "missing.scm")]) == 1


def test_exit_open_program(tmp_path, capsys):
    assert main(["analyze", write(tmp_path, "open.scm", "(λ (x) y)")]) == 2
    assert "y" in capsys.readouterr().err


@pytest.mark.parametrize("flags", [
    ["--alloc", "fresh"],
    ["--memo", "--gc", "union"],
    ["--memo", "--machine", "cesik"],
    ["--alloc", "kcfa:x"],
    ["--machine", "cesik", "--gc", "exact"],
])
def test_exit_config(flags):
    assert main(["analyze", str(CORPUS / "identity.scm")] + flags) == 3


def test_exit_config_for_wrong_machine():
    assert main(["analyze", str(CORPUS / "cm-grant-test.scm"), "--machine", "pushdown"]) == 3
    assert main(["analyze", str(CORPUS / "sr-direct.scm"), "--machine", "cm"]) == 3


def test_exit_budget():
    assert main(["analyze", str(CORPUS / "omega.scm"), "--alloc", "fresh", "--budget", "100"]) == 4
    assert main(["analyze", str(CORPUS / "church.scm"), "--budget", "5"]) == 4


def test_diff_pass(capsys):
    assert main(["diff", str(CORPUS / "two-callers.scm"), "--alloc", "kcfa:1"]) == 0
    assert capsys.readouterr().out.startswith("pass")


def test_diff_fail_exit(monkeypatch, capsys):
    monkeypatch.setattr(cli, "diff", lambda e, c, f: Verdict(False, 3, "unfinished", 2, None, "forced"))
    assert main(["diff", str(CORPUS / "identity.scm")]) == 5
    assert "forced" in capsys.readouterr().out


def test_diff_needs_finite_policy():
    assert main(["diff", str(CORPUS / "identity.scm"), "--alloc", "fresh", "--budget", "9"]) == 3


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_corpus_empty_dir(tmp_path, capsys):
    assert main(["corpus", str(tmp_path)]) == 0
    assert capsys.readouterr().out.strip() == ",".join(CORPUS_FIELDS)


def test_corpus_rows(tmp_path, capsys):
    out = tmp_path / "rows.csv"
    assert main(["corpus", "--machines", "baseline,pushdown", "--out", str(out)]) == 0
    rows = _rows(out.read_text(encoding="utf-8"))
    by = {(r["program"], r["machine"]): r for r in rows}
    assert by[("omega", "baseline")]["status"] == "ok"
    assert by[("omega", "pushdown")]["status"] == "ok"
    assert int(by[("proxy-map", "pushdown")]["facts"]) < int(by[("proxy-map", "baseline")]["facts"])
    assert by[("cm-grant-test", "pushdown")]["status"].startswith("error 3")


def test_corpus_unknown_machine():
    assert main(["corpus", "--machines", "nope"]) == 3


def test_corpus_parallel_matches_serial(monkeypatch):
    def strip(rows):
        return [{k: v for k, v in r.items() if k != "seconds"} for r in rows]

    serial = cmd_corpus(CORPUS, ("pushdown",), ("mono",), ("none",), (False, True))
    monkeypatch.setenv("AAM_THREADS", "2")
    parallel = cmd_corpus(CORPUS, ("pushdown",), ("mono",), ("none",), (False, True))
    assert strip(serial) == strip(parallel)
    text = rows_to_csv(serial)
    assert len(_rows(text)) == len(serial)


def test_corpus_memo_both(capsys):
    assert main(["corpus", "--machines", "pushdown", "--memo", "both", "--allocs", "mono"]) == 0
    rows = _rows(capsys.readouterr().out)
    memo = {r["program"]: r for r in rows if r["memo"] == "True" and r["status"] == "ok"}
    plain = {r["program"]: r for r in rows if r["memo"] == "False" and r["status"] == "ok"}
    assert memo.keys() == plain.keys()
    for name in memo:
        assert memo[name]["results"] == plain[name]["results"]


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "pdflow", "analyze", str(CORPUS / "identity.scm")],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "states" in proc.stdout


def test_report_json_shape():
    from pdflow.engine import analyze
    from pdflow.report import make_report
    from pdflow.syntax import parse

    rep = make_report(analyze(parse("((λ (f) (f 1)) (λ (x) x))")))
    d = json.loads(rep.to_json())
    assert d["results"] == ["1"] and rep.facts == sum(len(v) for v in d["returns"].values())
