import csv
import json
import subprocess
import sys

import pytest

from aodrepair.cli import main

BASE = ["--group-col", "edu", "--agg-col", "income"]


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def test_check_exit_codes(table1_csv, capsys):
    code, out = run(["check", "--input", str(table1_csv), *BASE, "--alpha", "sum"], capsys)
    assert code == 0
    assert json.loads(out.out)["satisfied"] is True
    code, out = run(["check", "--input", str(table1_csv), *BASE, "--alpha", "avg"], capsys)
    assert code == 1
    report = json.loads(out.out)
    assert report["s_mvi"] == "1/1"
    assert [g["aggregate"] for g in report["groups"]] == ["3/2", "4/1", "3/1"]


def test_exact_repair_report_and_outputs(table1_csv, tmp_path, capsys):
    removed = tmp_path / "removed.csv"
    kept = tmp_path / "kept.csv"
    report = tmp_path / "report.json"
    code, _ = run(
        ["repair", "--input", str(table1_csv), *BASE, "--alpha", "avg", "--algo", "exact",
         "--prune", "both", "--removed-out", str(removed), "--kept-out", str(kept), "--report", str(report)],
        capsys,
    )
    assert code == 0
    data = json.loads(report.read_text())
    assert data["schema_version"] == 1
    assert data["removed_count"] == 2 and data["kept_count"] == 12
    assert data["s_mvi_after"] == "0/1"
    assert data["heuristic_bound_used"] >= 2
    names = [row[0] for row in csv.reader(removed.open())][1:]
    assert names == ["Daniel", "Emily"]
    assert len(list(csv.reader(kept.open()))) == 13


def test_heuristic_is_default(table1_csv, capsys):
    code, out = run(["repair", "--input", str(table1_csv), *BASE, "--alpha", "max"], capsys)
    assert code == 0
    assert json.loads(out.out)["algorithm"] == "heur"


def test_input_errors_exit_2(table1_csv, tmp_path, capsys):
    assert run(["check", "--input", str(tmp_path / "none.csv"), *BASE, "--alpha", "max"], capsys)[0] == 2
    assert run(["check", "--input", str(table1_csv), "--group-col", "x", "--agg-col", "income",
                "--alpha", "max"], capsys)[0] == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("edu,income\n1,abc\n")
    assert run(["check", "--input", str(bad), *BASE, "--alpha", "max"], capsys)[0] == 2
    assert run(["check", "--input", str(bad), *BASE, "--alpha", "max", "--lenient"], capsys)[0] == 0
    assert run(["repair", "--input", str(table1_csv), *BASE, "--alpha", "avg", "--algo", "exact",
                "--bound", "1"], capsys)[0] == 2


def test_unsupported_exit_3(tmp_path, capsys):
    path = tmp_path / "neg.csv"
    path.write_text("edu,income\n1,3\n1,-2\n2,1\n")
    argv = ["repair", "--input", str(path), *BASE, "--alpha", "sum", "--algo", "exact"]
    assert run(argv, capsys)[0] == 0
    assert run(argv + ["--no-fallback"], capsys)[0] == 3


def test_zscore_option(tmp_path, capsys):
    path = tmp_path / "z.csv"
    path.write_text("edu,income\n1,0\n1,0\n1,0\n1,0\n2,100\n")
    code, out = run(["check", "--input", str(path), *BASE, "--alpha", "max", "--zscore-tau", "1"], capsys)
    assert json.loads(out.out)["input"]["zscore_removed_ids"] == [4]


def test_gen_and_bench(tmp_path, capsys):
    out = tmp_path / "g.csv"
    meta = tmp_path / "m.json"
    assert run(["gen", "--rows", "200", "--noise-frac", "0.1", "--seed", "5", "--out", str(out),
                "--meta", str(meta)], capsys)[0] == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 200 and sum(int(r["a"]) > 100 for r in rows) == 20
    assert json.loads(meta.read_text())["seed"] == 5
    bench = tmp_path / "b.json"
    assert run(["bench", "--sizes", "100,200", "--alphas", "max,sum", "--reps", "2", "--out", str(bench)],
               capsys)[0] == 0
    data = json.loads(bench.read_text())
    assert len(data["cells"]) == 8
    assert set(data["series"]) == {"max/exact", "max/heur", "sum/exact", "sum/heur"}


def test_module_entry_point(table1_csv):
    proc = subprocess.run(
        [sys.executable, "-m", "aodrepair", "check", "--input", str(table1_csv), *BASE, "--alpha", "avg"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 1


def test_bad_thread_setting(monkeypatch, capsys):
    monkeypatch.setenv("AOD_REPAIR_THREADS", "lots")
    assert run(["bench", "--sizes", "50", "--reps", "1", "--parallel"], capsys)[0] == 2


def test_integer_aggregates_print_plain(table1_csv, capsys):
    code, out = run(["check", "--input", str(table1_csv), *BASE, "--alpha", "max"], capsys)
    report = json.loads(out.out)
    assert report["s_mvi"] == "0" and code == 0
    assert [g["aggregate"] for g in report["groups"]] == ["2", "6", "8"]
