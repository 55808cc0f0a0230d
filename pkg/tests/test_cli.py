"""Command-line interface tests: exit codes, report files, and
run-to-run reproducibility."""

import json

import pytest

from semfl.cli import (
    EXIT_INTERNAL,
    EXIT_NO_FAILING,
    EXIT_OK,
    EXIT_SYNTAX,
    main,
)

BUGGY = """
fn foo(a) {
    if (a <= 2) {
        a = a + 1;
    }
    return a <= 2;
}

fn test_pass() {
    assert(foo(1));
}

fn test_fail() {
    assert(foo(2));
}
"""

CORRECT = BUGGY.replace("if (a <= 2)", "if (a < 2)").replace(
    "fn test_fail() {\n    assert(foo(2));",
    "fn test_fail() {\n    assert(foo(3) == false);")


@pytest.fixture
def buggy(tmp_path):
    p = tmp_path / "buggy.mi"
    p.write_text(BUGGY)
    return str(p)


def test_localize_writes_reports(buggy, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["localize", buggy, "--out", str(out)]) == EXIT_OK
    table = capsys.readouterr().out
    assert table.splitlines()[0].startswith("rank")
    assert len(table.splitlines()) == 4  # header + three candidates
    for name in ("report.json", "report.txt", "methods.json",
                 "combine.json", "timings.txt", "log.txt"):
        assert (out / name).exists(), name
    doc = json.loads((out / "report.json").read_text())
    assert len(doc["statements"]) == 3
    assert doc["statements"][0]["rank"] == 1
    combine = json.loads((out / "combine.json").read_text())
    assert combine[0]["suspiciousness"] == 1.0


def test_localize_reports_are_reproducible(buggy, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["localize", buggy, "--out", str(a)]) == EXIT_OK
    assert main(["localize", buggy, "--out", str(b)]) == EXIT_OK
    for name in ("report.json", "report.txt", "methods.json", "combine.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_localize_flag_variants_run(buggy, capsys):
    assert main(["localize", buggy, "--naive-inference",
                 "--no-loop-compression"]) == EXIT_OK
    naive = capsys.readouterr().out
    assert main(["localize", buggy]) == EXIT_OK
    default = capsys.readouterr().out
    assert naive == default  # tiny case: every reducer is a no-op


def test_localize_exact_mode(buggy, capsys):
    assert main(["localize", buggy, "--exact"]) == EXIT_OK
    table = capsys.readouterr().out
    assert len(table.splitlines()) == 4


def test_localize_without_failing_tests(tmp_path):
    p = tmp_path / "ok.mi"
    p.write_text(CORRECT)
    assert main(["localize", str(p)]) == EXIT_NO_FAILING


def test_syntax_error_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.mi"
    p.write_text("fn f( { return 1; }")
    assert main(["localize", str(p)]) == EXIT_SYNTAX
    assert "syntax error" in capsys.readouterr().err


def test_missing_file_exit_code(tmp_path, capsys):
    assert main(["localize", str(tmp_path / "nope.mi")]) == EXIT_INTERNAL


def test_invalid_config_rejected(buggy, capsys):
    assert main(["localize", buggy, "--p0-low", "0"]) == EXIT_INTERNAL
    assert "error" in capsys.readouterr().err


def test_trace_to_stdout_and_file(buggy, tmp_path, capsys):
    assert main(["trace", buggy, "--test", "test_fail"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "assert_outcome" in text
    out = tmp_path / "trace.txt"
    assert main(["trace", buggy, "--test", "test_fail",
                 "--out", str(out)]) == EXIT_OK
    assert out.read_text() == text


def test_trace_unknown_test(buggy, capsys):
    assert main(["trace", buggy, "--test", "test_nope"]) == EXIT_INTERNAL


def test_sbfl_table_and_exit_codes(buggy, tmp_path, capsys):
    for formula in ("ochiai", "dstar"):
        assert main(["sbfl", buggy, "--formula", formula]) == EXIT_OK
        table = capsys.readouterr().out
        assert len(table.splitlines()) == 4
    ok = tmp_path / "ok.mi"
    ok.write_text(CORRECT)
    assert main(["sbfl", str(ok)]) == EXIT_NO_FAILING


def test_bench_smoke(tmp_path, capsys):
    out = tmp_path / "bench"
    assert main(["bench", "--programs", "intervals", "--per-program", "2",
                 "--step-budget", "20000", "--out", str(out)]) == EXIT_OK
    header = capsys.readouterr().out.splitlines()[0]
    assert "top-1" in header and "top-5" in header
    doc = json.loads((out / "bench.json").read_text())
    assert doc["rows"] and doc["aggregate"]


def test_sweep_smoke(capsys):
    assert main(["sweep", "--programs", "intervals", "--per-program", "1",
                 "--step-budget", "20000",
                 "--moderate-values", "0.5",
                 "--low-values", "0.01", "0.05"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "p0m=0.5,p0l=0.01" in out and "p0m=0.5,p0l=0.05" in out
