import csv
import dataclasses
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from logcm import cli
from logcm.constants import constant_table
from logcm.exactnum import Ball, PrecisionCtx


def _problem(tmp_path, doc, name="p.json"):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc), encoding="utf-8")
    return str(path)


def _uni(*c):
    return {"s": 1, "n": len(c) - 1,
            "coeffs": [{"exponent": [i], "value": str(v)} for i, v in enumerate(c)]}


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("coeffs, code, status", [
    ((2, 0, 1), 0, "CM"),
    ((1, 0, 1), 1, "NOT_CM"),
    ((-1,), 1, "NOT_CM"),
])
def test_decide_exit_codes(tmp_path, capsys, coeffs, code, status):
    got, out, _ = run(["decide", _problem(tmp_path, _uni(*coeffs))], capsys)
    doc = json.loads(out)
    assert got == code and doc["status"] == status
    if status == "NOT_CM":
        assert doc["witness"]["log_t"] and doc["witness"]["t"]
    else:
        assert doc["certificate"]["kind"]
    assert "density_polynomial" in doc and doc["precision_bits"] >= 256
    assert "wall_time_s" not in doc


def test_decide_unknown_exit_code(tmp_path, capsys, monkeypatch):
    from logcm.nonneg import Status, Verdict
    monkeypatch.setattr(cli, "decide_cm", lambda f, ctx: Verdict(Status.UNKNOWN, precision_used=ctx.bits))
    code, out, _ = run(["decide", _problem(tmp_path, _uni(1, 0, 1))], capsys)
    assert code == 2 and json.loads(out)["status"] == "UNKNOWN"


def test_decide_multivariate(tmp_path, capsys):
    doc = {"s": 2, "n": 2, "coeffs": [
        {"exponent": [2, 0], "value": "1"}, {"exponent": [0, 2], "value": "1"},
        {"exponent": [0, 0], "value": "3.2"}]}
    code, out, _ = run(["decide", _problem(tmp_path, doc)], capsys)
    assert code == 1 and len(json.loads(out)["witness"]["log_t"]) == 2
    doc["coeffs"][2]["value"] = "33/10"
    code, _, _ = run(["decide", _problem(tmp_path, doc)], capsys)
    assert code == 0


def test_univariate_shorthand_and_stdin(tmp_path, capsys, monkeypatch):
    monkeypatch.setattr(sys, "stdin", io.StringIO('{"s": 1, "n": 2, "coeffs": ["2", 0, "1"]}'))
    code, out, _ = run(["decide", "-"], capsys)
    assert code == 0 and json.loads(out)["status"] == "CM"


@pytest.mark.parametrize("doc", [
    "not json",
    "[1, 2]",
    {"s": 1, "coeffs": ["1"]},
    {"s": 0, "n": 1, "coeffs": []},
    {"s": 1, "n": 1, "coeffs": [{"exponent": [2], "value": "1"}]},
    {"s": 1, "n": 2, "coeffs": [{"exponent": [1], "value": "1"}, {"exponent": [1], "value": "2"}]},
    {"s": 1, "n": 1, "coeffs": [0.5, 1]},
    {"s": 1, "n": 1, "coeffs": ["pi", 1]},
    {"s": 2, "n": 2, "coeffs": [{"exponent": [1], "value": "1"}]},
    {"s": 2, "n": 2, "coeffs": ["1"]},
    {"s": 1, "n": 1, "coeffs": ["1/0"]},
    {"s": 1, "n": 1, "coeffs": [{"exponent": [1]}]},
    {"s": True, "n": 1, "coeffs": []},
])
def test_malformed_input_exits_above_two(tmp_path, capsys, doc):
    code, _, err = run(["decide", _problem(tmp_path, doc)], capsys)
    assert code > 2 and "error" in err


def test_missing_file_and_bad_args(capsys):
    code, _, _ = run(["decide", "/nonexistent/problem.json"], capsys)
    assert code == cli.EXIT_INPUT
    with pytest.raises(SystemExit) as exc:
        cli.main(["decide"])
    assert exc.value.code == cli.EXIT_INPUT
    with pytest.raises(SystemExit) as exc:
        cli.main(["no-such-command"])
    assert exc.value.code == cli.EXIT_INPUT


def test_decimal_strings_are_exact(tmp_path):
    p = cli.load_problem(_problem(tmp_path, _uni("0.1", "-1e-3", "7/3")))
    assert p.coeffs == {(0,): Fraction(1, 10), (1,): Fraction(-1, 1000), (2,): Fraction(7, 3)}


def test_output_is_byte_identical(tmp_path, capsys):
    path = _problem(tmp_path, _uni("1/3", "-2", "5", "1/7", "2"))
    outs = [run(["decide", path, "--seed", "4"], capsys)[1] for _ in range(2)]
    assert outs[0] == outs[1]
    scans = [run(["region-scan", "--n", "2", "--fixed", "2=1", "--x-axis", "0", "--y-axis", "1",
                  "--res", "5", "--k", "1,2,inf"], capsys)[1] for _ in range(2)]
    assert scans[0] == scans[1]


def test_timing_is_opt_in(tmp_path, capsys):
    _, out, _ = run(["decide", _problem(tmp_path, _uni(2, 0, 1)), "--timing"], capsys)
    assert json.loads(out)["wall_time_s"] >= 0


def test_out_file(tmp_path, capsys):
    target = tmp_path / "result.json"
    code, out, _ = run(["decide", _problem(tmp_path, _uni(2, 0, 1)), "--out", str(target)], capsys)
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["status"] == "CM"


def test_precision_sources(tmp_path, capsys, monkeypatch):
    path = _problem(tmp_path, _uni(2, 0, 1))
    monkeypatch.setenv(cli.BITS_ENV, "512")
    assert json.loads(run(["decide", path], capsys)[1])["precision_bits"] == 512
    assert json.loads(run(["decide", path, "--bits", "320"], capsys)[1])["precision_bits"] == 320
    doc = dict(_uni(2, 0, 1), precision_bits=384)
    assert json.loads(run(["decide", _problem(tmp_path, doc, "q.json")], capsys)[1])["precision_bits"] == 384
    monkeypatch.setenv(cli.BITS_ENV, "lots")
    assert run(["decide", path], capsys)[0] == cli.EXIT_INPUT
    monkeypatch.delenv(cli.BITS_ENV)
    assert run(["decide", path, "--bits", "8"], capsys)[0] == cli.EXIT_INPUT


def test_region_scan_small_grid(capsys):
    code, out, _ = run(["region-scan", "--n", "2", "--fixed", "2=1", "--x-axis", "0", "--y-axis", "1",
                        "--res", "2", "--k", "1,2,3,inf"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == ["c0", "c1", "D_1", "D_2", "D_3", "D_inf", "CM"]
    assert len(rows) == 5
    # row-major with the y axis outer
    assert [r[1] for r in rows[1:]] == ["-4.0", "-4.0", "4.0", "4.0"]
    assert [r[0] for r in rows[1:]] == ["-4.0", "4.0", "-4.0", "4.0"]


def test_region_scan_spec_file(tmp_path, capsys):
    spec = {"n": 4, "fixed": {"4": "1", "3": "0", "0": "40"}, "x_axis": 1, "x_range": ["-40", "40"],
            "y_axis": 2, "y_range": ["-20", "30"], "resolution": [3, 4], "k": [1, 2], "cm": False}
    code, out, _ = run(["region-scan", "--spec", _problem(tmp_path, spec)], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and len(rows) == 13 and rows[0] == ["c1", "c2", "D_1", "D_2"]


@pytest.mark.parametrize("argv", [
    ["region-scan", "--n", "2", "--x-axis", "0", "--y-axis", "0"],
    ["region-scan", "--n", "2", "--x-axis", "0", "--y-axis", "5"],
    ["region-scan", "--n", "2", "--x-axis", "0", "--y-axis", "1", "--fixed", "1=2"],
    ["region-scan", "--n", "2", "--x-axis", "0", "--y-axis", "1", "--res", "1"],
    ["region-scan", "--n", "2", "--x-axis", "0", "--y-axis", "1", "--x-range", "3"],
    ["region-scan", "--n", "2", "--x-axis", "0", "--y-axis", "1", "--k", "one"],
    ["region-scan", "--n", "2"],
])
def test_region_scan_invalid_axes(capsys, argv):
    assert run(argv, capsys)[0] == cli.EXIT_INPUT


def test_transform_and_inverse(tmp_path, capsys):
    path = _problem(tmp_path, _uni(0, 1))
    code, out, _ = run(["inv-laplace", path], capsys)
    assert code == 0 and "0.5772156649" in out
    code, out, _ = run(["transform", _problem(tmp_path, _uni(1), "one.json")], capsys)
    assert code == 0 and "1" in out


def test_derivative_command(tmp_path, capsys):
    code, out, _ = run(["derivative", _problem(tmp_path, _uni(0, 1)), "--k", "1"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["k"] == 1
    assert run(["derivative", _problem(tmp_path, _uni(0, 1)), "--k", "-2"], capsys)[0] == cli.EXIT_INPUT


def test_probe_and_constants(capsys):
    code, out, _ = run(["probe-nesting", "--n", "2", "--kmax", "5", "--samples", "50", "--seed", "3"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["violation_count"] == 0 and doc["evaluated"] == 50
    code, out, _ = run(["constants", "--n", "3"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["gamma"].startswith("0.5772156649") and set(doc["zeta"]) == {"2", "3"}


def test_selftest_passes(capsys):
    code, out, _ = run(["selftest"], capsys)
    assert code == 0 and "FAIL" not in out


def test_selftest_detects_corrupted_constants():
    ctx = PrecisionCtx(256, 1024)
    table = constant_table(12, ctx)
    bad_gamma = table.gamma + Ball.from_rational(Fraction(1, 10**20), 256)
    bad = dataclasses.replace(table, gamma=bad_gamma)
    buf = io.StringIO()
    assert cli.run_selftest(ctx, table=bad, stream=buf) != 0
    assert "FAIL" in buf.getvalue()


def test_console_entry_point(tmp_path):
    path = _problem(tmp_path, _uni(1, 0, 1))
    res = subprocess.run([sys.executable, "-m", "logcm", "decide", path],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 1 and json.loads(res.stdout)["status"] == "NOT_CM"
