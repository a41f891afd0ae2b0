from __future__ import annotations

import csv
import io
import json
import subprocess
import sys

import jsonschema
import pytest

from fracdual.cli import report_schema, run

SCHEMA = report_schema()


def call(capsys, *argv: str) -> tuple[int, str, str]:
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def validate(text: str) -> dict:
    report = json.loads(text)
    jsonschema.validate(report, SCHEMA)
    return report


class TestExamples:
    def test_eval_integer_integral(self, capsys):
        code, out, _ = call(capsys, "eval", "--op", "left-rl-integral", "--alpha", "1", "--a", "0", "--b", "1", "--f", "const:v=1", "--n", "11")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert list(rows[0]) == ["x", "value"]
        row = next(r for r in rows if float(r["x"]) == 0.5)
        assert float(row["value"]) == pytest.approx(0.5, abs=1e-15)

    def test_check_duality(self, capsys):
        code, out, _ = call(capsys, "check-duality", "--op", "left-caputo", "--alpha", "0.5", "--f", "pow:beta=2", "--a", "0", "--b", "1", "--n", "257")
        assert code == 0
        rep = validate(out)
        assert rep["verdict"] == "pass"
        assert rep["identity_name"] == "duality:left-caputo"

    def test_ibp_study(self, capsys):
        code, out, _ = call(capsys, "check-ibp", "--variant", "right", "--alpha", "0.5", "--f", "pow:beta=2", "--g", "pow:beta=3", "--study", "129:2049", "--format", "json")
        assert code == 0
        rep = validate(out)
        rows = rep["rows"]
        assert [r["n_points"] for r in rows] == [129, 257, 513, 1025, 2049]
        for prev, cur in zip(rows, rows[1:]):
            assert abs(cur["residual"]) <= 0.5 * abs(prev["residual"])

    def test_ibp_study_csv(self, capsys):
        code, out, _ = call(capsys, "check-ibp", "--variant", "left", "--alpha", "0.25", "--f", "sin:omega=2", "--g", "exp:lam=0.7", "--study", "129:513", "--format", "csv")
        assert code == 0
        assert out.splitlines()[0].startswith("n_points,")
        assert len(out.splitlines()) == 4


class TestReports:
    @pytest.mark.parametrize(
        "argv",
        [
            ["eval", "--op", "right-caputo", "--alpha", "0.5", "--f", "sin:omega=1", "--format", "json"],
            ["eval", "--op", "left-rl-derivative", "--alpha", "0.5", "--f", "const:v=1", "--format", "json"],
            ["check-duality", "--op", "right-rl-derivative", "--alpha", "0.4", "--f", "const:v=2", "--n", "9"],
            ["check-ibp", "--variant", "left", "--alpha", "0.5", "--f", "sin:omega=1", "--g", "cos:omega=1", "--n", "257", "--format", "json"],
            ["check-bound", "--alpha", "0.5", "--r", "1,inf", "--samples", "3", "--format", "json"],
            ["minimize", "--term", "cap2:0.5", "--term", "u2:0.5", "--ua", "1", "--ub", "0", "--n", "33", "--format", "json"],
            ["demo-friction", "--n", "33", "--format", "json"],
        ],
    )
    def test_schema(self, capsys, argv):
        code, out, _ = call(capsys, *argv)
        assert code == 0
        validate(out)

    def test_flag_column(self, capsys):
        code, out, _ = call(capsys, "eval", "--op", "left-rl-derivative", "--alpha", "0.5", "--f", "const:v=1", "--n", "5")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "x,value,flag"
        assert lines[1].endswith(",1")

    def test_minimize_report(self, capsys, tmp_path):
        path = tmp_path / "r.json"
        code, out, _ = call(capsys, "minimize", "--term", "vel2:0.5", "--ua", "0", "--ub", "1", "--n", "17", "--report", str(path))
        assert code == 0
        assert out.splitlines()[0] == "x,value"
        rep = validate(path.read_text())
        assert rep["converged"] is True
        assert rep["functional_value"] == pytest.approx(0.5, abs=1e-12)
        assert rep["dual_functional_value"] == pytest.approx(rep["functional_value"], abs=1e-12)
        assert "-b" in rep["dual_interpretation"]
        assert rep["diagnostics"]["dual"]["kind"] == "probe"

    def test_friction_trajectory(self, capsys, tmp_path):
        out_path = tmp_path / "traj.csv"
        code, out, _ = call(capsys, "demo-friction", "--output", str(out_path))
        assert code == 0 and out == ""
        rows = list(csv.reader(out_path.open()))
        assert rows[0] == ["x", "value"]
        assert len(rows) == 130
        assert float(rows[1][1]) == 1.0 and float(rows[-1][1]) == 0.0


class TestExitCodes:
    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["bogus"],
            ["eval", "--op", "left-caputo", "--alpha", "0.5"],
            ["eval", "--op", "middle-caputo", "--alpha", "0.5", "--f", "const:v=1"],
            ["eval", "--op", "left-caputo", "--alpha", "-1", "--f", "const:v=1"],
            ["eval", "--op", "left-caputo", "--alpha", "0.5", "--f", "tan:x=1"],
            ["eval", "--op", "left-caputo", "--alpha", "0.5", "--f", "const:v=1", "--a", "2", "--b", "1"],
            ["eval", "--op", "left-caputo", "--alpha", "0.5", "--f", "const:v=1", "--n", "1"],
            ["eval", "--op", "left-caputo", "--alpha", "nan", "--f", "const:v=1"],
            ["check-ibp", "--variant", "left", "--alpha", "0.5", "--f", "sin:omega=1", "--g", "cos:omega=1", "--study", "100:300"],
            ["check-bound", "--r", "0.5"],
            ["minimize", "--term", "u2:1"],
            ["minimize", "--ua", "0"],
            ["minimize", "--term", "quartic:1", "--ua", "0"],
        ],
    )
    def test_usage_errors(self, capsys, argv):
        code, _, err = call(capsys, *argv)
        assert code == 2
        assert len(err.strip().splitlines()) == 1

    def test_funcspec_error_position(self, capsys):
        code, _, err = call(capsys, "eval", "--op", "left-caputo", "--alpha", "0.5", "--f", "sin:freq=1")
        assert code == 2
        assert "4" in err

    def test_fail_verdict(self, capsys):
        code, out, _ = call(capsys, "check-ibp", "--variant", "right", "--alpha", "0.5", "--f", "sin:omega=2", "--g", "exp:lam=1", "--tol", "1e-30", "--format", "json")
        assert code == 1
        assert validate(out)["verdict"] == "fail"

    def test_unsupported_order_fails(self, capsys):
        code, out, _ = call(capsys, "check-ibp", "--variant", "left", "--alpha", "2.5", "--f", "sin:omega=1", "--g", "cos:omega=1")
        assert code == 2

    def test_non_convergence(self, capsys):
        code, _, err = call(capsys, "minimize", "--term", "cap2:0.5", "--term", "u2:0.5", "--ua", "1", "--ub", "0", "--n", "65", "--max-iter", "1")
        assert code == 1
        assert "gradient norm" in err

    def test_bad_threads(self, capsys, monkeypatch):
        monkeypatch.setenv("FRACDUAL_THREADS", "zero")
        code, _, err = call(capsys, "demo-friction")
        assert code == 2
        assert "FRACDUAL_THREADS" in err


class TestConfig:
    def test_precedence(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# identity check\nop = left-rl-integral\nalpha = 0.5\nf = sin:omega=1\nn = 17\n")
        code, out, _ = call(capsys, "check-duality", "--config", str(cfg))
        assert code == 0 and validate(out)["grid"]["n_points"] == 17
        code, out, _ = call(capsys, "check-duality", "--config", str(cfg), "--n", "33")
        assert code == 0 and validate(out)["grid"]["n_points"] == 33

    def test_terms_replaced_by_flags(self, capsys, tmp_path):
        cfg = tmp_path / "min.cfg"
        cfg.write_text("term = u2:5\nua = 0\nub = 1\nn = 17\nformat = json\n")
        _, out, _ = call(capsys, "minimize", "--config", str(cfg), "--term", "vel2:0.5")
        assert validate(out)["functional_value"] == pytest.approx(0.5, abs=1e-12)

    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("colour = red\n")
        code, _, err = call(capsys, "demo-friction", "--config", str(cfg))
        assert code == 2 and "colour" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = call(capsys, "demo-friction", "--config", str(tmp_path / "none.cfg"))
        assert code == 2


class TestDeterminism:
    @pytest.mark.parametrize(
        "argv",
        [
            ["check-bound", "--samples", "5", "--format", "json"],
            ["minimize", "--term", "cap2:0.5", "--term", "u2:0.5", "--ua", "1", "--ub", "0", "--n", "33", "--format", "json"],
            ["eval", "--op", "right-caputo", "--alpha", "0.3", "--f", "exp:lam=1", "--method", "numeric"],
        ],
    )
    def test_bit_identical(self, capsys, argv):
        _, first, _ = call(capsys, *argv)
        _, second, _ = call(capsys, *argv)
        assert first == second

    def test_seed_changes_samples(self, capsys):
        _, first, _ = call(capsys, "check-bound", "--samples", "2", "--seed", "1")
        _, second, _ = call(capsys, "check-bound", "--samples", "2", "--seed", "2")
        assert first != second


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "fracdual.cli", "eval", "--op", "left-rl-integral", "--alpha", "1", "--f", "const:v=1", "--n", "3"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines() == ["x,value", "0.0,0.0", "0.5,0.5", "1.0,1.0"]
