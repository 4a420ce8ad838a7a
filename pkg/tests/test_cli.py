import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from ppt_distill import cli
from ppt_distill import operators as op
from ppt_distill.solver import SolverError


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def run_json(*argv):
    code, out, err = run(*argv)
    assert code == 0, err
    return json.loads(out)


def test_fidelity_isotropic():
    data = run_json("fidelity", "--family", "isotropic", "--d", "2", "--f", "0.85", "--K", "2")
    assert data["value"] == pytest.approx(0.85, abs=1e-6)
    assert data["closed_form"] == pytest.approx(0.85)
    assert "provenance" in data and "closed_form_provenance" in data
    assert data["gap"] <= 1e-6
    lo, hi = data["sandwich"]
    assert lo - 1e-6 <= data["value"] <= hi + 1e-6


def test_fidelity_maxent_k1():
    data = run_json("fidelity", "--family", "maxent", "--d", "2", "--K", "1")
    assert data["value"] == pytest.approx(1.0, abs=1e-6)


def test_werner_lp_certificate():
    data = run_json("werner-lp", "--d", "3", "--p", "1", "--n", "1", "--K", "1.6666667")
    assert data["value"] == pytest.approx(1.0, abs=1e-5)
    assert len(data["B"]) == 2 and len(data["S"]) == 2


def test_isotropic_lp():
    data = run_json("isotropic-lp", "--d", "2", "--f", "0.75", "--n", "1", "--K", "2", "--format", "json")
    assert data["value"] == pytest.approx(0.75, abs=1e-9)


def test_state_file_round_trip(tmp_path, rng):
    rho = op.random_state(2, 2, rng)
    path = tmp_path / "rho.json"
    path.write_text(op.state_to_json(rho))
    first = run_json("fidelity", "--state", str(path), "--K", "1.5")
    back = op.state_from_json(path.read_text())
    path2 = tmp_path / "rho2.json"
    path2.write_text(op.state_to_json(back))
    second = run_json("fidelity", "--state", str(path2), "--K", "1.5")
    assert abs(first["value"] - second["value"]) <= 1e-10
    assert first["dims"] == [2, 2]


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"dims": [2, 2],\n "re": [[1, 0]\n')
    code, out, err = run("fidelity", "--state", str(path), "--K", "2")
    assert code == 2 and out == ""
    assert "line" in err and "column" in err


def test_invalid_state_exit_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"dims": [2, 2], "re": np.eye(4).tolist()}))
    code, _, err = run("fidelity", "--state", str(path), "--K", "2")
    assert code == 2 and "error" in err


def test_missing_file_and_params():
    assert run("fidelity", "--state", "/nonexistent/x.json", "--K", "2")[0] == 2
    assert run("fidelity", "--family", "isotropic", "--d", "2", "--K", "2")[0] == 2
    assert run("fidelity", "--K", "2")[0] == 2
    assert run("code-lp", "--n", "3", "--K", "2", "--d", "5")[0] == 2
    assert run("nonsense")[0] == 2


def test_solver_failure_exit_3(monkeypatch):
    def boom(*a, **k):
        raise SolverError("forced")
    monkeypatch.setattr(cli.fd, "fidelity_ppt", boom)
    code, _, err = run("fidelity", "--family", "maxent", "--d", "2", "--K", "2")
    assert code == 3 and "solver" in err


def test_tolerance_range(monkeypatch):
    assert run("--tol", "1", "fidelity", "--family", "maxent", "--d", "2", "--K", "2")[0] == 2
    assert run("fidelity", "--family", "maxent", "--d", "2", "--K", "2", "--tol", "1e-12")[0] == 2
    monkeypatch.setenv(cli.ENV_TOL, "0.5")
    assert run("fidelity", "--family", "maxent", "--d", "2", "--K", "2")[0] == 2
    monkeypatch.setenv(cli.ENV_TOL, "abc")
    assert run("fidelity", "--family", "maxent", "--d", "2", "--K", "2")[0] == 2
    monkeypatch.setenv(cli.ENV_TOL, "1e-6")
    assert run("fidelity", "--family", "maxent", "--d", "2", "--K", "2")[0] == 0


def test_bounds_json_and_csv():
    data = run_json("bounds", "--family", "werner", "--d", "3", "--p", "1", "--format", "json")
    assert data["ordering_ok"]
    names = {b["name"] for b in data["bounds"]}
    assert "werner-relative-entropy" in names
    wr = [b for b in data["bounds"] if b["name"] == "werner-relative-entropy"][0]
    assert wr["value"] == pytest.approx(np.log2(5 / 3), abs=1e-9)
    code, out, _ = run("bounds", "--family", "isotropic", "--d", "2", "--f", "0.9", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and {"name", "kind", "value", "provenance"} <= set(rows[0])


def test_bounds_max_correlated(tmp_path):
    path = tmp_path / "alpha.json"
    path.write_text(json.dumps({"re": (np.full((2, 2), 0.5)).tolist()}))
    data = run_json("bounds", "--family", "max-correlated", "--alpha", str(path), "--format", "json")
    mc = [b for b in data["bounds"] if b["name"] == "max-correlated"]
    assert len(mc) == 2 and all(b["value"] == pytest.approx(1.0) for b in mc)


def test_code_lp_outputs():
    data = run_json("code-lp", "--n", "5", "--K", "2", "--d", "3")
    assert data["feasible"] and data["verified"] and data["verdict"] == "feasible"
    assert data["A"] == pytest.approx([1, 0, 0, 0, 15, 0], abs=1e-7)
    data = run_json("code-lp", "--n", "4", "--K", "2", "--d", "3")
    assert not data["feasible"] and data["verified"]
    cert = data["certificate"]
    assert len(cert["z"]) == len(cert["rows"])


def test_code_table_csv():
    code, out, _ = run("code-table", "--n-max", "3")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == sum(len(range(1, n + 1)) * (n + 1) for n in (1, 2, 3))
    assert all(r["provenance"] for r in rows)
    assert all(r["verified"] == "True" for r in rows)
    data = run_json("code-table", "--n-max", "3", "--format", "json")
    assert data["distance_monotone"]


def test_twelve_significant_digits():
    data = run_json("fidelity", "--family", "maxent", "--d", "2", "--K", "3")
    assert len(repr(data["K"])) <= 14
    assert cli._num(1 / 3) == 0.333333333333
    assert cli._num(float("nan")) == "nan"


def test_version_and_module_entry():
    code, _, _ = run("--version")
    assert code == 0
    res = subprocess.run([sys.executable, "-m", "ppt_distill", "code-lp", "--n", "2", "--K", "1", "--d", "1"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["feasible"]
