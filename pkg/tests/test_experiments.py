import csv
import json
import os

import numpy as np
import pytest

from config import RunConfig, config
from experiments.runs import initial_u, run_dirichlet, run_report
from experiments.suites import VerifySuite
from experiments.supervisor import LabStep, LabSupervisor
from geometry.grid import ProductGrid
from main import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main
from utils.errors import ConfigurationError, NumericalError


def read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def write_env(path, **values):
    path.write_text("".join(f"{key}={value}\n" for key, value in values.items()), encoding="utf-8")
    return str(path)


def test_supervisor_records_pass_fail_and_skip(tmp_path):
    out = tmp_path / "run"
    supervisor = LabSupervisor("verify", str(out), seed=1)

    def broken():
        raise NumericalError("singular Gram system")

    state = supervisor.run([
        LabStep("small", "passes", lambda: {"measured": 1e-12, "passed": True}, "x = 0", 1e-10),
        LabStep("large", "misses the tolerance", lambda: {"measured": 1.0, "passed": False}, "y = 0", 1e-10),
        LabStep("skip", "skips", lambda: {"skipped": "not applicable"}),
        LabStep("raises", "raises", broken),
    ])
    statuses = {row["check"]: row["status"] for row in state.check_rows()}
    assert statuses == {"small": "success", "large": "failed", "skip": "skipped", "raises": "failed"}
    assert not supervisor.succeeded

    report = read_json(out / "report.json")
    assert (report["passed"], report["failed"], report["skipped"]) == (1, 2, 1)
    assert "against tolerance 1.0e-10" in state.steps["large"]["error"]
    manifest = read_json(out / "manifest.json")
    assert manifest["seed"] == 1
    assert manifest["files"] == ["report.json"]


def test_supervisor_stops_when_configured(tmp_path, monkeypatch):
    monkeypatch.setattr(config, "continue_on_failure", False)
    supervisor = LabSupervisor("verify", str(tmp_path / "run"), seed=1)

    def broken():
        raise NumericalError("boom")

    with pytest.raises(NumericalError):
        supervisor.run([LabStep("raises", "raises", broken), LabStep("never", "never runs", dict)])
    assert read_json(tmp_path / "run" / "report.json")["status"] == "failed"


def test_finalize_adds_report_fields(tmp_path):
    supervisor = LabSupervisor("nu", str(tmp_path / "run"), RunConfig(seed=4))
    supervisor.run([LabStep("only", "noop", lambda: {"measured": 0.0})], lambda sup: {"extra": 42})
    report = read_json(tmp_path / "run" / "report.json")
    assert report["extra"] == 42
    assert read_json(tmp_path / "run" / "manifest.json")["config"]["seed"] == 4


def test_initial_data_vanishes_on_the_annulus_boundary():
    grid = ProductGrid(4, "annulus", (4, 9))
    rng = np.random.default_rng(0)
    for initial in ("diagonal_mode", "dirichlet_sine", "random_hermitian"):
        u = initial_u(RunConfig(initial=initial, base_kind="annulus", base_n=(4, 9)), grid, rng)
        assert np.max(np.abs(u[grid.boundary_mask()])) < 1e-12
    with pytest.raises(ConfigurationError):
        initial_u(RunConfig(initial="dirichlet_sine"), ProductGrid(4, "torus", (4, 4)), rng)


def test_dirichlet_needs_an_annulus(tmp_path):
    with pytest.raises(ConfigurationError):
        run_dirichlet(RunConfig(), str(tmp_path / "dirichlet"))


def test_report_needs_an_existing_directory(tmp_path):
    with pytest.raises(ConfigurationError):
        run_report(str(tmp_path / "missing"))


def test_missing_config_file_is_a_usage_error(tmp_path):
    assert main(["nu", "--config", str(tmp_path / "absent.env"), "--quiet"]) == EXIT_USAGE


def test_invalid_config_is_a_usage_error(tmp_path):
    path = write_env(tmp_path / "bad.env", FLOW_SCHEME="euler")
    assert main(["flow", "--config", path, "--quiet"]) == EXIT_USAGE


def test_nu_subcommand_and_report(tmp_path):
    out = tmp_path / "out"
    path = write_env(tmp_path / "nu.env", GRID_FIBRE_N=4, GRID_BASE_N="4,4", BUNDLE_PRESET="nilpotent_constant")
    assert main(["nu", "--config", path, "--out", str(out), "--seed", "3", "--quiet"]) == EXIT_OK

    with open(out / "nu" / "nu.csv", encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 16
    for row in rows:
        assert float(row["inu_00_re"]) == pytest.approx(-2.0, abs=1e-10)
        assert float(row["inu_11_re"]) == pytest.approx(2.0, abs=1e-10)
        assert float(row["inu_01_re"]) == pytest.approx(0.0, abs=1e-10)

    report = read_json(out / "nu" / "report.json")
    assert report["status"] == "success"
    assert report["results"]["nu_value"]["commutant_dim"] == 2
    assert report["results"]["expansion_defect"]["exact_cancellation"]
    assert read_json(out / "nu" / "manifest.json")["seed"] == 3

    assert main(["report", "--out", str(out), "--quiet"]) == EXIT_OK
    summary = read_json(out / "summary.json")
    assert list(summary["runs"]) == ["nu"]
    assert summary["failed_runs"] == []
    assert os.path.isfile(out / "summary.md")


def test_runs_write_nothing_outside_the_output_directory(tmp_path, monkeypatch):
    work = tmp_path / "work"
    work.mkdir()
    monkeypatch.chdir(work)
    out = tmp_path / "out"
    path = write_env(tmp_path / "nu.env", GRID_FIBRE_N=4, GRID_BASE_N="4,4", BUNDLE_PRESET="nilpotent_constant")
    assert main(["nu", "--config", path, "--out", str(out), "--quiet"]) == EXIT_OK
    assert os.listdir(work) == []
    assert sorted(os.listdir(tmp_path)) == ["nu.env", "out", "work"]
    logs = os.listdir(out / "nu" / "logs")
    assert "nu_report.md" in logs
    assert any(name.endswith("_state.json") for name in logs)


def test_report_flags_failed_runs(tmp_path):
    out = tmp_path / "out"
    supervisor = LabSupervisor("verify", str(out / "verify"), seed=1)
    supervisor.run([LabStep("bad", "fails", lambda: {"measured": 1.0, "passed": False}, "x = 0", 1e-3)])
    assert main(["report", "--out", str(out), "--quiet"]) == EXIT_FAILURE
    assert read_json(out / "summary.json")["failed_runs"] == ["verify"]


def test_verify_suite_builds_every_check():
    names = [step.name for step in VerifySuite(seed=1).steps()]
    assert len(names) == len(set(names)) == 27
    assert names[0] == "lambda_k_identity"
    assert "linearisation" in names and "dirichlet_convergence" in names
    assert names[-1] == "donaldson_trend"
    for step in VerifySuite(seed=1).steps():
        assert step.statement.startswith(("§", "Eq. (")), step.name
        assert step.statement.count('"') == 2, step.name


def test_verify_checks_on_small_grids():
    suite = VerifySuite(seed=2, fibre_n=4, base_n=4)
    for name in ("nu_example", "nu_trace", "nu_expansion", "nu_agreement", "conjugation_identity",
                 "lambda_k_identity", "deriv_exactness", "quadrature", "projection_conjugation",
                 "homogeneous_distance"):
        step = next(s for s in suite.steps() if s.name == name)
        result = step.run()
        assert result["passed"], (name, result)


@pytest.mark.slow
def test_verify_subcommand(tmp_path):
    out = tmp_path / "out"
    assert main(["verify", "--out", str(out), "--seed", "12345", "--quiet"]) == EXIT_OK
    with open(out / "verify" / "checks.csv", encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    assert {row["status"] for row in rows} == {"success"}
