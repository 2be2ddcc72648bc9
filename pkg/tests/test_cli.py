"""Command-line interface tests: exit codes, artifacts, report consistency."""

import os
import subprocess
import sys

import numpy as np
import pytest
import yaml

from fiberlink import run_scenario
from fiberlink.csvio import read_csv, write_csv

from conftest import scenario_path

RUN_ARTIFACTS = {
    "budget.csv", "free_psd.csv", "compensated_psd.csv", "correction_psd.csv",
    "rejection.csv", "residual_freq_filtered.csv", "residual_adev_filtered.csv",
    "residual_adev_unfiltered.csv", "correction_adev.csv", "report.txt",
}
PLAN_ARTIFACTS = {"plan.csv", "predicted_adev.csv", "segment_scenario.cfg",
                  "plan_report.txt"}

TINY = {
    "name": "tiny",
    "link": {"elements": [
        {"span": {"id": "f", "length_km": 100.0, "loss_db": 20.0}},
    ]},
    "noise": {"f": {"terms": [{"alpha": 2.0, "h_rad2_per_hz_per_km": 1.4}]}},
    "sim": {"duration_s": 60.0, "seed": 7},
}


def cli(*args, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "fiberlink", *args],
        capture_output=True, text=True, env=env)


@pytest.fixture(scope="module")
def tiny_cfg(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "tiny.cfg"
    path.write_text(yaml.safe_dump(TINY))
    return str(path)


@pytest.fixture(scope="module")
def tiny_report(tiny_cfg, tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny_run")
    return run_scenario(tiny_cfg, str(out))


def test_validate_accepts_the_shipped_scenarios():
    result = cli("validate", scenario_path("link108.cfg"))
    assert result.returncode == 0
    assert result.stdout.startswith("OK")


def test_validate_rejects_a_broken_config(tmp_path):
    bad = tmp_path / "bad.cfg"
    cfg = dict(TINY, sim={"duration_s": 60.0})  # seed dropped
    bad.write_text(yaml.safe_dump(cfg))
    result = cli("validate", str(bad))
    assert result.returncode == 1
    assert "sim.seed required" in result.stderr


def test_usage_errors_exit_with_the_config_code():
    assert cli("validate").returncode == 1
    assert cli("frobnicate", "x").returncode == 1
    assert cli("analyze", "x.csv").returncode == 1  # needs --adev or --psd


def test_missing_files_exit_with_the_io_code(tmp_path):
    result = cli("run", str(tmp_path / "ghost.cfg"))
    assert result.returncode == 3
    assert "i/o error" in result.stderr


def test_unstable_gains_exit_with_the_simulation_code(tmp_path):
    cfg = dict(TINY)
    cfg["sim"] = {"duration_s": 1.0, "seed": 1}
    cfg["servo"] = {"proportional_gain": 5.0e7, "integrator_gain": 1.0e12,
                    "actuator_range_hz": float("inf")}
    path = tmp_path / "unstable.cfg"
    path.write_text(yaml.safe_dump(cfg))
    assert cli("validate", str(path)).returncode == 0  # schema cannot see it
    result = cli("run", str(path), "--out", str(tmp_path / "out"))
    assert result.returncode == 2
    assert "simulation error" in result.stderr
    assert "diverged" in result.stderr


def test_run_emits_the_full_artifact_set(tiny_cfg, tmp_path):
    out = tmp_path / "artifacts"
    result = cli("run", tiny_cfg, "--out", str(out))
    assert result.returncode == 0
    assert set(os.listdir(out)) == RUN_ARTIFACTS
    assert "fiberlink run: tiny" in result.stdout
    assert "neither is adjusted to match the other" in result.stdout


def test_output_root_env_var_is_honoured(tiny_cfg, tmp_path):
    root = tmp_path / "root"
    result = cli("run", tiny_cfg,
                 env_extra={"FIBERLINK_OUTPUT_ROOT": str(root)})
    assert result.returncode == 0
    assert set(os.listdir(root / "tiny")) == RUN_ARTIFACTS


def test_report_scalars_match_the_emitted_csvs(tiny_report):
    rep = tiny_report
    assert set(rep.artifacts) == RUN_ARTIFACTS
    _, rej = read_csv(rep.artifacts["rejection.csv"])
    nearest = int(np.argmin(np.abs(rej[:, 0] - 1.0)))
    assert rep.rejection_at_1hz_db == rej[nearest, 1]
    assert rep.rejection_bin_hz == rej[nearest, 0]
    _, free = read_csv(rep.artifacts["free_psd.csv"])
    assert rep.free_psd_at_1hz == free[int(np.argmin(np.abs(free[:, 0] - 1.0))), 1]
    assert rep.model_psd_at_1hz == pytest.approx(1.4 * 100.0)
    # the rendered text quotes exactly the stored scalars
    assert f"{rep.rejection_at_1hz_db:+.1f} dB" in rep.text
    assert f"{rep.free_psd_at_1hz:.4e} rad^2/Hz" in rep.text
    assert f"{rep.total_one_way_loss_db:.2f} dB" in rep.text
    # the lock trim is reflected in the exported time axis
    _, freq = read_csv(rep.artifacts["residual_freq_filtered.csv"])
    assert freq[0, 0] >= rep.lock_acquired_at_s - 1e-12
    assert rep.settings["servo_enabled"] is True


def test_plan_emits_artifacts_and_a_runnable_segment(tmp_path):
    out = tmp_path / "plan"
    result = cli("plan", scenario_path("cascade600.cfg"), "--out", str(out))
    assert result.returncode == 0
    assert set(os.listdir(out)) == PLAN_ARTIFACTS
    _, plan = read_csv(str(out / "plan.csv"))
    assert plan.shape[0] == 4
    assert plan[0, 1] == pytest.approx(150.0)
    assert "repeater laser phase-locked" in result.stdout
    assert "send_back" in result.stdout
    # the emitted segment fragment is itself a valid scenario
    check = cli("validate", str(out / "segment_scenario.cfg"))
    assert check.returncode == 0


def test_plan_infeasible_route_is_a_config_error(tmp_path):
    cfg = {
        "route": {
            "total_length_km": 600.0,
            "total_loss_db": 1.0e5,
            "max_segment_loss_db": 10.0,
            "noise": {"terms": [{"alpha": 2.0, "h_rad2_per_hz_per_km": 1.4}]},
        },
    }
    path = tmp_path / "bad_route.cfg"
    path.write_text(yaml.safe_dump(cfg))
    result = cli("plan", str(path))
    assert result.returncode == 1
    assert "loss constraint" in result.stderr


def test_analyze_psd_roundtrip(tmp_path):
    fs = 1000.0
    t = np.arange(60_000) / fs
    phase = 0.3 * np.sin(2.0 * np.pi * 25.0 * t)
    src = tmp_path / "phase.csv"
    write_csv(str(src), ["t_s", "phase_rad"], [t, phase])
    dst = tmp_path / "psd.csv"
    result = cli("analyze", str(src), "--psd", "--out", str(dst))
    assert result.returncode == 0
    names, data = read_csv(str(dst))
    assert names == ["freq_hz", "psd_rad2_per_hz"]
    peak_hz = data[int(np.argmax(data[:, 1])), 0]
    assert peak_hz == pytest.approx(25.0, abs=0.5)


def test_analyze_adev_roundtrip_and_stdout(tmp_path):
    rng = np.random.default_rng(3)
    t = np.arange(2000) * 0.5
    y = 1e-14 * rng.standard_normal(2000)
    src = tmp_path / "freq.csv"
    write_csv(str(src), ["t_s", "y"], [t, y])
    dst = tmp_path / "adev.csv"
    assert cli("analyze", str(src), "--adev", "--out", str(dst)).returncode == 0
    names, data = read_csv(str(dst))
    assert names == ["tau_s", "adev", "count"]
    assert data[0, 0] == pytest.approx(0.5)  # ladder starts at the gate
    # white FM: adev falls as 1/sqrt(tau)
    mid = data[np.isclose(data[:, 0], 5.0)][0, 1]
    assert mid / data[0, 1] == pytest.approx(1.0 / np.sqrt(10.0), rel=0.25)
    printed = cli("analyze", str(src), "--adev")
    assert printed.returncode == 0
    assert printed.stdout.startswith("tau_s,adev,count")


def test_analyze_rejects_wrong_columns_and_ragged_time(tmp_path):
    bad_names = tmp_path / "wrong.csv"
    write_csv(str(bad_names), ["time", "y"], [np.arange(10.0), np.ones(10)])
    result = cli("analyze", str(bad_names), "--adev")
    assert result.returncode == 1
    assert "expects columns t_s,y" in result.stderr

    ragged = tmp_path / "ragged.csv"
    t = np.array([0.0, 1.0, 2.5, 3.0, 4.0])
    write_csv(str(ragged), ["t_s", "y"], [t, np.ones(5)])
    result = cli("analyze", str(ragged), "--adev")
    assert result.returncode == 1
    assert "not uniformly spaced" in result.stderr
