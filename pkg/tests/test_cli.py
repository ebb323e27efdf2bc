import json
import os

import numpy as np
import pytest

from cvxmetrics import Ball, FiniteMetric
from cvxmetrics.cli import run


@pytest.fixture(scope="module")
def domains(tmp_path_factory):
    root = tmp_path_factory.mktemp("domains")
    disk = root / "disk.json"
    disk.write_text(Ball([0j], 1.0).to_json())
    ball2 = root / "ball2.json"
    ball2.write_text(Ball([0j, 0j], 1.0).to_json())
    return {"disk": str(disk), "ball2": str(ball2), "root": str(root)}


def test_validate_ok(domains, capsys):
    assert run(["validate", domains["ball2"]]) == 0
    out = capsys.readouterr().out
    assert "dim=2" in out and "ball" in out


def test_validate_missing_file(capsys):
    assert run(["validate", "/no/such/file.json"]) == 2


def test_bad_subcommand():
    assert run(["frobnicate"]) == 2


def test_hilbert_dist_value(domains, capsys):
    assert run(["hilbert-dist", domains["disk"], "--x", "0",
                "--y", "0.5"]) == 0
    out = capsys.readouterr().out.strip()
    assert float(out) == pytest.approx(0.5 * np.log(3.0), abs=1e-9)


def test_oracle_failure_exit_code(domains, capsys):
    # exterior query point: oracle refuses, exit 3
    assert run(["hilbert-dist", domains["disk"], "--x", "1.5",
                "--y", "0"]) == 3


def test_kob_bracket_json(domains, capsys):
    assert run(["kob-bracket", "--domain", domains["disk"], "--x", "0",
                "--y", "0.5", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["lower"] <= np.arctanh(0.5) <= payload["upper"]


def test_delta4_tree_prints_zero(domains, tmp_path, capsys):
    d = np.array([[0.0, 1, 2], [1, 0, 1], [2, 1, 0]])
    d4 = np.zeros((4, 4))
    d4[:3, :3] = d
    d4[3, :3] = d4[:3, 3] = d[0, :3] + 1.0  # leaf hanging off node 0
    d4[3, 3] = 0
    fm = FiniteMetric(list("abcd"), d4)
    path = tmp_path / "tree.csv"
    path.write_text(fm.to_csv())
    assert run(["delta4", "--metric", str(path)]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(0.0, abs=1e-12)


def test_normalize_report(domains, capsys):
    assert run(["normalize", "--domain", domains["ball2"], "--z0", "0,0",
                "--xi", "1,0", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["r"] == pytest.approx(1.0)
    assert payload["kdr"]["passed"] is True


def test_blowup_csv_and_manifest(domains, tmp_path, capsys):
    out = tmp_path / "run"
    assert run(["blowup", "--domain", domains["ball2"], "--z0", "0,0",
                "--xi", "1,0", "--eps-schedule", "0.8,0.5",
                "--out", str(out)]) == 0
    capsys.readouterr()
    csv = (out / "blowup.csv").read_text()
    assert csv.splitlines()[0] == "k,eps,drift,r,tau_1,tau_2"
    manifest = json.loads((out / "blowup_manifest.json").read_text())
    assert manifest["seed"] == 0
    assert "config_hash" in manifest and "versions" in manifest


def test_reports_are_deterministic(domains, tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run(["mconvex", "--domain", domains["ball2"], "--z0", "0,0",
                    "--seed", "7", "--out", str(out)]) == 0
        capsys.readouterr()
        outs.append((out / "mconvex.csv").read_text())
    assert outs[0] == outs[1]


def test_disk_detect_none_on_ball(domains, capsys):
    assert run(["disk-detect", "--domain", domains["ball2"],
                "--tol", "1e-3"]) == 0
    assert "no analytic disk" in capsys.readouterr().out


def test_report_aggregates_manifests(domains, tmp_path, capsys):
    out = tmp_path / "agg"
    run(["blowup", "--domain", domains["ball2"], "--z0", "0,0",
         "--xi", "1,0", "--eps-schedule", "0.8,0.5", "--out", str(out)])
    capsys.readouterr()
    assert run(["report", "--out", str(out)]) == 0
    assert "blowup" in capsys.readouterr().out
