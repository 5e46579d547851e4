"""CLI subcommands, exit codes, and artifact contracts."""

import json

import numpy as np
import pytest

from finslerlab.cli import run

from conftest import FIXTURE_DIR

POINCARE = str(FIXTURE_DIR / "poincare.json")
QUARTIC = str(FIXTURE_DIR / "minkowski_quartic.json")


def test_validate_ok(capsys):
    code = run(["validate", "--metric", POINCARE, "--samples", "20"])
    assert code == 0
    assert "validation: pass" in capsys.readouterr().out


def test_geodesic_endpoint_and_csv(tmp_path, capsys):
    code = run(
        [
            "geodesic",
            "--metric",
            POINCARE,
            "--x0",
            "0,0",
            "--v0",
            "0.5,0",
            "--T",
            "1",
            "--out",
            str(tmp_path),
        ]
    )
    out = capsys.readouterr().out
    assert code == 0
    assert (tmp_path / "geodesic.csv").exists()
    endpoint = [float(c) for c in out.splitlines()[1].split(": ")[1].split(",")]
    assert endpoint[0] == pytest.approx(np.tanh(0.5), abs=1e-8)


def test_distance_value(capsys):
    code = run(["distance", "--metric", POINCARE, "--p", "0,0", "--q", "0.3,0"])
    assert code == 0
    value = float(capsys.readouterr().out.strip())
    assert value == pytest.approx(2.0 * np.arctanh(0.3), abs=1e-8)


def test_transport_writes_frame(tmp_path, capsys):
    code = run(
        [
            "transport",
            "--metric",
            POINCARE,
            "--x0",
            "0,0",
            "--v0",
            "0.4,0",
            "--w",
            "0,1",
            "--w",
            "1,0",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    header = (tmp_path / "frame.csv").read_text().splitlines()[0]
    assert header.startswith("t,")


def test_curvature_single_flag(capsys):
    code = run(
        [
            "curvature",
            "--metric",
            POINCARE,
            "--x",
            "0.1,0",
            "--v",
            "0.3,0.1",
            "--w",
            "0,1",
        ]
    )
    assert code == 0
    assert float(capsys.readouterr().out.strip()) == pytest.approx(-1.0, abs=1e-6)


def test_curvature_scan_json(tmp_path, capsys):
    code = run(
        [
            "curvature",
            "--metric",
            POINCARE,
            "--scan",
            "30",
            "--json",
            "scan.json",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    payload = json.loads((tmp_path / "scan.json").read_text())
    assert payload["nonpositive"] is True
    assert "tool_version" in payload


def test_classify_report_json(tmp_path, capsys):
    code = run(
        [
            "classify",
            "--metric",
            QUARTIC,
            "--pairs",
            "40",
            "--loops",
            "3",
            "--curvature-samples",
            "40",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    payload = json.loads((tmp_path / "classify.json").read_text())
    assert payload["verdicts"]["berwald"] is True
    assert payload["theorem_consistent"] is True
    assert payload["spec"]["family"] == "minkowski_quartic"


def test_classify_strict_negative_exit(tmp_path):
    code = run(
        [
            "classify",
            "--metric",
            str(FIXTURE_DIR / "sphere_chart.json"),
            "--pairs",
            "40",
            "--loops",
            "3",
            "--curvature-samples",
            "40",
            "--strict",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 1


def test_missing_metric_file_exit_2(capsys):
    code = run(["validate", "--metric", "/no/such/file.json"])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_bad_vector_exit_2(capsys):
    code = run(
        ["geodesic", "--metric", POINCARE, "--x0", "0,zero", "--v0", "1,0"]
    )
    assert code == 2


def test_unreachable_target_exit_3(capsys):
    # shooting target outside the region raises a numerical/input failure
    code = run(["distance", "--metric", POINCARE, "--p", "0,0", "--q", "0.69,0.69"])
    assert code == 2  # DomainError: outside the convex region
