"""Command-line interface: reports, formats, determinism, exit codes."""

import csv
import io
import json
import math
import re

import pytest

import h1geom.cli as cli
from h1geom import (
    CapabilityError,
    EstimateResult,
    QuadratureError,
    p_area,
    volume,
)
from h1geom.cli import main


@pytest.fixture()
def ball_file(tmp_path):
    path = tmp_path / "ball.json"
    path.write_text(json.dumps({"kind": "ball", "center": [0, 0, 0], "radius": 1.0}))
    return str(path)


@pytest.fixture()
def box_file(tmp_path):
    path = tmp_path / "box.json"
    path.write_text(json.dumps({"kind": "box", "min": [0, 0, 0], "max": [1, 1, 1]}))
    return str(path)


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_volume_command(capsys, ball_file):
    code, out, _ = run_cli(capsys, ["volume", "--body", ball_file])
    assert code == 0
    report = json.loads(out)
    assert report["schema"] == "h1geom.report/1"
    assert report["result"]["method"] == "exact"
    assert abs(report["result"]["value"] - 4.0 * math.pi / 3.0) < 1e-12
    assert "wall_time_s" in report


def test_volume_voxel_method(capsys, ball_file):
    code, out, _ = run_cli(
        capsys, ["volume", "--body", ball_file, "--method", "voxel", "--resolution", "64"]
    )
    assert code == 0
    report = json.loads(out)
    assert report["result"]["method"] == "voxel-oracle"
    assert report["result"]["resolution"] == 64


def test_p_area_command(capsys, ball_file):
    code, out, _ = run_cli(capsys, ["p-area", "--body", ball_file])
    assert code == 0
    report = json.loads(out)
    assert report["result"]["method"] == "quadrature"
    quad_value = report["result"]["value"]

    code, out, _ = run_cli(
        capsys, ["p-area", "--body", ball_file, "--oracle", "--resolution", "128"]
    )
    assert code == 0
    report = json.loads(out)
    assert report["result"]["method"] == "triangulation-oracle"
    assert abs(report["result"]["value"] - quad_value) < 0.01 * quad_value


def test_crofton_report_fields(capsys, ball_file):
    code, out, _ = run_cli(
        capsys, ["crofton", "--body", ball_file, "--n", "50000", "--seed", "42"]
    )
    assert code == 0
    report = json.loads(out)
    assert report["command"] == "crofton"
    assert report["params"]["n"] == 50000 and report["params"]["seed"] == 42
    result = report["result"]
    for key in ("value", "std_error", "ci95", "n_samples", "n_hits", "method"):
        assert key in result
    ref = report["reference"]
    assert ref["value"] == pytest.approx(2.0 * p_area(cli.Ball((0, 0, 0), 1.0)).value)
    assert "p_area" in ref["source"]
    diag = report["diagnostics"]
    assert abs(diag["z_score"]) < 4.0
    assert abs(diag["rel_error"]) < 0.05


def test_output_deterministic_modulo_wall_time(capsys, ball_file):
    argv = ["crofton", "--body", ball_file, "--n", "30000", "--seed", "5"]
    _, out1, _ = run_cli(capsys, argv)
    _, out2, _ = run_cli(capsys, argv)
    strip = lambda s: re.sub(r'"wall_time_s": [^,\n]+', '"wall_time_s": X', s)
    assert strip(out1) == strip(out2)
    _, out3, _ = run_cli(capsys, argv + ["--threads", "3"])
    r1, r3 = json.loads(out1), json.loads(out3)
    assert r1["result"]["value"] == r3["result"]["value"]


def test_csv_format(capsys, ball_file):
    code, out, _ = run_cli(
        capsys,
        ["chord-integral", "--body", ball_file, "--n", "20000", "--format", "csv"],
    )
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == cli._ESTIMATE_CSV_FIELDS
    assert len(rows) == 2
    record = dict(zip(rows[0], rows[1]))
    assert record["command"] == "chord-integral"
    assert float(record["value"]) > 0.0
    assert int(record["n_samples"]) == 20000


def test_kinematic_and_grid_method(capsys, ball_file):
    code, out, _ = run_cli(
        capsys,
        ["kinematic", "--body", ball_file, "--ell", "0.5", "--n", "50000"],
    )
    assert code == 0
    report = json.loads(out)
    assert report["params"]["ell"] == 0.5
    code, out, _ = run_cli(
        capsys,
        [
            "crofton",
            "--body",
            ball_file,
            "--method",
            "grid",
            "--resolution",
            "48",
            "--n",
            "1",
        ],
    )
    assert code == 0
    report = json.loads(out)
    assert report["result"]["method"] == "grid"
    assert abs(report["diagnostics"]["rel_error"]) < 0.05


def test_mean_chord_command(capsys, ball_file):
    code, out, _ = run_cli(
        capsys, ["mean-chord", "--body", ball_file, "--n", "50000"]
    )
    assert code == 0
    report = json.loads(out)
    assert abs(report["result"]["value"] - 1.198) < 0.05


def test_containment_command(capsys, tmp_path, ball_file):
    inner = tmp_path / "inner.json"
    inner.write_text(json.dumps({"kind": "ball", "center": [0, 0, 0], "radius": 0.5}))
    code, out, _ = run_cli(
        capsys,
        [
            "containment",
            "--inner",
            str(inner),
            "--outer",
            ball_file,
            "--ell",
            "0",
            "--n",
            "50000",
        ],
    )
    assert code == 0
    report = json.loads(out)
    assert abs(report["result"]["value"] - 0.125) < 0.02
    # violated nesting is a configuration error
    outside = tmp_path / "outside.json"
    outside.write_text(
        json.dumps({"kind": "ball", "center": [0, 0, 50], "radius": 0.5})
    )
    code, _, err = run_cli(
        capsys,
        [
            "containment",
            "--inner",
            str(outside),
            "--outer",
            ball_file,
            "--ell",
            "0",
            "--n",
            "1000",
        ],
    )
    assert code == 2
    assert "contained" in err


def test_invariance_command(capsys, box_file):
    code, out, _ = run_cli(
        capsys,
        [
            "invariance",
            "--body",
            box_file,
            "--motion",
            "0.3,0.1,-0.2,0.5",
            "--n",
            "40000",
        ],
    )
    assert code == 0
    report = json.loads(out)
    assert report["passed"] is True
    assert len(report["rows"]) == 3
    for row in report["rows"]:
        assert abs(row["z"]) < 4.0


def test_sweep_command(capsys, ball_file):
    code, out, _ = run_cli(
        capsys,
        ["sweep", "--body", ball_file, "--n", "100000", "--format", "csv"],
    )
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == cli._ESTIMATE_CSV_FIELDS
    assert len(rows) == 4
    assert [r[1] for r in rows[1:]] == ["0.0", "0.5", "1.0"]

    code, out, _ = run_cli(
        capsys, ["sweep", "--body", ball_file, "--n", "100000"]
    )
    report = json.loads(out)
    fit = report["fit"]
    ball = cli.Ball((0, 0, 0), 1.0)
    assert abs(fit["slope"] - fit["slope_reference"]) < 0.05 * fit["slope_reference"]
    assert (
        abs(fit["intercept"] - fit["intercept_reference"])
        < 0.02 * fit["intercept_reference"]
    )
    assert fit["slope_reference"] == pytest.approx(2.0 * p_area(ball).value)
    assert fit["intercept_reference"] == pytest.approx(
        2.0 * math.pi * volume(ball).value
    )


def test_out_file(tmp_path, capsys, ball_file):
    out_path = tmp_path / "report.json"
    code, out, _ = run_cli(
        capsys,
        ["volume", "--body", ball_file, "--out", str(out_path)],
    )
    assert code == 0
    assert out == ""
    report = json.loads(out_path.read_text())
    assert report["command"] == "volume"


def test_config_errors(capsys, tmp_path, ball_file):
    missing = str(tmp_path / "nope.json")
    code, _, err = run_cli(capsys, ["volume", "--body", missing])
    assert code == 2 and "cannot read" in err

    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run_cli(capsys, ["volume", "--body", str(bad)])
    assert code == 2 and "not valid JSON" in err

    unknown_field = tmp_path / "extra.json"
    unknown_field.write_text(
        json.dumps({"kind": "ball", "center": [0, 0, 0], "radius": 1.0, "color": "red"})
    )
    code, _, err = run_cli(capsys, ["volume", "--body", str(unknown_field)])
    assert code == 2 and "unknown fields" in err

    unknown_kind = tmp_path / "kind.json"
    unknown_kind.write_text(json.dumps({"kind": "torus", "center": [0, 0, 0]}))
    code, _, err = run_cli(capsys, ["volume", "--body", str(unknown_kind)])
    assert code == 2 and "unknown body kind" in err

    negative = tmp_path / "neg.json"
    negative.write_text(json.dumps({"kind": "ball", "center": [0, 0, 0], "radius": -1}))
    code, _, err = run_cli(capsys, ["volume", "--body", str(negative)])
    assert code == 2 and "positive" in err

    thin = tmp_path / "thin.json"
    thin.write_text(
        json.dumps({"kind": "polytope", "halfspaces": [[1, 0, 0, 1], [-1, 0, 0, 0]]})
    )
    code, _, err = run_cli(capsys, ["volume", "--body", str(thin)])
    assert code == 2 and "halfspaces" in err

    code, _, err = run_cli(
        capsys, ["invariance", "--body", ball_file, "--motion", "1,2,3"]
    )
    assert code == 2 and "motion" in err

    code, _, err = run_cli(
        capsys, ["sweep", "--body", ball_file, "--ell-list", "0,-1"]
    )
    assert code == 2

    code, _, err = run_cli(
        capsys, ["kinematic", "--body", ball_file, "--ell", "-0.5", "--n", "1000"]
    )
    assert code == 2

    with pytest.raises(SystemExit) as exc:
        main(["crofton", "--body", ball_file, "--n", "0"])
    assert exc.value.code == 2


def test_capability_exit_code(capsys, ball_file, monkeypatch):
    def boom(*args, **kwargs):
        raise CapabilityError("unsupported body for this operation")

    monkeypatch.setattr(cli, "volume", boom)
    code, _, err = run_cli(capsys, ["volume", "--body", ball_file])
    assert code == 3
    assert "unsupported" in err


def test_tolerance_exit_codes(capsys, ball_file, monkeypatch):
    def bad_quadrature(*args, **kwargs):
        raise QuadratureError("did not converge")

    monkeypatch.setattr(cli, "p_area", bad_quadrature)
    code, _, err = run_cli(capsys, ["p-area", "--body", ball_file])
    assert code == 4 and "converge" in err

    def skewed(body, n, **kwargs):
        return EstimateResult(
            value=30.0,
            std_error=0.1,
            ci95=(29.8, 30.2),
            n_samples=n,
            n_hits=n // 2,
            seed=kwargs.get("seed", 0),
            method="mc",
            reference=20.0,
            reference_source="2 * measures.p_area(body)",
        )

    monkeypatch.setattr(cli, "estimate_line_measure", skewed)
    code, out, _ = run_cli(capsys, ["crofton", "--body", ball_file, "--n", "1000"])
    assert code == 4
    report = json.loads(out)
    assert "tolerance_failure" in report
    assert "standard errors" in report["tolerance_failure"]
