from __future__ import annotations

import csv
import json

import pytest

from phiminimal.cli import main
from phiminimal.config import DEFAULT_TOLERANCES, ConfigError, RunConfig, load_config
from phiminimal.report import canonical_json, format_float, strip_volatile

SMALL = ["--samples", "2000"]


def run(tmp_path, *args, name="report.json"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def suites(report):
    return {s["name"]: s for s in report["suites"]}


def test_verify_passes_and_has_schema(tmp_path):
    code, rep = run(tmp_path, "verify", *SMALL)
    assert code == 0 and rep["pass"]
    assert set(rep) >= {"version", "config", "suites", "timestamp", "pass"}
    for s in rep["suites"]:
        assert set(s) >= {"name", "pass", "metrics", "samples_skipped", "notes", "exploratory", "wall_clock_s"}
    assert suites(rep)["main_residual"]["metrics"]["graph_form_max"] <= 1e-8
    assert [s["name"] for s in rep["suites"]] == sorted(s["name"] for s in rep["suites"])


def test_impossible_tolerance_fails(tmp_path, capsys):
    code, rep = run(tmp_path, "verify", *SMALL, "--tolerance-scale", "1e-12")
    assert code == 1 and not rep["pass"]
    assert "main_residual" in capsys.readouterr().err
    assert suites(rep)["main_residual"]["metrics"]["tolerance"] == pytest.approx(1e-20)


def test_seed_changes_points_not_verdict(tmp_path):
    _, a = run(tmp_path, "verify", *SMALL, "--seed", "1", name="a.json")
    _, b = run(tmp_path, "verify", *SMALL, "--seed", "2", name="b.json")
    assert a["pass"] and b["pass"]
    ma, mb = suites(a)["main_residual"]["metrics"], suites(b)["main_residual"]["metrics"]
    assert ma["graph_form_argmax"] != mb["graph_form_argmax"]
    assert a["config"]["seed"] == 1 and b["config"]["seed"] == 2


def test_certify_integrand_swaps(tmp_path):
    code, rep = run(tmp_path, "certify", "--samples", "3000", "--integrand", "km14_candidate")
    assert code == 1 and not rep["pass"]
    code, rep = run(tmp_path, "certify", *SMALL, "--integrand", "round", "--round-dim", "3", name="r.json")
    m = suites(rep)["ellipticity_round"]["metrics"]
    assert code == 0 and m["unit_eigenvalue_deviation"] <= 1e-8


def test_exploratory_commands_exit_zero_and_write_csv(tmp_path):
    for cmd in ("no4d", "km"):
        code, rep = run(tmp_path, cmd, "--samples", "1000", name=f"{cmd}.json")
        assert code == 0
        (suite,) = rep["suites"]
        assert suite["exploratory"] and rep["pass"]
        for side in suite["sidecars"]:
            path = tmp_path / f"{cmd}_{side}"
            rows = list(csv.reader(path.open()))
            assert rows[0][0].isalpha() and len(rows) > 2
            assert all(float(v) == float(format_float(float(v))) for v in rows[1])


def test_config_errors_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"tolerances": {"main_residual": -1}}')
    assert main(["verify", "--config", str(bad)]) == 2
    bad.write_text("not json")
    assert main(["verify", "--config", str(bad)]) == 2
    assert main(["verify", "--config", str(tmp_path / "missing.json")]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["no4d", "--samples", "100", "--out", str(blocker / "r.json")]) == 2
    assert "error" in capsys.readouterr().err


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 5, "samples": {"wave": 123}, "tolerances": {"wave_numeric": 1e-6}}))
    cfg = load_config(str(path), command="verify", seed=9)
    assert cfg.seed == 9 and cfg.samples["wave"] == 123 and cfg.tol("wave_numeric") == 1e-6
    assert cfg.samples["main_residual"] == 100_000
    with pytest.raises(ConfigError):
        load_config(None, command="dance")
    with pytest.raises(ConfigError):
        RunConfig(tolerance_scale=0.0).validate()


def test_every_tolerance_is_echoed(tmp_path):
    _, rep = run(tmp_path, "no4d", "--samples", "100")
    echoed = rep["config"]["effective_tolerances"]
    assert set(echoed) == set(DEFAULT_TOLERANCES)
    assert set(rep["config"]["bounds"]) == {"eigenvalue_floor", "calibration_floor", "seam_ratio_band",
                                            "expansion_order_min"}


def test_reports_identical_modulo_timestamps(tmp_path):
    out = tmp_path / "same.json"
    texts = []
    for _ in range(2):
        assert main(["cones", "--samples", "2000", "--out", str(out)]) == 0
        texts.append(canonical_json(json.loads(out.read_text())))
    assert texts[0] == texts[1]
    assert "timestamp" not in strip_volatile({"timestamp": 1, "a": [{"wall_clock_s": 2}]})
