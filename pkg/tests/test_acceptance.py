"""Acceptance criteria at default sample sizes and tolerances.

Each test records one PASS/FAIL line, printed in the terminal summary. The
exploratory thresholds (9a, 9b) are tested literally; they never gate the CLI
verdict but they are not relaxed here.
"""
from __future__ import annotations

import json

import pytest

from phiminimal.cli import main
from phiminimal.config import RunConfig
from phiminimal.report import canonical_json
from phiminimal import suites

from conftest import ACCEPTANCE_LINES

CFG = RunConfig().validate()


def record(key: str, passed: bool, line: str) -> None:
    ACCEPTANCE_LINES[key] = (bool(passed), line)
    print(f"[{'PASS' if passed else 'FAIL'}] {key}  {line}")


def test_criterion_01_main_residual():
    r = suites.suite_main_residual(CFG)
    m = r.metrics
    record("1", r.passed, f"main residual over {m['points']} points: graph {m['graph_form_max']:.2e}, "
                          f"Laplacian form {m['laplacian_form_max']:.2e} (tol {m['tolerance']:.0e})")
    assert r.passed


def test_criterion_02_fixed_points():
    r = suites.suite_fixed_points(CFG)
    m = r.metrics
    record("2", r.passed, f"fixed points: origin {m['origin_hessian_error']:.1e}, det rel "
                          f"{m['hessian_det_max_relative_error']:.1e}, axis chart {m['axis_restricted_hessian_error']:.1e},"
                          f" Psi_zz {m['seam_zz_error']:.1e}, slice value {m['axis_slice_value_error']:.1e}")
    assert r.passed


def test_criterion_03_wave_identity():
    r = suites.suite_wave_identity(CFG)
    m = r.metrics
    record("3", r.passed, f"wave identity over {m['points']} points: numeric {m['box_numeric_max']:.2e} (tol 1e-7), "
                          f"analytic {m['box_analytic_closed_form_max']:.2e} (tol 1e-8)")
    assert r.passed


def test_criterion_04_ellipticity():
    r7 = suites.suite_ellipticity_phi7(CFG)
    r0 = suites.suite_ellipticity_phi0(CFG)
    m = r7.metrics
    ok = r7.passed and r0.passed
    record("4", ok, f"ellipticity over {m['sample_count']} points: min eigenvalue {m['min_tangential_eigenvalue']:.6f}"
                    f" (Phi0 {r0.metrics['min_tangential_eigenvalue']:.6f}), radial kernel {m['radial_kernel_max']:.1e},"
                    f" evenness {m['evenness_max_violation']:.1e}, positivity min {m['positivity_min']:.4f}")
    assert ok
    assert m["sample_count"] == CFG.samples["ellipticity"] + CFG.samples["seam_ring"]


def test_criterion_05_seam_regularity():
    r = suites.suite_seam_regularity(CFG)
    m = r.metrics
    ratios = ", ".join(f"{x:.3f}" for x in m["successive_ratios"])
    record("5", r.passed, f"seam regularity: Lipschitz ratios [{ratios}], expansion order min "
                          f"{min(m['expansion_orders']):.2f} (need >= 5.5)")
    assert r.passed


def test_criterion_06_calibration():
    r = suites.suite_calibration(CFG)
    m = r.metrics
    record("6", r.passed, f"calibration over {m['pairs']} pairs: min gap {m['min_gap']:.3e}, equality "
                          f"{m['equality_case_max']:.1e}, divergence {m['divergence_max']:.1e} at "
                          f"{m['divergence_points']} points")
    assert r.passed


def test_criterion_07_cones():
    lv = suites.suite_level_sets(CFG)
    fo = suites.suite_foliation(CFG)
    rs = suites.suite_r_sweep(CFG)
    ok = lv.passed and fo.passed and rs.passed
    sweep = ", ".join(f"R={k}: {v:.1e}" for k, v in rs.metrics["residual_max_by_R"].items())
    record("7", ok, f"cones: level sets {max(lv.metrics['plus_max'], lv.metrics['minus_max']):.1e} at "
                    f"{lv.metrics['points']} points, foliation failures {fo.metrics['failures']}/{fo.metrics['count']},"
                    f" sweep {sweep}")
    assert ok


def test_criterion_08_legendre():
    r = suites.suite_legendre(CFG)
    m = r.metrics
    record("8", r.passed, f"Legendre: quadratic steps {m['quadratic_max_newton_steps']}, inverse map "
                          f"{m['quadratic_inverse_map_error']:.1e}, quartic identities "
                          f"{max(m['quartic_value_identity'], m['quartic_gradient_identity'], m['quartic_hessian_identity']):.1e},"
                          f" involution {m['involution_error']:.1e}")
    assert r.passed


def test_criterion_09a_km_curvature_ratio():
    r = suites.suite_km(CFG)
    rays = r.metrics["rays"]
    desc = "; ".join(f"|p|={ray['p']:g}: ratio {ray['final_ratio']:.1f} at |q|={CFG.exploratory['km_q_stop']:g}, "
                     f"exponent {ray['power_law_exponent']:.3f}" for ray in rays)
    record("9a", r.passed, f"exploratory km: {desc}; control max {r.metrics['control_max_ratio']:.2f}; candidate "
                           f"certificate {'passes' if r.metrics['candidate_certificate']['passed'] else 'fails'}"
                           f" (threshold {CFG.exploratory['km_threshold']:g})")
    assert r.metrics["threshold_exceeded"], "curvature ratio stays below the threshold on the configured rays"


def test_criterion_09b_no4d_growth():
    r = suites.suite_no4d(CFG)
    m = r.metrics
    record("9b", r.passed, f"exploratory no4d: growth {m['range_growth_ratio']:.2f}x over the t range, "
                           f"{m['growth_ratio']:.2f}x at eps={min(CFG.exploratory['no4d_diagonal_margins']):g}, "
                           f"log slope {m['log_slope']:.4f}; 6-D control bounded={m['control']['bounded']} "
                           f"(threshold {m['threshold']:g}x)")
    assert m["control"]["bounded"]
    assert m["threshold_exceeded"], "meridian eigenvalue growth stays below the threshold"


@pytest.mark.parametrize("command", ["all"])
def test_criterion_10_reproducibility(tmp_path, command):
    out = tmp_path / "report.json"
    texts = []
    for _ in range(2):
        code = main([command, "--out", str(out)])
        texts.append(canonical_json(json.loads(out.read_text())))
    same = texts[0] == texts[1]
    record("10", same, f"reproducibility: two '{command}' runs identical modulo timestamps = {same} (exit {code})")
    assert same
