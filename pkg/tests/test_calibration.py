from __future__ import annotations

import math

import numpy as np
import pytest

from phiminimal.calibration import (KmExperimentConfig, OdeExperimentConfig, WulffMap, calibration_gap,
                                    calibration_sweep, cone_foliation_check, curvature_ratio,
                                    divergence_free_check, divergence_numeric, km_ellipticity_failure,
                                    level_set_critical_check, level_set_point, no4d_ode_experiment, normal_angle,
                                    phi0_profile_eigenvalues, quadric_curvatures, rescaled_graph_residuals)
from phiminimal.errors import DomainError
from phiminimal.integrands import PHI0, PHI7, RoundIntegrand
from phiminimal.variational import (graph_patch, level_set_patch, linear_function, numeric_function, main_u,
                                    power_block_function, second_fundamental_form)

rng = np.random.default_rng(31)


def unit_rows(N, d, seed):
    g = np.random.default_rng(seed).standard_normal((N, d))
    return g / np.linalg.norm(g, axis=1)[:, None]


def test_gap_equality_case_and_round_integrand():
    nu = unit_rows(1000, 7, 0)
    assert np.abs(calibration_gap(PHI7, nu, nu)).max() <= 1e-12
    a, b = unit_rows(100, 3, 1), unit_rows(100, 3, 2)
    assert np.allclose(calibration_gap(RoundIntegrand(3), a, b), 1 - np.einsum("ni,ni->n", a, b), atol=1e-15)
    with pytest.raises(DomainError):
        calibration_gap(PHI7, np.ones(7), nu[0])


def test_calibration_sweep_small():
    rep = calibration_sweep(PHI7, pairs=50_000, seed=3)
    assert rep.passed and rep.min_gap >= -1e-10 and rep.homogeneity_defect <= 1e-10


def test_wulff_map_zero_homogeneous():
    w = rng.standard_normal((1000, 7))
    assert WulffMap(PHI7).homogeneity_defect(w) <= 1e-10


def test_divergence_vanishes_for_main_pair_and_matches_numeric():
    x = rng.standard_normal((2000, 6)) * 2
    div = divergence_free_check(PHI7, main_u(), x)
    assert np.abs(div).max() <= 1e-12
    assert np.abs(divergence_numeric(PHI7, main_u(), x[:20])).max() < 1e-7
    assert divergence_free_check(PHI7, linear_function(np.arange(6.0)), x[0]) == 0.0


def test_divergence_detects_non_minimal_parabolic_cylinder():
    # area integrand, u = x1^2 over R^2: divergence is minus the mean curvature 2 / W^3
    u = numeric_function(lambda x: x[:, 0] ** 2, 2)
    x = np.array([[0.3, 0.4], [-1.0, 2.0]])
    W = np.sqrt(1 + 4 * x[:, 0] ** 2)
    div = divergence_free_check(RoundIntegrand(3), u, x)
    assert np.allclose(div, -2 / W**3, atol=1e-7)
    assert np.all(np.abs(div) > 1e-3)


def test_level_sets_are_critical_for_phi0():
    t = np.concatenate([[0.0, 1.0], rng.uniform(0, 10, 2000)])
    for c in (1.0, -1.0):
        pts = level_set_point(t, c, rng)
        assert np.allclose(main_u().value(pts), c)
        assert np.abs(level_set_critical_check(PHI0, main_u(), c, pts)).max() <= 1e-12


def test_level_set_mirror_and_round_integrand():
    x = level_set_point([1.0], 1.0)
    mirror = np.concatenate([x[:, 3:], x[:, :3]], axis=1)
    u = main_u()
    assert level_set_critical_check(PHI0, u, -1.0, mirror) == pytest.approx(
        level_set_critical_check(PHI0, u, 1.0, x), abs=1e-14)
    # area: residual is the mean curvature -(Lap F - nu^T D^2F nu) / |grad F| of the quadric
    y = level_set_point(rng.uniform(0.1, 3, 50), 1.0, rng)
    G = y * np.r_[np.ones(3), -np.ones(3)]
    g = np.linalg.norm(G, axis=1)
    nu = G / g[:, None]
    quad = np.einsum("ni,ni->n", nu, nu * np.r_[np.ones(3), -np.ones(3)])
    H = -(0.0 - quad) / g
    res = level_set_critical_check(RoundIntegrand(6), u, 1.0, y)
    assert np.allclose(res, H, atol=1e-13)
    assert np.abs(res).min() > 1e-3


def test_level_set_checks():
    with pytest.raises(DomainError):
        level_set_critical_check(PHI0, main_u(), 1.0, np.zeros(6))
    with pytest.raises(DomainError):
        level_set_point([1.0], 0.0)


def test_r_sweep_residuals_vanish():
    x = level_set_point(rng.uniform(0, 5, 300), 1.0, rng)
    res = rescaled_graph_residuals(PHI7, main_u(), x)
    assert set(res) == {1.0, 10.0, 100.0}
    assert max(np.abs(v).max() for v in res.values()) <= 1e-12


def test_foliation():
    u = main_u()
    x = np.zeros((1, 6))
    x[0, 0], x[0, 3] = 3.0, 1.0  # u = 4
    rep = cone_foliation_check(u, np.vstack([x, [[1, 0, 0, 1, 0, 0.0]], rng.standard_normal((5000, 6))]))
    assert rep.passed and rep.on_cone == 1 and rep.failures == 0
    assert np.sqrt(u.value(x))[0] == 2.0 and u.value(x / 2)[0] == 1.0


def test_quadric_curvatures_match_second_fundamental_form():
    t = np.array([0.0, 0.5, 3.0])
    F = power_block_function(2.0, 2, 1.0)  # |p|^2 - |q|^2 on R^2 x R^2
    pts = np.zeros((3, 4))
    pts[:, 0] = np.sqrt(2 + t * t)
    pts[:, 2] = t
    ff = second_fundamental_form(level_set_patch(F, 2.0), pts)
    assert np.allclose(np.linalg.eigvalsh(ff.II), np.sort(quadric_curvatures(t), axis=1), atol=1e-13)
    assert np.all(np.isfinite(quadric_curvatures(0.0)))


def test_no4d_reduction_against_explicit_six_dimensional_integrand():
    rep = no4d_ode_experiment(OdeExperimentConfig(block_dim=3, samples=40))
    assert rep.status == "completed"
    assert rep.diagonal_value == pytest.approx(2 * math.sqrt(2) / 3, rel=1e-8)
    table = np.asarray(rep.table)
    explicit = phi0_profile_eigenvalues(table[:, 0]) / PHI0.value(np.eye(6)[0])
    # rotation eigenvalues appear twice in R^6
    ode = np.sort(table[:, [4, 4, 5, 5, 6]], axis=1)
    assert np.allclose(ode, explicit, atol=1e-9)


def test_no4d_meridian_eigenvalue_grows_logarithmically():
    rep = no4d_ode_experiment()
    assert rep.status == "completed"
    assert rep.control["bounded"]
    assert rep.control["eigenvalue_mismatch_vs_explicit"] < 1e-8
    assert rep.log_slope == pytest.approx(rep.diagonal_value, rel=1e-2)
    assert rep.axis_residual < 1e-6
    tail = np.asarray(rep.tail)
    assert np.all(np.diff(tail[:, 1]) > 0)


def test_no4d_config_validation():
    with pytest.raises(DomainError):
        OdeExperimentConfig(t_range=(2.0, 50.0))
    with pytest.raises(DomainError):
        OdeExperimentConfig(axis_margin=0.0)


def test_normal_angle_limits():
    assert normal_angle(0.0) == 0.0
    assert normal_angle(1e8) == pytest.approx(math.pi / 4)


def test_km_curvature_ratio_power_law_and_controls():
    rep = km_ellipticity_failure(KmExperimentConfig(ray_p=(1.0, 10.0), samples=60, certifier_samples=3000))
    for ray in rep.rays:
        assert ray["monotone"]
        assert ray["power_law_exponent"] == pytest.approx(-2 / 3, abs=0.02)
    assert rep.rays[1]["first_q_above_threshold"] is not None
    # the quadratic control is bounded along each ray; its level 1 + |p|^2 depends only on the ray
    assert rep.rays[0]["control_max_ratio"] < 3
    assert rep.rays[1]["control_max_ratio"] <= 1 + 10.0**2 + 1e-6
    assert all(r["control_spread"] < 2 for r in rep.rays)
    assert not rep.candidate_certificate["passed"]


def test_curvature_ratio_of_quadratic_graph():
    x = np.array([[1.0, 0, 0, 0.5, 0, 0]])
    assert curvature_ratio(graph_patch(main_u()), x)[0] < 3
