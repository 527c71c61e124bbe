from __future__ import annotations

import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import binom

from phiminimal.calculus import restricted_hessian, tangent_frame
from phiminimal.errors import DomainError
from phiminimal.integrands import (MAIN_PROFILE, PHI0, PHI7, PSIBIG, GraphSlice, KmFamily, ProfileField,
                                   ProfilePair, cubic_profile, km14_candidate_integrand, km14_psi_eval,
                                   km_hyperbolic_residual, phi0_formula, phi7_eval, phi7_formula, psi_eval,
                                   psi_from_profile, psi_from_profile_eval, psi_hess_det, psi_original_eval,
                                   psibig_eval, seam_expansion_eval, taylor_coefficients)

rng = np.random.default_rng(11)


def random_sphere(n, N, seed=0):
    g = np.random.default_rng(seed).standard_normal((N, n))
    return g / np.linalg.norm(g, axis=1)[:, None]


# ---------------------------------------------------------------- symbolic oracle


@pytest.fixture(scope="module")
def symbolic_phi7():
    """Value, gradient and Hessian of the explicit 7-D formula, differentiated by sympy."""
    w = sp.symbols("w0:7", real=True)
    a = sp.sqrt(w[0] ** 2 + w[1] ** 2 + w[2] ** 2)
    b = sp.sqrt(w[3] ** 2 + w[4] ** 2 + w[5] ** 2)
    z = w[6]
    expr = (((a + b) ** 2 + 2 * z**2) ** sp.Rational(3, 2) - ((a - b) ** 2 + 2 * z**2) ** sp.Rational(3, 2)) / (
        2 ** sp.Rational(5, 2) * a * b)
    grad = [sp.diff(expr, v) for v in w]
    hess = [[sp.diff(gi, v) for v in w] for gi in grad]
    return (sp.lambdify(w, expr, "numpy"), sp.lambdify(w, grad, "numpy"), sp.lambdify(w, hess, "numpy"))


@pytest.fixture(scope="module")
def symbolic_profile_residual():
    x, y = sp.symbols("x y", positive=True)
    f = 2 ** sp.Rational(-5, 2) * (2 + (x + y) ** 2) ** sp.Rational(3, 2)
    g = -(2 ** sp.Rational(-5, 2)) * (2 + (x - y) ** 2) ** sp.Rational(3, 2)
    psi = (f + g) / (x * y)
    res = sp.diff(psi, x, 2) - sp.diff(psi, y, 2) + 2 * sp.diff(psi, x) / x - 2 * sp.diff(psi, y) / y
    return sp.lambdify((x, y), res, "numpy"), sp.lambdify((x, y), psi, "numpy")


def test_phi7_matches_symbolic_derivatives(symbolic_phi7):
    f, g, h = symbolic_phi7
    pts = random_sphere(7, 200, seed=5)
    ev = PHI7.evaluate(pts)
    for w, val, grad, hess in zip(pts, ev.value, ev.gradient, ev.hessian):
        assert val == pytest.approx(f(*w), rel=1e-12)
        assert np.allclose(grad, np.array(g(*w), dtype=float), atol=1e-11)
        assert np.allclose(hess, np.array(h(*w), dtype=float), atol=1e-9)


def test_profile_solution_solves_reduced_equation_symbolically(symbolic_profile_residual):
    res, psi = symbolic_profile_residual
    x = np.exp(rng.uniform(-2, 2, 500))
    y = np.exp(rng.uniform(-2, 2, 500))
    assert np.abs(res(x, y)).max() < 1e-9
    assert np.allclose(psi(x, y), psi_original_eval(x, y, order=0).value, rtol=1e-12)


# ---------------------------------------------------------------- fixed points of the closed form


def test_psi_hessian_at_origin():
    assert np.allclose(psi_eval(0.0, 0.0).hessian, 0.75 * np.eye(2), atol=1e-15)


def test_psi_hessian_determinant_formula():
    s = np.linspace(-3, 3, 32)
    X, Y = (a.ravel() for a in np.meshgrid(s, s))
    det = np.linalg.det(psi_eval(X, Y).hessian)
    assert np.allclose(det / psi_hess_det(X, Y), 1.0, rtol=0, atol=1e-10)


def test_psibig_axis_slice_value():
    y = np.linspace(-5, 5, 1001)
    val = psibig_eval(np.ones_like(y), y, np.zeros_like(y), order=0).value
    assert np.abs(val - (np.abs(y) + 1 / (1 + np.abs(y)))).max() <= 1e-12


def test_psibig_restricted_hessian_at_axis_point():
    H = restricted_hessian(PSIBIG, tangent_frame(np.array([1.0, 0.0, 0.0])))
    assert np.allclose(H, np.diag([2.0, 3.0]), atol=1e-12)


def test_psibig_zz_on_seam():
    t = np.linspace(0.1, 1.4, 50)
    w = np.stack([np.cos(t), -np.sin(t), np.zeros_like(t)], axis=1)
    zz = PSIBIG.hessian(w)[:, 2, 2]
    assert np.allclose(zz, 3 / (np.abs(w[:, 0]) + np.abs(w[:, 1])), atol=1e-12)


def test_psibig_scalar_and_origin():
    ev = psibig_eval(1.0, 2.0, 0.5)
    assert isinstance(ev.value, float) and ev.hessian.shape == (3, 3)
    with pytest.raises(DomainError):
        psibig_eval(0.0, 0.0, 0.0)


def test_seam_flag_on_low_regularity_set():
    ev = PSIBIG.evaluate(np.array([[1.0, 0.0, 0.0], [1.0, 0.5, 0.0], [1.0, 0.0, 0.3]]))
    assert list(ev.seam) == [True, False, False]


# ---------------------------------------------------------------- the 7-D and 6-D integrands


def test_phi7_equals_explicit_formula():
    w = random_sphere(7, 1000, seed=1) * rng.uniform(0.5, 3, (1000, 1))
    assert np.allclose(PHI7.value(w), phi7_formula(w[:, :3], w[:, 3:6], w[:, 6]), rtol=1e-12)


def test_phi0_equals_formula_and_slice():
    w = random_sphere(6, 500, seed=2)
    assert np.allclose(PHI0.value(w), phi0_formula(w[:, :3], w[:, 3:]), rtol=1e-12)
    w7 = np.concatenate([w, np.zeros((500, 1))], axis=1)
    assert np.allclose(PHI0.value(w), PHI7.value(w7), rtol=1e-14)


def test_phi7_value_on_axis_is_limit_of_formula():
    # the explicit formula is 0/0 on |q| = 0; its limit is 3/(2 sqrt 2), not 1
    assert phi7_eval(np.array([1.0, 0, 0]), np.zeros(3), 0.0).value == pytest.approx(3 / (2 * math.sqrt(2)))
    near = phi7_formula(np.array([1.0, 0, 0]), np.array([1e-6, 0, 0]), 0.0)
    assert near == pytest.approx(3 / (2 * math.sqrt(2)), rel=1e-9)
    with pytest.raises(DomainError):
        phi7_formula(np.array([1.0, 0, 0]), np.zeros(3), 0.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 10), st.integers(0, 10_000))
def test_phi7_even_and_one_homogeneous(scale, seed):
    w = random_sphere(7, 1, seed=seed)[0]
    v = PHI7.value(w)
    assert PHI7.value(-w) == pytest.approx(v, rel=1e-14)
    assert PHI7.value(scale * w) == pytest.approx(scale * v, rel=1e-13)


def test_phi7_euler_relations():
    w = random_sphere(7, 2000, seed=3)
    ev = PHI7.evaluate(w)
    assert np.allclose(np.einsum("ni,ni->n", ev.gradient, w), ev.value, atol=1e-13)
    assert np.abs(np.einsum("nij,nj->ni", ev.hessian, w)).max() < 1e-12


def test_graph_slice_matches_profile_field():
    P = rng.standard_normal((300, 6)) * 3
    a, b = GraphSlice(PHI7).evaluate(P), ProfileField().evaluate(P)
    assert np.allclose(a.value, b.value, rtol=1e-13)
    assert np.allclose(a.hessian, b.hessian, atol=1e-11)


def test_wrong_dimension_rejected():
    with pytest.raises(DomainError):
        PHI7.evaluate(np.ones(6))


# ---------------------------------------------------------------- profiles and expansions


def test_profile_formula_agrees_with_rotated_closed_form():
    x = np.exp(rng.uniform(-2, 2, 1000))
    y = np.exp(rng.uniform(-2, 2, 1000))
    a = psi_from_profile_eval(MAIN_PROFILE, x, y)
    b = psi_original_eval(x, y)
    assert np.allclose(a.value, b.value, rtol=1e-12)
    assert np.allclose(a.hessian, b.hessian, rtol=1e-8, atol=1e-9)
    with pytest.raises(DomainError):
        psi_from_profile(MAIN_PROFILE, 0.0, 1.0)


def test_taylor_coefficients_are_binomials():
    k = np.arange(9)
    assert np.allclose(taylor_coefficients(8), binom(1.5, k), rtol=1e-14)


def test_seam_expansion_error_bound_and_region():
    x, y = 0.6, -0.8
    zs = np.linspace(0.01, 0.29, 15)
    approx, bound = seam_expansion_eval(np.full_like(zs, x), np.full_like(zs, y), zs, K=4, with_bound=True)
    exact = psibig_eval(np.full_like(zs, x), np.full_like(zs, y), zs, order=0).value
    assert np.all(np.abs(exact - approx) <= bound + 1e-15)
    with pytest.raises(DomainError):
        seam_expansion_eval(0.6, 0.8, 0.4)
    with pytest.raises(DomainError):
        seam_expansion_eval(0.6, 0.8, 0.1, K=1)


# ---------------------------------------------------------------- (k, m) family


def smooth_profile():
    return ProfilePair(f=np.exp, g=np.sin, df=np.exp, dg=np.cos, d2f=np.exp, d2g=lambda s: -np.sin(s))


def test_km14_representation_solves_its_equation():
    x = rng.uniform(0.3, 1.5, 200)
    y = rng.uniform(0.3, 1.5, 200)
    fam = KmFamily(1, 4)
    for prof in (smooth_profile(), cubic_profile()):
        res = km_hyperbolic_residual(fam, lambda a, b: km14_psi_eval(prof, a, b), x, y)
        assert np.abs(res).max() < 1e-9


def test_km22_is_solved_by_profile_solution_not_by_rotated_form():
    x = np.exp(rng.uniform(-1, 1, 200))
    y = np.exp(rng.uniform(-1, 1, 200))
    fam = KmFamily(2, 2)
    assert np.abs(km_hyperbolic_residual(fam, psi_original_eval, x, y)).max() < 1e-12
    assert np.abs(km_hyperbolic_residual(fam, psi_eval, x, y)).max() > 1e-2


def test_km_numeric_fallback_matches_analytic():
    prof = smooth_profile()
    fam = KmFamily(1, 4)
    x, y = np.array([0.7, 1.1]), np.array([0.9, 0.5])
    num = km_hyperbolic_residual(fam, lambda a, b: km14_psi_eval(prof, a, b).value, x, y)
    assert np.abs(num).max() < 1e-5


def test_km_domain_checks():
    with pytest.raises(DomainError):
        KmFamily(0, 2)
    with pytest.raises(DomainError):
        km_hyperbolic_residual(KmFamily(1, 4), psi_original_eval, -1.0, 1.0)


def test_km14_candidate_closed_form():
    F = km14_candidate_integrand()
    w = random_sphere(5, 100, seed=9)
    a = np.linalg.norm(w[:, :2], axis=1)
    b = np.linalg.norm(w[:, 2:4], axis=1)
    z = np.abs(w[:, 4])
    assert np.allclose(F.value(w), (6 * a**2 + 2 * b**4 / a**2) / z, rtol=1e-12)
