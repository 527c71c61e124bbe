"""The family u* = (|p|^m - |q|^m)/m, p, q in R^{k+1}, and its hyperbolic reduction.

For phi(p, q) = psi(|p|, |q|) the Legendre-form equation becomes

    x^{2-m} psi_xx / (m-1) + k x^{1-m} psi_x = y^{2-m} psi_yy / (m-1) + k y^{1-m} psi_y

on the open positive quadrant. k = m = 2 is the six-dimensional construction;
k = 1, m = 4 has the explicit solutions (f(x^2+y^2) + g(x^2-y^2)) / (x^2 y^2).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..calculus import DEFAULT_SCHEME, DifferentiationScheme, as_points, numeric_gradient, numeric_hessian
from ..errors import DomainError
from .base import Evaluation, NumericIntegrand
from .closed_forms import ProfilePair


@dataclass(frozen=True)
class KmFamily:
    k: int
    m: float
    profile: Optional[ProfilePair] = None

    def __post_init__(self):
        if self.k < 1 or not self.m > 1:
            raise DomainError("need k >= 1 and m > 1")

    @property
    def block_dim(self) -> int:
        return self.k + 1


def derivatives_2d(psi: Callable, x: np.ndarray, y: np.ndarray,
                   scheme: DifferentiationScheme = DEFAULT_SCHEME) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Value, gradient and Hessian of a planar function.

    ``psi(x, y)`` may return an :class:`Evaluation` (analytic derivatives) or
    plain values, in which case finite differences are used.
    """
    out = psi(x, y)
    if isinstance(out, Evaluation) and out.hessian is not None:
        return (np.atleast_1d(out.value), np.atleast_2d(out.gradient),
                np.asarray(out.hessian).reshape(-1, 2, 2))
    pts = np.stack([np.atleast_1d(x), np.atleast_1d(y)], axis=1)

    def F(P):
        v = psi(P[:, 0], P[:, 1])
        return np.asarray(v.value if isinstance(v, Evaluation) else v, dtype=float)

    return F(pts), numeric_gradient(F, pts, scheme), numeric_hessian(F, pts, scheme)


def km_hyperbolic_residual(family: KmFamily, psi: Callable, x, y,
                           scheme: DifferentiationScheme = DEFAULT_SCHEME):
    """x^{2-m} psi_xx/(m-1) + k x^{1-m} psi_x - y^{2-m} psi_yy/(m-1) - k y^{1-m} psi_y."""
    x = as_points(x, "x")
    y = as_points(y, "y")
    single = x.ndim == 0 and y.ndim == 0
    x, y = np.broadcast_arrays(np.atleast_1d(x), np.atleast_1d(y))
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("the reduced equation is posed on the open positive quadrant")
    _, g, H = derivatives_2d(psi, x, y, scheme)
    m, k = family.m, family.k
    res = (x ** (2 - m) * H[:, 0, 0] / (m - 1) + k * x ** (1 - m) * g[:, 0]
           - y ** (2 - m) * H[:, 1, 1] / (m - 1) - k * y ** (1 - m) * g[:, 1])
    return float(res[0]) if single else res


def km14_psi(profile: ProfilePair, x, y):
    """(f(x^2+y^2) + g(x^2-y^2)) / (x^2 y^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (profile.f(x * x + y * y) + profile.g(x * x - y * y)) / (x * x * y * y)


def km14_psi_eval(profile: ProfilePair, x, y) -> Evaluation:
    """Analytic derivatives of :func:`km14_psi` (needs profile derivatives)."""
    if not profile.has_derivatives:
        raise DomainError("profile lacks derivative callables")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(x * y == 0.0):
        raise DomainError("representation is singular where xy = 0")
    s, t = x * x + y * y, x * x - y * y
    fs, gt = profile.f(s), profile.g(t)
    f1, g1 = profile.df(s), profile.dg(t)
    f2, g2 = profile.d2f(s), profile.d2g(t)
    N = fs + gt
    Nx = 2 * x * (f1 + g1)
    Ny = 2 * y * (f1 - g1)
    Nxx = 2 * (f1 + g1) + 4 * x * x * (f2 + g2)
    Nyy = 2 * (f1 - g1) + 4 * y * y * (f2 + g2)
    Nxy = 4 * x * y * (f2 - g2)
    R = 1.0 / (x * x * y * y)
    Rx, Ry = -2 * R / x, -2 * R / y
    Rxx, Ryy, Rxy = 6 * R / (x * x), 6 * R / (y * y), 4 * R / (x * y)
    grad = np.stack([Nx * R + N * Rx, Ny * R + N * Ry], axis=1)
    hxx = Nxx * R + 2 * Nx * Rx + N * Rxx
    hyy = Nyy * R + 2 * Ny * Ry + N * Ryy
    hxy = Nxy * R + Nx * Ry + Ny * Rx + N * Rxy
    hess = np.stack([np.stack([hxx, hxy], 1), np.stack([hxy, hyy], 1)], 1)
    return Evaluation(N * R, grad, hess, np.zeros(len(x), dtype=bool))


def cubic_profile(sign: float = -1.0) -> ProfilePair:
    """f(s) = s^3, g(s) = sign * s^3."""
    return ProfilePair(
        f=lambda s: s**3, g=lambda s: sign * s**3,
        df=lambda s: 3 * s**2, dg=lambda s: sign * 3 * s**2,
        d2f=lambda s: 6 * s, d2g=lambda s: sign * 6 * s,
    )


def km14_candidate_integrand(profile: Optional[ProfilePair] = None) -> NumericIntegrand:
    """|z| psi(|p|/|z|, |q|/|z|) on R^2 x R^2 x R for the k = 1, m = 4 representation.

    Only values are closed-form; derivatives use the numeric fallback. The
    function is infinite on {z = 0} and on {p = 0}; such points are skipped
    by the certifier.
    """
    profile = profile or cubic_profile(-1.0)

    def func(w):
        w = np.atleast_2d(w)
        a = np.linalg.norm(w[:, 0:2], axis=1)
        b = np.linalg.norm(w[:, 2:4], axis=1)
        z = np.abs(w[:, 4])
        with np.errstate(divide="ignore", invalid="ignore"):
            return z * km14_psi(profile, a / z, b / z)

    return NumericIntegrand(func, dim=5, name="km14_candidate")
