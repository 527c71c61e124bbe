"""Closed forms built on h(D, E) = (D^2 + DE + E^2) / (D + E) = (D^3 - E^3) / (D^2 - E^2).

``psibig_eval`` is Psi(x, y, z) with D = |(x, z)|, E = |(y, z)|, and ``psi_eval``
is its slice z = 1, so A = D and B = E there. Both live in the frame rotated by
pi/4 relative to the profile coordinates, where ``psi_original_eval`` and the
profile formula (f(x+y) + g(x-y)) / (xy) live.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..calculus import as_points
from ..errors import DomainError
from .base import Evaluation, HomogeneousIntegrand

SQRT_HALF = math.sqrt(0.5)
# (X, Y) = ROT (x, y) maps profile coordinates to the closed-form frame; ROT is its own inverse.
ROT = np.array([[SQRT_HALF, SQRT_HALF], [SQRT_HALF, -SQRT_HALF]])
ROT3 = np.block([[ROT, np.zeros((2, 1))], [np.zeros((1, 2)), np.ones((1, 1))]])

PROFILE_SCALE = 2.0 ** -2.5
SEAM_MARGIN = 1e-6


def _norm_pair(vD: np.ndarray, vE: np.ndarray, PD: np.ndarray, PE: np.ndarray, order: int,
               seam_margin: float = SEAM_MARGIN) -> Evaluation:
    """h(|vD|, |vE|) for vD = PD w, vE = PE w with PD, PE coordinate projectors.

    The Hessian is written so every term stays bounded as D or E -> 0:
    with S = D + E,
        H = (D+2E)/S^2 PD + (E+2D)/S^2 PE - (D+3E)/S^3 vD vD^T / D
            - (E+3D)/S^3 vE vE^T / E - 2/S^3 (vD vE^T + vE vD^T),
    and vD vD^T / D -> 0 when D -> 0. At D = 0 or E = 0 this is the (unique)
    limit of the Hessian, since the function is C^{2,1} but not C^3 there.
    """
    D = np.linalg.norm(vD, axis=1)
    E = np.linalg.norm(vE, axis=1)
    S = D + E
    val = (D * D + D * E + E * E) / S
    seam = np.minimum(D, E) <= seam_margin * S
    grad = hess = None
    if order >= 1:
        cD = (D + 2 * E) / S**2
        cE = (E + 2 * D) / S**2
        grad = cD[:, None] * vD + cE[:, None] * vE
    if order >= 2:
        with np.errstate(invalid="ignore", divide="ignore"):
            iD = np.where(D > 0, 1.0 / D, 0.0)
            iE = np.where(E > 0, 1.0 / E, 0.0)
        S3 = S**3
        outer = lambda a, b: a[:, :, None] * b[:, None, :]  # noqa: E731
        hess = (cD[:, None, None] * PD[None] + cE[:, None, None] * PE[None]
                - ((D + 3 * E) / S3 * iD)[:, None, None] * outer(vD, vD)
                - ((E + 3 * D) / S3 * iE)[:, None, None] * outer(vE, vE)
                - (2.0 / S3)[:, None, None] * (outer(vD, vE) + outer(vE, vD)))
    return Evaluation(val, grad, hess, seam)


_PD3 = np.diag([1.0, 0.0, 1.0])
_PE3 = np.diag([0.0, 1.0, 1.0])


def _psibig_batch(w: np.ndarray, order: int) -> Evaluation:
    return _norm_pair(w * np.array([1.0, 0.0, 1.0]), w * np.array([0.0, 1.0, 1.0]), _PD3, _PE3, order)


def _maybe_single(ev: Evaluation, single: bool) -> Evaluation:
    return ev.squeeze() if single else ev


def _stack2(x, y) -> tuple[np.ndarray, bool]:
    x = as_points(x, "x")
    y = as_points(y, "y")
    single = x.ndim == 0 and y.ndim == 0
    x, y = np.broadcast_arrays(np.atleast_1d(x), np.atleast_1d(y))
    return np.stack([x.ravel(), y.ravel()], axis=1), single


def psibig_eval(x, y, z, order: int = 2) -> Evaluation:
    """Psi(x, y, z) = (D^2 + DE + E^2) / (D + E); one-homogeneous on R^3 minus the origin.

    Points with min(D, E) tiny (the axis points of the circle z = 0) carry
    ``seam=True``; their Hessian is the limit value.
    """
    x, y, z = (as_points(a) for a in (x, y, z))
    single = x.ndim == 0 and y.ndim == 0 and z.ndim == 0
    x, y, z = np.broadcast_arrays(np.atleast_1d(x), np.atleast_1d(y), np.atleast_1d(z))
    w = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
    if np.any(np.all(w == 0.0, axis=1)):
        raise DomainError("Psi is not differentiable at the origin")
    return _maybe_single(_psibig_batch(w, order), single)


def psibig_point(w, order: int = 2) -> Evaluation:
    """Same as :func:`psibig_eval` for points given as ``(3,)`` or ``(N, 3)`` arrays."""
    w = as_points(w)
    single = w.ndim == 1
    wb = np.atleast_2d(w)
    if np.any(np.all(wb == 0.0, axis=1)):
        raise DomainError("Psi is not differentiable at the origin")
    return _maybe_single(_psibig_batch(wb, order), single)


def psibig_original_point(w, order: int = 2) -> Evaluation:
    """Psi composed with the pi/4 rotation of the first two coordinates.

    This is the one-homogeneous extension |z| psi_orig(x/z, y/z) of the profile
    solution; evaluated at (|p|, |q|, z) it gives the explicit 7-D integrand.
    """
    w = as_points(w)
    single = w.ndim == 1
    wb = np.atleast_2d(w)
    if np.any(np.all(wb == 0.0, axis=1)):
        raise DomainError("Psi is not differentiable at the origin")
    ev = _psibig_batch(wb @ ROT3.T, order)
    grad = None if ev.gradient is None else ev.gradient @ ROT3
    hess = None if ev.hessian is None else np.einsum("ai,nab,bj->nij", ROT3, ev.hessian, ROT3)
    return _maybe_single(Evaluation(ev.value, grad, hess, ev.seam), single)


class PsiBigIntegrand(HomogeneousIntegrand):
    """Psi as an integrand on R^3; its seam is {z = 0, xy = 0}."""

    dim = 3
    name = "psibig"

    def _evaluate(self, w, order):
        return _psibig_batch(w, order)


PSIBIG = PsiBigIntegrand()


def psi_eval(x, y, order: int = 2) -> Evaluation:
    """psi(x, y) = (A^2 + AB + B^2) / (A + B) with A = sqrt(1 + x^2), B = sqrt(1 + y^2)."""
    pts, single = _stack2(x, y)
    w = np.concatenate([pts, np.ones((len(pts), 1))], axis=1)
    ev = _psibig_batch(w, order)
    grad = None if ev.gradient is None else ev.gradient[:, :2]
    hess = None if ev.hessian is None else ev.hessian[:, :2, :2]
    return _maybe_single(Evaluation(ev.value, grad, hess, np.zeros(len(pts), dtype=bool)), single)


def psi_hess_det(x, y):
    """det D^2 psi = 3 (A + B)^-4 (2 + 1/(AB))."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.sqrt(1.0 + x * x)
    B = np.sqrt(1.0 + y * y)
    return 3.0 * (A + B) ** -4 * (2.0 + 1.0 / (A * B))


def psi_original_eval(x, y, order: int = 2) -> Evaluation:
    """The profile solution (f(x+y) + g(x-y)) / (xy), extended analytically across the axes.

    Computed as psi(ROT (x, y)); derivatives are rotated back.
    """
    pts, single = _stack2(x, y)
    rot = pts @ ROT.T
    ev = psi_eval(rot[:, 0], rot[:, 1], order)
    grad = None if ev.gradient is None else ev.gradient @ ROT
    hess = None if ev.hessian is None else np.einsum("ai,nab,bj->nij", ROT, ev.hessian, ROT)
    return _maybe_single(Evaluation(ev.value, grad, hess, np.zeros(len(pts), dtype=bool)), single)


@dataclass(frozen=True)
class ProfilePair:
    """Cauchy profiles (f, g); optional first and second derivatives enable analytic checks."""

    f: Callable
    g: Callable
    df: Optional[Callable] = None
    dg: Optional[Callable] = None
    d2f: Optional[Callable] = None
    d2g: Optional[Callable] = None

    @property
    def has_derivatives(self) -> bool:
        return None not in (self.df, self.dg, self.d2f, self.d2g)


def _main_f(s):
    return PROFILE_SCALE * (2.0 + s * s) ** 1.5


def _main_df(s):
    return PROFILE_SCALE * 3.0 * s * np.sqrt(2.0 + s * s)


def _main_d2f(s):
    r = np.sqrt(2.0 + s * s)
    return PROFILE_SCALE * 3.0 * (r + s * s / r)


# f(s) = -g(s) = 2^{-5/2} (2 + s^2)^{3/2}
MAIN_PROFILE = ProfilePair(
    f=_main_f,
    g=lambda s: -_main_f(s),
    df=_main_df,
    dg=lambda s: -_main_df(s),
    d2f=_main_d2f,
    d2g=lambda s: -_main_d2f(s),
)


def psi_from_profile(profile: ProfilePair, x, y):
    """(f(x+y) + g(x-y)) / (xy); the axes are excluded."""
    x = as_points(x, "x")
    y = as_points(y, "y")
    if np.any(x * y == 0.0):
        raise DomainError("profile representation is singular where xy = 0")
    return (profile.f(x + y) + profile.g(x - y)) / (x * y)


def psi_from_profile_eval(profile: ProfilePair, x, y) -> Evaluation:
    """Analytic value, gradient and Hessian of the profile representation."""
    if not profile.has_derivatives:
        raise DomainError("profile lacks derivative callables")
    pts, single = _stack2(x, y)
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x * y == 0.0):
        raise DomainError("profile representation is singular where xy = 0")
    s, t = x + y, x - y
    N = profile.f(s) + profile.g(t)
    Ns, Nt = profile.df(s), profile.dg(t)
    Nss, Ntt = profile.d2f(s), profile.d2g(t)
    Nx, Ny = Ns + Nt, Ns - Nt
    Nxx, Nyy, Nxy = Nss + Ntt, Nss + Ntt, Nss - Ntt
    # R = 1/(xy)
    R = 1.0 / (x * y)
    Rx, Ry = -R / x, -R / y
    Rxx, Ryy, Rxy = 2 * R / x**2, 2 * R / y**2, R / (x * y)
    val = N * R
    grad = np.stack([Nx * R + N * Rx, Ny * R + N * Ry], axis=1)
    hxx = Nxx * R + 2 * Nx * Rx + N * Rxx
    hyy = Nyy * R + 2 * Ny * Ry + N * Ryy
    hxy = Nxy * R + Nx * Ry + Ny * Rx + N * Rxy
    hess = np.stack([np.stack([hxx, hxy], 1), np.stack([hxy, hyy], 1)], 1)
    return _maybe_single(Evaluation(val, grad, hess, np.zeros(len(x), dtype=bool)), single)


def taylor_coefficients(K: int) -> np.ndarray:
    """a_0..a_K of (1 + s)^{3/2}: a_0 = 1, a_{k+1} = a_k (3/2 - k) / (k + 1)."""
    a = np.empty(K + 1)
    a[0] = 1.0
    for k in range(K):
        a[k + 1] = a[k] * (1.5 - k) / (k + 1)
    return a


def _seam_inner_sum(ax, ay, k):
    return sum(1.0 / (ax ** (i + 1) * ay ** (2 * k - 3 - i)) for i in range(2 * k - 3))


def seam_expansion_eval(x, y, z, K: int = 6, delta: Optional[float] = None, with_bound: bool = False):
    """Expansion of Psi in powers of z on {|x|, |y| >= delta, |z| < delta/2}.

        (x^2+|xy|+y^2)/(|x|+|y|) + (3/2) z^2/(|x|+|y|)
            - 1/(|x|+|y|) sum_{k=2..K} a_k (sum_{i=0}^{2k-4} |x|^-(i+1) |y|^-(2k-3-i)) z^{2k}

    ``delta`` defaults to min(|x|, |y|). With ``with_bound`` also returns a bound on
    the truncation error, which is O(z^{2K+2}).
    """
    if K < 2:
        raise DomainError("truncation order must be at least 2")
    ax, ay, z = (np.abs(as_points(v)) for v in (x, y, z))
    ax, ay, z = np.broadcast_arrays(ax, ay, z)
    d = np.minimum(ax, ay) if delta is None else np.full(ax.shape, float(delta))
    if np.any(d <= 0) or np.any(ax < d) or np.any(ay < d) or np.any(z >= d / 2):
        raise DomainError("point outside the seam-expansion region")
    s = ax + ay
    a = taylor_coefficients(K)
    val = (ax * ax + ax * ay + ay * ay) / s + 1.5 * z * z / s
    for k in range(2, K + 1):
        val = val - a[k] * _seam_inner_sum(ax, ay, k) * z ** (2 * k) / s
    if not with_bound:
        return val
    # |a_k| <= 1 for k >= 2, inner sum <= (2k-3) / d^(2k-2), and (z/d)^2 < 1/4
    bound = np.zeros_like(val)
    k = K + 1
    while True:
        term = (2 * k - 3) * d * d * (z / d) ** (2 * k) / s
        bound = bound + term
        if np.all(term <= 1e-18 * np.maximum(bound, 1e-300)) or k > K + 400:
            break
        k += 1
    return val, bound
