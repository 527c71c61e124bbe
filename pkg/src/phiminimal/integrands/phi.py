"""The explicit integrands on R^7 and R^6 and the non-parametric slice phi(P) = Phi(-P, 1)."""
from __future__ import annotations

import numpy as np

from ..calculus import as_points
from ..errors import DomainError
from .base import Evaluation, HomogeneousIntegrand, radial_lift
from .closed_forms import PROFILE_SCALE, psi_original_eval, psibig_original_point


def phi7_formula(p, q, z):
    """((|p|+|q|)^2 + 2z^2)^{3/2} - ((|p|-|q|)^2 + 2z^2)^{3/2}, over 2^{5/2}|p||q|."""
    a = np.linalg.norm(np.asarray(p, dtype=float), axis=-1)
    b = np.linalg.norm(np.asarray(q, dtype=float), axis=-1)
    z = np.asarray(z, dtype=float)
    if np.any(a * b == 0.0):
        raise DomainError("explicit formula needs |p||q| != 0")
    return PROFILE_SCALE * (((a + b) ** 2 + 2 * z * z) ** 1.5 - ((a - b) ** 2 + 2 * z * z) ** 1.5) / (a * b)


def phi0_formula(p, q):
    """(||p|+|q||^3 - ||p|-|q||^3) / (2^{5/2}|p||q|)."""
    a = np.linalg.norm(np.asarray(p, dtype=float), axis=-1)
    b = np.linalg.norm(np.asarray(q, dtype=float), axis=-1)
    if np.any(a * b == 0.0):
        raise DomainError("explicit formula needs |p||q| != 0")
    return PROFILE_SCALE * (np.abs(a + b) ** 3 - np.abs(a - b) ** 3) / (a * b)


class Phi7Integrand(HomogeneousIntegrand):
    """Phi(p, q, z) on R^3 x R^3 x R, evaluated as Psi(ROT(|p|, |q|), z).

    Smooth off the cone {z = 0, |p| = |q|}; there the returned Hessian is the
    limit value and the point is flagged.
    """

    dim = 7
    name = "phi7"

    def _evaluate(self, w, order):
        p, q, z = w[:, 0:3], w[:, 3:6], w[:, 6]
        red = np.stack([np.linalg.norm(p, axis=1), np.linalg.norm(q, axis=1), z], axis=1)
        ev = psibig_original_point(red, order)
        if order == 0:
            return Evaluation(ev.value, seam=ev.seam)
        if order == 1:
            lifted = radial_lift(ev.value, ev.gradient, np.zeros((len(w), 3, 3)), [p, q], tail=1)
            return Evaluation(ev.value, lifted.gradient, None, ev.seam)
        lifted = radial_lift(ev.value, ev.gradient, ev.hessian, [p, q], tail=1)
        return Evaluation(ev.value, lifted.gradient, lifted.hessian, ev.seam)


class Phi0Integrand(HomogeneousIntegrand):
    """Phi restricted to {z = 0}, a function on R^3 x R^3; seam is the cone |p| = |q|."""

    dim = 6
    name = "phi0"

    def _evaluate(self, w, order):
        p, q = w[:, 0:3], w[:, 3:6]
        red = np.stack([np.linalg.norm(p, axis=1), np.linalg.norm(q, axis=1), np.zeros(len(w))], axis=1)
        ev = psibig_original_point(red, order)
        if order == 0:
            return Evaluation(ev.value, seam=ev.seam)
        hess = ev.hessian[:, :2, :2] if order >= 2 else np.zeros((len(w), 2, 2))
        lifted = radial_lift(ev.value, ev.gradient[:, :2], hess, [p, q], tail=0)
        return Evaluation(ev.value, lifted.gradient, lifted.hessian if order >= 2 else None, ev.seam)


PHI7 = Phi7Integrand()
PHI0 = Phi0Integrand()


def phi7_eval(p, q, z, order: int = 2) -> Evaluation:
    p = as_points(p)
    q = as_points(q)
    z = as_points(z)
    w = np.concatenate([np.atleast_2d(p), np.atleast_2d(q), np.atleast_1d(z)[:, None]], axis=1)
    ev = PHI7.evaluate(w, order)
    return ev.squeeze() if p.ndim == 1 else ev


def phi0_eval(p, q, order: int = 2) -> Evaluation:
    p = as_points(p)
    q = as_points(q)
    w = np.concatenate([np.atleast_2d(p), np.atleast_2d(q)], axis=1)
    ev = PHI0.evaluate(w, order)
    return ev.squeeze() if p.ndim == 1 else ev


class ProfileField:
    """phi(p, q) = psi_orig(|p|, |q|) on R^3 x R^3, the non-parametric integrand of the construction."""

    dim = 6
    name = "phi_profile"

    def evaluate(self, w, order: int = 2) -> Evaluation:
        w = as_points(w)
        single = w.ndim == 1
        wb = np.atleast_2d(w)
        p, q = wb[:, 0:3], wb[:, 3:6]
        ev = psi_original_eval(np.linalg.norm(p, axis=1), np.linalg.norm(q, axis=1), order=2)
        lifted = radial_lift(ev.value, ev.gradient, ev.hessian, [p, q], tail=0)
        out = Evaluation(ev.value, lifted.gradient, lifted.hessian, np.zeros(len(wb), dtype=bool))
        return out.squeeze() if single else out

    def value(self, w):
        return self.evaluate(w).value

    def hessian(self, w):
        return self.evaluate(w).hessian

    def __call__(self, w):
        return self.value(w)


class GraphSlice:
    """phi(P) = Phi(-P, 1) for a homogeneous integrand Phi on R^{n+1}."""

    def __init__(self, integrand: HomogeneousIntegrand):
        self.integrand = integrand
        self.dim = integrand.dim - 1
        self.name = f"slice[{integrand.name}]"

    def evaluate(self, P, order: int = 2) -> Evaluation:
        P = as_points(P)
        single = P.ndim == 1
        Pb = np.atleast_2d(P)
        w = np.concatenate([-Pb, np.ones((len(Pb), 1))], axis=1)
        ev = self.integrand.evaluate(w, order)
        n = self.dim
        grad = None if ev.gradient is None else -ev.gradient[:, :n]
        hess = None if ev.hessian is None else ev.hessian[:, :n, :n]
        out = Evaluation(ev.value, grad, hess, ev.seam)
        return out.squeeze() if single else out

    def value(self, P):
        return self.evaluate(P, order=0).value

    def hessian(self, P):
        return self.evaluate(P).hessian

    def __call__(self, P):
        return self.value(P)
