"""Euler-Lagrange residuals (graph, Legendre and parametric form), Legendre transforms,
second fundamental forms and the planar wave-operator checks.

Sign conventions: graphs carry the upward normal, level sets {F = c} the normal
grad F / |grad F|, and II(X, Y) = -<D_X nu, Y>, so the graph of a convex
function has II >= 0 and a round sphere with outward normal has II = -I/R.
Zero sets and scaling laws do not depend on these choices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .calculus import (DEFAULT_SCHEME, DifferentiationScheme, as_points, numeric_gradient, numeric_hessian,
                       tangent_frames)
from .errors import ConvergenceError, DomainError, SeamError
from .integrands.base import Evaluation
from .integrands.km import derivatives_2d


def _rows(x) -> tuple[np.ndarray, bool]:
    x = as_points(x)
    return np.atleast_2d(x), x.ndim == 1


def _out(arr, single):
    return arr[0] if single else arr


@dataclass(frozen=True)
class GraphFunction:
    """Scalar function on R^n with gradient and Hessian; callables take ``(N, n)`` batches."""

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    dim: int
    analytic: bool = True
    name: str = "w"

    def __call__(self, x):
        xb, single = _rows(x)
        return _out(self.value(xb), single)

    def grad(self, x):
        xb, single = _rows(x)
        return _out(self.gradient(xb), single)

    def hess(self, x):
        xb, single = _rows(x)
        return _out(self.hessian(xb), single)

    def dilate(self, lam: float) -> "GraphFunction":
        """x -> lam * w(x / lam), whose graph is the dilate of the graph of w."""
        return GraphFunction(
            value=lambda x: lam * self.value(x / lam),
            gradient=lambda x: self.gradient(x / lam),
            hessian=lambda x: self.hessian(x / lam) / lam,
            dim=self.dim, analytic=self.analytic, name=f"{lam:g}*{self.name}(x/{lam:g})",
        )

    def scaled(self, R: float) -> "GraphFunction":
        return GraphFunction(
            value=lambda x: R * self.value(x), gradient=lambda x: R * self.gradient(x),
            hessian=lambda x: R * self.hessian(x), dim=self.dim, analytic=self.analytic,
            name=f"{R:g}*{self.name}",
        )


def quadratic_function(A, name: str = "quadratic") -> GraphFunction:
    """x -> x^T A x / 2."""
    A = np.asarray(A, dtype=float)
    A = 0.5 * (A + A.T)
    n = len(A)
    return GraphFunction(
        value=lambda x: 0.5 * np.einsum("ni,ij,nj->n", x, A, x),
        gradient=lambda x: x @ A,
        hessian=lambda x: np.broadcast_to(A, (len(x), n, n)).copy(),
        dim=n, name=name,
    )


def main_u() -> GraphFunction:
    """u(p, q) = (|p|^2 - |q|^2) / 2 on R^3 x R^3."""
    return quadratic_function(np.diag([1.0] * 3 + [-1.0] * 3), name="u")


def linear_function(c, b: float = 0.0) -> GraphFunction:
    c = np.asarray(c, dtype=float)
    n = len(c)
    return GraphFunction(
        value=lambda x: x @ c + b, gradient=lambda x: np.broadcast_to(c, x.shape).copy(),
        hessian=lambda x: np.zeros((len(x), n, n)), dim=n, name="linear",
    )


def power_block_function(m: float, block: int, coeff: Optional[float] = None) -> GraphFunction:
    """coeff * (|p|^m - |q|^m) on R^block x R^block, coeff defaulting to 1/m.

    m = 4/3, block = 2, coeff = 3/4 is the graph whose curvatures degenerate near
    {|p||q| = 0}. For m < 2 the Hessian is infinite where p = 0 or q = 0.
    """
    c = 1.0 / m if coeff is None else coeff

    def parts(x):
        return x[:, :block], x[:, block:2 * block]

    def value(x):
        p, q = parts(x)
        return c * (np.linalg.norm(p, axis=1) ** m - np.linalg.norm(q, axis=1) ** m)

    def gradient(x):
        p, q = parts(x)
        a = np.linalg.norm(p, axis=1)[:, None]
        b = np.linalg.norm(q, axis=1)[:, None]
        return c * m * np.concatenate([a ** (m - 2) * p, -(b ** (m - 2)) * q], axis=1)

    def hessian(x):
        p, q = parts(x)
        H = np.zeros((len(x), 2 * block, 2 * block))
        for sl, v, sgn in ((slice(0, block), p, 1.0), (slice(block, 2 * block), q, -1.0)):
            r = np.linalg.norm(v, axis=1)
            n = np.divide(v, r[:, None], out=np.zeros_like(v), where=r[:, None] > 0)
            nn = n[:, :, None] * n[:, None, :]
            with np.errstate(divide="ignore"):
                scale = r ** (m - 2) if m != 2 else np.ones_like(r)
            H[:, sl, sl] = sgn * c * m * scale[:, None, None] * (np.eye(block)[None] + (m - 2) * nn)
        return H

    return GraphFunction(value, gradient, hessian, dim=2 * block, name=f"power{m:g}")


def numeric_function(func: Callable, dim: int, scheme: DifferentiationScheme = DEFAULT_SCHEME,
                     name: str = "numeric") -> GraphFunction:
    return GraphFunction(func, lambda x: numeric_gradient(func, x, scheme),
                         lambda x: numeric_hessian(func, x, scheme), dim=dim, analytic=False, name=name)


# ---------------------------------------------------------------- Legendre


@dataclass(frozen=True)
class LegendreResult:
    value: float
    X: np.ndarray
    iterations: int
    residual_norm: float


def legendre_transform(w: GraphFunction, y, x0=None, tol: float = 1e-12, max_iter: int = 50) -> LegendreResult:
    """w*(y) = y . X(y) - w(X(y)) with X solving grad w(X) = y by damped Newton.

    The residual tolerance is relative to max(1, |y|). Steps are halved while
    they fail to decrease the residual.
    """
    y = as_points(y, "y")
    x = y.copy() if x0 is None else as_points(x0, "x0").copy()
    res = w.grad(x) - y
    rn = float(np.linalg.norm(res))
    scale = max(1.0, float(np.linalg.norm(y)))
    it = 0
    while rn > tol * scale:
        if it >= max_iter:
            raise ConvergenceError("Newton iteration for the Legendre transform did not converge",
                                   last_iterate=x, residual_norm=rn)
        H = np.atleast_2d(w.hess(x))
        try:
            step = np.linalg.solve(H, res)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError("singular Hessian in Legendre solve", last_iterate=x, residual_norm=rn) from exc
        t = 1.0
        for _ in range(40):
            cand = x - t * step
            cres = w.grad(cand) - y
            crn = float(np.linalg.norm(cres))
            if np.isfinite(crn) and crn < rn:
                break
            t *= 0.5
        else:
            raise ConvergenceError("line search failed in Legendre solve", last_iterate=x, residual_norm=rn)
        x, res, rn = cand, cres, crn
        it += 1
    return LegendreResult(float(y @ x - w(x)), x, it, rn)


@dataclass(frozen=True)
class LegendrePair:
    w: GraphFunction
    w_star: GraphFunction
    inverse_map: Callable[[np.ndarray], np.ndarray]


def legendre_pair(w: GraphFunction, tol: float = 1e-12, max_iter: int = 50) -> LegendrePair:
    """Build w* from pointwise Newton solves; grad w* = X and D^2 w* = (D^2 w)^{-1}(X)."""

    def solve_rows(ys):
        return [legendre_transform(w, y, tol=tol, max_iter=max_iter) for y in ys]

    def value(ys):
        return np.array([r.value for r in solve_rows(ys)])

    def inverse_map(ys):
        return np.array([r.X for r in solve_rows(np.atleast_2d(ys))])

    def hessian(ys):
        X = inverse_map(ys)
        return np.linalg.inv(w.hessian(X))

    w_star = GraphFunction(value, inverse_map, hessian, dim=w.dim, analytic=w.analytic, name=f"{w.name}*")
    return LegendrePair(w, w_star, inverse_map)


# ---------------------------------------------------------------- residuals


def el_graph_residual(phi, u: GraphFunction, x, allow_seam: bool = False):
    """phi_ij(grad u(x)) u_ij(x), with phi the non-parametric integrand P -> Phi(-P, 1)."""
    xb, single = _rows(x)
    P = u.gradient(xb)
    ev = phi.evaluate(P)
    seam = np.atleast_1d(np.asarray(ev.seam))
    if not allow_seam and np.any(seam):
        i = int(np.argmax(seam))
        raise SeamError("integrand Hessian is only one-sided at grad u(x)", point=P[i])
    H = np.asarray(ev.hessian).reshape(len(xb), u.dim, u.dim)
    res = np.einsum("nij,nij->n", H, u.hessian(xb))
    return _out(res, single)


def el_legendre_residual(w_star: GraphFunction, phi, y, max_condition: float = 1e12):
    """(w*)^{ij}(y) phi_ij(y), where (w*)^{ij} is the inverse of D^2 w*(y)."""
    yb, single = _rows(y)
    Hs = w_star.hessian(yb)
    cond = np.linalg.cond(Hs)
    if np.any(~np.isfinite(cond) | (cond > max_condition)):
        raise DomainError(f"D^2 w* is numerically singular (condition number {float(np.max(cond)):.3g})")
    inv = np.linalg.inv(Hs)
    H = np.asarray(phi.evaluate(yb).hessian).reshape(inv.shape)
    return _out(np.einsum("nij,nij->n", inv, H), single)


@dataclass(frozen=True)
class HypersurfacePatch:
    """A graph {(x, f(x))} over R^n or a level set {F = level} in R^{n+1}."""

    kind: str
    function: GraphFunction
    level: float = 0.0

    def __post_init__(self):
        if self.kind not in ("graph", "level"):
            raise DomainError("patch kind must be 'graph' or 'level'")

    @property
    def ambient_dim(self) -> int:
        return self.function.dim + 1 if self.kind == "graph" else self.function.dim

    def ambient_point(self, x) -> np.ndarray:
        xb, single = _rows(x)
        if self.kind == "graph":
            return _out(np.concatenate([xb, self.function.value(xb)[:, None]], axis=1), single)
        return _out(xb, single)

    def defining_derivatives(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Gradient and Hessian in R^{n+1} of the defining function (t - f(x) for graphs)."""
        xb = np.atleast_2d(as_points(x))
        f = self.function
        if self.kind == "graph":
            n = f.dim
            G = np.concatenate([-f.gradient(xb), np.ones((len(xb), 1))], axis=1)
            M = np.zeros((len(xb), n + 1, n + 1))
            M[:, :n, :n] = -f.hessian(xb)
            return G, M
        return f.gradient(xb), f.hessian(xb)

    def dilate(self, lam: float) -> "HypersurfacePatch":
        if self.kind == "graph":
            return HypersurfacePatch("graph", self.function.dilate(lam))
        f = self.function
        g = GraphFunction(lambda x: f.value(x / lam), lambda x: f.gradient(x / lam) / lam,
                          lambda x: f.hessian(x / lam) / lam**2, dim=f.dim, analytic=f.analytic,
                          name=f"{f.name}(x/{lam:g})")
        return HypersurfacePatch("level", g, self.level)


def graph_patch(u: GraphFunction) -> HypersurfacePatch:
    return HypersurfacePatch("graph", u)


def level_set_patch(F: GraphFunction, c: float) -> HypersurfacePatch:
    return HypersurfacePatch("level", F, c)


@dataclass(frozen=True)
class FundamentalForm:
    normal: np.ndarray
    frame: np.ndarray  # rows span the tangent space
    II: np.ndarray


def second_fundamental_form(patch: HypersurfacePatch, x) -> FundamentalForm:
    """Unit normal and II in the deterministic tangent frame of the normal.

    ``x`` is a base point in R^n for graphs and a point of R^{n+1} on the level
    set otherwise. Batches give batched fields.
    """
    xb, single = _rows(x)
    G, M = patch.defining_derivatives(xb)
    g = np.linalg.norm(G, axis=1)
    if np.any(g == 0.0):
        raise DomainError("defining function has vanishing gradient; no normal exists")
    nu = G / g[:, None]
    # renormalise to pass the frame's unit test at 1e-12
    nu /= np.linalg.norm(nu, axis=1)[:, None]
    frames = tangent_frames(nu)
    II = -np.einsum("nai,nij,nbj->nab", frames, M, frames) / g[:, None, None]
    II = 0.5 * (II + np.swapaxes(II, 1, 2))
    if single:
        return FundamentalForm(nu[0], frames[0], II[0])
    return FundamentalForm(nu, frames, II)


def el_parametric_residual(Phi, patch: HypersurfacePatch, x, return_seam: bool = False):
    """tr(D^2 Phi(nu) II) with both factors expressed in the frame of nu.

    Scaling: the residual at lam x on the dilated patch equals this residual
    divided by lam, so the zero set is dilation invariant.
    """
    xb, single = _rows(x)
    ff = second_fundamental_form(patch, xb)
    ev = Phi.evaluate(ff.normal, order=2)
    Hr = np.einsum("nai,nij,nbj->nab", ff.frame, np.asarray(ev.hessian), ff.frame)
    res = np.einsum("nab,nab->n", Hr, ff.II)
    seam = np.atleast_1d(np.asarray(ev.seam))
    if return_seam:
        return _out(res, single), _out(seam, single)
    return _out(res, single)


# ---------------------------------------------------------------- planar wave checks


def wave_residual_2d(psi: Callable, x, y, scheme: DifferentiationScheme = DEFAULT_SCHEME):
    """Residuals of box psi + 2 grad psi . (1/x, -1/y) and of box(x y psi).

    ``psi(x, y)`` may return an :class:`Evaluation` (analytic derivatives) or
    plain values (finite differences). Returns ``(residual_2del, residual_box_xy)``.
    """
    x = as_points(x, "x")
    y = as_points(y, "y")
    single = x.ndim == 0 and y.ndim == 0
    x, y = np.broadcast_arrays(np.atleast_1d(x), np.atleast_1d(y))
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("the reduced equation is posed on the open positive quadrant")
    _, g, H = derivatives_2d(psi, x, y, scheme)
    r2 = H[:, 0, 0] - H[:, 1, 1] + 2 * g[:, 0] / x - 2 * g[:, 1] / y
    # product rule: box(xy psi) = xy box psi + 2y psi_x - 2x psi_y
    rb = x * y * (H[:, 0, 0] - H[:, 1, 1]) + 2 * y * g[:, 0] - 2 * x * g[:, 1]
    if single:
        return float(r2[0]), float(rb[0])
    return r2, rb


def box_numeric(F: Callable, x, y, step: float = 1e-2, richardson_levels: int = 1):
    """F_xx - F_yy from central differences; one Richardson level gives fourth order."""
    x = np.atleast_1d(as_points(x, "x"))
    y = np.atleast_1d(as_points(y, "y"))
    pts = np.stack(np.broadcast_arrays(x, y), axis=1)
    scheme = DifferentiationScheme(step=step, richardson_levels=richardson_levels)
    H = numeric_hessian(lambda P: F(P[:, 0], P[:, 1]), pts, scheme)
    return H[:, 0, 0] - H[:, 1, 1]


def rotated_profile_psi(psi_eval_fn: Callable) -> Callable:
    """Compose a planar function with the pi/4 rotation (x, y) -> ((x+y), (x-y)) / sqrt 2."""
    from .integrands.closed_forms import ROT

    def composed(x, y):
        pts = np.stack(np.broadcast_arrays(np.atleast_1d(x), np.atleast_1d(y)), axis=1) @ ROT.T
        ev = psi_eval_fn(pts[:, 0], pts[:, 1])
        if isinstance(ev, Evaluation):
            g = None if ev.gradient is None else ev.gradient @ ROT
            H = None if ev.hessian is None else np.einsum("ai,nab,bj->nij", ROT, ev.hessian, ROT)
            return Evaluation(ev.value, g, H, ev.seam)
        return ev

    return composed
