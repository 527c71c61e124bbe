"""Minimality mechanisms: calibration by the Wulff map, level-set criticality and
foliation of the cone {|p| = |q|}, the four-dimensional ODE obstruction and the
ellipticity failure of the k = 1, m = 4 family.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .calculus import as_points, tangential_eigenvalues
from .ellipticity import certify_uniform_ellipticity, sample_sphere
from .errors import DomainError, SeamError
from .integrands.base import HomogeneousIntegrand
from .integrands.km import km14_candidate_integrand
from .integrands.phi import PHI0
from .variational import (GraphFunction, el_parametric_residual, graph_patch, level_set_patch, main_u,
                          power_block_function, second_fundamental_form)


# ---------------------------------------------------------------- calibration


@dataclass(frozen=True)
class WulffMap:
    """nu -> grad Phi(nu); its image of the unit sphere is the Wulff shape."""

    integrand: HomogeneousIntegrand

    def __call__(self, w) -> np.ndarray:
        return np.asarray(self.integrand.evaluate(w, order=1).gradient)

    def shape_points(self, sample: np.ndarray) -> np.ndarray:
        return self(sample)

    def homogeneity_defect(self, w, scale: float = 2.0) -> float:
        """max |grad Phi(scale w) - grad Phi(w)|; zero for one-homogeneous Phi."""
        w = np.atleast_2d(as_points(w))
        return float(np.abs(self(scale * w) - self(w)).max())


def calibration_gap(Phi: HomogeneousIntegrand, nu, nu_tilde, chunk: int = 100_000):
    """Phi(nu~) - grad Phi(nu) . nu~, which is >= 0 with equality at nu~ = nu (convexity)."""
    nu = as_points(nu, "nu")
    nt = as_points(nu_tilde, "nu_tilde")
    single = nu.ndim == 1 and nt.ndim == 1
    nu, nt = np.broadcast_arrays(np.atleast_2d(nu), np.atleast_2d(nt))
    for name, arr in (("nu", nu), ("nu_tilde", nt)):
        if np.any(np.abs(np.linalg.norm(arr, axis=1) - 1.0) > 1e-12):
            raise DomainError(f"{name} must consist of unit vectors")
    out = np.empty(len(nu))
    for s in range(0, len(nu), chunk):
        sl = slice(s, s + chunk)
        g = np.asarray(Phi.evaluate(nu[sl], order=1).gradient)
        out[sl] = np.asarray(Phi.evaluate(nt[sl], order=0).value) - np.einsum("ni,ni->n", g, nt[sl])
    return float(out[0]) if single else out


@dataclass
class CalibrationReport:
    pairs: int
    seed: int
    min_gap: float
    argmin_pair: list
    equality_case_max: float
    min_gap_separated: float
    separation: float
    homogeneity_defect: float
    floor: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def calibration_sweep(Phi: HomogeneousIntegrand, pairs: int = 1_000_000, seed: int = 0, floor: float = -1e-10,
                      equality_tolerance: float = 1e-12, separation: float = 1e-3) -> CalibrationReport:
    """Gap statistics over seeded random pairs on the unit sphere."""
    d = Phi.dim
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((pairs, d))
    b = rng.standard_normal((pairs, d))
    a /= np.linalg.norm(a, axis=1)[:, None]
    b /= np.linalg.norm(b, axis=1)[:, None]
    gap = calibration_gap(Phi, a, b)
    i = int(np.argmin(gap))
    eq = np.abs(calibration_gap(Phi, a[:10_000], a[:10_000]))
    far = np.linalg.norm(a - b, axis=1) > separation
    min_far = float(gap[far].min()) if np.any(far) else math.inf
    defect = WulffMap(Phi).homogeneity_defect(a[:10_000])
    passed = gap[i] >= floor and eq.max() <= equality_tolerance and min_far > 0
    return CalibrationReport(pairs, seed, float(gap[i]), [a[i].tolist(), b[i].tolist()], float(eq.max()),
                             min_far, separation, defect, floor, bool(passed))


def _graph_normals(u: GraphFunction, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    G = np.concatenate([-u.gradient(x), np.ones((len(x), 1))], axis=1)
    W = np.linalg.norm(G, axis=1)
    return G / W[:, None], W


def divergence_free_check(Phi: HomogeneousIntegrand, u: GraphFunction, x, allow_seam: bool = False):
    """div of the field (x, t) -> grad Phi(nu(x)), nu the upward graph normal.

    The field does not depend on t, so the divergence is tr(D^2 Phi(nu) Dnu)
    over the first n coordinates, with Dnu = (I - nu nu^T)/W applied to the
    columns of (-D^2 u; 0).
    """
    x = as_points(x)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    n = u.dim
    nu, W = _graph_normals(u, xb)
    ev = Phi.evaluate(nu, order=2)
    seam = np.atleast_1d(np.asarray(ev.seam))
    if not allow_seam and np.any(seam):
        raise SeamError("Wulff map is only one-sided differentiable at this normal",
                        point=nu[int(np.argmax(seam))])
    B = np.zeros((len(xb), n + 1, n))
    B[:, :n, :] = -u.hessian(xb)
    P = np.eye(n + 1)[None] - nu[:, :, None] * nu[:, None, :]
    J = np.einsum("nij,njk->nik", P, B) / W[:, None, None]
    div = np.einsum("nij,nji->n", np.asarray(ev.hessian)[:, :n, :], J)
    return float(div[0]) if single else div


def divergence_numeric(Phi: HomogeneousIntegrand, u: GraphFunction, x, step: float = 1e-4) -> np.ndarray:
    """Central-difference divergence of the same field; an independent oracle."""
    xb = np.atleast_2d(as_points(x))
    n = u.dim
    total = np.zeros(len(xb))
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        gp = np.asarray(Phi.evaluate(_graph_normals(u, xb + e)[0], order=1).gradient)[:, i]
        gm = np.asarray(Phi.evaluate(_graph_normals(u, xb - e)[0], order=1).gradient)[:, i]
        total += (gp - gm) / (2 * step)
    return total


# ---------------------------------------------------------------- cones


def level_set_point(t, c: float = 1.0, rng: Optional[np.random.Generator] = None, block: int = 3) -> np.ndarray:
    """Points of {(|p|^2 - |q|^2)/2 = c}: the smaller block has norm t, directions random (or axial)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if c == 0:
        raise DomainError("c = 0 is the cone itself")
    big = np.sqrt(2 * abs(c) + t * t)
    if rng is None:
        dp = np.zeros((len(t), block))
        dp[:, 0] = 1.0
        dq = dp.copy()
    else:
        dp = rng.standard_normal((len(t), block))
        dq = rng.standard_normal((len(t), block))
        dp /= np.linalg.norm(dp, axis=1)[:, None]
        dq /= np.linalg.norm(dq, axis=1)[:, None]
    a, b = (big, t) if c > 0 else (t, big)
    return np.concatenate([a[:, None] * dp, b[:, None] * dq], axis=1)


def level_set_critical_check(Phi0: HomogeneousIntegrand, u: GraphFunction, c: float, x):
    """Parametric Euler-Lagrange residual of {u = c} under Phi0 at points x on it."""
    xb = np.atleast_2d(as_points(x))
    if np.any(np.linalg.norm(u.gradient(xb), axis=1) == 0.0):
        raise DomainError("x is a critical point of u; the level set is singular there")
    res, seam = el_parametric_residual(Phi0, level_set_patch(u, c), xb, return_seam=True)
    if np.any(seam):
        raise SeamError("normal of the level set lies on the seam of the integrand",
                        point=xb[int(np.argmax(seam))])
    return float(res[0]) if np.ndim(x) == 1 else res


def rescaled_graph_residuals(Phi: HomogeneousIntegrand, u: GraphFunction, x, R_values=(1.0, 10.0, 100.0)) -> dict:
    """Parametric residual of the graph of R u over points of {u = 1}, for each R.

    As R grows the graph normals approach the level-set normals, so these
    residuals interpolate between the graph equation and level-set criticality.
    """
    xb = np.atleast_2d(as_points(x))
    out = {}
    for R in R_values:
        out[float(R)] = np.asarray(el_parametric_residual(Phi, graph_patch(u.scaled(R)), xb))
    return out


@dataclass
class FoliationReport:
    count: int
    on_cone: int
    assigned: int
    failures: int
    max_level_error: float
    rays_checked: int
    ray_monotone_failures: int
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def cone_foliation_check(u: GraphFunction, points, tol: float = 1e-12, cone_tol: float = 1e-14,
                         ray_count: int = 100, ray_samples: int = 50) -> FoliationReport:
    """Assign each x with u(x) != 0 to the dilate lam {u = sign u(x)}, lam = sqrt|u(x)|.

    u must be two-homogeneous. Points with |u(x)| <= cone_tol |x|^2 count as on the cone.
    The level error is measured relative to max(1, |x / lam|^2), the size of the
    terms that cancel in u(x / lam) near the cone.
    """
    xb = np.atleast_2d(as_points(points))
    val = u.value(xb)
    r2 = np.einsum("ni,ni->n", xb, xb)
    on = np.abs(val) <= cone_tol * r2
    lam = np.sqrt(np.abs(val[~on]))
    sgn = np.sign(val[~on])
    y = xb[~on] / lam[:, None]
    err = np.abs(u.value(y) - sgn) / np.maximum(1.0, np.einsum("ni,ni->n", y, y))
    failures = int(np.count_nonzero(~(err <= tol)))
    mono_fail = 0
    rays = xb[~on][:ray_count]
    s = np.linspace(0.1, 10.0, ray_samples)
    for x0 in rays:
        lam_s = np.sqrt(np.abs(u.value(s[:, None] * x0[None, :])))
        if not np.all(np.diff(lam_s) > 0):
            mono_fail += 1
    return FoliationReport(len(xb), int(on.sum()), int((~on).sum()), failures,
                           float(err.max()) if len(err) else 0.0, len(rays), mono_fail, tol,
                           bool(failures == 0 and mono_fail == 0))


# ---------------------------------------------------------------- no-4D experiment
#
# For Phi0(p, q) = G(|p|, |q|) one-homogeneous, write g(theta) = G(cos theta, sin theta).
# At a unit normal making angle theta with the p-block, the tangential eigenvalues
# of D^2 Phi0 are
#     g - tan(theta) g'   (p rotations),  g + cot(theta) g'   (q rotations),  g + g''   (meridian).
# On {|p|^2 - |q|^2 = 2} with the normal angle theta, II has eigenvalues -1/|x| on the
# p rotations, +1/|x| on the q rotations and cos(2 theta)/|x| on the meridian. With
# j - 1 rotation directions per block beyond the meridian (j = 1 for R^4, j = 2 for R^6)
# the parametric equation becomes
#     (g + g'') cos(2 theta) + 2 j g' / sin(2 theta) = 0.
# The solution regular at theta = 0 is g = 1 - theta^2 / (2 + 2j) + O(theta^4). Near the
# diagonal theta = pi/4 - eps, j = 1 forces g'' ~ g(pi/4) log(1/eps), while for j = 2 the
# solution stays C^2.


@dataclass(frozen=True)
class OdeExperimentConfig:
    block_dim: int = 2  # dimension of p and q
    t_range: tuple = (0.1, 50.0)
    samples: int = 200
    axis_margin: float = 1e-4  # start angle away from the axis singularity
    diagonal_margins: tuple = (1e-4, 1e-6, 1e-8, 1e-10, 1e-12)  # tail probes beyond t_max
    rtol: float = 1e-12
    atol: float = 1e-14
    threshold: float = 1e3
    baseline_t: float = 1.0

    def __post_init__(self):
        lo, hi = self.t_range
        if not 0 < lo < self.baseline_t < hi:
            raise DomainError("t_range must be positive and contain the baseline t")
        if not 0 < self.axis_margin < 0.1:
            raise DomainError("axis margin must lie in (0, 0.1)")
        if any(not 0 < m < 0.1 for m in self.diagonal_margins):
            raise DomainError("diagonal margins must lie in (0, 0.1)")


def normal_angle(t):
    """Angle of the level-set normal at |q| = t on {|p|^2 - |q|^2 = 2}."""
    t = np.asarray(t, dtype=float)
    return np.arctan2(t, np.sqrt(2.0 + t * t))


def quadric_curvatures(t) -> np.ndarray:
    """Closed-form (p-rotation, q-rotation, meridian) curvatures of {|p|^2 - |q|^2 = 2} at |q| = t."""
    t = np.asarray(t, dtype=float)
    r = np.sqrt(2.0 + 2.0 * t * t)
    return np.stack([-1.0 / r, 1.0 / r, 2.0 / r**3], axis=-1)


def _ode_rhs(j):
    def rhs(theta, y):
        g, gp = y
        return [gp, -g - 2.0 * j * gp / (math.sin(2 * theta) * math.cos(2 * theta))]
    return rhs


def _eigen_triplet(theta, g, gp, j):
    s2, c2 = np.sin(2 * theta), np.cos(2 * theta)
    gpp = -g - 2.0 * j * gp / (s2 * c2)
    return np.stack([g - np.tan(theta) * gp, g + gp / np.tan(theta), g + gpp], axis=-1)


@dataclass
class OdeExperimentReport:
    config: dict
    status: str
    message: str
    table: list  # rows: t, theta, g, g', lambda_p, lambda_q, lambda_meridian
    baseline_eigenvalue: float
    max_eigenvalue: float
    growth_ratio: float
    threshold: float
    threshold_exceeded: bool
    range_growth_ratio: float  # growth within t_range only
    tail: list  # rows: eps, lambda_meridian
    log_slope: float
    diagonal_value: float
    axis_residual: float
    control: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _integrate_profile(j: int, cfg: OdeExperimentConfig, thetas: np.ndarray):
    th0 = cfg.axis_margin
    c = -1.0 / (2.0 + 2.0 * j)
    y0 = [1.0 + c * th0**2, 2.0 * c * th0]
    sol = solve_ivp(_ode_rhs(j), (th0, float(thetas[-1])), y0, method="DOP853", t_eval=thetas,
                    rtol=cfg.rtol, atol=cfg.atol)
    return sol


def no4d_ode_experiment(config: Optional[OdeExperimentConfig] = None) -> OdeExperimentReport:
    """Integrate the reduced equation and track the meridian eigenvalue toward the diagonal.

    The same reduction with three-dimensional blocks is run as a control and
    compared with the explicit six-dimensional Phi0.
    """
    cfg = config or OdeExperimentConfig()
    j = cfg.block_dim - 1
    t = np.unique(np.concatenate([np.geomspace(*cfg.t_range, cfg.samples), [cfg.baseline_t]]))
    theta_t = normal_angle(t)
    tail_eps = np.sort(np.asarray(cfg.diagonal_margins, dtype=float))[::-1]
    tail_eps = tail_eps[math.pi / 4 - tail_eps > theta_t[-1]]
    thetas = np.concatenate([theta_t, math.pi / 4 - tail_eps])
    sol = _integrate_profile(j, cfg, thetas)
    status = "completed" if sol.success else "integration-failure"
    n_ok = sol.y.shape[1]
    g, gp = sol.y[0], sol.y[1]
    lam = _eigen_triplet(thetas[:n_ok], g, gp, j)
    nt = min(len(t), n_ok)
    table = np.column_stack([t[:nt], theta_t[:nt], g[:nt], gp[:nt], lam[:nt]])
    base = float(lam[int(np.searchsorted(t, cfg.baseline_t)), :].max())
    lam_max = float(lam[:, :].max())
    ratio = lam_max / base
    tail = np.column_stack([tail_eps[: max(0, n_ok - len(t))], lam[len(t):, 2]]) if n_ok > len(t) else np.zeros((0, 2))
    slope = float("nan")
    if len(tail) >= 2:
        slope = float(np.polyfit(np.log(1.0 / tail[:, 0]), tail[:, 1], 1)[0])
    # axis regularity: ODE residual of the series start
    c = -1.0 / (2.0 + 2.0 * j)
    th0 = cfg.axis_margin
    axis_res = abs((1 + c * th0**2 + 2 * c) * math.cos(2 * th0) + 2 * j * 2 * c * th0 / math.sin(2 * th0))
    report = OdeExperimentReport(
        config=asdict(cfg), status=status, message=str(sol.message), table=table.tolist(),
        baseline_eigenvalue=base, max_eigenvalue=lam_max, growth_ratio=ratio, threshold=cfg.threshold,
        threshold_exceeded=bool(ratio > cfg.threshold),
        range_growth_ratio=float(lam[:nt].max() / base), tail=tail.tolist(), log_slope=slope,
        diagonal_value=float(g[-1]), axis_residual=float(axis_res),
    )
    if cfg.block_dim == 2:
        report.control = six_dimensional_control(cfg)
    return report


def phi0_profile_eigenvalues(t) -> np.ndarray:
    """Tangential eigenvalues of the explicit Phi0 at the normals of {|p|^2 - |q|^2 = 2} in R^6."""
    th = normal_angle(t)
    nu = np.zeros((len(th), 6))
    nu[:, 0] = np.cos(th)
    nu[:, 3] = np.sin(th)
    H = PHI0.evaluate(nu).hessian
    return tangential_eigenvalues(H, nu)


def six_dimensional_control(cfg: OdeExperimentConfig) -> dict:
    """Run the reduction with R^3 blocks and compare with the explicit Phi0 (normalised to 1 on the axis)."""
    ctl = OdeExperimentConfig(block_dim=3, t_range=cfg.t_range, samples=cfg.samples, axis_margin=cfg.axis_margin,
                              diagonal_margins=cfg.diagonal_margins, rtol=cfg.rtol, atol=cfg.atol,
                              threshold=cfg.threshold, baseline_t=cfg.baseline_t)
    rep = no4d_ode_experiment(ctl)
    table = np.asarray(rep.table)
    scale = float(PHI0.value(np.eye(6)[0]))
    explicit = phi0_profile_eigenvalues(table[:, 0]) / scale
    # rotation eigenvalues carry multiplicity two in R^6
    ode = np.sort(table[:, [4, 4, 5, 5, 6]], axis=1)
    mismatch = float(np.abs(ode - explicit).max())
    return {
        "max_eigenvalue": rep.max_eigenvalue,
        "growth_ratio": rep.growth_ratio,
        "diagonal_value": rep.diagonal_value,
        "explicit_diagonal_value": float(PHI0.value(np.array([1, 0, 0, 1, 0, 0]) / math.sqrt(2)) / scale),
        "eigenvalue_mismatch_vs_explicit": mismatch,
        "tail": rep.tail,
        "bounded": bool(np.all(np.isfinite(table[:, 4:7])) and rep.growth_ratio < cfg.threshold),
    }


# ---------------------------------------------------------------- k = 1, m = 4


def principal_curvatures(patch, x) -> np.ndarray:
    return np.linalg.eigvalsh(second_fundamental_form(patch, np.atleast_2d(x)).II)


def curvature_ratio(patch, x) -> np.ndarray:
    k = np.abs(principal_curvatures(patch, np.atleast_2d(x)))
    return k.max(axis=1) / k.min(axis=1)


@dataclass(frozen=True)
class KmExperimentConfig:
    ray_p: tuple = (1.0,)
    q_start: float = 1.0
    q_stop: float = 1e-3
    samples: int = 200
    threshold: float = 1e3
    certifier_samples: int = 20_000
    seed: int = 0


@dataclass
class KmReport:
    config: dict
    rays: list  # per ray: p, table rows (q, ratio), first q above threshold, monotone, exponent
    control_max_ratio: float
    threshold_exceeded: bool
    candidate_certificate: dict

    def to_dict(self) -> dict:
        return asdict(self)


def _ray_points(P: float, q: np.ndarray, block: int) -> np.ndarray:
    x = np.zeros((len(q), 2 * block))
    x[:, 0] = P
    x[:, block] = q
    return x


def km_ellipticity_failure(config: Optional[KmExperimentConfig] = None) -> KmReport:
    """Principal-curvature ratio of the graph of (3/4)(|p|^{4/3} - |q|^{4/3}) as |q| -> 0.

    The quadratic u of the main example on the same rays serves as a bounded control, and the
    candidate integrand from the cubic profile is passed through the certifier.
    """
    cfg = config or KmExperimentConfig()
    q = np.geomspace(cfg.q_start, cfg.q_stop, cfg.samples)
    patch = graph_patch(power_block_function(4.0 / 3.0, 2, 0.75))
    control = graph_patch(main_u())
    rays = []
    control_max = 0.0
    exceeded = False
    for P in cfg.ray_p:
        ratio = curvature_ratio(patch, _ray_points(P, q, 2))
        above = np.nonzero(ratio > cfg.threshold)[0]
        first = float(q[above[0]]) if len(above) else None
        tail = slice(len(q) // 2, None)
        exponent = float(np.polyfit(np.log(q[tail]), np.log(ratio[tail]), 1)[0])
        rays.append({
            "p": float(P), "table": np.column_stack([q, ratio]).tolist(), "final_ratio": float(ratio[-1]),
            "first_q_above_threshold": first, "monotone": bool(np.all(np.diff(ratio) > 0)),
            "power_law_exponent": exponent,
        })
        exceeded = exceeded or first is not None
        ctl = curvature_ratio(control, _ray_points(P, q, 3))
        rays[-1]["control_max_ratio"] = float(ctl.max())
        rays[-1]["control_spread"] = float(ctl.max() / ctl.min())
        control_max = max(control_max, float(ctl.max()))
    cert = certify_uniform_ellipticity(km14_candidate_integrand(),
                                       sample_sphere(4, cfg.certifier_samples, seed=cfg.seed))
    return KmReport(asdict(cfg), rays, control_max, bool(exceeded), cert.to_dict())
