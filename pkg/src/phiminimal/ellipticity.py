"""Sampling-based certification of positivity, evenness and uniform ellipticity.

The certificates are numerical corroboration: extrema over finite samples, not
validated enclosures.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .calculus import tangential_eigenvalues
from .errors import DomainError
from .integrands.base import HomogeneousIntegrand
from .integrands.closed_forms import psibig_point, seam_expansion_eval

SCHEMES = ("seeded-uniform", "fibonacci")


@dataclass(frozen=True)
class SphereSample:
    dimension: int  # n for the sphere S^n in R^{n+1}
    points: np.ndarray
    scheme: str
    seed: int

    def __len__(self):
        return len(self.points)

    def concat(self, other: "SphereSample") -> "SphereSample":
        if other.dimension != self.dimension:
            raise DomainError("cannot merge samples of different dimension")
        return SphereSample(self.dimension, np.concatenate([self.points, other.points]),
                            f"{self.scheme}+{other.scheme}", self.seed)


def sample_sphere(n: int, N: int, scheme: str = "seeded-uniform", seed: int = 0) -> SphereSample:
    """N points on S^n. ``fibonacci`` is only available on S^2."""
    if N < 1:
        raise DomainError("need at least one sample point")
    if scheme == "fibonacci":
        if n != 2:
            raise DomainError("fibonacci lattice is implemented for S^2 only")
        i = np.arange(N) + 0.5
        zc = 1.0 - 2.0 * i / N
        r = np.sqrt(1.0 - zc * zc)
        phi = math.pi * (3.0 - math.sqrt(5.0)) * np.arange(N)
        pts = np.stack([r * np.cos(phi), r * np.sin(phi), zc], axis=1)
    elif scheme == "seeded-uniform":
        g = np.random.default_rng(seed).standard_normal((N, n + 1))
        pts = g / np.linalg.norm(g, axis=1)[:, None]
    else:
        raise DomainError(f"unknown sampling scheme {scheme!r}")
    return SphereSample(n, pts, scheme, seed)


def _unit_rows(rng, N, d):
    g = rng.standard_normal((N, d))
    return g / np.linalg.norm(g, axis=1)[:, None]


def seam_ring_sample(N: int = 10_000, seed: int = 0, width: float = 1e-2) -> SphereSample:
    """Points of S^6 clustered around the low-regularity and low-curvature circles of Phi.

    Half of the points straddle the cone {z = 0, |p| = |q|}, where Phi is only
    C^{2,1}; the rest hug {z = 0, |p||q| = 0}. Offsets are drawn from a
    logarithmic ladder between ``width`` and 1e-9 that includes 0.
    """
    rng = np.random.default_rng(seed)
    ph = _unit_rows(rng, N, 3)
    qh = _unit_rows(rng, N, 3)
    ladder = np.concatenate([[0.0], width * np.logspace(0, -7, 15)])
    off_t = ladder[rng.integers(0, len(ladder), N)] * rng.choice([-1.0, 1.0], N)
    off_z = ladder[rng.integers(0, len(ladder), N)] * rng.choice([-1.0, 1.0], N)
    cone = np.arange(N) < N // 2
    axis_angle = np.where(rng.random(N) < 0.5, 0.0, math.pi / 2)
    theta = np.where(cone, math.pi / 4 + off_t, axis_angle + np.where(axis_angle == 0.0, 1, -1) * np.abs(off_t))
    pts = np.concatenate([np.cos(theta)[:, None] * ph, np.sin(theta)[:, None] * qh, off_z[:, None]], axis=1)
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    return SphereSample(6, pts, "seam-ring", seed)


@dataclass
class EllipticityReport:
    integrand: str
    sample_count: int
    evaluated_count: int
    skipped_count: int
    seam_flagged_count: int
    min_tangential_eigenvalue: float
    max_tangential_eigenvalue: float
    argmin_point: list
    positivity_min: float
    evenness_max_violation: float
    radial_kernel_max: float
    evenness_tolerance: float = 1e-10
    eigenvalue_floor: float = 0.0
    passed: bool = False
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def certify_uniform_ellipticity(F: HomogeneousIntegrand, sample: SphereSample, chunk: int = 20_000,
                                evenness_tolerance: float = 1e-10,
                                eigenvalue_floor: float = 0.0) -> EllipticityReport:
    """Extremal eigenvalues of D^2 F on the tangent planes of the sample points.

    One-homogeneity makes D^2 F(nu) nu = 0, so uniform convexity of {F = 1}
    is equivalent to D^2 F(nu) being positive definite on nu-perp. Points whose
    evaluation fails are skipped and counted.
    """
    pts = sample.points
    if pts.shape[1] != F.dim:
        raise DomainError(f"sample lives in R^{pts.shape[1]} but integrand in R^{F.dim}")
    lam_min, lam_max = math.inf, -math.inf
    argmin = None
    pos_min, even_max, radial_max = math.inf, 0.0, 0.0
    skipped = flagged = 0
    for start in range(0, len(pts), chunk):
        nu = pts[start:start + chunk]
        ev = F.evaluate(nu, order=2)
        val_neg = np.asarray(F.evaluate(-nu, order=0).value, dtype=float)
        val = np.asarray(ev.value, dtype=float)
        H = np.asarray(ev.hessian, dtype=float)
        ok = np.isfinite(val) & np.isfinite(val_neg) & np.all(np.isfinite(H), axis=(1, 2))
        skipped += int(np.count_nonzero(~ok))
        flagged += int(np.count_nonzero(np.asarray(ev.seam)[ok]))
        if not np.any(ok):
            continue
        nu_ok, H_ok = nu[ok], H[ok]
        lam = tangential_eigenvalues(H_ok, nu_ok)
        i = int(np.argmin(lam[:, 0]))
        if lam[i, 0] < lam_min:
            lam_min = float(lam[i, 0])
            argmin = nu_ok[i].tolist()
        lam_max = max(lam_max, float(lam[:, -1].max()))
        pos_min = min(pos_min, float(val[ok].min()))
        even_max = max(even_max, float(np.abs(val[ok] - val_neg[ok]).max()))
        radial_max = max(radial_max, float(np.abs(np.einsum("nij,nj->ni", H_ok, nu_ok)).max()))
    evaluated = len(pts) - skipped
    passed = evaluated > 0 and lam_min > eigenvalue_floor and pos_min > 0 and even_max <= evenness_tolerance
    notes = ["sampling certificate: extrema over the listed sample, not a validated bound"]
    if skipped:
        notes.append(f"{skipped} points skipped after non-finite evaluation")
    return EllipticityReport(
        integrand=getattr(F, "name", type(F).__name__), sample_count=len(pts), evaluated_count=evaluated,
        skipped_count=skipped, seam_flagged_count=flagged, min_tangential_eigenvalue=lam_min,
        max_tangential_eigenvalue=lam_max, argmin_point=argmin, positivity_min=pos_min,
        evenness_max_violation=even_max, radial_kernel_max=radial_max,
        evenness_tolerance=evenness_tolerance, eigenvalue_floor=eigenvalue_floor,
        passed=bool(passed), notes=notes,
    )


@dataclass
class SeamReport:
    delta: float
    steps: list
    lipschitz_estimates: list
    lipschitz_estimates_lower: list
    successive_ratios: list
    lipschitz_constant_estimate: float
    side_asymmetry: float
    mixed_max: float
    zz_max_error: float
    max_expansion_mismatch: float
    expansion_order: int
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def seam_circle_points(delta: float, count: int = 400) -> np.ndarray:
    """Points (x, y) on the unit circle with |x|, |y| >= delta, all four quadrants."""
    lo = math.asin(delta)
    hi = math.acos(delta)
    if lo >= hi:
        raise DomainError("delta leaves no admissible seam points")
    t = np.linspace(lo, hi, count // 4)
    base = np.stack([np.cos(t), np.sin(t)], axis=1)
    return np.concatenate([base * s for s in ([1, 1], [-1, 1], [1, -1], [-1, -1])])


def seam_regularity_check(delta: float = 0.2, h_list=(0.08, 0.04, 0.02, 0.01, 0.005, 0.0025),
                          count: int = 400, K: int = 6, ratio_band=(0.5, 2.0),
                          tol_mixed: float = 1e-8, tol_zz: float = 1e-8,
                          tol_sides: float = 1e-10) -> SeamReport:
    """C^{2,1} evidence for Psi across {z = 0} on Omega_delta = {|x|, |y| >= delta}.

    For each step h the estimate is max |D^2 Psi(x, y, +-h) - D^2 Psi(x, y, 0)| / h
    over seam samples; stability of these estimates under refinement indicates a
    finite Lipschitz constant of the second derivatives.
    """
    if not 0 < delta < 0.5:
        raise DomainError("delta must lie in (0, 1/2)")
    h_list = [float(h) for h in h_list]
    if any(h >= delta / 2 for h in h_list) or any(b >= a for a, b in zip(h_list, h_list[1:])):
        raise DomainError("steps must be decreasing and below delta/2")
    xy = seam_circle_points(delta, count)
    on = np.concatenate([xy, np.zeros((len(xy), 1))], axis=1)
    H0 = psibig_point(on).hessian
    up, down = [], []
    for h in h_list:
        Hp = psibig_point(on + [0, 0, h]).hessian
        Hm = psibig_point(on - [0, 0, h]).hessian
        up.append(float(np.abs(Hp - H0).max() / h))
        down.append(float(np.abs(Hm - H0).max() / h))
    ratios = [b / a for a, b in zip(up, up[1:])]
    mixed = float(np.abs(H0[:, :2, 2]).max())
    zz_err = float(np.abs(H0[:, 2, 2] - 3.0 / (np.abs(xy[:, 0]) + np.abs(xy[:, 1]))).max())
    asym = float(max(abs(a - b) for a, b in zip(up, down)))
    zs = np.linspace(0.0, 0.999 * delta / 2, 9)
    mismatch = 0.0
    for zv in zs:
        pts = on + [0, 0, zv]
        exact = psibig_point(pts, order=0).value
        approx = seam_expansion_eval(pts[:, 0], pts[:, 1], pts[:, 2], K=K)
        mismatch = max(mismatch, float(np.abs(exact - approx).max()))
    passed = (all(ratio_band[0] <= r <= ratio_band[1] for r in ratios) and mixed <= tol_mixed
              and zz_err <= tol_zz and asym <= tol_sides)
    return SeamReport(delta, h_list, up, down, ratios, up[-1], asym, mixed, zz_err, mismatch, K, bool(passed))


def seam_expansion_order(x: float, y: float, K: int, zs=None, noise_floor: float = 1e-13) -> float:
    """Least-squares slope of log|Psi - expansion_K| against log z.

    By default z runs over [0.1, 0.49] * min(|x|, |y|). Errors below
    ``noise_floor`` are rounding noise and are left out of the fit.
    """
    if zs is None:
        m = min(abs(x), abs(y))
        zs = np.geomspace(0.1 * m, 0.49 * m, 10)
    zs = np.asarray(zs, dtype=float)
    exact = psibig_point(np.stack([np.full_like(zs, x), np.full_like(zs, y), zs], axis=1), order=0).value
    err = np.abs(exact - seam_expansion_eval(np.full_like(zs, x), np.full_like(zs, y), zs, K=K))
    ok = err > noise_floor
    if np.count_nonzero(ok) < 3:
        raise DomainError("truncation error is below the noise floor; widen the z range")
    slope, _ = np.polyfit(np.log(zs[ok]), np.log(err[ok]), 1)
    return float(slope)


@dataclass
class AxisReport:
    axis: str
    chart_origin_hessian: list
    chart_origin_eigenvalues: list
    origin_error: float
    min_eigenvalue: float
    max_eigenvalue: float
    radii: list
    lipschitz_estimates: list
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def axis_neighborhood_check(axis: str = "x", radius: float = 0.3, grid: int = 61,
                            radii=(0.1, 0.05, 0.025, 0.0125, 0.00625), tol: float = 1e-8) -> AxisReport:
    """Psi restricted to the chart {x = 1} (or {y = 1}) near the axis point of the seam circle.

    The chart Hessian at the origin should be diag(2, 3); it must stay positive
    definite on the disc of the given radius, and its variation divided by the
    distance should stay bounded (C^{2,1}).
    """
    if axis not in ("x", "y"):
        raise DomainError("axis must be 'x' or 'y'")
    fixed, free = (0, [1, 2]) if axis == "x" else (1, [0, 2])

    def chart_hessians(uv: np.ndarray) -> np.ndarray:
        w = np.zeros((len(uv), 3))
        w[:, fixed] = 1.0
        w[:, free] = uv
        H = psibig_point(w).hessian
        return H[:, free][:, :, free]

    H0 = chart_hessians(np.zeros((1, 2)))[0]
    s = np.linspace(-radius, radius, grid)
    U, V = np.meshgrid(s, s, indexing="ij")
    uv = np.stack([U.ravel(), V.ravel()], axis=1)
    uv = uv[np.hypot(uv[:, 0], uv[:, 1]) <= radius]
    lam = np.linalg.eigvalsh(chart_hessians(uv))
    angles = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    circle = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    lips = [float(np.abs(chart_hessians(r * circle) - H0).max() / r) for r in radii]
    err = float(np.abs(H0 - np.diag([2.0, 3.0])).max())
    passed = err <= tol and lam.min() > 0
    return AxisReport(axis, H0.tolist(), np.linalg.eigvalsh(H0).tolist(), err, float(lam.min()),
                      float(lam.max()), list(radii), lips, bool(passed))
