"""Verification suites run by the command-line harness.

Every suite takes a :class:`RunConfig` and returns a :class:`SuiteResult`. All
thresholds come from the config, so the report echo lists every number that
entered a verdict.
"""
from __future__ import annotations

import math
import time
import zlib
from typing import Callable

import numpy as np

from .calculus import restricted_hessian, tangent_frame, numeric_gradient, numeric_hessian, DifferentiationScheme
from .calibration import (KmExperimentConfig, OdeExperimentConfig, calibration_sweep, cone_foliation_check,
                          divergence_free_check, km_ellipticity_failure, level_set_critical_check, level_set_point,
                          no4d_ode_experiment, rescaled_graph_residuals)
from .config import RunConfig
from .ellipticity import (SphereSample, axis_neighborhood_check, certify_uniform_ellipticity, sample_sphere,
                          seam_circle_points, seam_expansion_order, seam_regularity_check, seam_ring_sample)
from .integrands import (MAIN_PROFILE, PHI0, PHI7, PSIBIG, GraphSlice, ProfileField, RoundIntegrand,
                         km14_candidate_integrand, psi_eval, psi_from_profile, psi_from_profile_eval,
                         psi_hess_det, psi_original_eval, psibig_eval)
from .report import CertificationReport, SuiteResult
from .variational import (GraphFunction, box_numeric, el_graph_residual, el_parametric_residual, graph_patch,
                          legendre_pair, legendre_transform, main_u, wave_residual_2d)


def suite_rng(cfg: RunConfig, name: str) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, zlib.crc32(name.encode())])


def block_points(rng: np.random.Generator, N: int, lo: float, hi: float, block: int = 3) -> np.ndarray:
    """Points (p, q) with |p|, |q| log-uniform in [lo, hi] and uniform directions."""
    out = []
    for _ in range(2):
        d = rng.standard_normal((N, block))
        d /= np.linalg.norm(d, axis=1)[:, None]
        r = np.exp(rng.uniform(math.log(lo), math.log(hi), N))
        out.append(r[:, None] * d)
    return np.concatenate(out, axis=1)


def _argmax_point(values: np.ndarray, points: np.ndarray) -> list:
    return points[int(np.argmax(np.abs(values)))].tolist()


# ---------------------------------------------------------------- verify


def suite_main_residual(cfg: RunConfig) -> SuiteResult:
    rng = suite_rng(cfg, "main_residual")
    u = main_u()
    x = block_points(rng, cfg.samples["main_residual"], 1e-2, 1e2)
    graph = el_graph_residual(ProfileField(), u, x)
    # u* = u, so (w*)^{ij} = diag(I, -I) and the Legendre form is Delta_p phi - Delta_q phi at grad u(x)
    H = ProfileField().hessian(u.gradient(x))
    laplace = np.trace(H[:, :3, :3], axis1=1, axis2=2) - np.trace(H[:, 3:, 3:], axis1=1, axis2=2)
    integrand = el_graph_residual(GraphSlice(PHI7), u, x)
    xp = x[: cfg.samples["parametric_residual"]]
    parametric = el_parametric_residual(PHI7, graph_patch(u), xp)
    tol = cfg.tol("main_residual")
    m = {
        "graph_form_max": float(np.abs(graph).max()), "graph_form_argmax": _argmax_point(graph, x),
        "laplacian_form_max": float(np.abs(laplace).max()),
        "integrand_form_max": float(np.abs(integrand).max()),
        "parametric_form_max": float(np.abs(parametric).max()), "parametric_points": len(xp),
        "points": len(x), "norm_range": [1e-2, 1e2], "tolerance": tol,
    }
    passed = max(m["graph_form_max"], m["laplacian_form_max"], m["integrand_form_max"],
                 m["parametric_form_max"]) <= tol
    return SuiteResult("main_residual", passed, m, notes=["analytic derivatives throughout"])


def suite_fixed_points(cfg: RunConfig) -> SuiteResult:
    tol, tol_val, tol_h = cfg.tol("fixed_point"), cfg.tol("fixed_point_value"), cfg.tol("restricted_hessian")
    origin_err = float(np.abs(psi_eval(0.0, 0.0).hessian - 0.75 * np.eye(2)).max())
    n = max(2, int(round(math.sqrt(cfg.samples["fixed_point_grid"]))))
    s = np.linspace(-3.0, 3.0, n)
    X, Y = np.meshgrid(s, s, indexing="ij")
    X, Y = X.ravel(), Y.ravel()
    det = np.linalg.det(psi_eval(X, Y).hessian)
    det_rel = float(np.abs(det / psi_hess_det(X, Y) - 1.0).max())
    axis_h = restricted_hessian(PSIBIG, tangent_frame(np.array([1.0, 0.0, 0.0])))
    axis_err = float(np.abs(axis_h - np.diag([2.0, 3.0])).max())
    xy = seam_circle_points(0.05, 400)
    zz = PSIBIG.hessian(np.concatenate([xy, np.zeros((len(xy), 1))], axis=1))[:, 2, 2]
    zz_err = float(np.abs(zz - 3.0 / (np.abs(xy[:, 0]) + np.abs(xy[:, 1]))).max())
    ys = np.linspace(-5.0, 5.0, 1001)
    vals = psibig_eval(np.ones_like(ys), ys, np.zeros_like(ys), order=0).value
    val_err = float(np.abs(vals - (np.abs(ys) + 1.0 / (1.0 + np.abs(ys)))).max())
    m = {
        "origin_hessian_error": origin_err, "hessian_det_max_relative_error": det_rel, "det_grid_points": len(X),
        "axis_restricted_hessian": axis_h.tolist(), "axis_restricted_hessian_error": axis_err,
        "seam_zz_error": zz_err, "axis_slice_value_error": val_err,
        "tolerances": {"fixed_point": tol, "restricted_hessian": tol_h, "fixed_point_value": tol_val},
    }
    passed = origin_err <= tol and det_rel <= tol and axis_err <= tol_h and zz_err <= tol_h and val_err <= tol_val
    return SuiteResult("fixed_points", passed, m)


def suite_wave_identity(cfg: RunConfig) -> SuiteResult:
    rng = suite_rng(cfg, "wave_identity")
    N = cfg.samples["wave"]
    x = np.exp(rng.uniform(math.log(0.1), math.log(10.0), N))
    y = np.exp(rng.uniform(math.log(0.1), math.log(10.0), N))
    r2_closed, box_closed = wave_residual_2d(psi_original_eval, x, y)
    r2_prof, box_prof = wave_residual_2d(lambda a, b: psi_from_profile_eval(MAIN_PROFILE, a, b), x, y)
    box_num = box_numeric(lambda a, b: a * b * psi_from_profile(MAIN_PROFILE, a, b), x, y,
                          step=cfg.guard["wave_step"])
    identity_gap = float(np.abs(box_closed - x * y * r2_closed).max())
    ref = psi_original_eval(x, y, order=0).value
    rot_err = float(np.abs(psi_from_profile(MAIN_PROFILE, x, y) / ref - 1.0).max())
    ta, tn, tr = cfg.tol("wave_analytic"), cfg.tol("wave_numeric"), cfg.tol("rotation_identity")
    m = {
        "box_analytic_closed_form_max": float(np.abs(box_closed).max()),
        "box_analytic_profile_max": float(np.abs(box_prof).max()),
        "reduced_equation_max": float(max(np.abs(r2_closed).max(), np.abs(r2_prof).max())),
        "box_numeric_max": float(np.abs(box_num).max()), "box_numeric_argmax": _argmax_point(box_num, np.c_[x, y]),
        "product_rule_gap": identity_gap, "rotation_identity_max_relative": rot_err,
        "points": N, "quadrant_range": [0.1, 10.0],
        "tolerances": {"analytic": ta, "numeric": tn, "rotation_identity": tr},
    }
    passed = (m["box_analytic_closed_form_max"] <= ta and m["box_analytic_profile_max"] <= ta
              and m["box_numeric_max"] <= tn and rot_err <= tr)
    return SuiteResult("wave_identity", passed, m,
                       notes=["numeric box uses central differences with one Richardson level"])


def quartic_function(dim: int = 3) -> GraphFunction:
    """sum x_i^4 / 4 + |x|^2 / 2, uniformly convex."""
    return GraphFunction(
        value=lambda x: np.sum(x**4 / 4 + x**2 / 2, axis=1),
        gradient=lambda x: x**3 + x,
        hessian=lambda x: np.stack([np.diag(r) for r in 3 * x**2 + 1]),
        dim=dim, name="quartic",
    )


def suite_legendre(cfg: RunConfig) -> SuiteResult:
    rng = suite_rng(cfg, "legendre")
    N = cfg.samples["legendre"]
    u = main_u()
    ys = rng.standard_normal((N, 6)) * 3
    exact_err = iters = 0.0
    mirror_err = 0.0
    for y in ys:
        r = legendre_transform(u, y)
        iters = max(iters, r.iterations)
        exact_err = max(exact_err, abs(r.value - float(u(y))) / max(1.0, float(y @ y)))
        mirror_err = max(mirror_err, float(np.abs(r.X - y * np.r_[np.ones(3), -np.ones(3)]).max()))
    w = quartic_function(3)
    pair = legendre_pair(w)
    xs = rng.uniform(-2, 2, (min(N, 50), 3))
    grads = w.gradient(xs)
    scheme = DifferentiationScheme(step=1e-3, richardson_levels=2)
    id_value = id_grad = id_hess = invol = 0.0
    for x, g in zip(xs, grads):
        ws = float(pair.w_star(g))
        id_value = max(id_value, abs(ws - (x @ g - float(w(x)))))
        id_grad = max(id_grad, float(np.abs(numeric_gradient(pair.w_star.value, g, scheme) - x).max()))
        H = numeric_hessian(pair.w_star.value, g, scheme)
        id_hess = max(id_hess, float(np.abs(H - np.linalg.inv(w.hess(x))).max()))
        invol = max(invol, abs(legendre_transform(pair.w_star, x).value - float(w(x))))
    one_d = GraphFunction(lambda x: x[:, 0] ** 4 / 4, lambda x: x**3, lambda x: 3 * x[:, :, None] ** 2, dim=1)
    closed = max(abs(legendre_transform(one_d, [y]).value - 0.75 * y ** (4 / 3)) for y in (0.5, 1.0, 8.0, 27.0))
    te, tq, ti = cfg.tol("legendre_exact"), cfg.tol("legendre_quartic"), cfg.tol("legendre_involution")
    m = {
        "quadratic_max_newton_steps": int(iters), "quadratic_value_relative_error": exact_err,
        "quadratic_inverse_map_error": mirror_err,
        "quartic_value_identity": id_value, "quartic_gradient_identity": id_grad,
        "quartic_hessian_identity": id_hess, "involution_error": invol, "one_d_closed_form_error": closed,
        "points": N, "tolerances": {"exact": te, "quartic": tq, "involution": ti},
    }
    passed = (iters <= 1 and exact_err <= te and mirror_err <= te and max(id_value, id_grad, id_hess) <= tq
              and invol <= ti and closed <= tq)
    return SuiteResult("legendre", passed, m, notes=["quartic identities use finite differences of w*"])


# ---------------------------------------------------------------- certify


def _phi7_sample(cfg: RunConfig) -> SphereSample:
    return sample_sphere(6, cfg.samples["ellipticity"], seed=cfg.seed).concat(
        seam_ring_sample(cfg.samples["seam_ring"], seed=cfg.seed, width=cfg.guard["seam_ring_width"]))


def _phi0_sample(cfg: RunConfig) -> SphereSample:
    ring = seam_ring_sample(cfg.samples["seam_ring"], seed=cfg.seed, width=cfg.guard["seam_ring_width"]).points[:, :6]
    ring = ring / np.linalg.norm(ring, axis=1)[:, None]
    return sample_sphere(5, cfg.samples["ellipticity"], seed=cfg.seed).concat(SphereSample(5, ring, "seam-ring", cfg.seed))


def _ellipticity_suite(name: str, F, sample: SphereSample, cfg: RunConfig, notes=()) -> SuiteResult:
    rep = certify_uniform_ellipticity(F, sample, evenness_tolerance=cfg.tol("evenness"),
                                      eigenvalue_floor=cfg.bounds["eigenvalue_floor"])
    m = rep.to_dict()
    m["radial_kernel_tolerance"] = cfg.tol("radial_kernel")
    passed = rep.passed and rep.radial_kernel_max <= cfg.tol("radial_kernel")
    return SuiteResult(name, passed, m, samples_skipped=rep.skipped_count, notes=list(notes) + rep.notes)


def suite_ellipticity_phi7(cfg: RunConfig) -> SuiteResult:
    return _ellipticity_suite("ellipticity_phi7", PHI7, _phi7_sample(cfg), cfg)


def suite_ellipticity_phi0(cfg: RunConfig) -> SuiteResult:
    return _ellipticity_suite("ellipticity_phi0", PHI0, _phi0_sample(cfg), cfg)


def suite_ellipticity_round(cfg: RunConfig) -> SuiteResult:
    n = cfg.round_dim
    F = RoundIntegrand(n)
    res = _ellipticity_suite("ellipticity_round", F, sample_sphere(n - 1, cfg.samples["ellipticity"], seed=cfg.seed), cfg)
    dev = max(abs(res.metrics["min_tangential_eigenvalue"] - 1), abs(res.metrics["max_tangential_eigenvalue"] - 1))
    res.metrics["unit_eigenvalue_deviation"] = dev
    res.metrics["round_eigenvalue_tolerance"] = cfg.tol("round_eigenvalue")
    res.passed = res.passed and dev <= cfg.tol("round_eigenvalue")
    return res


def suite_ellipticity_km14(cfg: RunConfig) -> SuiteResult:
    return _ellipticity_suite("ellipticity_km14_candidate", km14_candidate_integrand(),
                              sample_sphere(4, cfg.samples["km_certifier"], seed=cfg.seed), cfg,
                              notes=["candidate integrand from the cubic profile; expected to fail"])


def suite_seam_regularity(cfg: RunConfig) -> SuiteResult:
    g = cfg.guard
    lo, hi = cfg.bounds["seam_ratio_band"]
    rep = seam_regularity_check(delta=g["seam_delta"], h_list=g["seam_steps"], K=g["expansion_terms"],
                                ratio_band=(lo, hi), tol_mixed=cfg.tol("seam_mixed"), tol_zz=cfg.tol("seam_zz"),
                                tol_sides=cfg.tol("seam_sides"))
    angles = np.linspace(0.3, 1.2, 7)
    orders = [seam_expansion_order(math.cos(a), math.sin(a), g["expansion_terms"]) for a in angles]
    m = rep.to_dict()
    m["expansion_orders"] = orders
    m["expansion_order_min"] = cfg.bounds["expansion_order_min"]
    passed = rep.passed and min(orders) >= cfg.bounds["expansion_order_min"]
    return SuiteResult("seam_regularity", passed, m,
                       notes=["Lipschitz estimates are difference quotients of the analytic Hessian"])


def suite_axis_neighborhood(cfg: RunConfig) -> SuiteResult:
    reps = [axis_neighborhood_check(a, radius=cfg.guard["axis_radius"], tol=cfg.tol("axis_origin")) for a in ("x", "y")]
    m = {r.axis: r.to_dict() for r in reps}
    return SuiteResult("axis_neighborhood", all(r.passed for r in reps), m)


# ---------------------------------------------------------------- cones


def suite_calibration(cfg: RunConfig) -> SuiteResult:
    rep = calibration_sweep(PHI7, pairs=cfg.samples["calibration_pairs"], seed=cfg.seed,
                            floor=cfg.bounds["calibration_floor"], equality_tolerance=cfg.tol("calibration_equality"),
                            separation=cfg.guard["calibration_separation"])
    rng = suite_rng(cfg, "calibration")
    x = rng.standard_normal((cfg.samples["divergence"], 6)) * 2
    div = divergence_free_check(PHI7, main_u(), x)
    m = rep.to_dict()
    m.update({"divergence_max": float(np.abs(div).max()), "divergence_argmax": _argmax_point(div, x),
              "divergence_points": len(x), "divergence_tolerance": cfg.tol("divergence")})
    passed = rep.passed and m["divergence_max"] <= cfg.tol("divergence")
    return SuiteResult("calibration", passed, m)


def suite_level_sets(cfg: RunConfig) -> SuiteResult:
    rng = suite_rng(cfg, "level_sets")
    u = main_u()
    half = max(1, cfg.samples["level_set"] // 2)
    t = np.concatenate([[0.0], rng.uniform(0, 10, half - 1)])
    plus = level_set_point(t, 1.0, rng)
    minus = level_set_point(t, -1.0, rng)
    rp = level_set_critical_check(PHI0, u, 1.0, plus)
    rm = level_set_critical_check(PHI0, u, -1.0, minus)
    mirror = np.concatenate([plus[:, 3:], plus[:, :3]], axis=1)
    sym = float(np.abs(level_set_critical_check(PHI0, u, -1.0, mirror) - rp).max())
    lam = 3.0
    dil = float(np.abs(lam * level_set_critical_check(PHI0, u, lam**2, lam * plus[:1000]) - rp[:1000]).max())
    tol = cfg.tol("level_set")
    m = {"plus_max": float(np.abs(rp).max()), "minus_max": float(np.abs(rm).max()),
         "mirror_symmetry_gap": sym, "dilation_gap": dil, "points": 2 * half, "tolerance": tol}
    passed = max(m["plus_max"], m["minus_max"]) <= tol and sym <= tol and dil <= tol
    return SuiteResult("level_sets", passed, m,
                       notes=["dilation gap compares lam * residual(lam x) with residual(x)"])


def suite_foliation(cfg: RunConfig) -> SuiteResult:
    rng = suite_rng(cfg, "foliation")
    rep = cone_foliation_check(main_u(), rng.standard_normal((cfg.samples["foliation"], 6)), tol=cfg.tol("foliation"))
    return SuiteResult("foliation", rep.passed, rep.to_dict(), samples_skipped=rep.on_cone)


def suite_r_sweep(cfg: RunConfig) -> SuiteResult:
    rng = suite_rng(cfg, "r_sweep")
    x = level_set_point(rng.uniform(0, 10, cfg.samples["r_sweep"]), 1.0, rng)
    res = rescaled_graph_residuals(PHI7, main_u(), x, cfg.exploratory["r_sweep_values"])
    level = level_set_critical_check(PHI0, main_u(), 1.0, x)
    tol = cfg.tol("r_sweep")
    m = {"residual_max_by_R": {f"{R:g}": float(np.abs(v).max()) for R, v in res.items()},
         "level_set_limit_max": float(np.abs(level).max()), "points": len(x), "tolerance": tol}
    passed = all(v <= tol for v in m["residual_max_by_R"].values())
    return SuiteResult("r_sweep", passed, m)


# ---------------------------------------------------------------- exploratory


def suite_no4d(cfg: RunConfig) -> SuiteResult:
    e = cfg.exploratory
    oc = OdeExperimentConfig(t_range=tuple(e["no4d_t_range"]), samples=e["no4d_samples"],
                             diagonal_margins=tuple(e["no4d_diagonal_margins"]), threshold=e["no4d_threshold"])
    rep = no4d_ode_experiment(oc)
    ctl = rep.control
    m = {k: v for k, v in rep.to_dict().items() if k not in ("table",)}
    header = ["t", "theta", "g", "dg", "lambda_p", "lambda_q", "lambda_meridian"]
    sidecars = {"no4d_trajectory.csv": (header, rep.table), "no4d_tail.csv": (["eps", "lambda_meridian"], rep.tail)}
    passed = rep.threshold_exceeded and ctl["bounded"]
    notes = [
        "exploratory: never affects the overall verdict",
        f"meridian eigenvalue grows like {rep.log_slope:.4f} * log(1/eps) toward the diagonal",
    ]
    if rep.status != "completed":
        notes.append(f"integration stopped early: {rep.message}")
    return SuiteResult("no4d", passed, m, notes=notes, exploratory=True, sidecars=sidecars)


def suite_km(cfg: RunConfig) -> SuiteResult:
    e = cfg.exploratory
    kc = KmExperimentConfig(ray_p=tuple(e["km_ray_p"]), q_stop=e["km_q_stop"], samples=e["km_samples"],
                            threshold=e["km_threshold"], certifier_samples=cfg.samples["km_certifier"], seed=cfg.seed)
    rep = km_ellipticity_failure(kc)
    rows = [[r["p"], q, ratio] for r in rep.rays for q, ratio in r["table"]]
    m = rep.to_dict()
    for r in m["rays"]:
        r.pop("table")
    passed = rep.threshold_exceeded and not rep.candidate_certificate["passed"]
    return SuiteResult("km", passed, m, notes=["exploratory: never affects the overall verdict"], exploratory=True,
                       sidecars={"km_curvature_ratio.csv": (["p", "q", "curvature_ratio"], rows)})


def _certify_suites(cfg: RunConfig) -> list[Callable]:
    if cfg.integrand == "round":
        return [suite_ellipticity_round]
    if cfg.integrand == "km14_candidate":
        return [suite_ellipticity_km14]
    return [suite_ellipticity_phi7, suite_ellipticity_phi0, suite_seam_regularity, suite_axis_neighborhood]


def command_suites(cfg: RunConfig) -> list[Callable]:
    verify = [suite_main_residual, suite_fixed_points, suite_wave_identity, suite_legendre]
    cones = [suite_calibration, suite_level_sets, suite_foliation, suite_r_sweep]
    table = {
        "verify": verify, "certify": _certify_suites(cfg), "cones": cones,
        "no4d": [suite_no4d], "km": [suite_km],
    }
    table["all"] = verify + table["certify"] + cones + [suite_no4d, suite_km]
    return table[cfg.command]


def run_command(cfg: RunConfig, progress: Callable[[str], None] | None = None) -> CertificationReport:
    results = []
    for suite in command_suites(cfg):
        start = time.perf_counter()
        try:
            res = suite(cfg)
        except (ArithmeticError, ValueError) as exc:
            name = suite.__name__.removeprefix("suite_")
            res = SuiteResult(name, False, {}, notes=[f"internal error: {type(exc).__name__}: {exc}"],
                              exploratory=name in ("no4d", "km"))
        res.wall_clock_s = round(time.perf_counter() - start, 3)
        if progress:
            progress(f"{res.name}: {'pass' if res.passed else 'FAIL'}{' (exploratory)' if res.exploratory else ''}"
                     f" [{res.wall_clock_s:.1f}s]")
        results.append(res)
    return CertificationReport(cfg.command, cfg.to_dict(), results)
