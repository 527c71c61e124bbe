"""Shared numerical calculus: frames, finite differences, homogeneous extension.

Every routine accepts either a single point of shape ``(d,)`` or a batch of
shape ``(N, d)`` and returns results with the matching leading shape.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, EvaluationError

UNIT_TOL = 1e-12


def as_points(x, name: str = "point") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    return arr


def _batched(x: np.ndarray) -> tuple[np.ndarray, bool]:
    if x.ndim == 1:
        return x[None, :], True
    return x, False


@dataclass(frozen=True)
class TangentFrame:
    base_direction: np.ndarray
    basis: np.ndarray  # (n, n+1), rows orthonormal and orthogonal to base_direction

    @property
    def dimension(self) -> int:
        return self.basis.shape[0]

    def project(self, matrix: np.ndarray) -> np.ndarray:
        """Express an ambient symmetric matrix in this frame."""
        return self.basis @ matrix @ self.basis.T


@dataclass(frozen=True)
class DifferentiationScheme:
    step: float = 1e-3
    richardson_levels: int = 2

    def __post_init__(self):
        if not self.step > 0:
            raise DomainError("step must be positive")
        if not 0 <= self.richardson_levels <= 4:
            raise DomainError("richardson_levels must lie in 0..4")


DEFAULT_SCHEME = DifferentiationScheme()


def homogeneous_extend(F_sphere: Callable, w, allow_zero: bool = False):
    """One-homogeneous extension ``|w| F(w/|w|)`` of a function on the unit sphere."""
    w = as_points(w, "w")
    wb, single = _batched(w)
    r = np.linalg.norm(wb, axis=1)
    zero = r == 0.0
    if np.any(zero) and not allow_zero:
        raise DomainError("homogeneous extension is undefined at the origin")
    out = np.zeros(len(wb))
    nz = ~zero
    if np.any(nz):
        out[nz] = r[nz] * np.asarray(F_sphere(wb[nz] / r[nz, None]), dtype=float)
    return out[0] if single else out


def tangent_frames(nu) -> np.ndarray:
    """Batched deterministic frames: returns ``(N, n, n+1)`` orthonormal bases of nu-perp.

    Gram-Schmidt runs over the standard basis in ascending index order, skipping
    the axis most parallel to nu (lowest index on ties).
    """
    nu = as_points(nu, "nu")
    nub, single = _batched(nu)
    norms = np.linalg.norm(nub, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise DomainError("tangent_frame requires unit vectors")
    N, d = nub.shape
    skip = np.argmax(np.abs(nub), axis=1)
    axes = np.broadcast_to(np.arange(d), (N, d))
    order = np.argsort(axes == skip[:, None], axis=1, kind="stable")[:, : d - 1]
    vecs = np.eye(d)[order]  # (N, d-1, d)
    out = np.empty_like(vecs)
    for a in range(d - 1):
        v = vecs[:, a, :].copy()
        # two passes of modified Gram-Schmidt keep orthogonality at 1e-16 level
        for _ in range(2):
            v -= np.sum(v * nub, axis=1)[:, None] * nub
            for b in range(a):
                v -= np.sum(v * out[:, b, :], axis=1)[:, None] * out[:, b, :]
        out[:, a, :] = v / np.linalg.norm(v, axis=1)[:, None]
    return out[0] if single else out


def tangent_frame(nu) -> TangentFrame:
    nu = as_points(nu, "nu")
    if nu.ndim != 1:
        raise DomainError("tangent_frame takes a single vector; use tangent_frames for batches")
    return TangentFrame(base_direction=nu.copy(), basis=tangent_frames(nu))


def _eval_stencil(F: Callable, pts: np.ndarray, strict: bool = True) -> np.ndarray:
    N, M, d = pts.shape
    with np.errstate(all="ignore"):
        vals = np.asarray(F(pts.reshape(N * M, d)), dtype=float).reshape(N, M)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        if strict:
            i, j = np.argwhere(bad)[0]
            raise EvaluationError("non-finite value on differentiation stencil", point=pts[i, j].copy())
        vals[np.any(bad, axis=1)] = np.nan
    return vals


def _hessian_fixed_step(F: Callable, x: np.ndarray, h: np.ndarray, strict: bool) -> np.ndarray:
    N, d = x.shape
    eye = np.eye(d)
    offsets = [np.zeros(d)]
    for i in range(d):
        offsets += [eye[i], -eye[i]]
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    for i, j in pairs:
        offsets += [eye[i] + eye[j], eye[i] - eye[j], -eye[i] + eye[j], -eye[i] - eye[j]]
    offsets = np.array(offsets)
    pts = x[:, None, :] + h[:, None, None] * offsets[None, :, :]
    v = _eval_stencil(F, pts, strict)
    H = np.empty((N, d, d))
    h2 = h * h
    f0 = v[:, 0]
    for i in range(d):
        H[:, i, i] = (v[:, 1 + 2 * i] - 2.0 * f0 + v[:, 2 + 2 * i]) / h2
    base = 1 + 2 * d
    for k, (i, j) in enumerate(pairs):
        pp, pm, mp, mm = (v[:, base + 4 * k + s] for s in range(4))
        H[:, i, j] = H[:, j, i] = ((pp - pm) - (mp - mm)) / (4.0 * h2)
    return H


def _gradient_fixed_step(F: Callable, x: np.ndarray, h: np.ndarray, strict: bool) -> np.ndarray:
    N, d = x.shape
    eye = np.eye(d)
    offsets = np.concatenate([eye, -eye])
    pts = x[:, None, :] + h[:, None, None] * offsets[None, :, :]
    v = _eval_stencil(F, pts, strict)
    return (v[:, :d] - v[:, d:]) / (2.0 * h[:, None])


def _richardson(estimator, F, x, scheme: DifferentiationScheme, strict: bool = True):
    h = scheme.step * np.maximum(1.0, np.linalg.norm(x, axis=1))
    table = [estimator(F, x, h, strict)]
    for level in range(1, scheme.richardson_levels + 1):
        row = [estimator(F, x, h / 2**level, strict)]
        for k in range(1, level + 1):
            row.append(row[k - 1] + (row[k - 1] - table[k - 1]) / (4**k - 1))
        table = row
    return table[-1]


def numeric_hessian(F: Callable, x, scheme: DifferentiationScheme = DEFAULT_SCHEME) -> np.ndarray:
    """Central-difference Hessian with Richardson extrapolation.

    ``F`` must map an ``(M, d)`` array to ``(M,)`` values. The step is scaled by
    ``max(1, |x|)`` so homogeneous functions are differentiated at a consistent
    relative resolution.
    """
    x = as_points(x)
    xb, single = _batched(x)
    H = _richardson(_hessian_fixed_step, F, xb, scheme)
    return H[0] if single else H


def numeric_hessian_masked(F: Callable, x: np.ndarray, scheme: DifferentiationScheme = DEFAULT_SCHEME) -> np.ndarray:
    """Batch variant of :func:`numeric_hessian` that returns NaN rows instead of raising."""
    return _richardson(_hessian_fixed_step, F, np.atleast_2d(np.asarray(x, dtype=float)), scheme, strict=False)


def numeric_gradient(F: Callable, x, scheme: DifferentiationScheme = DEFAULT_SCHEME) -> np.ndarray:
    x = as_points(x)
    xb, single = _batched(x)
    g = _richardson(_gradient_fixed_step, F, xb, scheme)
    return g[0] if single else g


def restricted_hessian(F, frame: TangentFrame, derivative_source: str = "analytic",
                       scheme: DifferentiationScheme = DEFAULT_SCHEME) -> np.ndarray:
    """Hessian of ``F`` at ``frame.base_direction`` restricted to the frame's tangent plane.

    With ``derivative_source="analytic"`` the object must expose ``hessian(w)``;
    otherwise ``F`` (or ``F.value``) is differentiated numerically.
    """
    w = frame.base_direction
    if derivative_source == "analytic":
        H = np.asarray(F.hessian(w), dtype=float)
    elif derivative_source == "numeric":
        H = numeric_hessian(getattr(F, "value", F), w, scheme)
    else:
        raise DomainError(f"unknown derivative source {derivative_source!r}")
    M = frame.project(H)
    return 0.5 * (M + M.T)


def tangential_eigenvalues(hessians: np.ndarray, nus: np.ndarray) -> np.ndarray:
    """Eigenvalues of each Hessian restricted to nu-perp, ascending, shape ``(N, n)``."""
    frames = tangent_frames(nus)
    if frames.ndim == 2:
        frames = frames[None]
        hessians = hessians[None]
    M = np.einsum("nai,nij,nbj->nab", frames, hessians, frames)
    M = 0.5 * (M + np.swapaxes(M, 1, 2))
    return np.linalg.eigvalsh(M)
