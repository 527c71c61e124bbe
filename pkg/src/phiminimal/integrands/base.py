from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..calculus import DEFAULT_SCHEME, DifferentiationScheme, as_points, numeric_gradient, numeric_hessian_masked
from ..errors import DomainError


@dataclass(frozen=True)
class Evaluation:
    """Value and derivatives of a scalar function at one point or a batch.

    ``seam`` marks points evaluated with a one-sided (limit) branch; for a single
    point it is a plain bool.
    """

    value: np.ndarray | float
    gradient: Optional[np.ndarray] = None
    hessian: Optional[np.ndarray] = None
    seam: np.ndarray | bool = False

    def __iter__(self):
        # allows ``value, grad, hess = psi_eval(x, y)``
        return iter((self.value, self.gradient, self.hessian))

    def squeeze(self) -> "Evaluation":
        return Evaluation(
            value=float(self.value[0]),
            gradient=None if self.gradient is None else self.gradient[0],
            hessian=None if self.hessian is None else self.hessian[0],
            seam=bool(np.asarray(self.seam)[0]),
        )


def check_batch(w, dim: int) -> tuple[np.ndarray, bool]:
    w = as_points(w, "w")
    single = w.ndim == 1
    wb = w[None, :] if single else w
    if wb.shape[-1] != dim:
        raise DomainError(f"expected points of dimension {dim}, got {wb.shape[-1]}")
    if np.any(np.all(wb == 0.0, axis=1)):
        raise DomainError("integrand is not differentiable at the origin")
    return wb, single


class HomogeneousIntegrand:
    """Positive, even, one-homogeneous function on R^dim.

    Subclasses implement :meth:`_evaluate` on ``(N, dim)`` batches.
    """

    dim: int
    name: str = "integrand"

    def _evaluate(self, w: np.ndarray, order: int) -> Evaluation:
        raise NotImplementedError

    def evaluate(self, w, order: int = 2) -> Evaluation:
        wb, single = check_batch(w, self.dim)
        ev = self._evaluate(wb, order)
        return ev.squeeze() if single else ev

    def value(self, w):
        return self.evaluate(w, order=0).value

    def gradient(self, w):
        return self.evaluate(w, order=1).gradient

    def hessian(self, w):
        return self.evaluate(w, order=2).hessian

    def __call__(self, w):
        return self.value(w)


class RoundIntegrand(HomogeneousIntegrand):
    """The Euclidean norm (area integrand)."""

    def __init__(self, dim: int):
        self.dim = dim
        self.name = f"round{dim}"

    def _evaluate(self, w, order):
        r = np.linalg.norm(w, axis=1)
        n = w / r[:, None]
        grad = n if order >= 1 else None
        hess = None
        if order >= 2:
            hess = (np.eye(self.dim)[None] - n[:, :, None] * n[:, None, :]) / r[:, None, None]
        return Evaluation(r, grad, hess, np.zeros(len(w), dtype=bool))


class NumericIntegrand(HomogeneousIntegrand):
    """Integrand known only through its values; derivatives come from finite differences.

    Points whose stencil produces non-finite values get NaN derivatives rather
    than raising, so batch certifiers can count and skip them.
    """

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], dim: int, name: str = "numeric",
                 scheme: DifferentiationScheme = DEFAULT_SCHEME):
        self.func = func
        self.dim = dim
        self.name = name
        self.scheme = scheme

    def _evaluate(self, w, order):
        with np.errstate(all="ignore"):
            val = np.asarray(self.func(w), dtype=float)
        grad = hess = None
        if order >= 1:
            grad = np.full(w.shape, np.nan)
            ok = np.isfinite(val)
            if np.any(ok):
                try:
                    grad[ok] = numeric_gradient(self.func, w[ok], self.scheme)
                except ArithmeticError:
                    pass
        if order >= 2:
            hess = numeric_hessian_masked(self.func, w, self.scheme)
        return Evaluation(val, grad, hess, np.zeros(len(w), dtype=bool))


def radial_lift(value, grad, hess, vectors: list[np.ndarray], tail: int) -> Evaluation:
    """Lift ``F(|v_1|, ..., |v_r|, t)`` from its reduced derivatives to the full space.

    ``grad``/``hess`` are derivatives of the reduced function with respect to
    ``(|v_1|, ..., |v_r|, t_1..t_tail)``. The reduced function must be even in each
    radial slot so that ``F_r / r`` has the limit ``F_rr`` at ``r = 0``.
    """
    N = len(value)
    r_count = len(vectors)
    dims = [v.shape[1] for v in vectors]
    total = sum(dims) + tail
    offs = np.concatenate([[0], np.cumsum(dims)])
    units = []
    ratios = []
    for k, v in enumerate(vectors):
        rad = np.linalg.norm(v, axis=1)
        scale = np.maximum(1.0, np.abs(value))
        tiny = rad <= 1e-7 * scale
        u = np.zeros_like(v)
        u[:, 0] = 1.0
        pos = rad > 0
        u[pos] = v[pos] / rad[pos, None]
        units.append(u)
        # F_r / r loses digits to cancellation as r -> 0; its limit is F_rr
        ratio = hess[:, k, k].copy()
        ok = ~tiny
        ratio[ok] = grad[ok, k] / rad[ok]
        ratios.append(ratio)

    G = np.zeros((N, total))
    for k in range(r_count):
        G[:, offs[k]:offs[k + 1]] = grad[:, k, None] * units[k]
    if tail:
        G[:, sum(dims):] = grad[:, r_count:]

    H = np.zeros((N, total, total))
    for k in range(r_count):
        sl = slice(offs[k], offs[k + 1])
        uu = units[k][:, :, None] * units[k][:, None, :]
        H[:, sl, sl] = hess[:, k, k, None, None] * uu + ratios[k][:, None, None] * (np.eye(dims[k])[None] - uu)
        for j in range(k + 1, r_count):
            sj = slice(offs[j], offs[j + 1])
            block = hess[:, k, j, None, None] * units[k][:, :, None] * units[j][:, None, :]
            H[:, sl, sj] = block
            H[:, sj, sl] = np.swapaxes(block, 1, 2)
        if tail:
            st = slice(sum(dims), total)
            block = units[k][:, :, None] * hess[:, k, None, r_count:]
            H[:, sl, st] = block
            H[:, st, sl] = np.swapaxes(block, 1, 2)
    if tail:
        st = slice(sum(dims), total)
        H[:, st, st] = hess[:, r_count:, r_count:]
    return Evaluation(value, G, H)
