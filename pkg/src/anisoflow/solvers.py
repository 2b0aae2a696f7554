"""Matrix-free conjugate gradients and a monotone accelerated gradient method."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "NonConvergence",
    "SolveInfo",
    "ConvexObjective",
    "cg_solve",
    "minimize_convex",
]

Inner = Callable[[np.ndarray, np.ndarray], float]


def _euclidean(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.vdot(a, b))


class NonConvergence(RuntimeError):
    """An iterative solver hit its iteration cap above tolerance."""

    def __init__(self, message: str, residual: float = math.nan, iterations: int = 0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.step: int | None = None


@dataclass
class SolveInfo:
    x: np.ndarray
    residual: float
    iterations: int
    history: list[float] = field(default_factory=list)


def cg_solve(
    apply: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    tol: float = 1e-10,
    maxit: int = 1000,
    x0: np.ndarray | None = None,
    inner: Inner = _euclidean,
) -> SolveInfo:
    """Solve ``A x = b`` for self-adjoint positive definite ``A``.

    Stops when the true residual satisfies ``|A x - b| <= tol |b|`` in the
    norm induced by ``inner``.  The recursive residual is re-verified on
    exit and CG is restarted from the current iterate if it drifted.

    Returns
    -------
    SolveInfo
        ``residual`` is the relative residual ``|A x - b| / |b|`` (0 if b = 0).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    bnorm = math.sqrt(inner(b, b))
    if bnorm == 0.0:
        return SolveInfo(np.zeros_like(b), 0.0, 0)
    target = tol * bnorm
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    history = []
    it = 0
    while True:
        r = b - apply(x)
        rr = inner(r, r)
        history.append(math.sqrt(rr) / bnorm)
        if math.sqrt(rr) <= target:
            return SolveInfo(x, history[-1], it, history)
        if it >= maxit:
            raise NonConvergence(
                f"CG stalled after {it} iterations, relative residual {history[-1]:.3e} > {tol:.1e}",
                history[-1],
                it,
            )
        d = r.copy()
        while it < maxit:
            Ad = apply(d)
            dAd = inner(d, Ad)
            if dAd <= 0:
                raise NonConvergence("operator is not positive definite", history[-1], it)
            step = rr / dAd
            x = x + step * d
            r = r - step * Ad
            rr_new = inner(r, r)
            it += 1
            if math.sqrt(rr_new) <= target:
                break
            d = r + (rr_new / rr) * d
            rr = rr_new


@dataclass
class ConvexObjective:
    """A smooth convex function with its gradient.

    ``gradient`` must return the Riesz representative with respect to the
    inner product passed to :func:`minimize_convex`.
    """

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    lower_bound: float = 0.0


def minimize_convex(
    obj: ConvexObjective,
    init: np.ndarray,
    tol: float = 1e-10,
    maxit: int = 5000,
    inner: Inner = _euclidean,
    lipschitz: float = 1.0,
) -> SolveInfo:
    """Monotone accelerated gradient descent with backtracking and restart.

    Iterates until ``|grad f(x)| <= tol * (1 + |grad f(init)|)``.  The
    accepted iterate never increases the objective beyond floating-point
    resolution; when the extrapolated step would increase it, momentum is
    reset.  ``history`` records the objective at each accepted iterate.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = np.array(init, dtype=float)
    fx = obj.value(x)
    gx = obj.gradient(x)
    gnorm = math.sqrt(inner(gx, gx))
    target = tol * (1.0 + gnorm)
    history = [fx]
    if gnorm <= target:
        return SolveInfo(x, gnorm / (1.0 + gnorm), 0, history)

    g0 = gnorm
    L = lipschitz
    y, fy, gy = x, fx, gx
    t = 1.0
    ulp = 8 * np.finfo(float).eps
    for it in range(1, maxit + 1):
        # Two sufficient tests for the descent bound at z.  The value test loses
        # accuracy to cancellation near the minimizer; the gradient test uses
        # convexity, f(z) <= f(y) + <grad f(z), z - y>, and does not.
        while True:
            z = y - gy / L
            fz = obj.value(z)
            gz = None
            d = z - y
            dd = inner(d, d)
            bound = fy + inner(gy, d) + 0.5 * L * dd
            if fz <= bound + ulp * (abs(fy) + abs(fz)):
                break
            gz = obj.gradient(z)
            if inner(gz - gy, d) <= 0.5 * L * dd:
                break
            L *= 2.0
        # accept only non-increasing steps, otherwise reset momentum.  A plain
        # gradient step from x has just passed the descent test; elsewhere
        # <grad f(z), z - x> <= 0 certifies f(z) <= f(x) by convexity.
        accepted = y is x or fz <= fx + ulp * (abs(fx) + abs(fz))
        if not accepted:
            gz = obj.gradient(z) if gz is None else gz
            accepted = inner(gz, z - x) <= 0
        if accepted:
            x_new, fx_new = z, fz
            gx = obj.gradient(z) if gz is None else gz
        else:
            x_new, fx_new = x, fx
        gnorm = math.sqrt(inner(gx, gx))
        if not accepted or inner(gy, x_new - x) > 0:
            t_new = 1.0
            y = x_new
        else:
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            y = x_new + (t / t_new) * (z - x_new) + ((t - 1.0) / t_new) * (x_new - x)
        x, fx, t = x_new, fx_new, t_new
        history.append(fx)
        if gnorm <= target:
            return SolveInfo(x, gnorm / (1.0 + g0), it, history)
        if y is x:
            fy, gy = fx, gx
        else:
            fy, gy = obj.value(y), obj.gradient(y)
    raise NonConvergence(
        f"accelerated gradient stalled after {maxit} iterations, |grad| {gnorm:.3e} > {target:.3e}",
        gnorm,
        maxit,
    )
