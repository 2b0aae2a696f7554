"""Implicit-explicit time stepping of the pseudo-parabolic gradient system.

Each step first updates the orientation with the coupling term frozen at the
previous level (a linear SPD solve), then updates the intensity by
minimizing a strictly convex objective that contains the new orientation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .anisotropy import Anisotropy
from .energy import (
    EnergyBreakdown,
    SchemeParams,
    aniso_flux,
    energy,
    p_flux,
)
from .grid import (
    Grid,
    divergence,
    extend,
    gradient,
    inner_l2,
    laplacian0,
    norm_l2,
    rotate_ext,
)
from .solvers import ConvexObjective, NonConvergence, cg_solve, minimize_convex

__all__ = [
    "StepRecord",
    "Trajectory",
    "c_star_constant",
    "tau_star_formula",
    "tau_star",
    "energy_bound",
    "run_threshold",
    "alpha_step",
    "alpha_step_system",
    "u_step",
    "u_step_objective",
    "run",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepRecord:
    index: int
    energy: EnergyBreakdown
    diss_alpha_l2: float
    diss_alpha_grad: float
    diss_u_l2: float
    diss_u_grad: float
    residual_alpha: float
    residual_u: float

    @property
    def dissipation(self) -> float:
        """Left-hand dissipation of the per-step energy inequality.

        The orientation terms carry weight 1/2, the intensity terms weight 1.
        """
        return 0.5 * (self.diss_alpha_l2 + self.diss_alpha_grad) + self.diss_u_l2 + self.diss_u_grad


@dataclass
class Trajectory:
    grid: Grid
    aniso: Anisotropy
    params: SchemeParams
    u_org: np.ndarray
    states: list[tuple[np.ndarray, np.ndarray]]
    records: list[StepRecord] = field(default_factory=list)
    tau_star: float = math.nan
    initial_energy: EnergyBreakdown | None = None

    @property
    def above_tau_star(self) -> bool:
        return self.params.tau >= self.tau_star

    @property
    def energies(self) -> list[float]:
        return [self.initial_energy.total] + [r.energy.total for r in self.records]

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.states)) * self.params.tau


def c_star_constant(p: float, nu: float, kappa: float, c_hyp: float) -> float:
    """``(1 + c_hyp^2)(1 + (p/nu)^(2/p)) / min(1, kappa)``.

    ``c_hyp`` is the (configured) constant of the embedding H^1 into
    L^{2p/(p-2)}.
    """
    return (1.0 + c_hyp**2) * (1.0 + (p / nu) ** (2.0 / p)) / min(1.0, kappa)


def tau_star_formula(c_star: float, w1inf: float, e0: float, p: float) -> float:
    return 1.0 / (4.0 * c_star * (1.0 + w1inf) ** 2 * (1.0 + e0 ** (2.0 / p)))


def tau_star(aniso: Anisotropy, params: SchemeParams, e0: float, c_hyp: float = 1.0) -> float:
    """Step-size threshold below which per-step energy dissipation is guaranteed."""
    if not aniso.smooth:
        raise ValueError("tau* needs a smoothed anisotropy (eps > 0)")
    if e0 < 0:
        raise ValueError(f"initial energy must be >= 0, got {e0}")
    if not c_hyp > 0:
        raise ValueError(f"embedding constant must be positive, got {c_hyp}")
    cs = c_star_constant(params.p, params.nu, params.kappa, c_hyp)
    return tau_star_formula(cs, aniso.w1inf, e0, params.p)


def energy_bound(grid: Grid, u0, alpha0, aniso: Anisotropy, params: SchemeParams, u_org) -> float:
    """Upper bound ``E(u0, alpha0) + lip |Omega|`` on the smoothed initial energies."""
    raw = Anisotropy(aniso.kind, 0.0, aniso.k)
    return energy(grid, u0, alpha0, raw, params, u_org).total + aniso.lip * grid.area


def run_threshold(grid: Grid, u0, alpha0, aniso: Anisotropy, params: SchemeParams, u_org, c_hyp: float = 1.0) -> float:
    """tau* for a smoothed run, taking the energy level from :func:`energy_bound`.

    The bound dominates the smoothed initial energy for every eps, so the
    threshold does not depend on how far the smoothing lowered E.
    """
    return tau_star(aniso, params, energy_bound(grid, u0, alpha0, aniso, params, u_org), c_hyp)


def _coupling(grid: Grid, alpha: np.ndarray, u: np.ndarray, aniso: Anisotropy) -> np.ndarray:
    return aniso.alpha_coupling(extend(grid, alpha), gradient(grid, u))[1:, 1:]


def alpha_step_system(grid: Grid, alpha_prev, u_prev, aniso: Anisotropy, params: SchemeParams):
    """The orientation update as ``(apply, rhs)``, both multiplied through by tau.

    ``apply(a) = a + (tau + kappa)(-lap a)`` and
    ``rhs = alpha_prev + kappa (-lap alpha_prev) - tau * coupling``.
    """
    tau, kappa = params.tau, params.kappa

    def apply(a):
        return a - (tau + kappa) * laplacian0(grid, a)

    rhs = alpha_prev - kappa * laplacian0(grid, alpha_prev) - tau * _coupling(grid, alpha_prev, u_prev, aniso)
    return apply, rhs


def alpha_step(grid: Grid, alpha_prev, u_prev, aniso: Anisotropy, params: SchemeParams):
    """Return ``(alpha_i, relative_residual)``."""
    apply, rhs = alpha_step_system(grid, alpha_prev, u_prev, aniso, params)
    info = cg_solve(
        apply,
        rhs,
        tol=params.tol_linear,
        maxit=params.maxit_linear,
        x0=alpha_prev,
        inner=lambda f, g: inner_l2(grid, f, g),
    )
    return info.x, info.residual


def u_step_objective(grid: Grid, u_prev, alpha_new, aniso: Anisotropy, params: SchemeParams, u_org):
    """tau times the strictly convex intensity objective, with its L2 gradient.

        tau * [ 1/(2 tau)|z - u_prev|^2 + nu/p |grad z|^p + mu/(2 tau)|grad(z - u_prev)|^2
                + sum gamma_eps(R(alpha) grad z) + lam/2 |z - u_org|^2 ]
    """
    tau, mu, nu, lam, p = params.tau, params.mu, params.nu, params.lam, params.p
    dA = grid.cell_area
    theta = extend(grid, alpha_new)

    def value(z):
        dz = z - u_prev
        gdz = gradient(grid, dz)
        gz = gradient(grid, z)
        quad = 0.5 * float((dz * dz).sum()) + 0.5 * mu * float((gdz * gdz).sum())
        sq = gz[0] ** 2 + gz[1] ** 2
        rest = (
            nu / p * float((sq ** (p / 2)).sum())
            + float(aniso.eval(rotate_ext(theta, gz)).sum())
            + 0.5 * lam * float(((z - u_org) ** 2).sum())
        )
        return (quad + tau * rest) * dA

    def grad(z):
        dz = z - u_prev
        gz = gradient(grid, z)
        flux = aniso_flux(theta, gz, aniso) + p_flux(gz, nu, p)
        return dz - mu * laplacian0(grid, dz) + tau * (-divergence(grid, flux) + lam * (z - u_org))

    return ConvexObjective(value, grad)


def u_step(grid: Grid, u_prev, alpha_new, aniso: Anisotropy, params: SchemeParams, u_org):
    """Return ``(u_i, relative_gradient_residual)``."""
    obj = u_step_objective(grid, u_prev, alpha_new, aniso, params, u_org)
    lip0 = 1.0 + params.mu * 4.0 * (1.0 / grid.hx**2 + 1.0 / grid.hy**2)
    info = minimize_convex(
        obj,
        u_prev,
        tol=params.tol_convex,
        maxit=params.maxit_convex,
        inner=lambda f, g: inner_l2(grid, f, g),
        lipschitz=lip0,
    )
    return info.x, info.residual


def _record(grid, i, state, prev, aniso, params, u_org, res_a, res_u) -> StepRecord:
    (u, a), (u0, a0) = state, prev
    da, du = a - a0, u - u0
    gda, gdu = gradient(grid, da), gradient(grid, du)
    tau = params.tau
    return StepRecord(
        index=i,
        energy=energy(grid, u, a, aniso, params, u_org),
        diss_alpha_l2=norm_l2(grid, da) ** 2 / tau,
        diss_alpha_grad=params.kappa * inner_l2(grid, gda, gda) / tau,
        diss_u_l2=norm_l2(grid, du) ** 2 / tau,
        diss_u_grad=params.mu * inner_l2(grid, gdu, gdu) / tau,
        residual_alpha=res_a,
        residual_u=res_u,
    )


def run(
    grid: Grid,
    u0,
    alpha0,
    aniso: Anisotropy,
    params: SchemeParams,
    m: int,
    u_org,
    c_hyp: float = 1.0,
    callback=None,
) -> Trajectory:
    """Advance ``m`` steps from ``(u0, alpha0)``.

    Raises :class:`NonConvergence` with ``.step`` set to the failing step.
    A step size at or above tau* is allowed but logged; check
    ``Trajectory.above_tau_star``.
    """
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    u0 = grid.check(u0, "u0").copy()
    alpha0 = grid.check(alpha0, "alpha0").copy()
    u_org = grid.check(u_org, "u_org")
    if u0.min() < 0 or u0.max() > 1:
        raise ValueError("initial intensity must lie in [0, 1]")

    e0 = energy(grid, u0, alpha0, aniso, params, u_org)
    traj = Trajectory(grid, aniso, params, u_org, [(u0, alpha0)], initial_energy=e0)
    if aniso.smooth:
        traj.tau_star = run_threshold(grid, u0, alpha0, aniso, params, u_org, c_hyp)
        if traj.above_tau_star:
            log.warning("tau = %g is not below tau* = %g; dissipation is not guaranteed", params.tau, traj.tau_star)
    elif m > 0:
        raise ValueError("time stepping needs a smoothed anisotropy (eps > 0)")

    u, a = u0, alpha0
    for i in range(1, m + 1):
        try:
            a_new, res_a = alpha_step(grid, a, u, aniso, params)
            u_new, res_u = u_step(grid, u, a_new, aniso, params, u_org)
        except NonConvergence as exc:
            exc.step = i
            raise
        traj.states.append((u_new, a_new))
        traj.records.append(_record(grid, i, (u_new, a_new), (u, a), aniso, params, u_org, res_a, res_u))
        u, a = u_new, a_new
        if callback is not None:
            callback(i, traj)
    return traj
