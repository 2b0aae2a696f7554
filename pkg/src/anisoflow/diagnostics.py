"""Checks of energy dissipation, the maximum principle and continuous dependence."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .anisotropy import Anisotropy
from .energy import SchemeParams, aniso_flux, lp_norm_grad, p_flux
from .grid import Grid, extend, gradient, inner_l2, norm_l2
from .scheme import Trajectory, alpha_step_system, run, u_step_objective

__all__ = [
    "DissipationReport",
    "DependenceReport",
    "ResidualReport",
    "dissipation_check",
    "range_check",
    "dependence_check",
    "perturb",
    "j_functional",
    "variational_residual",
    "thread_count",
]


@dataclass
class DissipationReport:
    defects: list[float]
    max_defect: float
    max_pair_defect: float
    max_energy_increase: float
    slack: float

    @property
    def step_ok(self) -> bool:
        return self.max_defect <= self.slack

    @property
    def global_ok(self) -> bool:
        return self.max_pair_defect <= self.slack

    @property
    def monotone(self) -> bool:
        return self.max_energy_increase <= self.slack

    @property
    def passed(self) -> bool:
        return self.step_ok and self.global_ok

    def as_dict(self) -> dict:
        return {
            "check": "dissipation",
            "passed": self.passed,
            "step_ok": self.step_ok,
            "global_ok": self.global_ok,
            "monotone": self.monotone,
            "max_defect": self.max_defect,
            "max_pair_defect": self.max_pair_defect,
            "max_energy_increase": self.max_energy_increase,
            "slack": self.slack,
        }


def dissipation_check(traj: Trajectory, slack: float) -> DissipationReport:
    """Evaluate the per-step inequality and its telescoped form between all step pairs.

    ``defect_i = dissipation_i + E_i - E_{i-1}``; the pair defect for s < t
    is the sum of step defects over (s, t].
    """
    energies = traj.energies
    defects = [r.dissipation + r.energy.total - e_prev for r, e_prev in zip(traj.records, energies[:-1])]
    if not defects:
        return DissipationReport([], -math.inf, -math.inf, -math.inf, slack)
    cum = np.concatenate([[0.0], np.cumsum(defects)])
    # max over s < t of cum[t] - cum[s]
    running_min = np.minimum.accumulate(cum[:-1])
    pair = float(np.max(cum[1:] - running_min))
    increase = float(np.max(np.diff(energies)))
    return DissipationReport(defects, float(max(defects)), pair, increase, slack)


def range_check(traj: Trajectory) -> tuple[float, float]:
    """Largest violations ``[-u]^+`` and ``[u - 1]^+`` over all states."""
    neg = max(float(np.max(np.maximum(-u, 0.0))) for u, _ in traj.states)
    over = max(float(np.max(np.maximum(u - 1.0, 0.0))) for u, _ in traj.states)
    return neg, over


def j_functional(grid: Grid, params: SchemeParams, state1, state2) -> float:
    """Squared distance |du|^2 + mu |grad du|^2 + |da|^2 + kappa |grad da|^2."""
    du = state1[0] - state2[0]
    da = state1[1] - state2[1]
    gdu, gda = gradient(grid, du), gradient(grid, da)
    return (
        norm_l2(grid, du) ** 2
        + params.mu * inner_l2(grid, gdu, gdu)
        + norm_l2(grid, da) ** 2
        + params.kappa * inner_l2(grid, gda, gda)
    )


def bump(grid: Grid) -> np.ndarray:
    """Smooth unit bump vanishing on the boundary."""
    x, y = grid.coordinates()
    lx, ly = (grid.nx + 1) * grid.hx, (grid.ny + 1) * grid.hy
    return np.sin(np.pi * x / lx) * np.sin(np.pi * y / ly)


def perturb(grid: Grid, u0, alpha0, delta: float):
    """Admissible perturbation of size ``delta`` along a boundary-compatible bump.

    The intensity moves toward 1 by the fraction ``delta * bump`` so it stays
    in [0, 1]; the orientation is shifted by ``delta * bump``.  Both are
    linear in ``delta``.
    """
    b = delta * bump(grid)
    return u0 + b * (1.0 - u0), alpha0 + b


def thread_count() -> int:
    """Worker cap from ``ANISOFLOW_THREADS`` (0 or unset means automatic)."""
    try:
        n = int(os.environ.get("ANISOFLOW_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


@dataclass
class DependenceReport:
    times: np.ndarray
    j_series: np.ndarray
    fitted_rate: float
    bound_rate: float
    fit_residual: float
    trajectories: tuple = field(default=(), repr=False)

    @property
    def j0(self) -> float:
        return float(self.j_series[0])

    @property
    def satisfied(self) -> bool:
        return self.fitted_rate <= self.bound_rate

    def envelope_ok(self, rel: float = 1e-3) -> bool:
        """``J(t_i) <= exp(fitted_rate t_i) J(0) (1 + rel)`` for every i."""
        bound = np.exp(self.fitted_rate * self.times) * self.j0 * (1.0 + rel)
        return bool(np.all(self.j_series <= bound))

    def as_dict(self) -> dict:
        return {
            "check": "dependence",
            "passed": self.satisfied and self.envelope_ok(),
            "satisfied": self.satisfied,
            "envelope_ok": self.envelope_ok(),
            "j0": self.j0,
            "j_final": float(self.j_series[-1]),
            "fitted_rate": self.fitted_rate,
            "bound_rate": self.bound_rate,
            "fit_residual": self.fit_residual,
        }


def _fit_rate(times: np.ndarray, js: np.ndarray) -> tuple[float, float]:
    # least-squares slope of log(J/J0) against t through the origin
    if js[0] == 0 or len(js) < 2:
        return 0.0, 0.0
    mask = (times > 0) & (js > 0)
    t = times[mask]
    y = np.log(js[mask] / js[0])
    rate = float(t @ y / (t @ t))
    return rate, float(np.max(y - rate * t))


def dependence_check(
    grid: Grid,
    u0a,
    alpha0a,
    u0b,
    alpha0b,
    aniso: Anisotropy,
    params: SchemeParams,
    m: int,
    u_org,
    c_star: float,
) -> DependenceReport:
    workers = min(2, thread_count())
    args = [(u0a, alpha0a), (u0b, alpha0b)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        traj_a, traj_b = pool.map(lambda s: run(grid, s[0], s[1], aniso, params, m, u_org), args)
    js = np.array([j_functional(grid, params, sa, sb) for sa, sb in zip(traj_a.states, traj_b.states)])
    times = traj_a.times
    rate, resid = _fit_rate(times, js)
    sup_grad = max(lp_norm_grad(grid, u, params.p) for u, _ in traj_a.states)
    bound = c_star * (1.0 + sup_grad) ** 2
    return DependenceReport(times, js, rate, bound, resid, (traj_a, traj_b))


@dataclass(frozen=True)
class ResidualReport:
    res_alpha: float
    res_u: float
    scale_alpha: float
    scale_u: float


def _unit_fields(grid: Grid, n: int, seed) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        f = rng.standard_normal(grid.shape)
        out.append(f / norm_l2(grid, f))
    return out


def variational_residual(
    grid: Grid,
    state_i,
    state_prev,
    aniso: Anisotropy,
    params: SchemeParams,
    u_org,
    n_tests: int = 20,
    seed=0,
) -> ResidualReport:
    """Evaluate both weak-form step identities against seeded unit test fields.

    The identities are assembled term by term from inner products, not from
    the solvers' operators.  ``scale_*`` is the bound that solver tolerance
    ``tol`` implies via Cauchy-Schwarz: a converged step has
    ``res_* <= tol * scale_*``.
    """
    (u, a), (u_prev, a_prev) = state_i, state_prev
    tau, kappa, mu, nu, lam, p = params.tau, params.kappa, params.mu, params.nu, params.lam, params.p
    ga = gradient(grid, a)
    gda = gradient(grid, a - a_prev)
    coupling = aniso.alpha_coupling(extend(grid, a_prev), gradient(grid, u_prev))[1:, 1:]
    gu = gradient(grid, u)
    gdu = gradient(grid, u - u_prev)
    theta = extend(grid, a)
    flux = aniso_flux(theta, gu, aniso)
    pf = p_flux(gu, nu, p)

    res_a = res_u = 0.0
    for phi in _unit_fields(grid, n_tests, seed):
        gphi = gradient(grid, phi)
        lhs_a = (
            inner_l2(grid, a - a_prev, phi) / tau
            + inner_l2(grid, ga, gphi)
            + kappa / tau * inner_l2(grid, gda, gphi)
            + inner_l2(grid, coupling, phi)
        )
        lhs_u = (
            inner_l2(grid, u - u_prev, phi) / tau
            + inner_l2(grid, pf, gphi)
            + mu / tau * inner_l2(grid, gdu, gphi)
            + inner_l2(grid, flux, gphi)
            + lam * inner_l2(grid, u - u_org, phi)
        )
        res_a = max(res_a, abs(lhs_a))
        res_u = max(res_u, abs(lhs_u))

    _, rhs = alpha_step_system(grid, a_prev, u_prev, aniso, params)
    g0 = u_step_objective(grid, u_prev, a, aniso, params, u_org).gradient(u_prev)
    return ResidualReport(res_a, res_u, norm_l2(grid, rhs) / tau, (1.0 + norm_l2(grid, g0)) / tau)
