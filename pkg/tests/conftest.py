import logging

import numpy as np
import pytest

from anisoflow.anisotropy import make_anisotropy
from anisoflow.energy import SchemeParams, energy
from anisoflow.grid import Grid
from anisoflow.io import benchmark_spec, synth_pattern
from anisoflow.scheme import run, run_threshold

_CRITERIA: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def record_criterion():
    def record(number: int, name: str, passed: bool, detail: str = ""):
        _CRITERIA[number] = (name, bool(passed), detail)
        print(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name} {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        name, passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {number:2d}. {name}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


class AcceptanceProblem:
    """64x64 noisy rectangles, l1 with eps = 0.05, p = 3, unit constants, tau = tau*/2."""

    def __init__(self, m=100):
        self.grid = Grid(64, 64)
        self.u_org = synth_pattern(benchmark_spec(64, noise=0.1, seed=0))
        self.aniso = make_anisotropy("l1", 0.05)
        base = SchemeParams(kappa=1, mu=1, nu=1, lam=1, p=3, tau=1.0, tol_linear=1e-10, tol_convex=1e-10)
        self.u0 = self.u_org.copy()
        self.alpha0 = self.grid.zeros()
        self.e0 = energy(self.grid, self.u0, self.alpha0, self.aniso, base, self.u_org).total
        self.tau_star = run_threshold(self.grid, self.u0, self.alpha0, self.aniso, base, self.u_org, c_hyp=1.0)
        self.params = base.replace(tau=0.5 * self.tau_star)
        self.m = m

    def run(self):
        return run(self.grid, self.u0, self.alpha0, self.aniso, self.params, self.m, self.u_org)


@pytest.fixture(scope="session")
def acceptance_problem():
    return AcceptanceProblem()


@pytest.fixture(scope="session")
def acceptance_run(acceptance_problem):
    logging.disable(logging.WARNING)
    try:
        return acceptance_problem.run()
    finally:
        logging.disable(logging.NOTSET)
