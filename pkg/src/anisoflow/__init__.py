"""Orientation-adaptive anisotropic image denoising by a pseudo-parabolic gradient flow."""

from .anisotropy import Anisotropy, make_anisotropy
from .energy import EnergyBreakdown, SchemeParams, energy, grad_energy_alpha, grad_energy_u
from .grid import Grid, divergence, gradient, inner_l2, laplacian0, rotate
from .scheme import Trajectory, alpha_step, run, tau_star, u_step
from .solvers import NonConvergence

__all__ = [
    "Anisotropy",
    "EnergyBreakdown",
    "Grid",
    "NonConvergence",
    "SchemeParams",
    "Trajectory",
    "alpha_step",
    "divergence",
    "energy",
    "grad_energy_alpha",
    "grad_energy_u",
    "gradient",
    "inner_l2",
    "laplacian0",
    "make_anisotropy",
    "rotate",
    "run",
    "tau_star",
    "u_step",
]

__version__ = "0.1.0"
