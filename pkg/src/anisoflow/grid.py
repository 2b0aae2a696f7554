"""Rectangular grid with zero Dirichlet boundary and mimetic difference operators.

Scalar fields are arrays of shape ``(nx, ny)`` holding interior nodes only;
boundary values are implicitly zero.  Vector fields are arrays of shape
``(2, nx + 1, ny + 1)``: entry ``[:, a, b]`` is the forward-difference
gradient at node ``(a - 1, b - 1)``, so the left/bottom boundary ring is
included and every interior-boundary edge carries a degree of freedom.
With this layout ``divergence`` is exactly the negative adjoint of
``gradient`` and ``laplacian0`` is the standard 5-point stencil.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "gradient",
    "divergence",
    "laplacian0",
    "rotate",
    "rotation",
    "inner_l2",
    "norm_l2",
    "extend",
]


@dataclass(frozen=True)
class Grid:
    """Uniform Cartesian grid of ``nx * ny`` interior nodes."""

    nx: int
    ny: int
    hx: float = 1.0
    hy: float = 1.0

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("nx and ny must be integers")
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"grid needs at least one interior node, got {self.nx}x{self.ny}")
        if not (self.hx > 0 and self.hy > 0):
            raise ValueError(f"grid spacings must be positive, got hx={self.hx}, hy={self.hy}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def vector_shape(self) -> tuple[int, int, int]:
        return (2, self.nx + 1, self.ny + 1)

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def area(self) -> float:
        """Lebesgue measure of the domain (0, (nx+1) hx) x (0, (ny+1) hy)."""
        return (self.nx + 1) * self.hx * (self.ny + 1) * self.hy

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def vector_zeros(self) -> np.ndarray:
        return np.zeros(self.vector_shape)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical coordinates of the interior nodes, each of shape ``(nx, ny)``."""
        x = (np.arange(self.nx) + 1.0) * self.hx
        y = (np.arange(self.ny) + 1.0) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def check(self, f: np.ndarray, name: str = "field") -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise ValueError(f"{name} has shape {f.shape}, grid expects {self.shape}")
        return f


def extend(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Zero-extend a scalar field onto the ``(nx + 1, ny + 1)`` vector-node layout."""
    out = np.zeros((grid.nx + 1, grid.ny + 1))
    out[1:, 1:] = f
    return out


def gradient(grid: Grid, f: np.ndarray) -> np.ndarray:
    padded = np.zeros((grid.nx + 2, grid.ny + 2))
    padded[1:-1, 1:-1] = f
    g = np.empty(grid.vector_shape)
    g[0] = (padded[1:, :-1] - padded[:-1, :-1]) / grid.hx
    g[1] = (padded[:-1, 1:] - padded[:-1, :-1]) / grid.hy
    return g


def divergence(grid: Grid, v: np.ndarray) -> np.ndarray:
    """Negative adjoint of :func:`gradient` with respect to :func:`inner_l2`."""
    vx, vy = v[0], v[1]
    return (vx[1:, 1:] - vx[:-1, 1:]) / grid.hx + (vy[1:, 1:] - vy[1:, :-1]) / grid.hy


def laplacian0(grid: Grid, f: np.ndarray) -> np.ndarray:
    return divergence(grid, gradient(grid, f))


def rotation(theta) -> np.ndarray:
    """Counterclockwise rotation matrices, shape ``(2, 2) + theta.shape``."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotate(grid: Grid, alpha: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Apply R(alpha) pointwise; alpha lives on interior nodes, zero on the ring."""
    return rotate_ext(extend(grid, alpha), v)


def rotate_ext(theta: np.ndarray, v: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def rotate_ext_transpose(theta: np.ndarray, v: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([c * v[0] + s * v[1], -s * v[0] + c * v[1]])


def inner_l2(grid: Grid, f: np.ndarray, g: np.ndarray) -> float:
    return float(np.vdot(f, g)) * grid.cell_area


def norm_l2(grid: Grid, f: np.ndarray) -> float:
    return float(np.sqrt(inner_l2(grid, f, f)))
