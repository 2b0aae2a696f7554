"""Convex even anisotropies and their smooth approximations.

Every built-in anisotropy is the support function of a centrally symmetric
convex set ``K`` (the unit ball of the dual norm)::

    gamma(w) = max_{y in K} y . w

The smoothed version is the Moreau envelope with parameter ``eps``::

    gamma_eps(w) = max_{y in K} (y . w - eps/2 |y|^2) = P . w - eps/2 |P|^2,
    P = proj_K(w / eps),  grad gamma_eps(w) = P.

For ``l1`` this is the per-component Huber function.  The envelope satisfies
``gamma - eps*lip^2/2 <= gamma_eps <= gamma``, ``|grad gamma_eps| <= lip`` and
``grad gamma_eps`` is ``1/eps``-Lipschitz, with ``gamma_eps(0) = 0``.

Vectors are component-first: ``w`` has shape ``(2, ...)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import rotate_ext

__all__ = ["Anisotropy", "make_anisotropy", "KINDS"]

KINDS = ("l1", "euclidean", "kgon")


def _polygon_vertices(k: int) -> np.ndarray:
    # 2k vertices of conv{+-d_j}, d_j at angles j*pi/k, ordered counterclockwise;
    # the second half is negated exactly so that evenness holds bit-for-bit
    angles = np.arange(k) * math.pi / k
    half = np.stack([np.cos(angles), np.sin(angles)])
    return np.concatenate([half, -half], axis=1)


def _project_polygon(x: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Euclidean projection of points ``x`` (2, N) onto a regular polygon."""
    n = verts.shape[1]
    nxt = np.roll(verts, -1, axis=1)
    mids = 0.5 * (verts + nxt)
    apothem = np.linalg.norm(mids[:, 0])
    normals = mids / apothem
    inside = (normals.T @ x).max(axis=0) <= apothem

    best = x.copy()
    if inside.all():
        return best
    xo = x[:, ~inside]
    best_d = np.full(xo.shape[1], np.inf)
    best_p = np.empty_like(xo)
    for j in range(n):
        a, e = verts[:, j : j + 1], (nxt[:, j] - verts[:, j])[:, None]
        t = np.clip(((xo - a) * e).sum(axis=0) / (e * e).sum(), 0.0, 1.0)
        q = a + t * e
        d = ((xo - q) ** 2).sum(axis=0)
        better = d < best_d
        best_d[better] = d[better]
        best_p[:, better] = q[:, better]
    best[:, ~inside] = best_p
    return best


@dataclass(frozen=True)
class Anisotropy:
    """A convex, even, Lipschitz anisotropy and its eps-smoothing.

    Parameters
    ----------
    kind : {"l1", "euclidean", "kgon"}
        ``l1`` is ``|w1| + |w2|`` (square Wulff shape), ``euclidean`` the
        isotropic norm, and ``kgon`` is ``max_j |w . d_j|`` over ``k``
        equally spaced directions ``d_j`` at angles ``j*pi/k``.
    eps : float
        Smoothing parameter.  ``eps = 0`` is the nonsmooth original, which
        can be evaluated but not differentiated.
    k : int
        Number of directions for ``kgon``.
    """

    kind: str
    eps: float = 0.0
    k: int = 4
    _verts: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown anisotropy kind {self.kind!r}; expected one of {KINDS}")
        if not self.eps >= 0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if self.kind == "kgon":
            if self.k < 3:
                raise ValueError(f"kgon needs k >= 3, got {self.k}")
            object.__setattr__(self, "_verts", _polygon_vertices(self.k))

    @property
    def smooth(self) -> bool:
        return self.eps > 0

    @property
    def lip(self) -> float:
        """Lipschitz constant of gamma, i.e. the radius of ``K``."""
        return math.sqrt(2.0) if self.kind == "l1" else 1.0

    @property
    def hess_bound(self) -> float:
        """Sup-norm of the Hessian of the smoothed anisotropy (inf if eps == 0)."""
        return 1.0 / self.eps if self.eps > 0 else math.inf

    @property
    def w1inf(self) -> float:
        """``|grad gamma_eps|_{W^{1,inf}} = lip + hess_bound``."""
        return self.lip + self.hess_bound

    def project(self, y: np.ndarray) -> np.ndarray:
        """Projection onto the dual unit ball ``K``."""
        y = np.asarray(y, dtype=float)
        if self.kind == "l1":
            return np.clip(y, -1.0, 1.0)
        if self.kind == "euclidean":
            r = np.sqrt(y[0] ** 2 + y[1] ** 2)
            return y / np.maximum(r, 1.0)
        flat = y.reshape(2, -1)
        return _project_polygon(flat, self._verts).reshape(y.shape)

    def support(self, w: np.ndarray) -> np.ndarray:
        """The nonsmooth anisotropy gamma(w)."""
        w = np.asarray(w, dtype=float)
        if self.kind == "l1":
            return np.abs(w[0]) + np.abs(w[1])
        if self.kind == "euclidean":
            return np.sqrt(w[0] ** 2 + w[1] ** 2)
        v = self._verts
        return np.tensordot(v, w, axes=(0, 0)).max(axis=0)

    def eval(self, w: np.ndarray) -> np.ndarray:
        if self.eps == 0:
            return self.support(w)
        w = np.asarray(w, dtype=float)
        if self.kind == "l1":
            a = np.abs(w)
            return np.where(a <= self.eps, a**2 / (2 * self.eps), a - self.eps / 2).sum(axis=0)
        if self.kind == "euclidean":
            r = np.sqrt(w[0] ** 2 + w[1] ** 2)
            return np.where(r <= self.eps, r**2 / (2 * self.eps), r - self.eps / 2)
        P = self.project(w / self.eps)
        return (P * w).sum(axis=0) - 0.5 * self.eps * (P * P).sum(axis=0)

    def grad(self, w: np.ndarray) -> np.ndarray:
        if self.eps == 0:
            raise ValueError("gamma is not differentiable for eps = 0; use a smoothed anisotropy")
        return self.project(np.asarray(w, dtype=float) / self.eps)

    def alpha_coupling(self, alpha, w: np.ndarray) -> np.ndarray:
        """``grad gamma_eps(R(alpha) w) . R(alpha + pi/2) w``, i.e. d/dalpha gamma_eps(R(alpha) w)."""
        w = np.asarray(w, dtype=float)
        rw = rotate_ext(alpha, w)
        g = self.grad(rw)
        # R(alpha + pi/2) w = J R(alpha) w with J the quarter turn
        return g[1] * rw[0] - g[0] * rw[1]

    def second_alpha_bound(self, w: np.ndarray) -> np.ndarray:
        if self.eps == 0:
            raise ValueError("second-derivative bound needs eps > 0")
        w = np.asarray(w, dtype=float)
        return 2.0 * (1.0 + self.w1inf) ** 2 * (1.0 + (w * w).sum(axis=0))


def make_anisotropy(kind: str, eps: float = 0.0, k: int = 4) -> Anisotropy:
    return Anisotropy(kind=kind, eps=float(eps), k=int(k))
