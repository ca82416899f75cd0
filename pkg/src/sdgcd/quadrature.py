"""Quadrature rules on triangles and edges.

Triangle rules are stored in barycentric form with weights normalised to sum
to one, so that ``area * sum(w * f(x_q))`` integrates over a physical triangle.
Edge rules live on the unit interval [0, 1], weights summing to one.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature rule on a reference simplex.

    For triangles ``points`` has shape (nq, 3) (barycentric coordinates); for
    edges it has shape (nq, 2) (the two endpoint weights).
    """

    points: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")

    @property
    def n_points(self) -> int:
        return len(self.weights)


def _orbit3(a):
    b = (1.0 - a) / 2.0
    return [(a, b, b), (b, a, b), (b, b, a)]


def _orbit6(a, b):
    c = 1.0 - a - b
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]


def _symmetric(groups, degree):
    pts, wts = [], []
    for w, orbit in groups:
        pts.extend(orbit)
        wts.extend([w] * len(orbit))
    return QuadratureRule(np.array(pts), np.array(wts), degree)


# Dunavant rules (weights sum to 1).
_SYMMETRIC = {
    1: lambda: _symmetric([(1.0, [(1 / 3, 1 / 3, 1 / 3)])], 1),
    2: lambda: _symmetric([(1 / 3, _orbit3(2 / 3))], 2),
    6: lambda: _symmetric(
        [
            (0.116786275726379, _orbit3(0.501426509658179)),
            (0.050844906370207, _orbit3(0.873821971016996)),
            (0.082851075618374, _orbit6(0.053145049844817, 0.310352451033784)),
        ],
        6,
    ),
    8: lambda: _symmetric(
        [
            (0.144315607677787, [(1 / 3, 1 / 3, 1 / 3)]),
            (0.095091634267285, _orbit3(0.081414823414554)),
            (0.103217370534718, _orbit3(0.658861384496480)),
            (0.032458497623198, _orbit3(0.898905543365938)),
            (0.027230314174435, _orbit6(0.008394777409958, 0.263112829634638)),
        ],
        8,
    ),
}


@lru_cache(maxsize=None)
def collapsed_rule(degree: int) -> QuadratureRule:
    """Conical product (Duffy-collapsed Gauss) rule exact to ``degree``.

    Works for any degree; used for high-order reference integrals.
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    n = degree // 2 + 1
    # Gauss-Jacobi in the collapsed direction absorbs the (1 - s) Jacobian.
    xs, ws = roots_jacobi(n, 1.0, 0.0)
    xt, wt = np.polynomial.legendre.leggauss(n)
    s = (xs + 1.0) / 2.0
    t = (xt + 1.0) / 2.0
    ws = ws / 4.0  # (1/2)^2 from the map, weight (1-x)/2 rescale
    wt = wt / 2.0
    S, T = np.meshgrid(s, t, indexing="ij")
    W = np.outer(ws, wt)
    x = S.ravel()
    y = (T * (1.0 - S)).ravel()
    bary = np.column_stack([1.0 - x - y, x, y])
    w = W.ravel()
    return QuadratureRule(bary, w / w.sum(), degree)


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadratureRule:
    """Cheapest available rule exact to at least ``degree``."""
    if degree < 0:
        raise ValueError("degree must be non-negative")
    for d in sorted(_SYMMETRIC):
        if d >= degree:
            return _SYMMETRIC[d]()
    return collapsed_rule(degree)


@lru_cache(maxsize=None)
def edge_rule(n_points: int) -> QuadratureRule:
    """Gauss-Legendre rule with ``n_points`` nodes on [0, 1]."""
    if n_points < 1:
        raise ValueError("need at least one point")
    x, w = np.polynomial.legendre.leggauss(n_points)
    s = (x + 1.0) / 2.0
    return QuadratureRule(np.column_stack([1.0 - s, s]), w / 2.0, 2 * n_points - 1)
