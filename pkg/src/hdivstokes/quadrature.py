"""Quadrature on the reference triangle and on edges.

Triangle rules are collapsed (Duffy) tensor products of Gauss-Legendre and
Gauss-Jacobi(1, 0) points: all points are interior and all weights positive.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_EXACTNESS = 14
DEFAULT_EXACTNESS = 12
EDGE_POINTS = 5


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray   # (nq, 3) barycentric coordinates
    weights: np.ndarray  # (nq,), sum to 1/2
    exactness: int

    @property
    def xy(self) -> np.ndarray:
        """Reference coordinates, i.e. the last two barycentric coordinates."""
        return self.points[:, 1:]


@lru_cache(maxsize=None)
def quadrature(exactness: int = DEFAULT_EXACTNESS) -> QuadratureRule:
    if not 1 <= exactness <= MAX_EXACTNESS:
        raise ValueError(f"unsupported quadrature exactness {exactness}; "
                         f"supported degrees are 1..{MAX_EXACTNESS}")
    m = exactness // 2 + 1
    s, ws = np.polynomial.legendre.leggauss(m)
    t, wt = roots_jacobi(m, 1.0, 0.0)
    u, wu = 0.5 * (s + 1), 0.5 * ws
    v, wv = 0.5 * (t + 1), 0.25 * wt
    U, V = np.meshgrid(u, v, indexing="ij")
    x = (U * (1 - V)).ravel()
    y = V.ravel()
    w = np.outer(wu, wv).ravel()
    points = np.stack([1 - x - y, x, y], axis=1)
    for a in (points, w):
        a.setflags(write=False)
    return QuadratureRule(points, w, exactness)


@lru_cache(maxsize=None)
def edge_quadrature(npoints: int = EDGE_POINTS) -> tuple[np.ndarray, np.ndarray]:
    """Gauss points on [0, 1] as (parameters, weights summing to 1)."""
    s, w = np.polynomial.legendre.leggauss(npoints)
    return 0.5 * (s + 1), 0.5 * w


def physical_points(coords: np.ndarray, rule: QuadratureRule) -> np.ndarray:
    """Map barycentric rule points into each triangle: (F, nq, 2)."""
    return np.einsum("qk,fkd->fqd", rule.points, coords)
