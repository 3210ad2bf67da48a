"""Element kernels for P1c, RT0, P0 and Bernardi-Raugel edge bubbles.

All kernels are batched over triangles: ``coords`` has shape (F, 3, 2) and
``signs`` shape (F, 3).  Local velocity ordering is (v0x, v0y, v1x, v1y,
v2x, v2y); local edge k is opposite vertex k.

The RT0 basis function of edge e restricted to T is

    Phi_e(x) = s * h_e / (2|T|) * (x - p_opp),

so that Phi_e . n_e = 1 on e and its normal trace vanishes on the other two
edges.  Its gradient is the multiple ``s h_e / (2|T|)`` of the identity,
hence ``(grad w, grad Phi)_T = 1/2 (div w, div Phi)_T`` for any w.  The
gradient blocks involving RT0 are assembled through this identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import QuadratureRule, physical_points, quadrature

_NEXT = np.array([1, 2, 0])
_PREV = np.array([2, 0, 1])


def geometry(coords: np.ndarray):
    """Areas (F,), barycentric gradients (F, 3, 2), opposite-edge lengths (F, 3)."""
    coords = np.asarray(coords, dtype=float)
    x, y = coords[..., 0], coords[..., 1]
    area2 = ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0])
             - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    if np.any(np.abs(area2) <= 1e-300):
        raise ValueError("degenerate triangle (zero area)")
    grads = np.stack([y[:, _NEXT] - y[:, _PREV], x[:, _PREV] - x[:, _NEXT]], axis=-1)
    grads /= area2[:, None, None]
    d = coords[:, _PREV] - coords[:, _NEXT]
    lengths = np.hypot(d[..., 0], d[..., 1])
    return 0.5 * np.abs(area2), grads, lengths


def rt0_scale(coords, signs) -> np.ndarray:
    """Per-edge coefficients s h_e / (2|T|) of the RT0 basis, shape (F, 3)."""
    area, _, lengths = geometry(coords)
    return np.asarray(signs) * lengths / (2 * area[:, None])


@dataclass(frozen=True)
class RT0Basis:
    scale: float            # s * h_e / (2|T|)
    opposite: np.ndarray    # vertex opposite the edge
    divergence: float       # s * h_e / |T|

    def __call__(self, points) -> np.ndarray:
        return self.scale * (np.asarray(points, dtype=float) - self.opposite)


def rt0_basis(coords, local_edge: int, sign: int = 1) -> RT0Basis:
    coords = np.asarray(coords, dtype=float)
    c = rt0_scale(coords[None], np.array([[sign] * 3]))[0, local_edge]
    return RT0Basis(scale=float(c), opposite=coords[local_edge].copy(),
                    divergence=float(2 * c))


@dataclass(frozen=True)
class LocalMatrices:
    a_LL: np.ndarray  # (..., 6, 6)
    a_RL: np.ndarray  # (..., 3, 6)
    a_RR: np.ndarray  # (..., 3, 3)
    m_RR: np.ndarray  # (..., 3, 3)
    g_L: np.ndarray   # (..., 6)
    g_R: np.ndarray   # (..., 3)


def element_matrices(coords, signs, rule: QuadratureRule | None = None) -> LocalMatrices:
    """Batched local matrices for every triangle."""
    rule = rule or quadrature(2)
    if rule.exactness < 2:
        raise ValueError("local matrices need a rule of exactness >= 2")
    coords = np.asarray(coords, dtype=float)
    area, grads, _ = geometry(coords)
    scale = rt0_scale(coords, signs)
    div_R = 2 * scale
    div_L = grads.reshape(-1, 6)

    K = area[:, None, None] * np.einsum("fid,fjd->fij", grads, grads)
    a_LL = np.einsum("fij,ab->fiajb", K, np.eye(2)).reshape(-1, 6, 6)
    a_RL = 0.5 * area[:, None, None] * div_R[:, :, None] * div_L[:, None, :]
    a_RR = 0.5 * area[:, None, None] * div_R[:, :, None] * div_R[:, None, :]

    x = physical_points(coords, rule)
    phi = scale[:, None, :, None] * (x[:, :, None, :] - coords[:, None, :, :])
    m_RR = 2 * area[:, None, None] * np.einsum("q,fqid,fqjd->fij", rule.weights, phi, phi)
    return LocalMatrices(a_LL, a_RL, a_RR, m_RR,
                         area[:, None] * div_L, area[:, None] * div_R)


def local_matrices(coords, signs=(1, 1, 1), rule: QuadratureRule | None = None) -> LocalMatrices:
    """Local matrices of a single triangle given as a (3, 2) array."""
    lm = element_matrices(np.asarray(coords, dtype=float)[None],
                          np.asarray(signs)[None], rule)
    return LocalMatrices(*(getattr(lm, f)[0] for f in lm.__dataclass_fields__))


def gradient_tensors(coords, signs) -> np.ndarray:
    """Full gradients of the 6 P1c and 3 RT0 basis functions: (F, 9, 2, 2).

    Entry [f, i, a, c] is d(component a)/dx_c of basis function i; both are
    constant on a triangle.
    """
    _, grads, _ = geometry(coords)
    F = len(grads)
    G = np.zeros((F, 9, 2, 2))
    for j in range(3):
        for b in range(2):
            G[:, 2 * j + b, b, :] = grads[:, j]
    scale = rt0_scale(coords, signs)
    G[:, 6:] = scale[:, :, None, None] * np.eye(2)
    return G


def gradient_contraction(coords, signs, rule: QuadratureRule | None = None):
    """(a_LL, a_RL, a_RR) by direct contraction of gradient tensors at quadrature points.

    Independent of the divergence shortcut used in :func:`element_matrices`.
    """
    rule = rule or quadrature(2)
    area, _, _ = geometry(coords)
    G = gradient_tensors(coords, signs)
    Gq = np.broadcast_to(G[:, None], (len(G), len(rule.weights)) + G.shape[1:])
    M = 2 * area[:, None, None] * np.einsum("q,fqiac,fqjac->fij", rule.weights, Gq, Gq)
    return M[:, :6, :6], M[:, 6:, :6], M[:, 6:, 6:]


# -- Bernardi-Raugel edge bubbles -------------------------------------------------

def bubble_values(bary: np.ndarray) -> np.ndarray:
    """b_k = 4 lambda_{k+1} lambda_{k+2} at barycentric points: (nq, 3)."""
    bary = np.asarray(bary, dtype=float)
    return 4 * bary[..., _NEXT] * bary[..., _PREV]


def bubble_gradients(grads: np.ndarray, bary: np.ndarray) -> np.ndarray:
    """Gradients of the three edge bubbles: (F, nq, 3, 2)."""
    lam = np.asarray(bary, dtype=float)
    return 4 * (lam[None, :, _NEXT, None] * grads[:, None, _PREV, :]
                + lam[None, :, _PREV, None] * grads[:, None, _NEXT, :])


@dataclass(frozen=True)
class BubbleMatrices:
    coupling: np.ndarray    # (..., 3, 6) bubble vs P1c gradients
    stiffness: np.ndarray   # (..., 3, 3) bubble vs bubble gradients
    divergence: np.ndarray  # (..., 3) (div(b_k n_k), 1)_T


def bubble_matrices(coords, normals, rule: QuadratureRule | None = None) -> BubbleMatrices:
    """Gradient-form matrices for the vector bubbles b_k n_k, n_k the global edge normals."""
    rule = rule or quadrature(2)
    coords = np.asarray(coords, dtype=float)
    normals = np.asarray(normals, dtype=float)
    area, grads, _ = geometry(coords)
    w = 2 * area[:, None] * rule.weights[None, :]
    gb = bubble_gradients(grads, rule.points)
    int_gb = np.einsum("fq,fqkd->fkd", w, gb)
    # (n_k (x) grad b_k) : (e_b (x) grad lambda_j) = n_k[b] grad b_k . grad lambda_j
    coupling = np.einsum("fkb,fkd,fjd->fkjb", normals, int_gb, grads).reshape(-1, 3, 6)
    nn = np.einsum("fkd,fld->fkl", normals, normals)
    stiffness = nn * np.einsum("fq,fqkd,fqld->fkl", w, gb, gb)
    divergence = np.einsum("fkd,fkd->fk", normals, int_gb)
    return BubbleMatrices(coupling, stiffness, divergence)


def br_bubble(coords, local_edge: int, normal, rule: QuadratureRule | None = None):
    """Coupling row (6,), self energy and divergence integral of one edge bubble."""
    coords = np.asarray(coords, dtype=float)
    normals = np.zeros((1, 3, 2))
    normals[0, local_edge] = normal
    bm = bubble_matrices(coords[None], normals, rule)
    k = local_edge
    return bm.coupling[0, k], float(bm.stiffness[0, k, k]), float(bm.divergence[0, k])


# -- field evaluation -----------------------------------------------------------------

def evaluate_velocity(coords, signs, normals, loc_L, loc_R, bary, enrichment="rt0"):
    """Values (F, nq, 2) and gradients (F, nq, 2, 2) of a discrete velocity.

    ``loc_L`` holds the local P1c coefficients (F, 6), ``loc_R`` the local
    edge coefficients (F, 3).  ``enrichment`` selects whether the edge
    coefficients multiply RT0 functions or Bernardi-Raugel bubbles.
    """
    coords = np.asarray(coords, dtype=float)
    bary = np.asarray(bary, dtype=float)
    _, grads, _ = geometry(coords)
    UL = np.asarray(loc_L, dtype=float).reshape(-1, 3, 2)
    UR = np.asarray(loc_R, dtype=float)
    vals = np.einsum("qj,fja->fqa", bary, UL)
    grad = np.broadcast_to(np.einsum("fja,fjc->fac", UL, grads)[:, None],
                           (len(UL), len(bary), 2, 2)).copy()
    if enrichment == "rt0":
        scale = rt0_scale(coords, signs) * UR
        x = np.einsum("qk,fkd->fqd", bary, coords)
        vals += np.einsum("fk,fqkd->fqd", scale, x[:, :, None, :] - coords[:, None, :, :])
        grad += scale.sum(axis=1)[:, None, None, None] * np.eye(2)
    elif enrichment == "bubble":
        b = bubble_values(bary)
        gb = bubble_gradients(grads, bary)
        nk = np.asarray(normals, dtype=float) * UR[..., None]
        vals += np.einsum("qk,fka->fqa", b, nk)
        grad += np.einsum("fka,fqkc->fqac", nk, gb)
    else:
        raise ValueError(f"unknown enrichment {enrichment!r}")
    return vals, grad
