"""Degree-of-freedom numbering and block assembly.

The block system follows the layout

    [ A_RR   A_RL   . ]   velocity on interior edges (RT0 or bubbles)
    [ A_RL^T A_LL   . ]   velocity at interior vertices (P1c)
    [ G_R^T  G_L^T  0 ]   one pressure per triangle

where the A blocks carry the viscosity and G holds b(v, q) = (div v, q)
without it.  Boundary vertices and edges are excluded from the numbering,
which imposes u = 0 (and v.n = 0 for RT0) on the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .fe_spaces import bubble_matrices, bubble_values, element_matrices, rt0_scale
from .mesh import Mesh
from .quadrature import QuadratureRule, physical_points, quadrature

SCHEMES = ("full", "perturbed", "bernardi-raugel")
DIM = 2


@dataclass(frozen=True)
class DofMap:
    vertex_index: np.ndarray  # (V,) interior vertex number or -1
    edge_index: np.ndarray    # (E,) interior edge number or -1
    n1: int
    nR: int
    nP: int
    vel_dofs: np.ndarray      # (F, 6) global P1c indices, -1 on the boundary
    edge_dofs: np.ndarray     # (F, 3) global edge indices, -1 on the boundary

    def local_velocity(self, U_L) -> np.ndarray:
        """Gather P1c coefficients per triangle (F, 6), zero on the boundary."""
        ext = np.append(np.asarray(U_L, dtype=float), 0.0)
        return ext[self.vel_dofs]

    def local_edges(self, U_R) -> np.ndarray:
        ext = np.append(np.asarray(U_R, dtype=float), 0.0)
        return ext[self.edge_dofs]


def build_dofmap(mesh: Mesh) -> DofMap:
    interior_v = ~mesh.vertex_boundary
    vidx = -np.ones(mesh.n_vertices, dtype=np.int64)
    vidx[interior_v] = np.arange(interior_v.sum())
    interior_e = ~mesh.edge_boundary
    eidx = -np.ones(mesh.n_edges, dtype=np.int64)
    eidx[interior_e] = np.arange(interior_e.sum())

    tv = vidx[mesh.triangles]
    vel = np.stack([2 * tv, 2 * tv + 1], axis=-1).reshape(-1, 6)
    vel[np.repeat(tv < 0, 2, axis=1)] = -1
    return DofMap(vidx, eidx, int(2 * interior_v.sum()), int(interior_e.sum()),
                  mesh.n_triangles, vel, eidx[mesh.tri_edges])


@dataclass(frozen=True)
class StabConfig:
    kind: str = "JD"
    alpha: float = 1.0
    alpha_T: Optional[np.ndarray] = None  # per triangle
    alpha_e: Optional[np.ndarray] = None  # per global edge

    def __post_init__(self):
        kind = self.kind.upper().replace("^", "")
        if kind not in ("J0", "JD"):
            raise ValueError(f"unknown stabilization kind {self.kind!r} (expected J0 or JD)")
        object.__setattr__(self, "kind", kind)
        if not self.alpha > 0:
            raise ValueError(f"stabilization parameter must be positive, got {self.alpha}")
        for name in ("alpha_T", "alpha_e"):
            value = getattr(self, name)
            if value is not None:
                value = np.asarray(value, dtype=float)
                if np.any(~(value > 0)):
                    raise ValueError(f"{name} must be strictly positive")
                object.__setattr__(self, name, value)

    def element_alpha(self, mesh: Mesh) -> np.ndarray:
        if self.alpha_T is None:
            return np.full(mesh.n_triangles, self.alpha)
        return np.broadcast_to(self.alpha_T, (mesh.n_triangles,))

    def edge_alpha(self, mesh: Mesh) -> np.ndarray:
        if self.alpha_e is None:
            return np.full(mesh.n_edges, self.alpha)
        return np.broadcast_to(self.alpha_e, (mesh.n_edges,))


def scatter(rows, cols, vals, shape) -> sp.csr_matrix:
    """Sum element contributions into a CSR matrix, dropping negative indices."""
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    R = np.broadcast_to(rows[:, :, None], vals.shape)
    C = np.broadcast_to(cols[:, None, :], vals.shape)
    keep = (R >= 0) & (C >= 0)
    A = sp.coo_matrix((vals[keep], (R[keep], C[keep])), shape=shape).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def scatter_vector(idx, vals, n) -> np.ndarray:
    idx = np.asarray(idx).ravel()
    vals = np.asarray(vals).ravel()
    keep = idx >= 0
    return np.bincount(idx[keep], weights=vals[keep], minlength=n).astype(float)


def _diagonal_mass(mesh: Mesh, lm) -> np.ndarray:
    """(Phi_e, Phi_e) over the full two-triangle support, per global edge."""
    return np.bincount(mesh.tri_edges.ravel(),
                       weights=np.einsum("fkk->fk", lm.m_RR).ravel(),
                       minlength=mesh.n_edges)


def assemble_stab(mesh: Mesh, dofmap: DofMap, stab: StabConfig, lm=None) -> sp.csr_matrix:
    """Stabilization matrix on the RT0 unknowns (no viscosity factor)."""
    lm = lm or element_matrices(mesh.coords(), mesh.tri_signs)
    n = dofmap.nR
    if stab.kind == "J0":
        w = stab.element_alpha(mesh) / mesh.diameters**2
        return scatter(dofmap.edge_dofs, dofmap.edge_dofs, w[:, None, None] * lm.m_RR, (n, n))
    ids = dofmap.edge_index
    interior = ids >= 0
    diag = (stab.edge_alpha(mesh) / mesh.edge_lengths**2 * _diagonal_mass(mesh, lm))
    out = np.zeros(n)
    out[ids[interior]] = diag[interior]
    return sp.diags(out, format="csr")


def build_drr(mesh: Mesh, dofmap: DofMap, stab: StabConfig, nu: float, lm=None) -> sp.csr_matrix:
    """Diagonal RT0 block of the perturbed form: nu [(d+1)(grad Phi_e, grad Phi_e) + J^D]."""
    if stab.kind != "JD":
        raise ValueError("the diagonally perturbed form is defined with the diagonal "
                         "stabilization J^D only; J0 cannot be used here")
    lm = lm or element_matrices(mesh.coords(), mesh.tri_signs)
    grad_diag = np.bincount(mesh.tri_edges.ravel(),
                            weights=np.einsum("fkk->fk", lm.a_RR).ravel(),
                            minlength=mesh.n_edges)
    stab_diag = stab.edge_alpha(mesh) / mesh.edge_lengths**2 * _diagonal_mass(mesh, lm)
    ids = dofmap.edge_index
    interior = ids >= 0
    out = np.zeros(dofmap.nR)
    out[ids[interior]] = nu * ((DIM + 1) * grad_diag + stab_diag)[interior]
    return sp.diags(out, format="csr")


@dataclass
class BlockSystem:
    A_LL: sp.csr_matrix
    A_RL: sp.csr_matrix
    A_RR: sp.csr_matrix
    G_L: sp.csr_matrix
    G_R: sp.csr_matrix
    F_L: np.ndarray
    F_R: np.ndarray
    c: np.ndarray
    nu: float
    scheme: str
    meta: dict = field(default_factory=dict)

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.A_RR.shape[0], self.A_LL.shape[0], self.G_L.shape[1]


Force = Callable[[np.ndarray, np.ndarray], tuple]


def load_vectors(mesh: Mesh, dofmap: DofMap, f: Optional[Force], enrichment="rt0",
                 rule: QuadratureRule | None = None):
    """(F_L, F_R): the load (f, v) for P1c and edge basis functions."""
    if f is None:
        return np.zeros(dofmap.n1), np.zeros(dofmap.nR)
    rule = rule or quadrature()
    coords = mesh.coords()
    x = physical_points(coords, rule)
    fx, fy = f(x[..., 0], x[..., 1])
    fq = np.stack(np.broadcast_arrays(fx, fy), axis=-1).astype(float)
    w = 2 * mesh.areas[:, None] * rule.weights[None, :]
    wf = w[..., None] * fq
    loc_L = np.einsum("fqa,qj->fja", wf, rule.points).reshape(-1, 6)
    if enrichment == "rt0":
        scale = rt0_scale(coords, mesh.tri_signs)
        phi = scale[:, None, :, None] * (x[:, :, None, :] - coords[:, None, :, :])
        loc_R = np.einsum("fqa,fqka->fk", wf, phi)
    else:
        b = bubble_values(rule.points)
        n = mesh.normals[mesh.tri_edges]
        loc_R = np.einsum("fqa,qk,fka->fk", wf, b, n)
    return (scatter_vector(dofmap.vel_dofs, loc_L, dofmap.n1),
            scatter_vector(dofmap.edge_dofs, loc_R, dofmap.nR))


def assemble_system(mesh: Mesh, dofmap: DofMap, stab: Optional[StabConfig], nu: float,
                    f: Optional[Force] = None, scheme: str = "full",
                    rule: QuadratureRule | None = None) -> BlockSystem:
    """Assemble the Stokes block system for one of the supported schemes.

    ``full`` uses a_h with the given stabilization, ``perturbed`` replaces the
    RT0 block by the diagonal D_RR (J^D only), ``bernardi-raugel`` uses edge
    bubbles in the edge slots and takes no stabilization.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if scheme == "bernardi-raugel" and stab is not None:
        raise ValueError("the Bernardi-Raugel scheme takes no stabilization")
    if scheme != "bernardi-raugel" and stab is None:
        raise ValueError(f"scheme {scheme!r} requires a stabilization")
    if not nu > 0:
        raise ValueError(f"viscosity must be positive, got {nu}")

    coords = mesh.coords()
    lm = element_matrices(coords, mesh.tri_signs)
    n1, nR, nP = dofmap.n1, dofmap.nR, dofmap.nP
    vd, ed = dofmap.vel_dofs, dofmap.edge_dofs
    pd = np.arange(nP)[:, None]

    A_LL = nu * scatter(vd, vd, lm.a_LL, (n1, n1))
    G_L = scatter(vd, pd, lm.g_L[:, :, None], (n1, nP))
    if scheme == "bernardi-raugel":
        bm = bubble_matrices(coords, mesh.normals[mesh.tri_edges])
        A_RL = nu * scatter(ed, vd, bm.coupling, (nR, n1))
        A_RR = nu * scatter(ed, ed, bm.stiffness, (nR, nR))
        G_R = scatter(ed, pd, bm.divergence[:, :, None], (nR, nP))
        F_L, F_R = load_vectors(mesh, dofmap, f, "bubble", rule)
    else:
        A_RL = nu * scatter(ed, vd, lm.a_RL, (nR, n1))
        if scheme == "perturbed":
            A_RR = build_drr(mesh, dofmap, stab, nu, lm)
        else:
            A_RR = nu * (scatter(ed, ed, lm.a_RR, (nR, nR))
                         + assemble_stab(mesh, dofmap, stab, lm)).tocsr()
        G_R = scatter(ed, pd, lm.g_R[:, :, None], (nR, nP))
        F_L, F_R = load_vectors(mesh, dofmap, f, "rt0", rule)
    return BlockSystem(A_LL, A_RL, A_RR, G_L, G_R, F_L, F_R,
                       mesh.areas.copy(), float(nu), scheme,
                       meta={"stab": stab})
