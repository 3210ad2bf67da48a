"""Interpolation operators: element means, RT0 flux interpolation, nodal P1c and Fortin."""

from __future__ import annotations

import numpy as np

from .assembly import DofMap
from .mesh import Mesh
from .quadrature import edge_quadrature, physical_points, quadrature


def _field(v, x, y) -> np.ndarray:
    vx, vy = v(x, y)
    return np.stack(np.broadcast_arrays(vx, vy), axis=-1).astype(float)


def project_p0(mesh: Mesh, q, rule=None) -> np.ndarray:
    """Elementwise L2 projection onto piecewise constants."""
    rule = rule or quadrature()
    x = physical_points(mesh.coords(), rule)
    vals = np.broadcast_to(q(x[..., 0], x[..., 1]), x.shape[:2])
    return vals @ rule.weights / rule.weights.sum()


def edge_fluxes(mesh: Mesh, v, npoints: int | None = None) -> np.ndarray:
    """Mean normal flux density (1/h_e) int_e v . n_e ds on every edge, shape (E,)."""
    t, w = edge_quadrature() if npoints is None else edge_quadrature(npoints)
    p0 = mesh.vertices[mesh.edges[:, 0]]
    p1 = mesh.vertices[mesh.edges[:, 1]]
    x = p0[:, None, :] + t[None, :, None] * (p1 - p0)[:, None, :]
    vals = _field(v, x[..., 0], x[..., 1])
    return np.einsum("eqd,ed,q->e", vals, mesh.normals, w)


def interp_rt0(mesh: Mesh, dofmap: DofMap, v, all_edges: bool = False) -> np.ndarray:
    """RT0 interpolant coefficients (normal-flux densities).

    Returns interior-edge coefficients ordered like the RT0 unknowns, or one
    coefficient per mesh edge when ``all_edges`` is set (useful for fields
    with nonzero boundary flux).
    """
    flux = edge_fluxes(mesh, v)
    if all_edges:
        return flux
    out = np.zeros(dofmap.nR)
    ids = dofmap.edge_index
    out[ids[ids >= 0]] = flux[ids >= 0]
    return out


def rt0_divergence(mesh: Mesh, edge_coeffs) -> np.ndarray:
    """Elementwise divergence of an RT0 field given one coefficient per mesh edge."""
    u = np.asarray(edge_coeffs)[mesh.tri_edges]
    return (mesh.tri_signs * mesh.edge_lengths[mesh.tri_edges] * u).sum(axis=1) / mesh.areas


def interp_p1(mesh: Mesh, dofmap: DofMap, v) -> np.ndarray:
    """Nodal P1c interpolation at interior vertices, interleaved (x, y)."""
    inner = dofmap.vertex_index >= 0
    vals = _field(v, mesh.vertices[inner, 0], mesh.vertices[inner, 1])
    out = np.zeros(dofmap.n1)
    k = dofmap.vertex_index[inner]
    out[2 * k] = vals[:, 0]
    out[2 * k + 1] = vals[:, 1]
    return out


def nodal_values(mesh: Mesh, dofmap: DofMap, U_L) -> np.ndarray:
    """(V, 2) vertex values of a P1c coefficient vector, zero on the boundary."""
    nodal = np.zeros((mesh.n_vertices, 2))
    inner = dofmap.vertex_index >= 0
    k = dofmap.vertex_index[inner]
    nodal[inner] = np.stack([U_L[2 * k], U_L[2 * k + 1]], axis=1)
    return nodal


def fortin(mesh: Mesh, dofmap: DofMap, v):
    """Fortin interpolant Pi v = Pi1 v + PiR (v - Pi1 v): (P1c coefficients, RT0 coefficients)."""
    U_L = interp_p1(mesh, dofmap, v)
    nodal = nodal_values(mesh, dofmap, U_L)
    t, w = edge_quadrature()
    e0, e1 = mesh.edges[:, 0], mesh.edges[:, 1]
    p0, p1 = mesh.vertices[e0], mesh.vertices[e1]
    x = p0[:, None, :] + t[None, :, None] * (p1 - p0)[:, None, :]
    # the P1c interpolant is linear along each edge
    lin = nodal[e0][:, None, :] + t[None, :, None] * (nodal[e1] - nodal[e0])[:, None, :]
    vals = _field(v, x[..., 0], x[..., 1]) - lin
    flux = np.einsum("eqd,ed,q->e", vals, mesh.normals, w)
    U_R = np.zeros(dofmap.nR)
    ids = dofmap.edge_index
    U_R[ids[ids >= 0]] = flux[ids >= 0]
    return U_L, U_R
