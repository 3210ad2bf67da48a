"""Conforming triangulations with edge topology and geometric caches.

Every edge carries one global unit normal, the clockwise rotation of the
direction from its lower-indexed to its higher-indexed vertex.  A triangle
stores, per local edge, the sign ``+1`` if that global normal points out of
the triangle and ``-1`` otherwise.  Local edge ``k`` is the edge opposite
local vertex ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class MeshError(ValueError):
    """Raised for triangulations that cannot be turned into a valid Mesh."""


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray         # (V, 2)
    triangles: np.ndarray        # (F, 3), counter-clockwise
    edges: np.ndarray            # (E, 2), lo < hi
    tri_edges: np.ndarray        # (F, 3), local edge k is opposite vertex k
    tri_signs: np.ndarray        # (F, 3), +1 iff global normal is outward
    edge_boundary: np.ndarray    # (E,) bool
    vertex_boundary: np.ndarray  # (V,) bool
    areas: np.ndarray            # (F,)
    diameters: np.ndarray        # (F,), longest edge
    edge_lengths: np.ndarray     # (E,)
    normals: np.ndarray          # (E, 2)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def h(self) -> float:
        return float(self.diameters.max())

    def coords(self) -> np.ndarray:
        """Vertex coordinates per triangle, shape (F, 3, 2)."""
        return self.vertices[self.triangles]

    def edge_triangles(self) -> np.ndarray:
        """(E, 2) array of adjacent triangles; -1 pads boundary edges.

        Column 0 holds the triangle where the global normal is outward.
        """
        out = -np.ones((self.n_edges, 2), dtype=np.int64)
        tri = np.repeat(np.arange(self.n_triangles), 3)
        e = self.tri_edges.ravel()
        col = (self.tri_signs.ravel() < 0).astype(np.int64)
        out[e, col] = tri
        return out


def _freeze(*arrays: np.ndarray) -> None:
    for a in arrays:
        a.setflags(write=False)


def build_topology(vertices, triangles) -> Mesh:
    """Build a Mesh from raw vertex coordinates and triangle connectivity.

    Clockwise triangles are reoriented.  Degenerate triangles, duplicate
    triangles, non-manifold edges, overlapping neighbours and hanging
    (T-junction) vertices are rejected with a MeshError.
    """
    verts = np.array(vertices, dtype=float)
    tris = np.array(triangles, dtype=np.int64)
    if verts.ndim != 2 or verts.shape[1] != 2:
        raise MeshError(f"vertices must have shape (V, 2), got {verts.shape}")
    if tris.ndim != 2 or tris.shape[1] != 3 or len(tris) == 0:
        raise MeshError(f"triangles must have shape (F, 3), got {tris.shape}")
    if tris.min() < 0 or tris.max() >= len(verts):
        raise MeshError("triangle references a vertex index out of range")
    if np.any(tris[:, 0] == tris[:, 1]) or np.any(tris[:, 1] == tris[:, 2]) \
            or np.any(tris[:, 0] == tris[:, 2]):
        raise MeshError("triangle with repeated vertex")
    _, counts = np.unique(np.sort(tris, axis=1), axis=0, return_counts=True)
    if np.any(counts > 1):
        raise MeshError("duplicate triangles in input")

    p = verts[tris]
    area2 = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
             - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    scale = np.ptp(verts, axis=0).max() if len(verts) > 1 else 1.0
    bad = np.abs(area2) <= 1e-14 * scale**2
    if np.any(bad):
        raise MeshError(f"zero-area triangle(s) at index {np.flatnonzero(bad)[:5].tolist()}")
    cw = area2 < 0
    tris = tris.copy()
    tris[cw, 1], tris[cw, 2] = tris[cw, 2].copy(), tris[cw, 1].copy()
    areas = 0.5 * np.abs(area2)

    # local edge k joins vertices k+1 and k+2
    a = tris[:, [1, 2, 0]]
    b = tris[:, [2, 0, 1]]
    keys = np.stack([np.minimum(a, b), np.maximum(a, b)], axis=-1).reshape(-1, 2)
    edges, inverse, owners = np.unique(keys, axis=0, return_inverse=True,
                                       return_counts=True)
    inverse = inverse.reshape(-1)
    if np.any(owners > 2):
        where = edges[owners > 2][0].tolist()
        raise MeshError(f"non-manifold edge {where} shared by {owners.max()} triangles")
    tri_edges = inverse.reshape(-1, 3)

    d = verts[edges[:, 1]] - verts[edges[:, 0]]
    lengths = np.hypot(d[:, 0], d[:, 1])
    normals = np.stack([d[:, 1], -d[:, 0]], axis=1) / lengths[:, None]

    mid = 0.5 * (verts[edges[tri_edges, 0]] + verts[edges[tri_edges, 1]])
    outward = mid - verts[tris]
    tri_signs = np.where(np.einsum("fkd,fkd->fk", normals[tri_edges], outward) > 0,
                         1, -1).astype(np.int64)

    edge_boundary = owners == 1
    sign_sum = np.zeros(len(edges), dtype=np.int64)
    np.add.at(sign_sum, tri_edges.ravel(), tri_signs.ravel())
    if np.any(sign_sum[~edge_boundary] != 0):
        raise MeshError("adjacent triangles overlap (interior edge with equal signs)")

    vertex_boundary = np.zeros(len(verts), dtype=bool)
    vertex_boundary[edges[edge_boundary].ravel()] = True
    _check_hanging_vertices(verts, edges[edge_boundary], lengths[edge_boundary])

    diameters = lengths[tri_edges].max(axis=1)
    mesh = Mesh(verts, tris, edges, tri_edges, tri_signs, edge_boundary,
                vertex_boundary, areas, diameters, lengths, normals)
    _freeze(*(getattr(mesh, f) for f in mesh.__dataclass_fields__))
    return mesh


def _check_hanging_vertices(verts, bedges, blengths, chunk=256):
    # a T-junction leaves the long edge single-owned with a vertex inside it
    for start in range(0, len(bedges), chunk):
        e = bedges[start:start + chunk]
        p0 = verts[e[:, 0]][:, None, :]
        d = (verts[e[:, 1]] - verts[e[:, 0]])[:, None, :]
        L = blengths[start:start + chunk, None]
        rel = verts[None, :, :] - p0
        t = np.einsum("evd,evd->ev", rel, d) / L**2
        dist = np.abs(rel[..., 0] * d[..., 1] - rel[..., 1] * d[..., 0]) / L
        hit = (t > 1e-10) & (t < 1 - 1e-10) & (dist < 1e-10 * L)
        if np.any(hit):
            ei, vi = np.argwhere(hit)[0]
            raise MeshError(f"hanging vertex {vi} lies inside edge "
                            f"{e[ei].tolist()} (non-conforming T-junction)")


def generate_structured(n: int) -> Mesh:
    """Uniform n x n mesh of the unit square, diagonals from lower left to upper right."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    x = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(x, x)
    vertices = np.stack([X.ravel(), Y.ravel()], axis=1)
    i, j = np.meshgrid(np.arange(n), np.arange(n))
    v00 = (j * (n + 1) + i).ravel()
    v10, v01, v11 = v00 + 1, v00 + n + 1, v00 + n + 2
    triangles = np.stack([np.stack([v00, v10, v11], axis=1),
                          np.stack([v00, v11, v01], axis=1)], axis=1).reshape(-1, 3)
    return build_topology(vertices, triangles)


@dataclass(frozen=True)
class ShapeMetrics:
    h: float
    min_angle: float    # degrees
    shape_ratio: float  # max h_T / min inradius


def shape_metrics(mesh: Mesh) -> ShapeMetrics:
    L = mesh.edge_lengths[mesh.tri_edges]          # side opposite vertex k
    a2 = L**2
    # angle at vertex k from the law of cosines
    cos = (a2[:, [1, 2, 0]] + a2[:, [2, 0, 1]] - a2) / (2 * L[:, [1, 2, 0]] * L[:, [2, 0, 1]])
    angles = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
    inradius = 2 * mesh.areas / L.sum(axis=1)
    return ShapeMetrics(h=mesh.h, min_angle=float(angles.min()),
                        shape_ratio=float(mesh.diameters.max() / inradius.min()))


def read_mesh(path) -> Mesh:
    """Read the plain-text node/element format written by :func:`write_mesh`."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            rows.append(line.split())
    if not rows:
        raise MeshError(f"{path}: empty mesh file")
    try:
        nv, _, nf = (int(t) for t in rows[0][:3])
        vertices = np.array(rows[1:1 + nv], dtype=float)
        triangles = np.array(rows[1 + nv:1 + nv + nf], dtype=np.int64)
    except ValueError as exc:
        raise MeshError(f"{path}: malformed mesh file ({exc})") from None
    if vertices.shape != (nv, 2) or triangles.shape != (nf, 3):
        raise MeshError(f"{path}: header announces {nv} vertices / {nf} triangles, "
                        f"found {vertices.shape} / {triangles.shape}")
    return build_topology(vertices, triangles)


def write_mesh(mesh: Mesh, path) -> None:
    with open(path, "w") as fh:
        fh.write("# V E F\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_edges} {mesh.n_triangles}\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")
