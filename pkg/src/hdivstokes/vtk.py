"""Legacy ASCII VTK output of a discrete Stokes solution on a triangle mesh."""

from __future__ import annotations

import numpy as np

from .assembly import DofMap
from .fe_spaces import evaluate_velocity
from .mesh import Mesh
from .quadrature import quadrature
from .solver import Solution

VTK_TRIANGLE = 5


def vertex_and_cell_velocity(mesh: Mesh, dofmap: DofMap, solution: Solution):
    """Velocity sampled at vertices (V, 2) and cell averages (F, 2).

    The RT0 part is discontinuous at vertices; vertex values average the
    traces of the incident triangles.
    """
    enrichment = "bubble" if solution.scheme == "bernardi-raugel" else "rt0"
    args = (mesh.coords(), mesh.tri_signs, mesh.normals[mesh.tri_edges],
            dofmap.local_velocity(solution.U_L), dofmap.local_edges(solution.U_R))
    corner, _ = evaluate_velocity(*args, np.eye(3), enrichment)
    acc = np.zeros((mesh.n_vertices, 2))
    count = np.bincount(mesh.triangles.ravel(), minlength=mesh.n_vertices)
    np.add.at(acc, mesh.triangles.ravel(), corner.reshape(-1, 2))
    rule = quadrature(2)
    vals, _ = evaluate_velocity(*args, rule.points, enrichment)
    cell = np.einsum("q,fqd->fd", rule.weights, vals) / rule.weights.sum()
    return acc / np.maximum(count, 1)[:, None], cell


def write_vtk(path, mesh: Mesh, dofmap: DofMap, solution: Solution,
              title: str = "Stokes solution") -> None:
    point_u, cell_u = vertex_and_cell_velocity(mesh, dofmap, solution)
    V, F = mesh.n_vertices, mesh.n_triangles
    lines = ["# vtk DataFile Version 2.0", title[:255], "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {V} double"]
    lines += [f"{x:.16e} {y:.16e} 0" for x, y in mesh.vertices]
    lines.append(f"CELLS {F} {4 * F}")
    lines += [f"3 {i} {j} {k}" for i, j, k in mesh.triangles]
    lines.append(f"CELL_TYPES {F}")
    lines += [str(VTK_TRIANGLE)] * F
    lines += [f"POINT_DATA {V}", "VECTORS velocity double"]
    lines += [f"{u:.16e} {v:.16e} 0" for u, v in point_u]
    lines += [f"CELL_DATA {F}", "SCALARS pressure double 1", "LOOKUP_TABLE default"]
    lines += [f"{p:.16e}" for p in solution.P]
    lines.append("VECTORS velocity_cell double")
    lines += [f"{u:.16e} {v:.16e} 0" for u, v in cell_u]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
