"""Divergence-free P1c+RT0-P0 finite elements for the Stokes equations on triangles."""

from .assembly import BlockSystem, DofMap, StabConfig, assemble_system, build_dofmap
from .condensation import CondensedSystem, condense, solve_condensed
from .mesh import Mesh, MeshError, build_topology, generate_structured, read_mesh, write_mesh
from .solver import Solution, SolverError, solve_system, to_global

__all__ = [
    "BlockSystem", "CondensedSystem", "DofMap", "Mesh", "MeshError", "Solution",
    "SolverError", "StabConfig", "assemble_system", "build_dofmap", "build_topology",
    "condense", "generate_structured", "read_mesh", "solve_condensed", "solve_system",
    "to_global", "write_mesh",
]
