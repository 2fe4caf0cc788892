"""Meshes, degree-of-freedom maps, and mesh file I/O."""

from .mesh1d import Mesh1D, build_mesh_1d
from .quadmesh import (
    MeshError,
    QuadMesh,
    build_circle_mesh,
    build_perturbed_quad_mesh,
    build_structured_quad_mesh,
    evaluate_mapping,
    refine_uniform,
)
from .dofmap import DofClass, DofMap, build_dof_map, check_shared_dof_coords
from .meshio import MeshFileError, load_mesh, meshes_equal, save_mesh

__all__ = [
    "Mesh1D",
    "build_mesh_1d",
    "MeshError",
    "QuadMesh",
    "build_structured_quad_mesh",
    "build_perturbed_quad_mesh",
    "build_circle_mesh",
    "refine_uniform",
    "evaluate_mapping",
    "DofClass",
    "DofMap",
    "build_dof_map",
    "check_shared_dof_coords",
    "MeshFileError",
    "load_mesh",
    "meshes_equal",
    "save_mesh",
]
