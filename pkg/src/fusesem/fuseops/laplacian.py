"""Dimension dispatch for the split Laplacian."""

from __future__ import annotations

from ..meshkit.mesh1d import Mesh1D
from ..meshkit.quadmesh import QuadMesh
from .assemble1d import assemble_laplacian_1d
from .assemble2d import assemble_laplacian_2d
from .sparse import GlobalSparseOperator
from .velocity import VelocityField, random_unit_velocity


def assemble_laplacian(mesh, ref, dofmap=None, split_vel=None) -> GlobalSparseOperator:
    """Split second-derivative operator approximating +Lap.

    1D defaults to split velocity +1; 2D defaults to the seeded random unit
    vector.  Equations for the negative Laplacian use the negated result.
    """
    if isinstance(mesh, Mesh1D):
        return assemble_laplacian_1d(mesh, ref, split_vel)
    if isinstance(mesh, QuadMesh):
        if dofmap is None:
            raise ValueError("2D Laplacian assembly needs a dof map")
        if split_vel is None:
            split_vel = random_unit_velocity()
        return assemble_laplacian_2d(mesh, dofmap, ref, split_vel)
    raise TypeError(f"unsupported mesh type {type(mesh).__name__}")
