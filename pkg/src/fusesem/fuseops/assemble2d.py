"""Directional derivative operators on quad meshes with face upwinding.

Derivatives live on tensor-product lines of each element's reference square,
combined through the inverse mapping Jacobian.  A node interior to an
element always uses its own element's stencil; a node shared between
elements uses the volume-weighted average of the stencils of the elements
upwind of the velocity at that node.
"""

from __future__ import annotations

import numpy as np

from ..meshkit.dofmap import DofClass, DofMap
from ..meshkit.quadmesh import MappingEval, QuadMesh, element_areas, mapping_at_nodes
from ..refelem import ReferenceElement
from .sparse import GlobalSparseOperator
from .velocity import VelocityField

ALIGN_TOL = 1e-10


class AssemblyError(RuntimeError):
    """Raised when an element mapping prevents operator assembly."""


def _reference_velocity(jac: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Pull a physical direction back to the reference frame (J^-1 a)."""
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    inv = np.array([[jac[1, 1], -jac[0, 1]], [-jac[1, 0], jac[0, 0]]]) / det
    return inv @ a


def upwind_elements_2d(
    dof: int,
    vel: VelocityField,
    mesh: QuadMesh,
    dofmap: DofMap,
    mapping: MappingEval | None = None,
    areas: np.ndarray | None = None,
) -> list:
    """Owning elements upwind of the velocity at a shared node, with weights.

    An element is upwind when the velocity, pulled back to its reference
    square, can be traced backwards from the node into the square; a
    componentwise sign test with a relative alignment tolerance keeps
    face-parallel velocities selecting both neighbours.  Weights are the
    element areas normalised over the selected set.  A zero velocity, or a
    velocity pointing into the domain at a physical boundary, degrades to
    all owners with volume weights.
    """
    p = dofmap.p
    if mapping is None:
        mapping = mapping_at_nodes(mesh, p)
    if areas is None:
        areas = element_areas(mesh, p)
    owners = dofmap.owners[dof]
    a = vel.at(dofmap.coords[dof][None, :])[0]
    selected = []
    if np.linalg.norm(a) > 0.0:
        for e, loc in owners:
            ar = _reference_velocity(mapping.jac[e, loc], a)
            tol = ALIGN_TOL * np.linalg.norm(ar)
            i2, i1 = divmod(loc, p + 1)
            ok = True
            if i1 == 0:
                ok &= ar[0] <= tol
            if i1 == p:
                ok &= ar[0] >= -tol
            if i2 == 0:
                ok &= ar[1] <= tol
            if i2 == p:
                ok &= ar[1] >= -tol
            if ok:
                selected.append(e)
    if not selected:
        selected = [e for e, _ in owners]
    total = sum(areas[e] for e in selected)
    return [(e, areas[e] / total) for e in selected]


def build_upwind_table(
    mesh: QuadMesh,
    dofmap: DofMap,
    vel: VelocityField,
    mapping: MappingEval | None = None,
) -> dict:
    """Upwind selection for every face and corner dof."""
    if mapping is None:
        mapping = mapping_at_nodes(mesh, dofmap.p)
    areas = element_areas(mesh, dofmap.p)
    table = {}
    for d in range(dofmap.total_dofs):
        if dofmap.classification[d] == DofClass.INTERIOR:
            continue
        table[d] = upwind_elements_2d(d, vel, mesh, dofmap, mapping, areas)
    return table


def _local_derivative_matrices(
    mesh: QuadMesh, ref: ReferenceElement, mapping: MappingEval, direction: str
) -> np.ndarray:
    """Per-element dense matrices of physical derivatives at the tensor nodes."""
    p = ref.degree
    nn = (p + 1) ** 2
    d01 = 2.0 * ref.diff_matrix  # reference square is [0,1]
    eye = np.eye(p + 1)
    dz1 = np.kron(eye, d01)
    dz2 = np.kron(d01, eye)
    col = {"x": 0, "y": 1}[direction]
    bad = np.nonzero(np.any(mapping.det <= 0.0, axis=1))[0]
    if bad.size:
        raise AssemblyError(f"singular mapping Jacobian in element {int(bad[0])}")
    c1 = mapping.jac_inv[:, :, 0, col]  # d z1 / d x_col at each node
    c2 = mapping.jac_inv[:, :, 1, col]
    return c1[:, :, None] * dz1[None, :, :] + c2[:, :, None] * dz2[None, :, :]


def assemble_directional_derivative_2d(
    mesh: QuadMesh,
    dofmap: DofMap,
    ref: ReferenceElement,
    vel: VelocityField,
    direction: str,
    upwind_table: dict | None = None,
    mapping: MappingEval | None = None,
) -> GlobalSparseOperator:
    """Assemble the global upwinded d/dx or d/dy operator."""
    if direction not in ("x", "y"):
        raise ValueError("direction must be 'x' or 'y'")
    p = ref.degree
    if mapping is None:
        mapping = mapping_at_nodes(mesh, p)
    if upwind_table is None:
        upwind_table = build_upwind_table(mesh, dofmap, vel, mapping)
    local = _local_derivative_matrices(mesh, ref, mapping, direction)
    nn = (p + 1) ** 2
    ndof = dofmap.total_dofs
    rows, cols, vals = [], [], []

    owner_index = {}
    for d, sel in upwind_table.items():
        for e, w in sel:
            owner_index.setdefault(d, {})[e] = w

    for e in range(mesh.n_elements):
        dofs = dofmap.elem_dofs[e]
        for loc in range(nn):
            d = int(dofs[loc])
            if dofmap.classification[d] == DofClass.INTERIOR:
                w = 1.0
            else:
                w = owner_index.get(d, {}).get(e)
                if w is None:
                    continue
            rows.extend([d] * nn)
            cols.extend(dofs)
            vals.extend(w * local[e, loc])
    return GlobalSparseOperator.from_coo(rows, cols, vals, (ndof, ndof))


def assemble_laplacian_2d(
    mesh: QuadMesh,
    dofmap: DofMap,
    ref: ReferenceElement,
    split_vel: VelocityField,
) -> GlobalSparseOperator:
    """Split Laplacian D- . G+ approximating +Lap; use the negation for -Lap.

    The gradient components are upwinded by the split velocity, the
    divergence components by its negation.
    """
    a = split_vel.at(np.zeros((1, 2)))[0]
    down = VelocityField.constant(-a)
    mapping = mapping_at_nodes(mesh, ref.degree)
    up_tab = build_upwind_table(mesh, dofmap, split_vel, mapping)
    down_tab = build_upwind_table(mesh, dofmap, down, mapping)
    gx = assemble_directional_derivative_2d(mesh, dofmap, ref, split_vel, "x", up_tab, mapping)
    gy = assemble_directional_derivative_2d(mesh, dofmap, ref, split_vel, "y", up_tab, mapping)
    dx = assemble_directional_derivative_2d(mesh, dofmap, ref, down, "x", down_tab, mapping)
    dy = assemble_directional_derivative_2d(mesh, dofmap, ref, down, "y", down_tab, mapping)
    return (dx @ gx) + (dy @ gy)
