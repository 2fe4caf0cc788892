"""Upwinded first-derivative and split second-derivative operators in 1D.

Interior solution nodes differentiate their own element's flux polynomial;
a node shared by two elements takes the spectral derivative from the element
upwind of the velocity there: the left element for a > 0, the right for
a <= 0.  Domain-boundary nodes of a non-periodic mesh fall back to their
only owner.
"""

from __future__ import annotations

import numpy as np

from ..meshkit.mesh1d import Mesh1D
from ..refelem import ReferenceElement
from .sparse import GlobalSparseOperator
from .velocity import VelocityField


def element_diff_matrix(mesh: Mesh1D, ref: ReferenceElement, k: int) -> np.ndarray:
    """Physical-space differentiation matrix of element k."""
    return ref.diff_matrix * (2.0 / mesh.element_width(k))


def assemble_first_derivative_1d(
    mesh: Mesh1D, ref: ReferenceElement, vel: VelocityField
) -> GlobalSparseOperator:
    """Assemble the global upwinded d/dx operator."""
    p = ref.degree
    n = mesh.n_elements
    ids = mesh.dof_ids(p)
    coords = mesh.dof_coords(ref)
    ndof = mesh.dof_count(p)
    rows, cols, vals = [], [], []

    def add_row(dof, elem, local, dmat):
        rows.extend([dof] * (p + 1))
        cols.extend(ids[elem])
        vals.extend(dmat[local])

    dmats = [element_diff_matrix(mesh, ref, k) for k in range(n)]
    for k in range(n):
        for i in range(1, p):
            add_row(ids[k, i], k, i, dmats[k])

    # one pass over the distinct element-boundary nodes
    breaks = range(0, n) if mesh.periodic else range(0, n + 1)
    for b in breaks:
        left = b - 1 if (b > 0 or mesh.periodic) else None
        right = b if b < n else None
        if mesh.periodic:
            left %= n
        dof = ids[right, 0] if right is not None else ids[left, p]
        a = float(vel.at(np.array([coords[dof]]))[0])
        use_left = a > 0.0 if (left is not None and right is not None) else right is None
        if use_left:
            add_row(dof, left, p, dmats[left])
        else:
            add_row(dof, right, 0, dmats[right])

    return GlobalSparseOperator.from_coo(rows, cols, vals, (ndof, ndof))


def assemble_laplacian_1d(
    mesh: Mesh1D, ref: ReferenceElement, split_vel: VelocityField | None = None
) -> GlobalSparseOperator:
    """Split second-derivative operator approximating +d2/dx2.

    The gradient stage is upwinded by the split velocity and the divergence
    stage by its negation, so the composition carries the upwind/downwind
    structure at every shared node.  Equations for -u'' use the negation.
    """
    if split_vel is None:
        split_vel = VelocityField.constant(1.0)
    a = split_vel.at(np.array([mesh.domain[0]]))
    up = assemble_first_derivative_1d(mesh, ref, split_vel)
    down = assemble_first_derivative_1d(mesh, ref, VelocityField.constant(-float(a[0])))
    return down @ up
