"""Alternative constructions of the 1D operator for the equivalence checks.

Both builds follow their own formulation rather than reusing the upwind
assembly, so comparing them against ``assemble_first_derivative_1d`` is a
mechanical verification and not a tautology.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..meshkit.mesh1d import Mesh1D, build_mesh_1d
from ..refelem import (
    NodeKind,
    ReferenceElement,
    lagrange_basis_values,
)
from .sparse import GlobalSparseOperator
from .velocity import VelocityField


def sd_operator_1d(p: int, n: int, h: float = 1.0) -> GlobalSparseOperator:
    """Spectral-difference operator equivalent to the upwinded scheme.

    Constant velocity +1 on a periodic uniform mesh of n elements of width h.
    Flux points are the p+1 Gauss-Legendre-plus-endpoints nodes; the p
    solution points sit on the flux points excluding the leftmost one, so
    solution points never repeat across elements.  The numerical flux at each
    interface is the upwind (left element) value; each element's degree-p
    flux polynomial interpolates that upwind value at its left end plus its
    own solution values, and is differentiated at the solution points.

    Global dofs follow the shared-node layout: dof (k, i) = k*p + i mod n*p
    for i = 1..p, matching the upwind assembly on the same mesh.
    """
    if p < 1 or n < 1:
        raise ValueError("need p >= 1 and n >= 1")
    ref = ReferenceElement.build(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, p)
    flux_coords = ref.nodes.coords
    sol_coords = flux_coords[1:]
    # upwind interface value: the left element's degree-(p-1) solution
    # polynomial evaluated at its right endpoint
    eval_right = lagrange_basis_values(sol_coords, np.array([1.0]))[0]
    dmat = ref.diff_matrix * (2.0 / h)

    ndof = n * p
    rows, cols, vals = [], [], []
    for k in range(n):
        own = (k * p + np.arange(1, p + 1)) % ndof
        upstream = ((k - 1) % n) * p + np.arange(1, p + 1)
        upstream %= ndof
        for i in range(1, p + 1):
            dof = own[i - 1]
            # contribution through the interface flux value
            rows.extend([dof] * p)
            cols.extend(upstream)
            vals.extend(dmat[i, 0] * eval_right)
            # contributions of the element's own flux values
            rows.extend([dof] * p)
            cols.extend(own)
            vals.extend(dmat[i, 1:])
    return GlobalSparseOperator.from_coo(rows, cols, vals, (ndof, ndof))


def nodal_quadrature_weights(ref: ReferenceElement) -> np.ndarray:
    """Positive per-node weights for the nodally integrated formulation.

    The assembled operator is independent of the weight choice (each weight
    multiplies both the mass and the stiffness row of its node and cancels),
    but every weight must be nonzero.  Interpolatory weights are used when
    safely positive; on Gauss-Legendre-plus-endpoints nodes of degree >= 3
    they vanish at the endpoints (the interior nodes alone are a full Gauss
    rule), so equal weights stand in.
    """
    w = ref.weights
    if np.min(w) > 1e-8 * np.max(w):
        return w
    return np.full(ref.degree + 1, 2.0 / (ref.degree + 1))


def petrov_galerkin_parts(
    mesh: Mesh1D,
    ref: ReferenceElement,
    vel: VelocityField,
    weights: np.ndarray | None = None,
) -> tuple[np.ndarray, GlobalSparseOperator]:
    """Nodally integrated Petrov-Galerkin mass diagonal and stiffness.

    Test functions are the nodal basis functions with support restricted to
    the element upwind of the velocity at their node; all integrals use the
    solution nodes themselves as quadrature points, which collapses the mass
    matrix to the diagonal w_i * h_K / 2.
    """
    p = ref.degree
    if weights is None:
        weights = nodal_quadrature_weights(ref)
    else:
        weights = np.asarray(weights, dtype=float)
    if weights.shape != (p + 1,) or np.any(weights <= 0.0):
        raise ValueError("nodal integration weights must be positive")
    n = mesh.n_elements
    ids = mesh.dof_ids(p)
    coords = mesh.dof_coords(ref)
    ndof = mesh.dof_count(p)
    mass = np.zeros(ndof)
    rows, cols, vals = [], [], []

    def upwind_is_left(dof: int) -> bool:
        a = float(vel.at(np.array([coords[dof]]))[0])
        return a > 0.0

    for k in range(n):
        h_k = mesh.element_width(k)
        dmat = ref.diff_matrix * (2.0 / h_k)
        for i in range(p + 1):
            dof = ids[k, i]
            if i == 0:
                has_left = k > 0 or mesh.periodic
                active = (not has_left) or (not upwind_is_left(dof))
            elif i == p:
                has_right = k < n - 1 or mesh.periodic
                active = (not has_right) or upwind_is_left(dof)
            else:
                active = True
            if not active:
                continue
            scale = 0.5 * h_k * weights[i]
            mass[dof] += scale
            rows.extend([dof] * (p + 1))
            cols.extend(ids[k])
            vals.extend(scale * dmat[i])
    return mass, GlobalSparseOperator.from_coo(rows, cols, vals, (ndof, ndof))


def petrov_galerkin_operator_1d(
    mesh: Mesh1D,
    ref: ReferenceElement,
    vel: VelocityField,
    weights: np.ndarray | None = None,
) -> GlobalSparseOperator:
    """Mass-inverse times stiffness of the nodally integrated formulation."""
    mass, stiff = petrov_galerkin_parts(mesh, ref, vel, weights)
    return GlobalSparseOperator(matrix=sp.diags(1.0 / mass) @ stiff.matrix)


def build_periodic_uniform(p: int, n: int, h: float = 1.0):
    """Mesh/reference pair used by the equivalence checks."""
    mesh = build_mesh_1d(n, (0.0, n * h), periodic=True)
    ref = ReferenceElement.build(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, p)
    return mesh, ref
