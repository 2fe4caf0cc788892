"""Assembled face-upwinded derivative operators."""

from .sparse import GlobalSparseOperator, SingularOperatorError, impose_dirichlet
from .velocity import VelocityField, random_unit_velocity
from .assemble1d import assemble_first_derivative_1d, assemble_laplacian_1d
from .assemble2d import (
    AssemblyError,
    assemble_directional_derivative_2d,
    assemble_laplacian_2d,
    build_upwind_table,
    upwind_elements_2d,
)
from .laplacian import assemble_laplacian
from .equivalence import (
    petrov_galerkin_operator_1d,
    petrov_galerkin_parts,
    sd_operator_1d,
)
from .fluxdiv import (
    EulerFlux,
    ScalarFlux,
    StateError,
    apply_flux_divergence,
)

__all__ = [
    "GlobalSparseOperator",
    "SingularOperatorError",
    "impose_dirichlet",
    "VelocityField",
    "random_unit_velocity",
    "assemble_first_derivative_1d",
    "assemble_laplacian_1d",
    "AssemblyError",
    "assemble_directional_derivative_2d",
    "assemble_laplacian_2d",
    "build_upwind_table",
    "upwind_elements_2d",
    "assemble_laplacian",
    "sd_operator_1d",
    "petrov_galerkin_operator_1d",
    "petrov_galerkin_parts",
    "ScalarFlux",
    "EulerFlux",
    "StateError",
    "apply_flux_divergence",
]
