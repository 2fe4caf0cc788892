"""Face-upwinded spectral element method on unstructured quadrilateral meshes.

Subpackages:
    refelem    reference-interval node sets and differentiation machinery
    meshkit    1D meshes, quad meshes, dof maps, mesh file I/O
    fuseops    assembled upwinded derivative operators and equivalences
    vnstab     von Neumann stability scans of the periodic operators
    timeloop   RK4 / Crank-Nicolson integrators, Newton, sparse LU
    benchsuite benchmark problems with exact solutions and convergence reports
"""

__version__ = "0.1.0"
