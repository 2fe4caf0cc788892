"""The 2D benchmark problems: rotating advection, Poisson on the disk,
and the decaying Taylor-Green vortex.

Each case fixes its mesh recipe at level 0 and refines uniformly, so the
perturbed mesh keeps the same geometric defects across levels.  The split
operators of a run share one seeded random direction, recorded in the
report config.
"""

from __future__ import annotations

import time

import numpy as np
import scipy.sparse as sp

from ..fuseops import (
    GlobalSparseOperator,
    VelocityField,
    assemble_directional_derivative_2d,
    assemble_laplacian_2d,
    build_upwind_table,
    impose_dirichlet,
    random_unit_velocity,
)
from ..meshkit import (
    build_circle_mesh,
    build_dof_map,
    build_perturbed_quad_mesh,
    build_structured_quad_mesh,
    refine_uniform,
)
from ..meshkit.quadmesh import SIDE_CORNERS, evaluate_mapping, mapping_at_nodes
from ..refelem import NodeKind, ReferenceElement
from ..timeloop import (
    IntegratorConfig,
    SemiDiscreteSystem,
    integrate,
    newton_solve,
)
from ..vnstab import operator_spectral_radius
from .cases1d import CFL_SAFETY, _halving_dt, _round_down_dt
from .metrics import relative_linf_error
from .report import ConvergenceReport, ConvergenceRow

DEFAULT_SEED = 20240101

_SIDE_CENTER = {0: (0.5, 0.0), 1: (1.0, 0.5), 2: (0.5, 1.0), 3: (0.0, 0.5)}
_SIDE_NORMAL = {0: (0.0, -1.0), 1: (1.0, 0.0), 2: (0.0, 1.0), 3: (-1.0, 0.0)}


def _rotation_velocity() -> VelocityField:
    return VelocityField.from_callable(
        lambda pts: np.stack([-pts[:, 1], pts[:, 0]], axis=1), dim=2
    )


def advection2d_initial(pts: np.ndarray) -> np.ndarray:
    return np.exp(-20.0 * ((pts[:, 0] + 0.3) ** 2 + pts[:, 1] ** 2))


def _advection2d_mesh(level: int, kind: str, p: int, seed: int):
    if kind == "structured":
        mesh = build_structured_quad_mesh(4, 4, (-1.0, 1.0, -1.0, 1.0), p_geo=p)
    elif kind == "perturbed":
        mesh = build_perturbed_quad_mesh(4, 4, (-1.0, 1.0, -1.0, 1.0), seed=seed, p_geo=p)
    else:
        raise ValueError(f"unknown mesh kind {kind!r}")
    for _ in range(level):
        mesh = refine_uniform(mesh)
    return mesh


def _inflow_dofs(mesh, dofmap, vel: VelocityField) -> np.ndarray:
    """Boundary dofs where the velocity strictly enters the domain.

    The test is per dof: a . n < 0 against the outward face normal, pulled
    back to the reference square.  Dofs where the flow is tangential
    (a . n = 0) stay live and take their value from the upwind element; a
    zero condition there would sit downstream of the boundary flow line and
    destabilise the tangential transport.
    """
    from ..meshkit.quadmesh import side_node_indices

    mapping = mapping_at_nodes(mesh, dofmap.p)
    dofs = set()
    for e, s in mesh.boundary_faces():
        n_ref = np.array(_SIDE_NORMAL[s])
        for idx in side_node_indices(dofmap.p, s):
            d = int(dofmap.elem_dofs[e, idx])
            a = vel.at(dofmap.coords[d][None, :])[0]
            jac = mapping.jac[e, idx]
            det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
            inv = np.array([[jac[1, 1], -jac[0, 1]], [-jac[1, 0], jac[0, 0]]]) / det
            a_ref = inv @ a
            norm = np.linalg.norm(a_ref)
            if norm > 0.0 and float(np.dot(a_ref, n_ref)) < -1e-12 * norm:
                dofs.add(d)
    return np.array(sorted(dofs), dtype=np.int64)


def _advection2d_operator(mesh, p: int):
    dofmap = build_dof_map(mesh, p)
    ref = ReferenceElement.build(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, p)
    vel = _rotation_velocity()
    mapping = mapping_at_nodes(mesh, p)
    table = build_upwind_table(mesh, dofmap, vel, mapping)
    dx = assemble_directional_derivative_2d(mesh, dofmap, ref, vel, "x", table, mapping)
    dy = assemble_directional_derivative_2d(mesh, dofmap, ref, vel, "y", table, mapping)
    a_at = vel.at(dofmap.coords)
    flux_op = GlobalSparseOperator(
        matrix=dx.matrix @ sp.diags(a_at[:, 0]) + dy.matrix @ sp.diags(a_at[:, 1])
    )
    inflow = _inflow_dofs(mesh, dofmap, vel)
    return dofmap, flux_op, inflow


def run_advection_2d(
    p: int,
    level: int,
    mesh_kind: str = "structured",
    dt: float = 1e-3,
    seed: int = DEFAULT_SEED,
    with_spectral_radius: bool = True,
    setup=None,
) -> ConvergenceRow:
    """Rotate the off-centre Gaussian once around the origin (T = 2 pi)."""
    t0 = time.perf_counter()
    if setup is None:
        mesh = _advection2d_mesh(level, mesh_kind, p, seed)
        dofmap, flux_op, inflow = _advection2d_operator(mesh, p)
    else:
        dofmap, flux_op, inflow = setup
    u0 = advection2d_initial(dofmap.coords)
    u0[inflow] = 0.0

    def rhs(t, u):
        out = -(flux_op @ u)
        out[inflow] = 0.0
        return out

    system = SemiDiscreteSystem(rhs=rhs)
    u = integrate(system, u0, IntegratorConfig(scheme="rk4", dt=dt, t_final=2.0 * np.pi))
    err = relative_linf_error(u, u0)
    rho = operator_spectral_radius(flux_op) if with_spectral_radius else None
    return ConvergenceRow(
        case=f"advection2d-{mesh_kind}",
        p=p,
        level=level,
        dofs=dofmap.total_dofs,
        errors={"u": err},
        spectral_radius=rho,
        wall_time_s=time.perf_counter() - t0,
        seed=seed,
    )


def sweep_advection_2d(
    p: int,
    levels: int,
    mesh_kind: str = "structured",
    dt: float | None = None,
    seed: int = DEFAULT_SEED,
) -> ConvergenceReport:
    setups = []
    for lvl in range(levels):
        mesh = _advection2d_mesh(lvl, mesh_kind, p, seed)
        setups.append(_advection2d_operator(mesh, p))
    if dt is None:
        rho = operator_spectral_radius(setups[-1][1])
        dt0 = _round_down_dt(min(4e-3, CFL_SAFETY / rho))
        dt, _ = _halving_dt(
            lambda d: run_advection_2d(p, levels - 1, mesh_kind, dt=d, seed=seed,
                                       with_spectral_radius=False,
                                       setup=setups[-1]).errors["u"],
            dt0,
            dt_floor=5e-4,
        )
    report = ConvergenceReport(
        case=f"advection2d-{mesh_kind}", p=p,
        config={"dt": dt, "T": "2pi", "seed": seed},
    )
    for lvl in range(levels):
        report.add(run_advection_2d(p, lvl, mesh_kind, dt=dt, seed=seed,
                                    setup=setups[lvl]))
    return report


def poisson_circle_exact(pts: np.ndarray) -> np.ndarray:
    return np.exp(1.0 - pts[:, 0] ** 2 - pts[:, 1] ** 2)


def poisson_circle_forcing(pts: np.ndarray) -> np.ndarray:
    """f = -Lap u for u = exp(1 - x^2 - y^2)."""
    r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
    return (4.0 - 4.0 * r2) * np.exp(1.0 - r2)


def run_poisson_circle(
    p: int,
    level: int,
    seed: int = DEFAULT_SEED,
    with_spectral_radius: bool = False,
    return_system: bool = False,
):
    """Dirichlet Poisson solve on the isoparametric disk mesh."""
    t0 = time.perf_counter()
    mesh = build_circle_mesh(p)
    for _ in range(level):
        mesh = refine_uniform(mesh)
    dofmap = build_dof_map(mesh, p)
    ref = ReferenceElement.build(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, p)
    lap = assemble_laplacian_2d(mesh, dofmap, ref, random_unit_velocity(seed))
    op = -1.0 * lap
    rhs = poisson_circle_forcing(dofmap.coords)
    bdofs = dofmap.dofs_on_boundary(mesh, tags={"circle"})
    op, rhs = impose_dirichlet(op, rhs, bdofs, poisson_circle_exact(dofmap.coords[bdofs]))
    from ..timeloop import sparse_lu_solve

    u = sparse_lu_solve(op, rhs)
    err = relative_linf_error(u, poisson_circle_exact(dofmap.coords))
    rho = operator_spectral_radius(op) if with_spectral_radius else None
    row = ConvergenceRow(
        case="poisson-circle",
        p=p,
        level=level,
        dofs=dofmap.total_dofs,
        errors={"u": err},
        spectral_radius=rho,
        wall_time_s=time.perf_counter() - t0,
        seed=seed,
    )
    if return_system:
        return row, op
    return row


def sweep_poisson_circle(p: int, levels: int, seed: int = DEFAULT_SEED) -> ConvergenceReport:
    report = ConvergenceReport(case="poisson-circle", p=p, config={"seed": seed})
    for lvl in range(levels):
        report.add(run_poisson_circle(p, lvl, seed=seed))
    return report


def taylor_green_exact(pts: np.ndarray, t: float, nu: float = 1.0, rho: float = 1.0):
    """Velocity components and pressure of the decaying vortex."""
    x, y = pts[:, 0], pts[:, 1]
    decay = np.exp(-2.0 * nu * t)
    u1 = np.sin(x) * np.cos(y) * decay
    u2 = -np.cos(x) * np.sin(y) * decay
    pressure = 0.25 * rho * (np.cos(2.0 * x) + np.cos(2.0 * y)) * decay * decay
    return u1, u2, pressure


class _TaylorGreenSystem:
    """Coupled velocity-pressure unknown with the constraint at the new level.

    Momentum rows are trapezoidal in the convective and viscous terms while
    the pressure gradient acts fully at the new time; the divergence rows
    constrain the new velocity.  One pressure dof is pinned to its analytic
    value to fix the periodic pressure nullspace.
    """

    def __init__(self, mesh, dofmap, ref, nu, rho_const, seed, pin_dof=None):
        self.nu = nu
        self.rho = rho_const
        if pin_dof is None:
            # The divergence rows are rank-deficient by one on the torus: the
            # interior-dof rows weighted by the tensor interior Gauss weights
            # telescope to zero (the discrete divergence theorem behind the
            # scheme's conservation).  The pin must replace a row inside that
            # dependent set, so pick the first tensor-interior dof.
            from ..meshkit.dofmap import DofClass

            interior = np.nonzero(dofmap.classification == DofClass.INTERIOR)[0]
            if interior.size == 0:
                raise ValueError("pressure pin needs an interior dof (p >= 2)")
            pin_dof = int(interior[0])
        self.pin = pin_dof
        split = random_unit_velocity(seed)
        down = VelocityField.constant(-split.at(np.zeros((1, 2)))[0])
        mapping = mapping_at_nodes(mesh, ref.degree)
        up_tab = build_upwind_table(mesh, dofmap, split, mapping)
        dn_tab = build_upwind_table(mesh, dofmap, down, mapping)
        self.gx = assemble_directional_derivative_2d(
            mesh, dofmap, ref, split, "x", up_tab, mapping).matrix
        self.gy = assemble_directional_derivative_2d(
            mesh, dofmap, ref, split, "y", up_tab, mapping).matrix
        self.dx = assemble_directional_derivative_2d(
            mesh, dofmap, ref, down, "x", dn_tab, mapping).matrix
        self.dy = assemble_directional_derivative_2d(
            mesh, dofmap, ref, down, "y", dn_tab, mapping).matrix
        self.lap = (self.dx @ self.gx + self.dy @ self.gy).tocsr()
        self.n = dofmap.total_dofs
        self.coords = dofmap.coords
        self.eye = sp.identity(self.n, format="csr")
        self.newton_evals = []

    def split_state(self, w):
        n = self.n
        return w[:n], w[n : 2 * n], w[2 * n :]

    def convection(self, u1, u2):
        return (sp.diags(u1) @ self.gx + sp.diags(u2) @ self.gy).tocsr()

    def momentum_terms(self, u1, u2):
        conv = self.convection(u1, u2)
        m1 = conv @ u1 - self.nu * (self.lap @ u1)
        m2 = conv @ u2 - self.nu * (self.lap @ u2)
        return conv, m1, m2

    def residual(self, w, w_old, t, dt):
        self.newton_evals[-1] += 1
        n = self.n
        u1, u2, pw = self.split_state(w)
        u1o, u2o, _ = self.split_state(w_old)
        _, m1, m2 = self.momentum_terms(u1, u2)
        _, m1o, m2o = self.momentum_terms(u1o, u2o)
        r = np.empty(3 * n)
        r[:n] = (u1 - u1o) / dt + 0.5 * (m1 + m1o) + (self.gx @ pw) / self.rho
        r[n : 2 * n] = (u2 - u2o) / dt + 0.5 * (m2 + m2o) + (self.gy @ pw) / self.rho
        r[2 * n :] = self.dx @ u1 + self.dy @ u2
        _, _, p_exact = taylor_green_exact(self.coords[self.pin : self.pin + 1],
                                           t + dt, self.nu, self.rho)
        r[2 * n + self.pin] = pw[self.pin] - p_exact[0]
        return r

    def jacobian(self, w, w_old, t, dt):
        n = self.n
        u1, u2, _ = self.split_state(w)
        conv = self.convection(u1, u2)
        a11 = self.eye / dt + 0.5 * (conv + sp.diags(self.gx @ u1)) - 0.5 * self.nu * self.lap
        a12 = 0.5 * sp.diags(self.gy @ u1)
        a21 = 0.5 * sp.diags(self.gx @ u2)
        a22 = self.eye / dt + 0.5 * (conv + sp.diags(self.gy @ u2)) - 0.5 * self.nu * self.lap
        a13 = self.gx / self.rho
        a23 = self.gy / self.rho
        c1 = self.dx.tolil(copy=True)
        c2 = self.dy.tolil(copy=True)
        c3 = sp.lil_matrix((n, n))
        c1[self.pin, :] = 0.0
        c2[self.pin, :] = 0.0
        c3[self.pin, self.pin] = 1.0
        return sp.bmat(
            [[a11, a12, a13], [a21, a22, a23], [c1.tocsr(), c2.tocsr(), c3.tocsr()]],
            format="csr",
        )


def run_taylor_green(
    p: int,
    level: int,
    dt: float = 1e-3,
    t_final: float = 0.1,
    nu: float = 1.0,
    rho_const: float = 1.0,
    seed: int = DEFAULT_SEED,
    newton_tol: float = 1e-8,
) -> ConvergenceRow:
    """Crank-Nicolson / Newton integration of the Taylor-Green vortex."""
    t0 = time.perf_counter()
    n_cells = 4 * 2**level
    mesh = build_structured_quad_mesh(
        n_cells, n_cells, (0.0, 2.0 * np.pi, 0.0, 2.0 * np.pi),
        periodic_x=True, periodic_y=True, p_geo=p,
    )
    dofmap = build_dof_map(mesh, p)
    ref = ReferenceElement.build(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, p)
    sys2d = _TaylorGreenSystem(mesh, dofmap, ref, nu, rho_const, seed)
    n = dofmap.total_dofs
    u1, u2, pressure = taylor_green_exact(dofmap.coords, 0.0, nu, rho_const)
    w = np.concatenate([u1, u2, pressure])

    t = 0.0
    steps = int(round(t_final / dt))
    newton_iters = []
    for _ in range(steps):
        sys2d.newton_evals.append(0)
        w_new, _ = newton_solve(
            lambda z: sys2d.residual(z, w, t, dt),
            lambda z: sys2d.jacobian(z, w, t, dt),
            np.zeros_like(w),
            tol=newton_tol,
        )
        newton_iters.append(sys2d.newton_evals[-1] - 1)
        w = w_new
        t += dt

    u1h, u2h, ph = sys2d.split_state(w)
    u1e, u2e, pe = taylor_green_exact(dofmap.coords, t, nu, rho_const)
    perr = ph - pe
    perr -= perr.mean()
    row = ConvergenceRow(
        case="taylor-green",
        p=p,
        level=level,
        dofs=3 * n,
        errors={
            "u1": relative_linf_error(u1h, u1e),
            "pressure": float(np.max(np.abs(perr)) / np.max(np.abs(pe))),
        },
        wall_time_s=time.perf_counter() - t0,
        seed=seed,
        extra={"max_newton_iters": max(newton_iters), "dt": dt},
    )
    return row


def sweep_taylor_green(p: int, levels: int, dt: float = 1e-3,
                       t_final: float = 0.1, seed: int = DEFAULT_SEED) -> ConvergenceReport:
    report = ConvergenceReport(
        case="taylor-green", p=p, config={"dt": dt, "T": t_final, "seed": seed}
    )
    for lvl in range(levels):
        report.add(run_taylor_green(p, lvl, dt=dt, t_final=t_final, seed=seed))
    return report
