"""The 1D benchmark problems: advection, Poisson, compressible Euler.

Sweeps refine a uniform mesh ladder n = n0 * 2^level.  Time-dependent cases
pick their step by the harness rule: start from the CFL-limited candidate,
then halve until the finest-level error moves by no more than 1% under a
further halving, so reported orders measure the spatial discretisation.
"""

from __future__ import annotations

import time

import numpy as np

from ..fuseops import (
    EulerFlux,
    VelocityField,
    apply_flux_divergence,
    assemble_first_derivative_1d,
    assemble_laplacian_1d,
    impose_dirichlet,
)
from ..meshkit import build_mesh_1d
from ..refelem import NodeKind, ReferenceElement
from ..timeloop import IntegratorConfig, SemiDiscreteSystem, integrate, sparse_lu_solve
from ..vnstab import operator_spectral_radius
from .metrics import cell_average_sum, conservation_drift, relative_linf_error
from .report import ConvergenceReport, ConvergenceRow

PAPER_DT = 1e-4
CFL_SAFETY = 2.0


def advection_exact(x: np.ndarray) -> np.ndarray:
    return np.exp(-100.0 * (x - 0.5) ** 2)


def poisson_exact(x: np.ndarray) -> np.ndarray:
    return np.exp(np.sin(2.0 * np.pi * x)) - 1.0


def poisson_forcing(x: np.ndarray) -> np.ndarray:
    """f = -u'' for u = exp(sin(2 pi x)) - 1."""
    w = 2.0 * np.pi
    s, c = np.sin(w * x), np.cos(w * x)
    return w * w * np.exp(s) * (s - c * c)


def euler_exact_state(x: np.ndarray, t: float = 0.0, gamma: float = 1.4) -> np.ndarray:
    """Density pulse advecting at unit speed under constant pressure.

    With uniform velocity and pressure the Euler equations transport the
    density passively, so the exact state at time t is the initial profile
    shifted by t (periodically).
    """
    xs = np.mod(x - t, 1.0)
    rho = 1.0 + 0.2 * np.exp(-100.0 * (xs - 0.5) ** 2)
    v = np.ones_like(rho)
    pressure = np.ones_like(rho)
    state = np.empty(x.shape + (3,))
    state[..., 0] = rho
    state[..., 1] = rho * v
    state[..., 2] = pressure / (gamma - 1.0) + 0.5 * rho * v * v
    return state


def _halving_dt(run_error, dt0: float, rel_tol: float = 0.01, dt_floor: float = PAPER_DT):
    """Largest dt (from dt0 downward by halving) whose temporal error is small.

    ``run_error(dt)`` evaluates the finest-level error; dt is accepted when a
    further halving moves the error by at most ``rel_tol`` relatively.
    Returns (dt, error_at_dt).
    """
    dt = dt0
    err = run_error(dt)
    while dt > dt_floor:
        err_half = run_error(0.5 * dt)
        if abs(err - err_half) <= rel_tol * abs(err_half):
            return dt, err
        dt, err = 0.5 * dt, err_half
    return dt, err


def _round_down_dt(dt: float) -> float:
    """Round down to one significant digit so reported dt values stay tidy."""
    mag = 10.0 ** np.floor(np.log10(dt))
    return float(np.floor(dt / mag) * mag)


def run_advection_1d(
    p: int,
    n: int,
    dt: float = PAPER_DT,
    t_final: float = 1.0,
    with_spectral_radius: bool = True,
    operator=None,
) -> ConvergenceRow:
    """Advect the Gaussian pulse once around the periodic unit interval."""
    t0 = time.perf_counter()
    mesh = build_mesh_1d(n, (0.0, 1.0), periodic=True)
    ref = ReferenceElement.build(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, p)
    a_op = operator if operator is not None else assemble_first_derivative_1d(
        mesh, ref, VelocityField.constant(1.0)
    )
    x = mesh.dof_coords(ref)
    u0 = advection_exact(x)
    system = SemiDiscreteSystem(rhs=lambda t, u: -(a_op @ u))
    u = integrate(system, u0, IntegratorConfig(scheme="rk4", dt=dt, t_final=t_final))
    err = relative_linf_error(u, u0)
    extra = {}
    if p >= 2:
        sums = [cell_average_sum(u0, mesh, p), cell_average_sum(u, mesh, p)]
        extra["conservation_drift"] = conservation_drift(sums)
    rho = operator_spectral_radius(a_op) if with_spectral_radius else None
    return ConvergenceRow(
        case="advection1d",
        p=p,
        level=int(np.log2(n)),
        dofs=mesh.dof_count(p),
        errors={"u": err},
        spectral_radius=rho,
        wall_time_s=time.perf_counter() - t0,
        extra=extra,
    )


def sweep_advection_1d(p: int, levels: int, n0: int = 8, dt: float | None = None) -> ConvergenceReport:
    ns = [n0 * 2**lvl for lvl in range(levels)]
    ops = {}
    for n in ns:
        mesh = build_mesh_1d(n, (0.0, 1.0), periodic=True)
        ref = ReferenceElement.build(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, p)
        ops[n] = assemble_first_derivative_1d(mesh, ref, VelocityField.constant(1.0))
    if dt is None:
        rho = operator_spectral_radius(ops[ns[-1]])
        dt0 = _round_down_dt(min(2e-3, CFL_SAFETY / rho))
        dt, _ = _halving_dt(
            lambda d: run_advection_1d(p, ns[-1], dt=d, with_spectral_radius=False,
                                       operator=ops[ns[-1]]).errors["u"],
            dt0,
        )
    report = ConvergenceReport(case="advection1d", p=p, config={"dt": dt, "T": 1.0})
    for n in ns:
        report.add(run_advection_1d(p, n, dt=dt, operator=ops[n]))
    return report


def run_poisson_1d(p: int, n: int, with_spectral_radius: bool = True) -> ConvergenceRow:
    """Steady Dirichlet Poisson solve with the manufactured exponential."""
    t0 = time.perf_counter()
    mesh = build_mesh_1d(n, (0.0, 1.0), periodic=False)
    ref = ReferenceElement.build(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, p)
    lap = assemble_laplacian_1d(mesh, ref)
    x = mesh.dof_coords(ref)
    ndof = mesh.dof_count(p)
    op = -1.0 * lap
    rhs = poisson_forcing(x)
    bdofs = np.array([0, ndof - 1])
    op, rhs = impose_dirichlet(op, rhs, bdofs, poisson_exact(x[bdofs]))
    u = sparse_lu_solve(op, rhs)
    err = relative_linf_error(u, poisson_exact(x))
    rho = operator_spectral_radius(op) if with_spectral_radius else None
    return ConvergenceRow(
        case="poisson1d",
        p=p,
        level=int(np.log2(n)),
        dofs=ndof,
        errors={"u": err},
        spectral_radius=rho,
        wall_time_s=time.perf_counter() - t0,
    )


def sweep_poisson_1d(p: int, levels: int, n0: int = 8) -> ConvergenceReport:
    report = ConvergenceReport(case="poisson1d", p=p)
    for lvl in range(levels):
        report.add(run_poisson_1d(p, n0 * 2**lvl))
    return report


def run_euler_1d(
    p: int,
    n: int,
    dt: float = PAPER_DT,
    t_final: float = 0.12,
    gamma: float = 1.4,
) -> ConvergenceRow:
    """Characteristically upwinded Euler run of the advecting density pulse."""
    t0 = time.perf_counter()
    mesh = build_mesh_1d(n, (0.0, 1.0), periodic=True)
    ref = ReferenceElement.build(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, p)
    flux = EulerFlux(gamma=gamma)
    x = mesh.dof_coords(ref)
    u0 = euler_exact_state(x, 0.0, gamma)
    system = SemiDiscreteSystem(
        rhs=lambda t, u: -apply_flux_divergence(u, flux, mesh, ref)
    )
    u = integrate(system, u0, IntegratorConfig(scheme="rk4", dt=dt, t_final=t_final))
    exact = euler_exact_state(x, t_final, gamma)
    err = max(
        relative_linf_error(u[:, c], exact[:, c]) for c in range(3)
    )
    return ConvergenceRow(
        case="euler1d",
        p=p,
        level=int(np.log2(n)),
        dofs=mesh.dof_count(p),
        errors={"state": err},
        wall_time_s=time.perf_counter() - t0,
    )


def sweep_euler_1d(p: int, levels: int, n0: int = 8, dt: float | None = None,
                   gamma: float = 1.4) -> ConvergenceReport:
    ns = [n0 * 2**lvl for lvl in range(levels)]
    if dt is None:
        mesh = build_mesh_1d(ns[-1], (0.0, 1.0), periodic=True)
        ref = ReferenceElement.build(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, p)
        a_op = assemble_first_derivative_1d(mesh, ref, VelocityField.constant(1.0))
        speed = EulerFlux(gamma).max_wavespeed(
            euler_exact_state(mesh.dof_coords(ref), 0.0, gamma)
        )
        rho = operator_spectral_radius(a_op) * speed
        dt0 = _round_down_dt(min(2e-3, CFL_SAFETY / rho))
        dt, _ = _halving_dt(
            lambda d: run_euler_1d(p, ns[-1], dt=d, gamma=gamma).errors["state"],
            dt0,
            dt_floor=PAPER_DT,
        )
    report = ConvergenceReport(case="euler1d", p=p, config={"dt": dt, "T": 0.12})
    for n in ns:
        report.add(run_euler_1d(p, n, dt=dt, gamma=gamma))
    return report
