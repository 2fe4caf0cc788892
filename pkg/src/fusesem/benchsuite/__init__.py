"""Benchmark problems with exact solutions and convergence reporting."""

from .metrics import (
    cell_averages,
    cell_average_sum,
    conservation_drift,
    observed_order,
    relative_linf_error,
)
from .report import ConvergenceReport, ConvergenceRow, write_report_csv
from .cases1d import (
    advection_exact,
    euler_exact_state,
    poisson_forcing,
    poisson_exact,
    run_advection_1d,
    run_euler_1d,
    run_poisson_1d,
    sweep_advection_1d,
    sweep_euler_1d,
    sweep_poisson_1d,
)
from .cases2d import (
    run_advection_2d,
    run_poisson_circle,
    run_taylor_green,
    sweep_advection_2d,
    sweep_poisson_circle,
    sweep_taylor_green,
    taylor_green_exact,
)

__all__ = [
    "cell_averages",
    "cell_average_sum",
    "conservation_drift",
    "observed_order",
    "relative_linf_error",
    "ConvergenceReport",
    "ConvergenceRow",
    "write_report_csv",
    "advection_exact",
    "euler_exact_state",
    "poisson_forcing",
    "poisson_exact",
    "run_advection_1d",
    "run_euler_1d",
    "run_poisson_1d",
    "sweep_advection_1d",
    "sweep_euler_1d",
    "sweep_poisson_1d",
    "run_advection_2d",
    "run_poisson_circle",
    "run_taylor_green",
    "sweep_advection_2d",
    "sweep_poisson_circle",
    "sweep_taylor_green",
    "taylor_green_exact",
]
