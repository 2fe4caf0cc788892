"""Error norms, observed orders, and conservation diagnostics."""

from __future__ import annotations

import warnings

import numpy as np

from ..meshkit.mesh1d import Mesh1D
from ..refelem import gauss_legendre_weights


def relative_linf_error(u: np.ndarray, u_exact: np.ndarray) -> float:
    """max |u - u_exact| / max |u_exact| over the solution dofs."""
    u = np.asarray(u)
    u_exact = np.asarray(u_exact)
    if u.shape != u_exact.shape:
        raise ValueError("fields have different shapes")
    scale = float(np.max(np.abs(u_exact)))
    if scale == 0.0:
        raise ValueError("exact field has zero maximum norm")
    return float(np.max(np.abs(u - u_exact)) / scale)


def observed_order(errors, refinement_factor: float = 2.0) -> list:
    """log(error ratio) / log(refinement factor) between consecutive levels."""
    errors = list(errors)
    if len(errors) < 2:
        raise ValueError("need at least two refinement levels")
    if any(e <= 0.0 for e in errors):
        raise ValueError("orders are undefined for non-positive errors")
    return [
        float(np.log(errors[i] / errors[i + 1]) / np.log(refinement_factor))
        for i in range(len(errors) - 1)
    ]


def cell_averages(u: np.ndarray, mesh: Mesh1D, p: int) -> np.ndarray:
    """Per-element averages from the interior-node Gauss rule.

    On the stabilising node set the p-1 interior nodes are exactly the Gauss
    points, so for p >= 3 the average of the degree-p element polynomial is
    recovered exactly.  p = 2 has a single interior point (a rule exact only
    to degree 1), so its "average" is the midpoint value; it is still the
    conserved functional of the scheme, but no longer the true mean.
    """
    if p < 2:
        raise ValueError("cell averages need at least one interior node (p >= 2)")
    if p == 2:
        warnings.warn(
            "p=2 cell averages use a one-point rule and are not exact element means",
            stacklevel=2,
        )
    _, w = gauss_legendre_weights(p - 1)
    ids = mesh.dof_ids(p)
    return np.asarray(u)[ids[:, 1:p]] @ (0.5 * w)


def cell_average_sum(u: np.ndarray, mesh: Mesh1D, p: int) -> float:
    return float(np.sum(cell_averages(u, mesh, p)))


def conservation_drift(history) -> float:
    """Relative drift of the conserved sum over a run: |last-first|/|first|."""
    history = list(history)
    if len(history) < 2:
        raise ValueError("need the sums at least at start and end")
    first, last = history[0], history[-1]
    if first == 0.0:
        raise ValueError("initial conserved sum is zero; drift undefined")
    return abs(last - first) / abs(first)
