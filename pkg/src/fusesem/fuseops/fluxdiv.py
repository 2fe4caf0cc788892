"""Nonlinear flux divergence with characteristic upwinding (1D).

Interior nodes take the spectral derivative of the nodal flux interpolant on
their own element.  At shared nodes the scalar path picks the side by the
sign of the local wave speed a(u) = F'(u); the system path diagonalises the
flux Jacobian, upwinds each characteristic flux derivative by the sign of
its eigenvalue, and transforms back.  Wave speed zero takes the right
(downwind-labelled) element, matching the linear operator's convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..meshkit.mesh1d import Mesh1D
from ..refelem import ReferenceElement


class StateError(RuntimeError):
    """The state left the hyperbolic regime (complex or defective waves)."""


@dataclass(frozen=True)
class ScalarFlux:
    """Scalar conservation-law flux F(u) with wave speed a(u) = F'(u)."""

    flux: callable
    speed: callable

    n_components = 1

    @classmethod
    def linear(cls, a: float) -> "ScalarFlux":
        return cls(flux=lambda u: a * u, speed=lambda u: np.full_like(u, a))


@dataclass(frozen=True)
class EulerFlux:
    """Compressible Euler flux in conserved variables (rho, rho v, rho E)."""

    gamma: float = 1.4

    n_components = 3

    def primitive(self, u: np.ndarray):
        rho = u[..., 0]
        v = u[..., 1] / rho
        pressure = (self.gamma - 1.0) * (u[..., 2] - 0.5 * rho * v * v)
        return rho, v, pressure

    def flux(self, u: np.ndarray) -> np.ndarray:
        rho, v, pressure = self.primitive(u)
        out = np.empty_like(u)
        out[..., 0] = u[..., 1]
        out[..., 1] = u[..., 1] * v + pressure
        out[..., 2] = v * (u[..., 2] + pressure)
        return out

    def eigensystem(self, state: np.ndarray):
        """Analytic eigendecomposition of dF/du at one state.

        Returns (eigenvalues (v-c, v, v+c), right eigenvector matrix, its
        inverse).  Raises StateError when the sound speed is not real.
        """
        rho, v, pressure = self.primitive(state)
        if rho <= 0.0 or pressure <= 0.0:
            raise StateError(
                f"hyperbolicity lost: rho={rho:.3g}, pressure={pressure:.3g}"
            )
        c = np.sqrt(self.gamma * pressure / rho)
        enthalpy = (state[2] + pressure) / rho
        lam = np.array([v - c, v, v + c])
        right = np.array(
            [
                [1.0, 1.0, 1.0],
                [v - c, v, v + c],
                [enthalpy - v * c, 0.5 * v * v, enthalpy + v * c],
            ]
        )
        return lam, right, np.linalg.inv(right)

    def max_wavespeed(self, u: np.ndarray) -> float:
        rho, v, pressure = self.primitive(u)
        if np.any(pressure <= 0.0) or np.any(rho <= 0.0):
            raise StateError("hyperbolicity lost: non-positive density or pressure")
        return float(np.max(np.abs(v) + np.sqrt(self.gamma * pressure / rho)))


def apply_flux_divergence(
    u: np.ndarray, system, mesh: Mesh1D, ref: ReferenceElement
) -> np.ndarray:
    """dF/dx of the nodal flux at every global dof.

    ``u`` has shape (ndof,) for scalar systems or (ndof, n_components).
    """
    p = ref.degree
    n = mesh.n_elements
    ids = mesh.dof_ids(p)
    scalar = system.n_components == 1
    uarr = u[..., None] if scalar else u
    fl = system.flux(u)
    flarr = fl[..., None] if scalar else fl

    # per-element derivative of the flux interpolant at all element nodes
    widths = np.diff(mesh.element_breaks)
    fel = flarr[ids]  # (n, p+1, nc)
    dper = np.einsum("ij,kjc->kic", ref.diff_matrix, fel)
    dper *= (2.0 / widths)[:, None, None]

    out = np.empty_like(uarr)
    for k in range(n):
        out[ids[k, 1:p]] = dper[k, 1:p]

    breaks = range(0, n) if mesh.periodic else range(0, n + 1)
    for b in breaks:
        left = b - 1 if (b > 0 or mesh.periodic) else None
        right = b if b < n else None
        if mesh.periodic:
            left %= n
        dof = ids[right, 0] if right is not None else ids[left, p]
        d_left = dper[left, p] if left is not None else None
        d_right = dper[right, 0] if right is not None else None
        if scalar:
            a = float(np.atleast_1d(system.speed(uarr[dof, 0]))[0])
            use_left = a > 0.0 if (left is not None and right is not None) else d_right is None
            out[dof] = d_left if use_left else d_right
        else:
            lam, right_vecs, left_vecs = system.eigensystem(uarr[dof])
            if d_left is None:
                out[dof] = d_right
            elif d_right is None:
                out[dof] = d_left
            else:
                w_left = left_vecs @ d_left
                w_right = left_vecs @ d_right
                w = np.where(lam > 0.0, w_left, w_right)
                out[dof] = right_vecs @ w
    return out[..., 0] if scalar else out
