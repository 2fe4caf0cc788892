"""Reference interval machinery: node sets, Lagrange bases, derivatives, weights.

Everything here lives on the reference interval [-1, 1].  The node family that
stabilises the face-upwinded scheme is ``GAUSS_LEGENDRE_ENDPOINTS``: the p-1
interior Gauss-Legendre points plus the two endpoints.  Uniform and
Gauss-Lobatto distributions are provided for stability comparisons.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

_NEWTON_CAP = 100
_NEWTON_TOL = 1e-15


class NodeKind(enum.Enum):
    UNIFORM = "uniform"
    GAUSS_LOBATTO = "gauss-lobatto"
    GAUSS_LEGENDRE_ENDPOINTS = "gl-endpoints"


class RootFindingError(RuntimeError):
    """Newton iteration for polynomial roots failed to converge."""


def _legendre_and_derivative(n: int, x: np.ndarray):
    """Evaluate P_n and P_n' at x via the three-term recurrence."""
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev, np.zeros_like(x)
    p = x.copy()
    for k in range(1, n):
        p, p_prev = ((2 * k + 1) * x * p - k * p_prev) / (k + 1), p
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


def gauss_legendre_nodes(n: int) -> np.ndarray:
    """Roots of the Legendre polynomial P_n, ascending.

    Newton iteration from the Chebyshev initial guesses
    cos(pi (4i - 1) / (4n + 2)); accurate to ~1e-15 up to n ~ 20 and beyond.
    """
    if n < 1:
        raise ValueError(f"need n >= 1 Gauss-Legendre nodes, got {n}")
    i = np.arange(1, n + 1)
    x = -np.cos(np.pi * (4 * i - 1) / (4 * n + 2))
    for _ in range(_NEWTON_CAP):
        p, dp = _legendre_and_derivative(n, x)
        dx = p / dp
        x -= dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    else:
        raise RootFindingError(f"Legendre root Newton stalled for n={n}")
    # enforce the exact odd symmetry of the root set
    x = 0.5 * (x - x[::-1])
    if n % 2 == 1:
        x[n // 2] = 0.0
    return x


def gauss_legendre_weights(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and their standard quadrature weights on [-1, 1]."""
    x = gauss_legendre_nodes(n)
    _, dp = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    return x, w


def gauss_lobatto_nodes(p: int) -> np.ndarray:
    """The p+1 Gauss-Lobatto nodes: endpoints plus roots of P_p'."""
    if p < 1:
        raise ValueError(f"need degree p >= 1, got {p}")
    if p == 1:
        return np.array([-1.0, 1.0])
    # interior guesses: Chebyshev extrema
    i = np.arange(1, p)
    x = -np.cos(np.pi * i / p)
    for _ in range(_NEWTON_CAP):
        pn, dpn = _legendre_and_derivative(p, x)
        # P_p'' from the Legendre ODE: (1-x^2) P'' = 2x P' - p(p+1) P
        d2pn = (2.0 * x * dpn - p * (p + 1) * pn) / (1.0 - x * x)
        dx = dpn / d2pn
        x -= dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    else:
        raise RootFindingError(f"Lobatto root Newton stalled for p={p}")
    x = 0.5 * (x - x[::-1])
    if (p - 1) % 2 == 1:
        x[(p - 1) // 2] = 0.0
    return np.concatenate(([-1.0], x, [1.0]))


@dataclass(frozen=True)
class NodeSet:
    """p+1 node coordinates on [-1, 1], endpoints stored as exact +-1."""

    degree: int
    kind: NodeKind
    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.shape != (self.degree + 1,):
            raise ValueError("coordinate count must be degree + 1")
        if np.any(np.diff(c) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if c[0] != -1.0 or c[-1] != 1.0:
            raise ValueError("endpoints must be exactly -1 and +1")
        if np.max(np.abs(c + c[::-1])) > 1e-14:
            raise ValueError("node set must be symmetric about 0")
        object.__setattr__(self, "coords", c)

    @property
    def n_nodes(self) -> int:
        return self.degree + 1


def build_node_set(kind: NodeKind, p: int) -> NodeSet:
    """Construct the node distribution of the given family and degree."""
    if p < 1:
        raise ValueError(f"need degree p >= 1, got {p}")
    if kind is NodeKind.UNIFORM:
        coords = np.linspace(-1.0, 1.0, p + 1)
    elif kind is NodeKind.GAUSS_LOBATTO:
        coords = gauss_lobatto_nodes(p)
    elif kind is NodeKind.GAUSS_LEGENDRE_ENDPOINTS:
        # p = 1 degenerates to the plain endpoints
        interior = gauss_legendre_nodes(p - 1) if p >= 2 else np.empty(0)
        coords = np.concatenate(([-1.0], interior, [1.0]))
    else:
        raise ValueError(f"unknown node kind {kind!r}")
    coords[0], coords[-1] = -1.0, 1.0
    return NodeSet(degree=p, kind=kind, coords=coords)


def barycentric_weights(coords: np.ndarray) -> np.ndarray:
    """Weights for the barycentric Lagrange formulas, normalised to max 1."""
    x = np.asarray(coords, dtype=float)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / np.prod(diff, axis=1)
    return w / np.max(np.abs(w))


def lagrange_diff_from_coords(coords: np.ndarray) -> np.ndarray:
    """Differentiation matrix for Lagrange interpolation on arbitrary nodes.

    Built from barycentric weights with the negative-row-sum diagonal so
    constants are differentiated to exactly zero.  Intermediates use extended
    precision where available: uniform nodes around degree 20 produce entry
    ratios ~1e6 whose float64 pipeline errors would otherwise dominate.
    """
    x = np.asarray(coords, dtype=np.longdouble)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / np.prod(diff, axis=1)
    w = w / np.max(np.abs(w))
    d = (w[None, :] / w[:, None]) / diff
    np.fill_diagonal(d, 0.0)
    if np.max(np.abs(x + x[::-1])) < 1e-14:
        # symmetric nodes have an exactly centro-antisymmetric matrix
        d = 0.5 * (d - d[::-1, ::-1])
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -np.sum(d, axis=1))
    return np.asarray(d, dtype=np.float64)


def lagrange_diff_matrix(nodes: NodeSet) -> np.ndarray:
    """Matrix D with D[i, j] = dphi_j/dxi at node i."""
    return lagrange_diff_from_coords(nodes.coords)


def interpolatory_weights(nodes: NodeSet) -> np.ndarray:
    """Integrals of the Lagrange basis over [-1, 1] (interpolatory quadrature).

    Exact for polynomials through degree p; computed with a Gauss rule of
    more than enough points.
    """
    xq, wq = np.polynomial.legendre.leggauss(nodes.degree + 2)
    basis = lagrange_basis_values(nodes.coords, xq)
    return basis.T @ wq


def lagrange_basis_values(coords: np.ndarray, xi) -> np.ndarray:
    """Evaluate all Lagrange basis polynomials at points xi.

    Returns an array of shape (len(xi), len(coords)); exact delta property at
    the nodes themselves.
    """
    x = np.asarray(coords, dtype=float)
    pts = np.atleast_1d(np.asarray(xi, dtype=float))
    w = barycentric_weights(x)
    out = np.empty((pts.size, x.size))
    for k, t in enumerate(pts):
        d = t - x
        hit = np.nonzero(d == 0.0)[0]
        if hit.size:
            row = np.zeros(x.size)
            row[hit[0]] = 1.0
        else:
            row = (w / d) / np.sum(w / d)
        out[k] = row
    return out


def evaluate_lagrange(nodes: NodeSet, coeffs: np.ndarray, xi) -> np.ndarray | float:
    """Barycentric evaluation of the interpolant with nodal values ``coeffs``."""
    vals = lagrange_basis_values(nodes.coords, xi) @ np.asarray(coeffs, dtype=float)
    if np.isscalar(xi):
        return float(vals[0]) if vals.ndim == 1 else vals[0]
    return vals


@dataclass(frozen=True)
class ReferenceElement:
    """Node set with its differentiation matrix and interpolatory weights."""

    nodes: NodeSet
    diff_matrix: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    barycentric_weights: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, kind: NodeKind, p: int) -> "ReferenceElement":
        nodes = build_node_set(kind, p)
        return cls.from_nodes(nodes)

    @classmethod
    def from_nodes(cls, nodes: NodeSet) -> "ReferenceElement":
        return cls(
            nodes=nodes,
            diff_matrix=lagrange_diff_matrix(nodes),
            weights=interpolatory_weights(nodes),
            barycentric_weights=barycentric_weights(nodes.coords),
        )

    @property
    def degree(self) -> int:
        return self.nodes.degree

    def interior_gauss_weights(self) -> np.ndarray:
        """Standard Gauss weights of the p-1 interior nodes.

        For GAUSS_LEGENDRE_ENDPOINTS the interior nodes are exactly the
        (p-1)-point Gauss rule, so these weights integrate degree 2p-3
        polynomials exactly; used by the cell-average diagnostics.
        """
        if self.nodes.kind is not NodeKind.GAUSS_LEGENDRE_ENDPOINTS:
            raise ValueError("interior Gauss weights require gl-endpoints nodes")
        if self.degree < 2:
            raise ValueError("no interior nodes below degree 2")
        _, w = gauss_legendre_weights(self.degree - 1)
        return w
