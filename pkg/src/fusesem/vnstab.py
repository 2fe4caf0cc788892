"""Von Neumann stability machinery for the periodic uniform-mesh operators.

On a uniform periodic mesh the global operator block-circulates over
elements: grouping each element's owned dofs (s_1 .. s_p, ascending) as U_k,
the action is A U_k = sum_m B_m U_{k+m}.  Substituting the wave ansatz
exp(i x xi) turns the operator into the p-by-p symbol

    M(xi) = sum_m B_m exp(i m h xi),

with h the element width, whose eigenvalues over xi in [0, 2*pi/h] decide
stability.  The first-derivative operator is stable when no eigenvalue has a
negative real part beyond tolerance; the split second-derivative scan uses
the negated symbol (the operator of the Poisson-sign equations), which the
stable node sets keep in the closed right half-plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .refelem import NodeKind, NodeSet, build_node_set, lagrange_diff_matrix

TOL_STAB = 1e-10


class EigensolverError(RuntimeError):
    """Dense or iterative eigenvalue computation failed to converge."""


@dataclass(frozen=True)
class SymbolBlocks:
    """Blocks B_m of a block-circulant operator on a uniform periodic mesh."""

    degree: int
    spacing: float
    blocks: tuple = field(repr=False)

    def offsets(self) -> list:
        return [m for m, _ in self.blocks]

    def block(self, m: int) -> np.ndarray:
        for off, b in self.blocks:
            if off == m:
                return b
        return np.zeros((self.degree, self.degree))

    def evaluate(self, xi: float) -> np.ndarray:
        """The symbol M(xi), a p-by-p complex matrix."""
        m = np.zeros((self.degree, self.degree), dtype=complex)
        for off, b in self.blocks:
            m += b * np.exp(1j * off * self.spacing * xi)
        return m

    def evaluate_many(self, xis: np.ndarray) -> np.ndarray:
        """Stacked symbols, shape (len(xis), p, p)."""
        out = np.zeros((len(xis), self.degree, self.degree), dtype=complex)
        for off, b in self.blocks:
            out += b[None, :, :] * np.exp(1j * off * self.spacing * np.asarray(xis))[
                :, None, None
            ]
        return out

    def __neg__(self) -> "SymbolBlocks":
        return SymbolBlocks(
            degree=self.degree,
            spacing=self.spacing,
            blocks=tuple((m, -b) for m, b in self.blocks),
        )


def first_derivative_symbol(nodes: NodeSet, h: float = 1.0) -> SymbolBlocks:
    """Symbol blocks of the upwinded d/dx operator, velocity +1.

    Equals the interior-element rows of the assembled operator with the
    element's owned dofs grouped ascending: offsets {-1, 0}, where the -1
    block is rank one with nonzero entries only in its last column (the
    coupling runs through the single shared upstream node).
    """
    p = nodes.degree
    d = lagrange_diff_matrix(nodes) * (2.0 / h)
    a0 = d[1:, 1:].copy()
    am1 = np.zeros((p, p))
    am1[:, p - 1] = d[1:, 0]
    return SymbolBlocks(degree=p, spacing=h, blocks=((-1, am1), (0, a0)))


def _downwind_symbol(nodes: NodeSet, h: float) -> SymbolBlocks:
    """Symbol of the downwind d/dx operator (velocity -1 picks the right element)."""
    p = nodes.degree
    d = lagrange_diff_matrix(nodes) * (2.0 / h)
    a0 = np.zeros((p, p))
    am1 = np.zeros((p, p))
    ap1 = np.zeros((p, p))
    a0[: p - 1, :] = d[1:p, 1:]
    am1[: p - 1, p - 1] = d[1:p, 0]
    # the shared node s_p takes the right element's left-end stencil
    a0[p - 1, p - 1] = d[0, 0]
    ap1[p - 1, :] = d[0, 1:]
    return SymbolBlocks(degree=p, spacing=h, blocks=((-1, am1), (0, a0), (1, ap1)))


def multiply_symbols(outer: SymbolBlocks, inner: SymbolBlocks) -> SymbolBlocks:
    """Blocks of the composed operator outer(inner(.))."""
    if outer.degree != inner.degree or outer.spacing != inner.spacing:
        raise ValueError("symbol shapes disagree")
    acc: dict = {}
    for mo, bo in outer.blocks:
        for mi, bi in inner.blocks:
            acc[mo + mi] = acc.get(mo + mi, 0) + bo @ bi
    blocks = tuple(sorted(acc.items()))
    return SymbolBlocks(degree=outer.degree, spacing=outer.spacing, blocks=blocks)


def laplacian_symbol(nodes: NodeSet, h: float = 1.0) -> SymbolBlocks:
    """Symbol blocks of the split second derivative (approximates +d2/dx2).

    Product of the downwind and upwind first-derivative symbols; offsets lie
    in {-2, -1, 0, +1}.
    """
    return multiply_symbols(_downwind_symbol(nodes, h), first_derivative_symbol(nodes, h))


def eigenvalues_dense(matrix: np.ndarray, with_vectors: bool = False):
    """Eigenvalues (optionally with eigenvectors) of a dense square matrix.

    Backed by LAPACK's balanced Hessenberg-QR solver; returned unordered.
    With vectors, each pair satisfies |M v - lambda v| / |M| <= ~1e-10.
    """
    m = np.asarray(matrix)
    try:
        if with_vectors:
            return np.linalg.eig(m)
        return np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(str(exc)) from exc


@dataclass(frozen=True)
class SpectrumScan:
    """Eigenvalue loci of a symbol over sampled wavenumbers."""

    xi: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    min_real_part: float = 0.0
    spectral_radius: float = 0.0
    worst_xi: float = 0.0


@dataclass(frozen=True)
class StabilityVerdict:
    kind: NodeKind
    degree: int
    operator: str
    stable: bool
    min_real_part: float
    worst_xi: float
    tol: float = TOL_STAB


def _symbol_for(kind: NodeKind, p: int, operator: str, h: float) -> SymbolBlocks:
    nodes = build_node_set(kind, p)
    if operator == "first":
        return first_derivative_symbol(nodes, h)
    if operator == "laplacian":
        # scan the Poisson-sign operator, whose stable spectra sit in the
        # closed right half-plane
        return -laplacian_symbol(nodes, h)
    raise ValueError("operator must be 'first' or 'laplacian'")


def _min_real_at(symbol: SymbolBlocks, xi: float) -> float:
    return float(np.min(eigenvalues_dense(symbol.evaluate(xi)).real))


def _golden_refine(symbol: SymbolBlocks, lo: float, hi: float, iters: int = 60):
    """Golden-section minimisation of the smallest eigenvalue real part."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = _min_real_at(symbol, c), _min_real_at(symbol, d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = _min_real_at(symbol, c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = _min_real_at(symbol, d)
    return (c, fc) if fc <= fd else (d, fd)


def scan_stability(
    kind: NodeKind,
    p: int,
    operator: str = "first",
    n_samples: int = 1024,
    h: float = 1.0,
    tol_stab: float = TOL_STAB,
) -> tuple[SpectrumScan, StabilityVerdict]:
    """Sample the symbol spectrum over a wavenumber period and judge stability.

    Samples xi_j = 2 pi j / n_samples (h = 1 by default); the verdict refines
    the worst sample by golden section, since narrow instabilities can slip
    between grid points.
    """
    if n_samples < 256:
        raise ValueError("need at least 256 wavenumber samples")
    symbol = _symbol_for(kind, p, operator, h)
    xis = 2.0 * np.pi * np.arange(n_samples) / (n_samples * h)
    eigs = eigenvalues_dense(symbol.evaluate_many(xis).reshape(-1, p, p))
    eigs = eigs.reshape(n_samples, p)
    min_real = float(eigs.real.min())
    worst = int(np.argmin(eigs.real.min(axis=1)))
    worst_xi = float(xis[worst])
    dxi = 2.0 * np.pi / (n_samples * h)
    ref_xi, ref_val = _golden_refine(symbol, worst_xi - dxi, worst_xi + dxi)
    if ref_val < min_real:
        min_real, worst_xi = ref_val, ref_xi
    scan = SpectrumScan(
        xi=xis,
        eigenvalues=eigs,
        min_real_part=min_real,
        spectral_radius=float(np.abs(eigs).max()),
        worst_xi=worst_xi,
    )
    verdict = StabilityVerdict(
        kind=kind,
        degree=p,
        operator=operator,
        stable=min_real >= -tol_stab,
        min_real_part=min_real,
        worst_xi=worst_xi,
        tol=tol_stab,
    )
    return scan, verdict


def operator_spectral_radius(op, dense_limit: int = 2000) -> float:
    """Largest eigenvalue magnitude of an assembled operator.

    Dense LAPACK below ``dense_limit`` rows; implicitly restarted Arnoldi
    (power-type iteration, relative tolerance 1e-6) above it.
    """
    matrix = op.matrix if hasattr(op, "matrix") else sp.csr_matrix(op)
    n = matrix.shape[0]
    if matrix.shape[0] != matrix.shape[1]:
        raise ValueError("spectral radius needs a square operator")
    if n <= dense_limit:
        return float(np.abs(eigenvalues_dense(matrix.toarray())).max())
    try:
        # a small block of Ritz values; the extremal eigenvalues of the
        # advection-type operators cluster in magnitude and defeat k=1
        vals = spla.eigs(
            matrix.astype(float),
            k=min(8, n - 2),
            which="LM",
            tol=1e-6,
            maxiter=10000,
            ncv=min(60, n),
            return_eigenvectors=False,
        )
    except spla.ArpackNoConvergence as exc:
        raise EigensolverError(
            f"spectral-radius iteration stagnated after {exc.args}"
        ) from exc
    return float(np.abs(vals).max())
