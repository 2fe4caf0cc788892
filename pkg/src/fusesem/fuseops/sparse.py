"""Global sparse operators in CSR form.

Thin wrapper over scipy CSR that enforces the storage contract (duplicate
columns merged, entries below 1e-14 of their row maximum purged) and carries
Matrix-Market export for external verification.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp

PURGE_REL = 1e-14


class SingularOperatorError(RuntimeError):
    """Linear solve hit a (numerically) singular operator."""


def _purged(matrix: sp.csr_matrix) -> sp.csr_matrix:
    m = matrix.tocsr().copy()
    m.sum_duplicates()
    if m.nnz:
        row_max = np.zeros(m.shape[0])
        rows = np.repeat(np.arange(m.shape[0]), np.diff(m.indptr))
        np.maximum.at(row_max, rows, np.abs(m.data))
        keep = np.abs(m.data) >= PURGE_REL * row_max[rows]
        if not np.all(keep):
            m.data[~keep] = 0.0
            m.eliminate_zeros()
    return m


@dataclass
class GlobalSparseOperator:
    """Assembled operator over global dofs; immutable by convention."""

    matrix: sp.csr_matrix = field(repr=False)

    def __post_init__(self):
        self.matrix = _purged(self.matrix)

    @classmethod
    def from_coo(cls, rows, cols, vals, shape) -> "GlobalSparseOperator":
        m = sp.coo_matrix(
            (np.asarray(vals, float), (np.asarray(rows), np.asarray(cols))),
            shape=shape,
        )
        return cls(matrix=m.tocsr())

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def __matmul__(self, other):
        if isinstance(other, GlobalSparseOperator):
            return GlobalSparseOperator(matrix=self.matrix @ other.matrix)
        return self.matrix @ other

    def __add__(self, other: "GlobalSparseOperator") -> "GlobalSparseOperator":
        return GlobalSparseOperator(matrix=self.matrix + other.matrix)

    def __mul__(self, scalar: float) -> "GlobalSparseOperator":
        return GlobalSparseOperator(matrix=self.matrix * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "GlobalSparseOperator":
        return self * -1.0

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def export_matrix_market(self, path: str):
        """Write the operator as a Matrix-Market coordinate file, atomically."""
        fd, tmp = tempfile.mkstemp(
            suffix=".mtx", dir=os.path.dirname(os.path.abspath(path)) or "."
        )
        os.close(fd)
        try:
            scipy.io.mmwrite(tmp, self.matrix.tocoo())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def impose_dirichlet(
    op: GlobalSparseOperator,
    rhs: np.ndarray,
    boundary_dofs,
    values,
) -> tuple[GlobalSparseOperator, np.ndarray]:
    """Replace the listed rows by identity rows and pin the rhs entries.

    The solution of the modified system matches the prescribed values exactly
    at those dofs.  A dof listed twice with conflicting values is rejected.
    """
    boundary_dofs = np.asarray(boundary_dofs, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    if boundary_dofs.shape != values.shape:
        raise ValueError("boundary dof and value counts differ")
    seen: dict = {}
    for d, v in zip(boundary_dofs, values):
        if d in seen and seen[d] != v:
            raise ValueError(f"dof {d} listed twice with conflicting values")
        seen[int(d)] = float(v)
    m = op.matrix.tolil(copy=True)
    new_rhs = np.array(rhs, dtype=float, copy=True)
    for d, v in seen.items():
        m.rows[d] = [d]
        m.data[d] = [1.0]
        new_rhs[d] = v
    return GlobalSparseOperator(matrix=m.tocsr()), new_rhs
