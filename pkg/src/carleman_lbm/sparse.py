"""Row-compressed real matrices with a per-row (column, value) view."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp


class SparseMatrix:
    """Immutable CSR matrix.  Explicit zeros are removed on construction."""

    def __init__(self, matrix):
        csr = sp.csr_matrix(matrix, dtype=float)
        csr.eliminate_zeros()
        csr.sort_indices()
        self._csr = csr

    @classmethod
    def from_dense(cls, dense, tol: float = 0.0) -> "SparseMatrix":
        dense = np.asarray(dense, dtype=float)
        if tol > 0:
            dense = np.where(np.abs(dense) > tol, dense, 0.0)
        return cls(sp.csr_matrix(dense))

    @property
    def csr(self) -> sp.csr_matrix:
        return self._csr

    @property
    def shape(self) -> tuple[int, int]:
        return self._csr.shape

    @property
    def nrows(self) -> int:
        return self._csr.shape[0]

    @property
    def ncols(self) -> int:
        return self._csr.shape[1]

    @property
    def nnz(self) -> int:
        return self._csr.nnz

    def row(self, i: int) -> list[tuple[int, float]]:
        lo, hi = self._csr.indptr[i], self._csr.indptr[i + 1]
        return [(int(j), float(v)) for j, v in zip(self._csr.indices[lo:hi], self._csr.data[lo:hi])]

    @property
    def rows(self) -> list[list[tuple[int, float]]]:
        return [self.row(i) for i in range(self.nrows)]

    @property
    def row_sparsity(self) -> int:
        if self.nrows == 0:
            return 0
        return int(np.diff(self._csr.indptr).max())

    def max_abs(self) -> float:
        return float(np.abs(self._csr.data).max()) if self.nnz else 0.0

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape[0] != self.ncols:
            raise ValueError(f"vector length {x.shape[0]} does not match {self.ncols} columns")
        return self._csr @ x

    def __matmul__(self, other):
        if isinstance(other, SparseMatrix):
            return SparseMatrix(self._csr @ other._csr)
        return self.matvec(other)

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(self._csr.T)

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def write_matrix_market(self, path) -> None:
        scipy.io.mmwrite(str(Path(path)), self._csr.tocoo(), field="real", precision=17)

    @classmethod
    def read_matrix_market(cls, path) -> "SparseMatrix":
        return cls(scipy.io.mmread(str(Path(path))))

    def __repr__(self) -> str:
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz})"
