"""Sparse row-assembled collocation systems and their direct solution."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .exceptions import AssemblyError, SingularSystemError

__all__ = ["LinearSystem", "assemble", "from_triplets", "direct_solve", "factorize"]

# pivot magnitude, relative to the largest pivot, treated as zero
PIVOT_RTOL = 1e-13


@dataclass
class LinearSystem:
    """Square sparse system ``matrix @ x = rhs``.

    ``labels`` is an optional sequence of ``(point, equation)`` pairs, one
    per row, used in diagnostics.
    """

    matrix: sps.csr_matrix
    rhs: np.ndarray
    labels: list | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = sps.csr_matrix(self.matrix)
        self.matrix.sum_duplicates()
        self.matrix.sort_indices()
        self.rhs = np.asarray(self.rhs, dtype=float)
        n, m = self.matrix.shape
        if n != m:
            raise AssemblyError("matrix is %dx%d, not square" % (n, m))
        if self.rhs.shape != (n,):
            raise AssemblyError("rhs length %d != %d" % (self.rhs.size, n))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def label(self, row: int) -> str:
        if self.labels is None:
            return "row %d" % row
        pt, eq = self.labels[row]
        return "point %d, equation %s" % (pt, eq)

    def replace_rows(self, rows, cols, values, rhs) -> "LinearSystem":
        """Return a copy with ``rows[i]`` replaced by ``values[i] * x[cols[i]] = rhs[i]``."""
        rows = np.asarray(rows, dtype=np.int64)
        keep = np.ones(self.n)
        keep[rows] = 0.0
        a = sps.diags(keep) @ self.matrix
        pin = sps.csr_matrix((np.asarray(values, float) * np.ones(len(rows)),
                              (rows, np.asarray(cols, dtype=np.int64))), shape=a.shape)
        b = self.rhs.copy()
        b[rows] = rhs
        out = LinearSystem((a + pin).tocsr(), b, self.labels, dict(self.meta))
        out.matrix.eliminate_zeros()
        return out

    def residual(self, x) -> np.ndarray:
        return self.matrix @ x - self.rhs

    def export_matrix_market(self, path) -> None:
        scipy.io.mmwrite(str(path), self.matrix)
        np.savetxt(str(path) + ".rhs", self.rhs)


def assemble(rows, n: int, labels=None) -> LinearSystem:
    """Build a system from ``(row, {col: coef}, rhs)`` stencils.

    Every row index in ``range(n)`` must appear exactly once; the result does
    not depend on the order rows arrive in.
    """
    seen = np.zeros(n, dtype=np.int64)
    r_idx, c_idx, vals = [], [], []
    b = np.zeros(n)
    for row, stencil, rhs in rows:
        if not 0 <= row < n:
            raise AssemblyError("row %d out of range" % row)
        seen[row] += 1
        if seen[row] > 1:
            raise AssemblyError("duplicate %s" % _label(labels, row))
        items = sorted(stencil.items())
        r_idx.extend([row] * len(items))
        c_idx.extend(c for c, _ in items)
        vals.extend(v for _, v in items)
        b[row] = rhs
    missing = np.flatnonzero(seen == 0)
    if missing.size:
        raise AssemblyError("missing %s" % _label(labels, int(missing[0])))
    return from_triplets(r_idx, c_idx, vals, b, labels)


def from_triplets(rows, cols, vals, rhs, labels=None) -> LinearSystem:
    n = len(rhs)
    mat = sps.coo_matrix((np.asarray(vals, float), (np.asarray(rows, np.int64),
                                                     np.asarray(cols, np.int64))),
                         shape=(n, n)).tocsr()
    return LinearSystem(mat, rhs, labels)


def _label(labels, row):
    if labels is None:
        return "row %d" % row
    pt, eq = labels[row]
    return "row %d (point %d, equation %s)" % (row, pt, eq)


class Factorization:
    """Sparse LU factorization with a zero-pivot check.

    Rows are equilibrated to unit max-norm first, so the pivot test does not
    depend on how individual equations are scaled.
    """

    def __init__(self, matrix, labels=None):
        a = sps.csr_matrix(matrix)
        rmax = np.asarray(abs(a).max(axis=1).todense()).ravel()
        if np.any(rmax == 0):
            row = int(np.flatnonzero(rmax == 0)[0])
            raise SingularSystemError("zero row at %s" % _label(labels, row), row=row,
                                      label=None if labels is None else labels[row])
        self.row_scale = 1.0 / rmax
        a = sps.csc_matrix(sps.diags(self.row_scale) @ a)
        try:
            self.lu = spla.splu(a, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise SingularSystemError("exactly singular matrix: %s" % exc) from exc
        piv = np.abs(self.lu.U.diagonal())
        j = int(np.argmin(piv))
        if piv[j] <= PIVOT_RTOL * piv.max():
            # pivot position j eliminates the original row with perm_r == j
            row = int(np.flatnonzero(self.lu.perm_r == j)[0])
            raise SingularSystemError(
                "numerically singular matrix (pivot ratio %.2e) at %s"
                % (piv[j] / piv.max(), _label(labels, row)), row=row,
                label=None if labels is None else labels[row])

    def solve(self, b):
        return self.lu.solve(self.row_scale * np.asarray(b, dtype=float))


def factorize(matrix, labels=None) -> Factorization:
    return Factorization(matrix, labels)


def direct_solve(system: LinearSystem) -> np.ndarray:
    return factorize(system.matrix, system.labels).solve(system.rhs)
