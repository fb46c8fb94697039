"""Vectorised collocation assembly.

Residual rows are written as pointwise expressions in the partial
derivatives of the discrete fields at the collocation points.  Each such
partial is a :class:`Lin`: its value together with its sensitivity to the
"jet entry" ``(field, a, b)``.  Because every jet entry is itself linear in
the coefficients (through the tabulated basis), the Jacobian row of an
expression is

    sum over (field, a, b) of  dE/d(field_ab) * tabs[(a, b)][point, :]

placed at the columns of the basis functions supported at that point.  The
same path yields the matrix of the linear schemes (linearised at zero).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from .exceptions import AssemblyError
from .grid import build_collocation_set, compute_mesh_metrics
from .linsys import LinearSystem
from .spline import SplineField, SplineSpace1D, tabulate

__all__ = ["Lin", "Jets", "RowGroup", "Pins", "Collocation"]


class Lin:
    """Array of pointwise values with first-order sensitivities."""

    __slots__ = ("val", "der")
    # make ndarray (op) Lin defer to the reflected Lin methods
    __array_ufunc__ = None

    def __init__(self, val, der=None):
        self.val = np.asarray(val, dtype=float)
        self.der = der if der is not None else {}

    def __repr__(self):
        return "Lin(n=%d, keys=%s)" % (self.val.size, sorted(self.der))

    def __add__(self, other):
        if isinstance(other, Lin):
            der = dict(self.der)
            for key, w in other.der.items():
                der[key] = der[key] + w if key in der else w
            return Lin(self.val + other.val, der)
        return Lin(self.val + other, self.der)

    __radd__ = __add__

    def __neg__(self):
        return Lin(-self.val, {key: -w for key, w in self.der.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Lin):
            der = {key: w * other.val for key, w in self.der.items()}
            for key, w in other.der.items():
                add = w * self.val
                der[key] = der[key] + add if key in der else add
            return Lin(self.val * other.val, der)
        return Lin(self.val * other, {key: w * other for key, w in self.der.items()})

    __rmul__ = __mul__

    def take(self, idx) -> "Lin":
        return Lin(self.val[idx], {key: w[idx] for key, w in self.der.items()})


class Jets:
    """Lazily evaluated partials of the discrete fields at the points.

    ``jets["ux", 1, 0]`` is the x-derivative of field "ux" as a :class:`Lin`.
    """

    def __init__(self, tables, coefs: np.ndarray, fields: tuple):
        self.tables = tables
        self.coefs = coefs                      # (n, nf)
        self.index = {name: i for i, name in enumerate(fields)}
        self._cache = {}

    def __getitem__(self, key):
        name, a, b = key
        if key not in self._cache:
            f = self.index[name]
            tab = self.tables.tabs.get((a, b))
            if tab is None:
                raise KeyError("partial (%d, %d) not tabulated" % (a, b))
            val = np.einsum("mw,mw->m", tab, self.coefs[:, f][self.tables.cols])
            self._cache[key] = Lin(val, {(f, a, b): np.ones_like(val)})
        return self._cache[key]

    def value(self, name, a=0, b=0) -> np.ndarray:
        return self[name, a, b].val


@dataclass
class RowGroup:
    """Residual rows ``rows`` evaluated at collocation points ``points``."""

    name: str
    rows: np.ndarray
    points: np.ndarray
    expr: Lin


@dataclass
class Pins:
    """Rows fixing single coefficients: ``x[cols] - values = 0``."""

    name: str
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    points: np.ndarray = field(default=None)


class Collocation:
    """Discretisation data shared by all schemes on one spline space.

    Unknowns and rows are interleaved by collocation point: the unknown of
    field f at basis function i sits at ``i * nf + f``, and equation slot s of
    point i at row ``i * nf + s``.
    """

    def __init__(self, space, fields, max_d: int = 3, jump_rule: str = "average"):
        self.space = space
        self.fields = tuple(fields)
        self.nf = len(self.fields)
        self.cset = build_collocation_set(space)
        self.metrics = compute_mesh_metrics(self.cset)
        self.tables = tabulate(space, None, max_d, jump_rule)
        self.dim = self.tables.dim

    @property
    def n_points(self) -> int:
        return self.cset.n

    @property
    def size(self) -> int:
        return self.n_points * self.nf

    def field_index(self, name: str) -> int:
        return self.fields.index(name)

    def col(self, points, name):
        return np.asarray(points) * self.nf + self.field_index(name)

    def row(self, points, slot: int):
        return np.asarray(points) * self.nf + slot

    def split(self, x) -> np.ndarray:
        """Coefficients reshaped to (n, nf)."""
        return np.asarray(x, dtype=float).reshape(self.n_points, self.nf)

    def jets(self, x) -> Jets:
        return Jets(self.tables, self.split(x), self.fields)

    def field(self, x, name) -> SplineField:
        return SplineField(self.space, self.split(x)[:, self.field_index(name)])

    def pack(self, **coefs) -> np.ndarray:
        out = np.zeros((self.n_points, self.nf))
        for name, c in coefs.items():
            out[:, self.field_index(name)] = c
        return out.ravel()

    def interpolant(self, **funcs) -> np.ndarray:
        """Coefficients interpolating pointwise values at the Greville points."""
        vals = {name: np.asarray(v, float) * np.ones(self.n_points) for name, v in funcs.items()}
        return self.pack(**{name: self.space.interpolate(v) for name, v in vals.items()})

    def tau_partials(self, values):
        """Interpolate pointwise tau values; return (tau, grad tau) at the points."""
        coef = self.space.interpolate(np.asarray(values, float))
        t = self.tables.eval(coef, (0, 0))
        grad = [self.tables.eval(coef, (1, 0))]
        if self.dim == 2:
            grad.append(self.tables.eval(coef, (0, 1)))
        return t, grad

    # ------------------------------------------------------------------
    def evaluate(self, groups, pins, x, jacobian: bool = True, collect: dict | None = None):
        """Residual vector (and Jacobian) of the given row groups.

        Sensitivities under keys that are not ``(field, a, b)`` jet entries
        (string-led tuples) are not placed in the matrix; when ``collect`` is
        given they are returned there as full-length row-weight vectors.
        """
        n = self.size
        owner = np.zeros(n, dtype=np.int64)
        F = np.zeros(n)
        labels = [None] * n
        r_all, c_all, v_all = [], [], []
        cols_pts = self.tables.cols
        for g in groups:
            owner[g.rows] += 1
            F[g.rows] = g.expr.val
            for r, p in zip(g.rows, g.points):
                labels[r] = (int(p), g.name)
            if not jacobian:
                continue
            blocks = {}
            for key, w in g.expr.der.items():
                if isinstance(key[0], str):
                    if collect is not None:
                        collect.setdefault(key, np.zeros(n))[g.rows] += w
                    continue
                f, a, b = key
                blk = w[:, None] * self.tables.tabs[(a, b)][g.points]
                blocks[f] = blocks[f] + blk if f in blocks else blk
            width = cols_pts.shape[1]
            for f, blk in sorted(blocks.items()):
                r_all.append(np.repeat(g.rows, width))
                c_all.append((cols_pts[g.points] * self.nf + f).ravel())
                v_all.append(blk.ravel())
        xv = np.asarray(x, dtype=float)
        for p in pins:
            owner[p.rows] += 1
            F[p.rows] = xv[p.cols] - p.values
            pts = p.cols // self.nf if p.points is None else p.points
            for r, q in zip(p.rows, pts):
                labels[r] = (int(q), p.name)
            r_all.append(p.rows)
            c_all.append(p.cols)
            v_all.append(np.ones(len(p.rows)))
        bad = np.flatnonzero(owner != 1)
        if bad.size:
            r = int(bad[0])
            kind = "duplicate" if owner[r] > 1 else "missing"
            raise AssemblyError("%s row %d (point %d, slot %d)" % (kind, r, r // self.nf, r % self.nf))
        if not jacobian:
            return F, None, labels
        J = sps.coo_matrix((np.concatenate(v_all), (np.concatenate(r_all), np.concatenate(c_all))),
                           shape=(n, n)).tocsr()
        J.sum_duplicates()
        J.sort_indices()
        return F, J, labels

    def linear_system(self, groups_fn, meta=None) -> LinearSystem:
        """Matrix and right-hand side of an affine scheme (linearised at zero)."""
        x0 = np.zeros(self.size)
        groups, pins = groups_fn(x0)
        F, J, labels = self.evaluate(groups, pins, x0)
        return LinearSystem(J, -F, labels, dict(meta or {}))


def is_1d(space) -> bool:
    return isinstance(space, SplineSpace1D)
