"""B-spline spaces, basis evaluation and Greville interpolation.

Univariate bases are evaluated with the Cox-de Boor recursion and the usual
derivative recursion (derivatives of a degree-k spline written through
degree k-1 splines).  Tensor-product spaces in 2D are built from two
univariate spaces, each carrying an affine map from the parametric interval
[0, 1] onto a physical interval.

Coefficients of a tensor field are stored flat with the x index running
slowest: ``I = i * n_y + j``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .exceptions import DomainError, InterpolationError, UnsupportedOrderError

__all__ = [
    "KnotVector",
    "SplineSpace1D",
    "TensorSplineSpace2D",
    "SplineField",
    "BasisTables",
    "open_uniform_knots",
    "stretched_knots",
    "eval_basis_1d",
    "eval_nonzero_basis_2d",
    "eval_field",
    "fit_spline",
    "tabulate",
]

MAX_DERIVATIVE = 3
JUMP_RULES = ("left", "right", "average")
_KNOT_TOL = 1e-12


# ---------------------------------------------------------------------------
# knot vectors
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class KnotVector:
    """Open knot vector on [0, 1] with simple interior knots."""

    knots: tuple
    degree: int

    def __post_init__(self):
        k = int(self.degree)
        t = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", tuple(float(v) for v in t))
        object.__setattr__(self, "degree", k)
        if k < 0:
            raise ValueError("degree must be non-negative")
        if t.ndim != 1 or t.size < 2 * (k + 1):
            raise ValueError("knot vector too short for degree %d" % k)
        if np.any(np.diff(t) < 0):
            raise ValueError("knots must be nondecreasing")
        if not (np.all(t[: k + 1] == t[0]) and np.all(t[-k - 1:] == t[-1])):
            raise ValueError("knot vector must be open (end knots repeated k+1 times)")
        inner = t[k:-k] if k > 0 else t
        if np.any(np.diff(inner) <= 0):
            raise ValueError("interior knots must be strictly increasing (no repeats)")

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.knots)

    @property
    def n(self) -> int:
        """Dimension of the spline space."""
        return len(self.knots) - self.degree - 1

    @property
    def breakpoints(self) -> np.ndarray:
        return np.unique(self.array)

    @property
    def n_elem(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def interior_knots(self) -> np.ndarray:
        return self.breakpoints[1:-1]

    def greville(self) -> np.ndarray:
        k, t = self.degree, self.array
        if k == 0:
            return 0.5 * (t[:-1] + t[1:])
        return np.array([t[i + 1: i + k + 1].mean() for i in range(self.n)])


def open_uniform_knots(k: int, n_elem: int) -> KnotVector:
    if n_elem < 1:
        raise ValueError("n_elem must be >= 1")
    inner = np.linspace(0.0, 1.0, n_elem + 1)
    return KnotVector(np.concatenate([np.zeros(k), inner, np.ones(k)]), k)


def stretched_knots(k: int, n_elem: int, mode: str = "rescale") -> KnotVector:
    """Knots ``0.5 * (1 + tanh(3 i h - 2) / tanh(2))``, ``h = 1 / n_elem``.

    The formula maps i = 0 to 0 but i = n_elem to about 0.895, so the end
    must be fixed up.  ``mode="clamp"`` keeps the formula values for the
    interior knots and pins the last breakpoint to 1; ``mode="rescale"``
    maps all breakpoints affinely onto [0, 1].
    """
    if n_elem < 2:
        raise ValueError("n_elem must be >= 2")
    h = 1.0 / n_elem
    i = np.arange(n_elem + 1)
    xi = 0.5 * (1.0 + np.tanh(3.0 * i * h - 2.0) / np.tanh(2.0))
    if mode == "clamp":
        xi[0], xi[-1] = 0.0, 1.0
    elif mode == "rescale":
        xi = (xi - xi[0]) / (xi[-1] - xi[0])
        xi[0], xi[-1] = 0.0, 1.0
    else:
        raise ValueError("unknown stretching mode %r" % mode)
    return KnotVector(np.concatenate([np.zeros(k), xi, np.ones(k)]), k)


# ---------------------------------------------------------------------------
# univariate kernels
# ---------------------------------------------------------------------------
def _find_span(t: np.ndarray, k: int, n: int, x: float) -> int:
    s = int(np.searchsorted(t, x, side="right")) - 1
    return min(max(s, k), n - 1)


def _ders_basis(t: np.ndarray, k: int, span: int, x: float, nder: int) -> np.ndarray:
    """Values and derivatives of the k+1 functions nonzero on ``span``.

    Returns an array of shape (nder + 1, k + 1); row d holds the d-th
    derivative of N_{span-k}, ..., N_{span}.
    """
    ndu = np.zeros((k + 1, k + 1))
    left = np.zeros(k + 1)
    right = np.zeros(k + 1)
    ndu[0, 0] = 1.0
    for j in range(1, k + 1):
        left[j] = x - t[span + 1 - j]
        right[j] = t[span + j] - x
        saved = 0.0
        for r in range(j):
            # lower triangle stores knot differences
            ndu[j, r] = right[r + 1] + left[j - r]
            tmp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * tmp
            saved = left[j - r] * tmp
        ndu[j, j] = saved

    ders = np.zeros((nder + 1, k + 1))
    ders[0] = ndu[:, k]
    a = np.zeros((2, k + 1))
    for r in range(k + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for d in range(1, min(nder, k) + 1):
            val = 0.0
            rk, pk = r - d, k - d
            if r >= d:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                val = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = d - 1 if r - 1 <= pk else k - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                val += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, d] = -a[s1, d - 1] / ndu[pk + 1, r]
                val += a[s2, d] * ndu[r, pk]
            ders[d, r] = val
            s1, s2 = s2, s1
    fac = k
    for d in range(1, min(nder, k) + 1):
        ders[d] *= fac
        fac *= k - d
    return ders


# ---------------------------------------------------------------------------
# spaces
# ---------------------------------------------------------------------------
class SplineSpace1D:
    """Univariate spline space with an affine map onto ``domain``.

    Parameters
    ----------
    knot_vector : KnotVector
        Open knot vector on [0, 1].
    domain : (float, float)
        Physical interval; all public coordinates are physical.
    suppress_third_derivatives : bool, optional
        Report third derivatives as zero.  Defaults to ``degree == 2``.
    """

    def __init__(self, knot_vector: KnotVector, domain=(0.0, 1.0),
                 suppress_third_derivatives: bool | None = None):
        self.knot_vector = knot_vector
        self.degree = knot_vector.degree
        self.domain = (float(domain[0]), float(domain[1]))
        if not self.domain[1] > self.domain[0]:
            raise ValueError("empty domain")
        if suppress_third_derivatives is None:
            suppress_third_derivatives = self.degree == 2
        self.suppress_third_derivatives = bool(suppress_third_derivatives)
        self._t = knot_vector.array
        self._interior = knot_vector.interior_knots

    def __repr__(self):
        return "SplineSpace1D(k=%d, n_elem=%d, domain=%s)" % (
            self.degree, self.knot_vector.n_elem, self.domain)

    @property
    def n(self) -> int:
        return self.knot_vector.n

    @property
    def length(self) -> float:
        return self.domain[1] - self.domain[0]

    def to_param(self, x):
        return (np.asarray(x, dtype=float) - self.domain[0]) / self.length

    def to_phys(self, xi):
        return self.domain[0] + self.length * np.asarray(xi, dtype=float)

    @cached_property
    def greville_param(self) -> np.ndarray:
        return self.knot_vector.greville()

    @cached_property
    def greville(self) -> np.ndarray:
        """Greville abscissae in physical coordinates."""
        g = self.to_phys(self.greville_param)
        g[0], g[-1] = self.domain
        return g

    @property
    def breakpoints(self) -> np.ndarray:
        return self.to_phys(self.knot_vector.breakpoints)

    def _param_checked(self, x) -> float:
        xi = float(self.to_param(x))
        if xi < -1e-10 or xi > 1.0 + 1e-10:
            raise DomainError("point %r outside domain %s" % (x, self.domain))
        return min(max(xi, 0.0), 1.0)

    def _at_interior_knot(self, xi: float) -> int | None:
        """Span index right of the interior knot at ``xi``, else None."""
        if self._interior.size == 0:
            return None
        j = int(np.argmin(np.abs(self._interior - xi)))
        if abs(self._interior[j] - xi) > _KNOT_TOL:
            return None
        return _find_span(self._t, self.degree, self.n, self._interior[j])

    def local_basis(self, x: float, nder: int = 0, jump_rule: str = "average"):
        """Nonzero basis functions and derivatives at ``x``.

        Returns ``(start, table)``; ``table[d, j]`` is the d-th physical
        derivative of basis function ``start + j``.  The table has k+1
        columns, or k+2 at an interior knot where some requested order d >= k
        is discontinuous and the jump rule mixes both adjacent spans.
        """
        if nder > MAX_DERIVATIVE:
            raise UnsupportedOrderError("derivative order %d > %d" % (nder, MAX_DERIVATIVE))
        if jump_rule not in JUMP_RULES:
            raise ValueError("jump_rule must be one of %s" % (JUMP_RULES,))
        k, t, n = self.degree, self._t, self.n
        xi = self._param_checked(x)
        right_span = self._at_interior_knot(xi)
        if right_span is not None and nder >= k:
            xk = t[right_span]
            tr = _ders_basis(t, k, right_span, xk, nder)
            tl = _ders_basis(t, k, right_span - 1, xk, nder)
            table = np.zeros((nder + 1, k + 2))
            table[:, 1:] = tr
            for d in range(k, nder + 1):
                if jump_rule == "left":
                    table[d] = 0.0
                    table[d, :-1] = tl[d]
                elif jump_rule == "average":
                    table[d, :-1] += tl[d]
                    table[d] *= 0.5
            start = right_span - k - 1
        else:
            span = _find_span(t, k, n, xi)
            table = _ders_basis(t, k, span, xi, nder)
            start = span - k
        if self.suppress_third_derivatives and nder >= 3:
            table[3:] = 0.0
        scale = self.length ** -np.arange(nder + 1)
        return start, table * scale[:, None]

    def table(self, xs, nder: int = 0, jump_rule: str = "average"):
        """Vectorised :meth:`local_basis` over points, padded to common width.

        Returns ``(starts, vals)`` with ``vals`` of shape (m, nder+1, W).
        """
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        locs = [self.local_basis(x, nder, jump_rule) for x in xs]
        width = max(tab.shape[1] for _, tab in locs) if locs else self.degree + 1
        starts = np.empty(len(xs), dtype=np.int64)
        vals = np.zeros((len(xs), nder + 1, width))
        for m, (s, tab) in enumerate(locs):
            s0 = min(s, self.n - width)
            off = s - s0
            starts[m] = s0
            vals[m, :, off: off + tab.shape[1]] = tab
        return starts, vals

    def matrix(self, xs, d: int = 0, jump_rule: str = "average") -> np.ndarray:
        """Dense collocation matrix ``M[m, i] = d^d N_i / dx^d (xs[m])``."""
        starts, vals = self.table(xs, d, jump_rule)
        m = len(starts)
        out = np.zeros((m, self.n))
        cols = starts[:, None] + np.arange(vals.shape[2])
        np.put_along_axis(out, cols, vals[:, d, :], axis=1)
        return out

    @cached_property
    def _interp_lu(self):
        mat = sps.csc_matrix(self.matrix(self.greville))
        try:
            return spla.splu(mat)
        except RuntimeError as exc:
            raise InterpolationError(
                "singular Greville interpolation matrix (degree %d, knots %s)"
                % (self.degree, list(self.knot_vector.knots))) from exc

    def interpolate(self, values) -> np.ndarray:
        """Coefficients interpolating ``values`` (last axis) at the Greville points."""
        v = np.asarray(values, dtype=float)
        flat = v.reshape(-1, self.n).T
        c = self._interp_lu.solve(np.ascontiguousarray(flat))
        return c.T.reshape(v.shape)


class TensorSplineSpace2D:
    """Tensor product of two univariate spaces."""

    def __init__(self, space_x: SplineSpace1D, space_y: SplineSpace1D):
        self.space_x = space_x
        self.space_y = space_y

    @classmethod
    def uniform(cls, k: int, n_elem: int, domain=((0.0, 1.0), (0.0, 1.0)),
                knots: str = "uniform"):
        if knots == "uniform":
            kv = open_uniform_knots(k, n_elem)
        elif knots in ("stretched", "clamp", "rescale"):
            kv = stretched_knots(k, n_elem, "rescale" if knots == "stretched" else knots)
        else:
            raise ValueError("unknown knot style %r" % knots)
        return cls(SplineSpace1D(kv, domain[0]), SplineSpace1D(kv, domain[1]))

    def __repr__(self):
        return "TensorSplineSpace2D(%r, %r)" % (self.space_x, self.space_y)

    dim_param = 2

    @property
    def degree(self) -> int:
        return self.space_x.degree

    @property
    def shape(self):
        return (self.space_x.n, self.space_y.n)

    @property
    def n(self) -> int:
        return self.space_x.n * self.space_y.n

    @property
    def domain(self):
        return (self.space_x.domain, self.space_y.domain)

    def interpolate(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        lead = v.shape[:-1]
        grid = v.reshape(lead + self.shape)
        c = self.space_x.interpolate(np.moveaxis(grid, -2, -1))
        c = self.space_y.interpolate(np.moveaxis(c, -1, -2))
        return c.reshape(lead + (self.n,))


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------
class SplineField:
    """Spline function(s) over a space; ``coefficients`` has shape (ncomp, n)."""

    def __init__(self, space, coefficients):
        c = np.asarray(coefficients, dtype=float)
        if c.ndim == 1:
            c = c[None, :]
        if c.shape[1] != space.n:
            raise ValueError("expected %d coefficients per component, got %d"
                             % (space.n, c.shape[1]))
        self.space = space
        self.coefficients = c

    @property
    def ncomp(self) -> int:
        return self.coefficients.shape[0]

    def component(self, i: int) -> "SplineField":
        return SplineField(self.space, self.coefficients[i])

    def __call__(self, p, d=0):
        return eval_field(self, p, d)

    def grid(self, xs, ys=None, d=(0, 0)) -> np.ndarray:
        """Values on a tensor grid; shape (ncomp, len(xs)[, len(ys)])."""
        sp = self.space
        if isinstance(sp, SplineSpace1D):
            dx = d[0] if isinstance(d, tuple) else d
            return self.coefficients @ sp.matrix(xs, dx).T
        a, b = d
        if a + b == 3 and (sp.space_x.suppress_third_derivatives
                           or sp.space_y.suppress_third_derivatives):
            return np.zeros((self.ncomp, len(xs), len(ys)))
        mx = sp.space_x.matrix(xs, a)
        my = sp.space_y.matrix(ys, b)
        c = self.coefficients.reshape((self.ncomp,) + sp.shape)
        return np.einsum("ai,cij,bj->cab", mx, c, my, optimize=True)


def eval_basis_1d(space: SplineSpace1D, i: int, x: float, d: int = 0,
                  jump_rule: str = "average") -> float:
    if d > MAX_DERIVATIVE:
        raise UnsupportedOrderError("derivative order %d > %d" % (d, MAX_DERIVATIVE))
    if not 0 <= i < space.n:
        raise IndexError("basis index %d out of range" % i)
    start, tab = space.local_basis(x, d, jump_rule)
    j = i - start
    if 0 <= j < tab.shape[1]:
        return float(tab[d, j])
    return 0.0


def eval_nonzero_basis_2d(space: TensorSplineSpace2D, p, max_d: int = 0,
                          jump_rule: str = "average"):
    """Local tensor-product basis at ``p``.

    Returns ``(index_window, table)`` where ``index_window`` is a 2-D array of
    flat basis indices and ``table[(a, b)]`` holds the matching partials
    d^{a+b} / dx^a dy^b for all a + b <= max_d.
    """
    if max_d > MAX_DERIVATIVE:
        raise UnsupportedOrderError("derivative order %d > %d" % (max_d, MAX_DERIVATIVE))
    sx, tx = space.space_x.local_basis(p[0], max_d, jump_rule)
    sy, ty = space.space_y.local_basis(p[1], max_d, jump_rule)
    ix = sx + np.arange(tx.shape[1])
    iy = sy + np.arange(ty.shape[1])
    window = ix[:, None] * space.space_y.n + iy[None, :]
    table = {(a, b): np.outer(tx[a], ty[b])
             for a in range(max_d + 1) for b in range(max_d + 1 - a)}
    _suppress_mixed(space, table)
    return window, table


def _suppress_mixed(space, tabs) -> None:
    """Zero every third-order partial, mixed ones included, when the space asks for it."""
    if space.space_x.suppress_third_derivatives or space.space_y.suppress_third_derivatives:
        for key in ((1, 2), (2, 1), (3, 0), (0, 3)):
            if key in tabs:
                tabs[key] = np.zeros_like(tabs[key])


def eval_field(field: SplineField, p, d=0):
    """Evaluate a field (or one of its partials) at a single point."""
    sp = field.space
    if isinstance(sp, SplineSpace1D):
        order = d[0] if isinstance(d, tuple) else int(d)
        x = float(np.ravel(p)[0])
        start, tab = sp.local_basis(x, order)
        c = field.coefficients[:, start: start + tab.shape[1]]
        out = c @ tab[order]
    else:
        a, b = (0, 0) if d == 0 else d
        if a + b > MAX_DERIVATIVE:
            raise UnsupportedOrderError("derivative order %d > %d" % (a + b, MAX_DERIVATIVE))
        window, table = eval_nonzero_basis_2d(sp, p, a + b)
        out = field.coefficients[:, window.ravel()] @ table[(a, b)].ravel()
    return float(out[0]) if field.ncomp == 1 else out


def fit_spline(space, values) -> SplineField:
    """Interpolate one value per Greville point (per component)."""
    v = np.asarray(values, dtype=float)
    if v.shape[-1] != space.n:
        raise ValueError("need %d values, got %d" % (space.n, v.shape[-1]))
    return SplineField(space, space.interpolate(v))


# ---------------------------------------------------------------------------
# tabulation at many points (assembly kernel)
# ---------------------------------------------------------------------------
class BasisTables(NamedTuple):
    """Local basis data at a set of points.

    ``cols[m]`` lists the flat basis indices supported at point m and
    ``tabs[(a, b)][m]`` the matching partial derivatives.  For 1D spaces only
    keys ``(a, 0)`` exist.
    """

    cols: np.ndarray
    tabs: dict
    dim: int

    def eval(self, coefs: np.ndarray, key) -> np.ndarray:
        return np.einsum("mw,mw->m", self.tabs[key], coefs[self.cols])


def tabulate(space, points=None, max_d: int = 3, jump_rule: str = "average") -> BasisTables:
    """Tabulate basis partials at ``points`` (default: the Greville grid).

    For tensor spaces ``points`` may be a pair ``(xs, ys)``, taken as a
    tensor grid with x running slowest, matching the flat coefficient order.
    """
    if isinstance(space, SplineSpace1D):
        xs = space.greville if points is None else np.asarray(points, dtype=float).ravel()
        starts, vals = space.table(xs, max_d, jump_rule)
        cols = starts[:, None] + np.arange(vals.shape[2])
        tabs = {(a, 0): vals[:, a, :] for a in range(max_d + 1)}
        return BasisTables(cols, tabs, 1)
    if points is None:
        xs, ys = space.space_x.greville, space.space_y.greville
    else:
        xs, ys = points
    sx, vx = space.space_x.table(xs, max_d, jump_rule)
    sy, vy = space.space_y.table(ys, max_d, jump_rule)
    wx, wy = vx.shape[2], vy.shape[2]
    ny = space.space_y.n
    ix = sx[:, None] + np.arange(wx)
    iy = sy[:, None] + np.arange(wy)
    cols = (ix[:, None, :, None] * ny + iy[None, :, None, :]).reshape(len(xs) * len(ys), wx * wy)
    tabs = {}
    for a in range(max_d + 1):
        for b in range(max_d + 1 - a):
            t = vx[:, None, a, :, None] * vy[None, :, b, None, :]
            tabs[(a, b)] = t.reshape(len(xs) * len(ys), wx * wy)
    _suppress_mixed(space, tabs)
    return BasisTables(cols, tabs, 2)
