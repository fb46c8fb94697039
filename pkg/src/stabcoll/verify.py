"""Error norms, rate fitting, oscillation metrics and reference comparison."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .spline import SplineField, SplineSpace1D

__all__ = [
    "ErrorReport", "ConvergenceStudy", "gauss_grid", "error_norms", "error_norms_grid", "field_mean",
    "convergence_rate", "overshoot_metric", "centerline_profiles", "read_reference",
    "compare_reference", "divergence_max",
]


@dataclass
class ErrorReport:
    k: int
    n_elem: int
    h: float
    field: str
    l2: float
    h1: float
    dofs: int = 0


@dataclass
class ConvergenceStudy:
    reports: list = field(default_factory=list)

    def add(self, report: ErrorReport) -> None:
        self.reports.append(report)

    def select(self, field_name: str, k: int | None = None) -> list:
        return sorted((r for r in self.reports if r.field == field_name and (k is None or r.k == k)),
                      key=lambda r: -r.h)

    def rate(self, field_name: str, norm: str = "l2", k: int | None = None) -> float:
        rs = self.select(field_name, k)
        return convergence_rate([r.h for r in rs], [getattr(r, norm) for r in rs])


def _gauss_1d(space: SplineSpace1D, npts: int):
    """Gauss-Legendre nodes and weights over every knot span (physical)."""
    xg, wg = np.polynomial.legendre.leggauss(npts)
    bp = space.breakpoints
    a, b = bp[:-1, None], bp[1:, None]
    x = 0.5 * (a + b) + 0.5 * (b - a) * xg
    w = 0.5 * (b - a) * wg
    return x.ravel(), w.ravel()


def gauss_grid(space, npts: int | None = None):
    """Per-axis quadrature nodes and weights, ``degree + 1`` per span by default."""
    npts = space.degree + 1 if npts is None else npts
    if isinstance(space, SplineSpace1D):
        return [_gauss_1d(space, npts)]
    return [_gauss_1d(space.space_x, npts), _gauss_1d(space.space_y, npts)]


def _tensor_points(axes):
    if len(axes) == 1:
        return axes[0][0][:, None], axes[0][1]
    (x, wx), (y, wy) = axes
    X, Y = np.meshgrid(x, y, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()]), np.outer(wx, wy).ravel()


def _field_jet(fld: SplineField, axes):
    """Value and gradient of every component on a tensor grid."""
    if len(axes) == 1:
        x = axes[0]
        return fld.grid(x, d=0), [fld.grid(x, d=1)]
    x, y = axes
    val = fld.grid(x, y, (0, 0)).reshape(fld.ncomp, -1)
    gx = fld.grid(x, y, (1, 0)).reshape(fld.ncomp, -1)
    gy = fld.grid(x, y, (0, 1)).reshape(fld.ncomp, -1)
    return val, [gx, gy]


def error_norms(fld: SplineField, exact, npts: int | None = None, subtract_mean: bool = False):
    """L2 norm and H1 seminorm of ``fld - exact`` summed over components.

    ``exact(pts)`` returns ``(values, [grad_x, grad_y])`` with values shaped
    like ``(ncomp, N)`` or ``(N,)``.  With ``subtract_mean`` both fields are
    compared after removing their means (pressure up to a constant).
    """
    return error_norms_grid(fld.space, lambda *axes: _field_jet(fld, axes), exact,
                            npts, subtract_mean)


def error_norms_grid(space, discrete, exact, npts: int | None = None,
                     subtract_mean: bool = False):
    """As :func:`error_norms` for a discrete field given on tensor grids.

    ``discrete(*axes)`` returns values ``(ncomp, N)`` and a list of
    gradients of the same shape on the quadrature grid.
    """
    axes = gauss_grid(space, npts)
    pts, w = _tensor_points(axes)
    val, grad = discrete(*(a[0] for a in axes))
    ev, eg = exact(pts)
    ev = np.atleast_2d(ev)
    eg = [np.atleast_2d(g) for g in eg]
    e = val - ev
    if subtract_mean:
        e = e - (e @ w / w.sum())[:, None]
    l2 = np.sqrt(np.sum(e ** 2 @ w))
    h1 = np.sqrt(sum(np.sum((g - gx) ** 2 @ w) for g, gx in zip(grad, eg)))
    return float(l2), float(h1)


def field_mean(fld: SplineField, npts: int | None = None) -> np.ndarray:
    """Quadrature mean of each component over the domain."""
    axes = gauss_grid(fld.space, npts)
    _, w = _tensor_points(axes)
    val, _ = _field_jet(fld, [a[0] for a in axes])
    return val @ w / w.sum()


def convergence_rate(h, errors, n_fine: int = 3) -> float:
    """Least-squares slope of log(error) against log(h) over the finest meshes."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(errors, dtype=float)
    order = np.argsort(h)[:n_fine]
    if order.size < 2:
        raise ValueError("need at least two meshes")
    return float(np.polyfit(np.log(h[order]), np.log(e[order]), 1)[0])


def sample_axes(space, per_span: int = 10):
    """Uniform samples inside every knot span, endpoints included."""
    def one(sp):
        bp = sp.breakpoints
        s = np.linspace(0.0, 1.0, per_span + 1)[:-1]
        pts = (bp[:-1, None] + np.diff(bp)[:, None] * s).ravel()
        return np.append(pts, bp[-1])
    if isinstance(space, SplineSpace1D):
        return [one(space)]
    return [one(space.space_x), one(space.space_y)]


def overshoot_metric(fld: SplineField, lower: float, upper: float, per_span: int = 10):
    """``(max(0, max phi - upper), max(0, lower - min phi))`` on a dense grid."""
    axes = sample_axes(fld.space, per_span)
    vals = fld.grid(*axes) if len(axes) == 2 else fld.grid(axes[0])
    return float(max(0.0, vals.max() - upper)), float(max(0.0, lower - vals.min()))


def centerline_profiles(u: SplineField, n: int = 129, ordinates=None):
    """``u_x`` along the vertical and ``u_y`` along the horizontal centerline.

    Returns ``{"u": (y, u_x), "v": (x, u_y)}``; ``ordinates`` overrides the
    sample coordinates per profile.
    """
    (x0, x1), (y0, y1) = u.space.domain
    xc, yc = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    ys = np.linspace(y0, y1, n) if ordinates is None else np.asarray(ordinates["u"], float)
    xs = np.linspace(x0, x1, n) if ordinates is None else np.asarray(ordinates["v"], float)
    ux = u.component(0).grid(np.array([xc]), ys)[0, 0]
    uy = u.component(1).grid(xs, np.array([yc]))[0, :, 0]
    return {"u": (ys, ux), "v": (xs, uy)}


def read_reference(path) -> np.ndarray:
    """Two-column reference table; lines starting with '#' are comments."""
    data = np.loadtxt(Path(path), comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise ValueError("%s: expected two columns, got %d" % (path, data.shape[1]))
    return data


def compare_reference(u: SplineField, reference: np.ndarray, profile: str):
    """Max and RMS deviation of a centerline profile from reference rows.

    ``profile`` is "u" (rows ``y u_x``) or "v" (rows ``x u_y``).
    """
    ref = np.asarray(reference, dtype=float)
    ords = {"u": ref[:, 0], "v": ref[:, 0]}
    prof = centerline_profiles(u, ordinates=ords)[profile][1]
    dev = prof - ref[:, 1]
    return float(np.max(np.abs(dev))), float(np.sqrt(np.mean(dev ** 2)))


def divergence_max(u: SplineField, points=None) -> float:
    """Max of ``|div u|`` over the Greville points (or the given tensor axes)."""
    sp = u.space
    xs, ys = (sp.space_x.greville, sp.space_y.greville) if points is None else points
    div = u.component(0).grid(xs, ys, (1, 0))[0] + u.component(1).grid(xs, ys, (0, 1))[0]
    return float(np.max(np.abs(div)))
