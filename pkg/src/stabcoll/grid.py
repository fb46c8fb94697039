"""Greville collocation sets, point classification and mesh-size fields."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateGridError
from .spline import SplineField, SplineSpace1D, TensorSplineSpace2D, fit_spline

__all__ = [
    "INTERIOR", "EDGE", "CORNER",
    "CollocationSet", "MeshMetrics",
    "build_collocation_set", "compute_mesh_metrics", "build_tau_field",
]

INTERIOR, EDGE, CORNER = 0, 1, 2
EDGES = ("left", "right", "bottom", "top")
_EDGE_NORMALS = {
    "left": (-1.0, 0.0), "right": (1.0, 0.0),
    "bottom": (0.0, -1.0), "top": (0.0, 1.0),
}


@dataclass(frozen=True)
class CollocationSet:
    """Collocation points of a spline space, one per basis function.

    Attributes
    ----------
    points : ndarray, shape (N, dim)
        Physical coordinates, ordered like the flat coefficients.
    index : ndarray, shape (N, dim)
        Lexicographic Greville index of every point.
    kind : ndarray of int
        INTERIOR, EDGE or CORNER.
    edges : dict
        Boolean masks per edge name ("left", "right" in 1D and 2D,
        "bottom", "top" in 2D).
    normal : ndarray, shape (N, dim)
        Outward unit normal on boundary points (corners: normalized average
        of the two edge normals), zero in the interior.
    """

    points: np.ndarray
    index: np.ndarray
    kind: np.ndarray
    edges: dict
    normal: np.ndarray
    axes: tuple

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple:
        return tuple(len(g) for g in self.axes)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def boundary(self) -> np.ndarray:
        return self.kind != INTERIOR

    @property
    def interior(self) -> np.ndarray:
        return self.kind == INTERIOR

    def normals_at(self, i: int) -> list:
        """All edge normals meeting at point ``i`` (two at corners)."""
        return [np.array(_EDGE_NORMALS[e][: self.dim]) for e in self.edges
                if self.edges[e][i]]

    def nearest(self, p) -> int:
        return int(np.argmin(np.sum((self.points - np.asarray(p)) ** 2, axis=1)))

    def center_index(self) -> int:
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        return self.nearest(0.5 * (lo + hi))


def build_collocation_set(space) -> CollocationSet:
    if isinstance(space, SplineSpace1D):
        g = space.greville
        n = len(g)
        left = np.zeros(n, bool)
        right = np.zeros(n, bool)
        left[0] = right[-1] = True
        kind = np.where(left | right, EDGE, INTERIOR)
        normal = np.zeros((n, 1))
        normal[0, 0], normal[-1, 0] = -1.0, 1.0
        return CollocationSet(g[:, None].copy(), np.arange(n)[:, None], kind,
                              {"left": left, "right": right}, normal, (g,))
    if not isinstance(space, TensorSplineSpace2D):
        raise TypeError("unsupported space %r" % (space,))
    gx, gy = space.space_x.greville, space.space_y.greville
    nx, ny = len(gx), len(gy)
    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    I, J = I.ravel(), J.ravel()
    pts = np.column_stack([gx[I], gy[J]])
    edges = {"left": I == 0, "right": I == nx - 1, "bottom": J == 0, "top": J == ny - 1}
    count = sum(m.astype(int) for m in edges.values())
    kind = np.minimum(count, CORNER)
    normal = np.zeros((len(pts), 2))
    for e, m in edges.items():
        normal[m] += _EDGE_NORMALS[e]
    nrm = np.linalg.norm(normal, axis=1)
    normal[nrm > 0] /= nrm[nrm > 0, None]
    return CollocationSet(pts, np.column_stack([I, J]), kind, edges, normal, (gx, gy))


@dataclass(frozen=True)
class MeshMetrics:
    """Mesh sizes at collocation points.

    ``h`` is the mean distance to the axis-adjacent neighbours; ``h_b`` is the
    distance to the inward neighbour along the boundary normal (NaN on
    interior points).
    """

    h: np.ndarray
    h_b: np.ndarray


def _axis_gaps(g: np.ndarray):
    d = np.diff(g)
    lo = np.concatenate([[np.nan], d])   # distance to previous neighbour
    hi = np.concatenate([d, [np.nan]])   # distance to next neighbour
    return lo, hi


def compute_mesh_metrics(cset: CollocationSet) -> MeshMetrics:
    if any(s < 2 for s in cset.shape):
        raise DegenerateGridError("need at least 2 collocation points per direction")
    total = np.zeros(cset.n)
    count = np.zeros(cset.n)
    inward = []
    for axis, g in enumerate(cset.axes):
        n_ax = len(g)
        lo, hi = _axis_gaps(g)
        idx = cset.index[:, axis]
        for gap in (lo[idx], hi[idx]):
            ok = ~np.isnan(gap)
            total[ok] += gap[ok]
            count[ok] += 1
        first, last = idx == 0, idx == n_ax - 1
        hb = np.full(cset.n, np.inf)
        hb[first] = hi[0]
        hb[last] = lo[-1]
        inward.append(hb)
    h = total / count
    h_b = np.min(np.vstack(inward), axis=0)
    h_b[~np.isfinite(h_b)] = np.nan
    return MeshMetrics(h, h_b)


def build_tau_field(space, values) -> SplineField:
    """Spline interpolant of pointwise stabilization parameters."""
    return fit_spline(space, values)
