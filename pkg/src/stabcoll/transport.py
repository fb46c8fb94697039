"""SUPG-stabilized collocation of steady advection-diffusion."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .assembly import Collocation, RowGroup
from .benchmarks import ScalarProblem
from .exceptions import DegenerateTauError, UnsupportedDegreeError
from .linsys import LinearSystem, direct_solve
from .spline import SplineField

__all__ = [
    "tau_supg_ad", "assemble_ad", "apply_regularized_dirichlet", "solve_ad",
    "TransportSolution", "interior_residual", "scalar_error",
]

C1 = 4.0


def tau_supg_ad(u_norm, kappa, h, c1: float = C1):
    """``1 / sqrt((2|u|/h)^2 + (c1 kappa / h^2)^2)``; works elementwise."""
    u_norm, kappa, h = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (u_norm, kappa, h)))
    if np.any((u_norm == 0) & (kappa == 0)):
        raise DegenerateTauError("tau undefined for zero velocity and zero diffusivity")
    out = 1.0 / np.sqrt((2.0 * u_norm / h) ** 2 + (c1 * kappa / h ** 2) ** 2)
    return float(out) if out.ndim == 0 else out


@dataclass
class TransportSolution:
    phi: SplineField
    system: LinearSystem
    problem: ScalarProblem
    stabilization: str


def _residual_terms(jets, problem, f, grad_f, dim):
    u = problem.velocity
    kap = problem.kappa
    if dim == 1:
        grad = [jets["phi", 1, 0]]
        lap = jets["phi", 2, 0]
        dgrad = [[jets["phi", 2, 0]]]
        dlap = [jets["phi", 3, 0]]
    else:
        grad = [jets["phi", 1, 0], jets["phi", 0, 1]]
        lap = jets["phi", 2, 0] + jets["phi", 0, 2]
        # dgrad[j][i] = d_j d_i phi
        dgrad = [[jets["phi", 2, 0], jets["phi", 1, 1]],
                 [jets["phi", 1, 1], jets["phi", 0, 2]]]
        dlap = [jets["phi", 3, 0] + jets["phi", 1, 2], jets["phi", 2, 1] + jets["phi", 0, 3]]
    R = sum(u[i] * grad[i] for i in range(dim)) - kap * lap - f
    dR = [sum(u[i] * dgrad[j][i] for i in range(dim)) - kap * dlap[j] - grad_f[j]
          for j in range(dim)]
    return R, dR


def _groups(coll: Collocation, problem: ScalarProblem, stabilization: str, c1: float, tau=None):
    dim = coll.dim
    pts = coll.cset.points
    f, grad_f = problem.forcing(pts)
    u = np.asarray(problem.velocity, dtype=float)
    if stabilization == "supg":
        if tau is None:
            tau_vals = tau_supg_ad(np.linalg.norm(u), problem.kappa, coll.metrics.h, c1)
        else:
            tau_vals = np.broadcast_to(np.asarray(tau, float), (coll.n_points,)).copy()
        t, grad_t = coll.tau_partials(tau_vals)
    interior = np.flatnonzero(coll.cset.interior)
    boundary = np.flatnonzero(coll.cset.boundary)
    g_vals = problem.boundary_values(pts[boundary]) if problem.dirichlet is None \
        else np.zeros(len(boundary))

    def build(x):
        jets = coll.jets(x)
        R, dR = _residual_terms(jets, problem, f, grad_f, dim)
        row = R
        if stabilization == "supg":
            # div(tau u R) with constant u: (grad tau . u) R + tau u . grad R
            adv_t = sum(u[j] * grad_t[j] for j in range(dim))
            row = R - (adv_t * R + t * sum(u[j] * dR[j] for j in range(dim)))
        dirichlet = jets["phi", 0, 0] - np.zeros(coll.n_points)
        groups = [
            RowGroup("pde", coll.row(interior, 0), interior, row.take(interior)),
            RowGroup("dirichlet", coll.row(boundary, 0), boundary,
                     dirichlet.take(boundary) - g_vals),
        ]
        return groups, []

    return build


def assemble_ad(problem: ScalarProblem, space, stabilization: str = "supg",
                c1: float = C1, tau=None, coll: Collocation | None = None) -> LinearSystem:
    """Collocated (optionally SUPG-stabilized) advection-diffusion system.

    Boundary rows collocate the exact solution; use
    :func:`apply_regularized_dirichlet` for piecewise-constant data.
    """
    if stabilization not in ("none", "supg"):
        raise ValueError("stabilization must be 'none' or 'supg'")
    if stabilization == "supg" and space.degree < 2:
        raise UnsupportedDegreeError("SUPG collocation needs degree >= 2")
    coll = coll or Collocation(space, ("phi",))
    system = coll.linear_system(_groups(coll, problem, stabilization, c1, tau))
    system.meta.update(problem=problem.name, stabilization=stabilization, c1=c1,
                       degree=space.degree)
    return system


def _check_alignment(segments, cset, domain):
    grev = cset.axes
    for edge, lo, hi, _ in segments:
        along = grev[1] if edge in ("left", "right") else grev[0]
        if len(grev) == 1:
            continue
        full = domain[1] if edge in ("left", "right") else domain[0]
        for b in (lo, hi):
            if full[0] < b < full[1] and not np.any(np.abs(along - b) < 1e-12):
                warnings.warn("segment breakpoint %g on %s edge is not a Greville "
                              "coordinate; data assigned by nearest Greville point" % (b, edge),
                              stacklevel=3)


def apply_regularized_dirichlet(system: LinearSystem, cset, segments, domain,
                                nf: int = 1, field: int = 0, slot: int | None = None) -> LinearSystem:
    """Pin boundary coefficients to piecewise-constant data.

    The collocation rows of boundary points are dropped and replaced by
    ``c_i = g(x_i)`` on the coefficient of the basis function attached to
    that point.
    """
    from .benchmarks import segment_values

    _check_alignment(segments, cset, domain)
    b = np.flatnonzero(cset.boundary)
    vals = segment_values(segments, cset.points[b], domain)
    slot = field if slot is None else slot
    return system.replace_rows(b * nf + slot, b * nf + field, 1.0, vals)


def solve_ad(problem: ScalarProblem, space, stabilization: str = "supg",
             c1: float = C1) -> TransportSolution:
    coll = Collocation(space, ("phi",))
    system = assemble_ad(problem, space, stabilization, c1, coll=coll)
    if problem.dirichlet is not None:
        system = apply_regularized_dirichlet(system, coll.cset, problem.dirichlet,
                                             problem.domain[: coll.dim])
    x = direct_solve(system)
    return TransportSolution(SplineField(space, x), system, problem, stabilization)


def interior_residual(solution: TransportSolution) -> np.ndarray:
    """Unstabilized strong-form residual at the interior collocation points."""
    space = solution.phi.space
    coll = Collocation(space, ("phi",))
    f, grad_f = solution.problem.forcing(coll.cset.points)
    R, _ = _residual_terms(coll.jets(solution.phi.coefficients[0]), solution.problem,
                           f, grad_f, coll.dim)
    return R.val[coll.cset.interior]


def scalar_error(solution: TransportSolution):
    """(L2, H1) error against the problem's exact solution."""
    from .verify import error_norms

    prob = solution.problem
    if prob.exact is None:
        raise ValueError("problem %r has no exact solution" % prob.name)

    def exact(pts):
        j = prob.exact_jet(pts, 1)
        grads = [j[(1, 0)]] if prob.dim == 1 else [j[(1, 0)], j[(0, 1)]]
        return j.val, grads
    return error_norms(solution.phi, exact)
