"""PSPG-stabilized Stokes collocation in velocity-pressure and rotational form."""
from __future__ import annotations

import numpy as np

from .benchmarks import FlowProblem
from .flow import FlowOptions, FlowScheme, FlowSolution, tau_pspg_stokes
from .linsys import LinearSystem, direct_solve

__all__ = [
    "tau_pspg_stokes", "assemble_stokes_vp", "assemble_stokes_rot",
    "fix_pressure_gauge", "post_shift", "solve_stokes", "StokesSolution",
]

StokesSolution = FlowSolution


def _scheme(problem, space, options, form):
    if problem.nonlinear:
        raise ValueError("problem %r carries Navier-Stokes forcing" % problem.name)
    if problem.rotational != (form == "rot"):
        raise ValueError("problem equations %r do not match the %s form" % (problem.equations, form))
    return FlowScheme(problem, space, options)


def assemble_stokes_vp(problem: FlowProblem, space, options: FlowOptions | None = None,
                       gauge: bool = True) -> LinearSystem:
    """Velocity-pressure system; 3 rows per point (momentum x/y, continuity).

    With ``gauge=False`` the continuity row at the gauge point is kept and
    the matrix carries the constant-pressure null space.
    """
    opts = options or FlowOptions()
    opts.gauge = gauge
    return _scheme(problem, space, opts, "vp").linear_system()


def assemble_stokes_rot(problem: FlowProblem, space, options: FlowOptions | None = None,
                        gauge: bool = True) -> LinearSystem:
    """Rotational system; adds the vorticity definition as a fourth row per point."""
    opts = options or FlowOptions()
    opts.gauge = gauge
    return _scheme(problem, space, opts, "rot").linear_system()


def fix_pressure_gauge(system: LinearSystem, point: int, nf: int, value: float = 0.0,
                       replace: int | None = None) -> LinearSystem:
    """Pin ``p(point) = value`` in place of a continuity row.

    The row given up belongs to ``replace`` (default ``point``).  The
    ungauged collocation system is not consistent in general, so dropping
    different continuity rows changes the solution at the level of the
    discretization error; moving only the pinned point shifts p by a
    constant.
    """
    row = (point if replace is None else replace) * nf + 2
    return system.replace_rows([row], [point * nf + 2], 1.0, [value])


def post_shift(solution: FlowSolution) -> FlowSolution:
    """Shift pressure to zero quadrature mean; records the applied shift."""
    x, mean = solution.scheme.post_shift(solution.x)
    solution.x = x
    solution.gauge_shift += mean
    return solution


def solve_stokes(problem: FlowProblem, space, options: FlowOptions | None = None) -> FlowSolution:
    scheme = FlowScheme(problem, space, options)
    if problem.nonlinear:
        raise ValueError("use navier_stokes.newton_solve for %r" % problem.equations)
    system = scheme.linear_system()
    x = direct_solve(system)
    return post_shift(FlowSolution(problem, scheme, x, system=system))


def velocity_error(solution: FlowSolution):
    """(L2, H1) error of the velocity against the exact field."""
    from .verify import error_norms

    prob = solution.problem

    def exact(pts):
        ux, uy = prob.velocity_jet(pts, 1)
        return (np.vstack([ux.val, uy.val]),
                [np.vstack([ux[(1, 0)], uy[(1, 0)]]), np.vstack([ux[(0, 1)], uy[(0, 1)]])])
    return error_norms(solution.u, exact)


def pressure_error(solution: FlowSolution):
    """(L2, H1) error of the kinematic pressure (mean removed when gauged)."""
    from .verify import error_norms_grid

    prob = solution.problem

    def exact(pts):
        p = prob.pressure_jet(pts, 1)
        return p.val, [p[(1, 0)], p[(0, 1)]]
    return error_norms_grid(solution.space, solution.kinematic_pressure, exact,
                            subtract_mean=solution.scheme.gauge)
