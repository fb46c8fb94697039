"""SUPG + PSPG + grad-div stabilized Navier-Stokes collocation with Newton."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .benchmarks import FlowProblem, lid_cavity
from .exceptions import NonConvergenceError
from .flow import (FlowOptions, FlowScheme, FlowSolution, tau_grad_div,
                   tau_supg_pspg_ns)
from .linsys import direct_solve, factorize

__all__ = [
    "tau_supg_pspg_ns", "tau_grad_div", "residual_vp", "residual_rot", "jacobian",
    "NewtonSettings", "newton_solve", "solve_with_continuation",
]

log = logging.getLogger(__name__)


@dataclass
class NewtonSettings:
    rtol: float = 1e-10
    max_iter: int = 50
    line_search: bool = True
    min_step: float = 1.0 / 64.0
    # "lagged": tau frozen within a step; "full": exact Jacobian applied by
    # GMRES preconditioned with the lagged factorization
    tau_jacobian: str = "lagged"
    gmres_rtol: float = 1e-12

    def __post_init__(self):
        if self.tau_jacobian not in ("lagged", "full"):
            raise ValueError("tau_jacobian must be 'lagged' or 'full'")


def _check_form(problem, form):
    if problem.rotational != (form == "rot"):
        raise ValueError("problem equations %r do not match the %s form" % (problem.equations, form))


def residual_vp(problem: FlowProblem, x, space, options=None, scheme=None) -> np.ndarray:
    """Residual of the velocity-pressure scheme at state ``x`` (tau from ``x``)."""
    _check_form(problem, "vp")
    scheme = scheme or FlowScheme(problem, space, options)
    return scheme.residual(x)


def residual_rot(problem: FlowProblem, x, space, options=None, scheme=None) -> np.ndarray:
    """Residual of the rotational scheme; the pressure unknown is P = p + |u|^2/2."""
    _check_form(problem, "rot")
    scheme = scheme or FlowScheme(problem, space, options)
    return scheme.residual(x)


def jacobian(problem: FlowProblem, x, space, options=None, scheme=None):
    """Jacobian at ``x`` with the stabilization parameters frozen at ``x``."""
    scheme = scheme or FlowScheme(problem, space, options)
    return scheme.jacobian(x)


def _initial(scheme: FlowScheme, initial, x0):
    if initial == "given":
        if x0 is None:
            raise ValueError("initial='given' needs x0")
        return np.array(x0, dtype=float)
    if initial == "zero":
        return np.zeros(scheme.size)
    if initial == "stokes":
        # the zero-state linearisation is the Stokes system (plus grad-div)
        return direct_solve(scheme.linear_system())
    raise ValueError("initial must be 'zero', 'stokes' or 'given'")


def newton_solve(problem: FlowProblem, space, options: FlowOptions | None = None,
                 initial: str = "zero", x0=None, settings: NewtonSettings | None = None,
                 scheme: FlowScheme | None = None) -> FlowSolution:
    """Newton iteration on the collocated residual.

    Stabilization parameters are rebuilt from the iterate at the start of
    every step and frozen within it (or differentiated exactly with
    ``tau_jacobian="full"``).  The step is halved while it fails to reduce
    the residual; if no step down to ``min_step`` helps, the trial with the
    smallest residual is kept.
    """
    settings = settings or NewtonSettings()
    scheme = scheme or FlowScheme(problem, space, options)
    x = _initial(scheme, initial, x0)
    full = settings.tau_jacobian == "full" and scheme.nonlinear

    def evaluate(x):
        taus = scheme.taus(x)
        weights = {} if full else None
        F, J, labels = scheme.evaluate(x, taus, collect=weights)
        return F, J, labels, (scheme.tau_jvp(taus, weights) if full else None)

    F, J, labels, jvp = evaluate(x)
    norm = float(np.max(np.abs(F)))
    history = [norm]
    # relative to the forcing or the initial residual, whichever is larger
    tol = settings.rtol * max(1.0, scheme.f_norm, norm)
    for it in range(settings.max_iter):
        if norm < tol:
            break
        lu = factorize(J, labels)
        dx = lu.solve(-F)
        if full:
            dx = _gmres_step(J, jvp, lu, F, dx, settings.gmres_rtol)
        alpha, best = 1.0, None
        while True:
            xt = x + alpha * dx
            Ft, Jt, _, jvpt = evaluate(xt)
            nt = float(np.max(np.abs(Ft)))
            if best is None or nt < best[4]:
                best = (xt, Ft, Jt, jvpt, nt, alpha)
            if not settings.line_search or nt < norm:
                break
            if alpha <= settings.min_step:
                # no damped step reduces the residual: keep the least bad one
                xt, Ft, Jt, jvpt, nt, alpha = best
                break
            alpha *= 0.5
        x, F, J, jvp, norm = xt, Ft, Jt, jvpt, nt
        history.append(norm)
        log.debug("newton %d: |F| = %.3e (step %.3g)", it + 1, norm, alpha)
        if not np.isfinite(norm):
            break
    if not norm < tol:
        raise NonConvergenceError("Newton did not converge: |F| = %.3e after %d iterations (tol %.1e)"
                                  % (norm, len(history) - 1, tol), history)
    x, mean = scheme.post_shift(x)
    return FlowSolution(problem, scheme, x, mean, history)


def _gmres_step(J, jvp, lu, F, dx0, rtol):
    """Solve ``(J + dF/dtau dtau/dx) dx = -F`` starting from the lagged step."""
    n = J.shape[0]
    op = spla.LinearOperator((n, n), matvec=lambda v: J @ v + jvp(v), dtype=float)
    prec = spla.LinearOperator((n, n), matvec=lu.solve, dtype=float)
    dx, info = spla.gmres(op, -F, x0=dx0, M=prec, rtol=rtol, atol=0.0, restart=30, maxiter=10)
    if info < 0:
        raise NonConvergenceError("GMRES breakdown in Newton step", [])
    if info > 0:
        log.debug("GMRES stopped after %d iterations above tolerance", info)
    return dx


def solve_with_continuation(re_target: float, space, equations: str = "ns_vp",
                            options: FlowOptions | None = None, steps=(100.0, 400.0, 1000.0),
                            settings: NewtonSettings | None = None,
                            min_increment: float = 25.0,
                            start: FlowSolution | None = None) -> list:
    """Cavity solves along a Reynolds ladder, each started from the previous state.

    When a rung fails, intermediate Reynolds numbers are inserted by
    halving the increment from the last converged state; the search gives
    up once the increment drops below ``min_increment``.  ``start`` resumes
    from a converged cavity solution (rungs at or below its Reynolds number
    are skipped); otherwise the first rung starts from the Stokes solution.

    Returns
    -------
    list of FlowSolution
        One solution per requested rung up to and including ``re_target``.
    """
    x, re_done = (None, None) if start is None else (start.x, start.problem.reynolds)
    lo = -np.inf if re_done is None else re_done
    ladder = [float(r) for r in steps if lo < r < re_target] + [float(re_target)]
    out = []
    for re in ladder:
        goal = re
        while True:
            try:
                sol = newton_solve(lid_cavity(goal, equations), space, options,
                                   "stokes" if x is None else "given", x, settings)
            except NonConvergenceError as exc:
                if re_done is None or goal - re_done < 2.0 * min_increment:
                    raise NonConvergenceError("continuation stalled at Re = %g (last converged %s)"
                                              % (goal, re_done), exc.history) from exc
                goal = 0.5 * (re_done + goal)
                log.info("continuation: retrying at Re = %g", goal)
                continue
            x, re_done = sol.x, goal
            if goal == re:
                break
            goal = re
        out.append(sol)
    return out
