"""Shared collocation machinery for the Stokes and Navier-Stokes schemes.

One :class:`FlowScheme` covers all four equation sets ("stokes_vp",
"stokes_rot", "ns_vp", "ns_rot").  Unknowns per collocation point are
``ux, uy, p`` and, in rotational form, ``w`` (vorticity); for "ns_rot" the
pressure unknown is the total pressure ``P = p + |u|^2 / 2``.

Row slots per point: 0 and 1 carry momentum (interior), Dirichlet or
Neumann rows; 2 carries continuity; 3 carries the vorticity definition,
collocated at every point.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly import Collocation, Lin, Pins, RowGroup
from .benchmarks import FlowProblem
from .exceptions import ConfigError, DegenerateTauError, UnsupportedDegreeError
from .linsys import LinearSystem
from .spline import SplineField, TensorSplineSpace2D
from .verify import field_mean

__all__ = [
    "FlowOptions", "FlowScheme", "FlowSolution",
    "tau_pspg_stokes", "tau_supg_pspg_ns", "tau_grad_div",
]


def tau_pspg_stokes(h, mu, c2: float = 4.0):
    """``h^2 / (c2 mu)``."""
    return np.asarray(h, dtype=float) ** 2 / (c2 * mu) if np.ndim(h) else h * h / (c2 * mu)


def tau_supg_pspg_ns(u_norm, nu, h, form: str = "vp", c3: float = 4.0, s_rot: float = 0.1):
    """``1 / sqrt((2|u|/h)^2 + (c3 nu / h^2)^2)``, scaled by ``s_rot`` in rotational form."""
    u_norm, h = np.asarray(u_norm, dtype=float), np.asarray(h, dtype=float)
    if nu == 0 and np.any(u_norm == 0):
        raise DegenerateTauError("tau undefined for zero velocity and zero viscosity")
    out = 1.0 / np.sqrt((2.0 * u_norm / h) ** 2 + (c3 * nu / h ** 2) ** 2)
    if form in ("rot", "rotational"):
        out = s_rot * out
    elif form not in ("vp", "velocity_pressure"):
        raise ValueError("unknown form %r" % form)
    return float(out) if out.ndim == 0 else out


def tau_grad_div(h, nu):
    """``2 h^2 / nu``."""
    return 2.0 * np.asarray(h, dtype=float) ** 2 / nu if np.ndim(h) else 2.0 * h * h / nu


@dataclass
class FlowOptions:
    """Stabilization switches and constants."""

    C: float = 1.0          # boundary continuity (enhanced collocation) constant
    C2: float = 4.0         # Stokes PSPG
    C3: float = 4.0         # Navier-Stokes SUPG/PSPG
    s_rot: float = 0.1      # rotational-form tau scale
    supg: bool = True
    pspg: bool = True
    graddiv: bool = True
    gauge: bool | None = None   # default: gauge iff no Neumann edge

    def __post_init__(self):
        for name in ("C2", "C3", "s_rot"):
            if not getattr(self, name) > 0:
                raise ConfigError("%s must be positive" % name)
        if self.C < 0:
            raise ConfigError("C must be non-negative")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class FlowSolution:
    problem: FlowProblem
    scheme: "FlowScheme"
    x: np.ndarray
    gauge_shift: float = 0.0
    history: list = field(default_factory=list)
    system: LinearSystem | None = None

    @property
    def space(self):
        return self.scheme.space

    @property
    def u(self) -> SplineField:
        c = self.scheme.coll.split(self.x)
        return SplineField(self.space, np.vstack([c[:, 0], c[:, 1]]))

    @property
    def p(self) -> SplineField:
        """Pressure unknown (total pressure for "ns_rot")."""
        return self.scheme.coll.field(self.x, "p")

    @property
    def omega(self) -> SplineField | None:
        if "w" not in self.scheme.coll.fields:
            return None
        return self.scheme.coll.field(self.x, "w")

    def kinematic_pressure(self, xs, ys):
        """Kinematic pressure and its gradient on a tensor grid (flattened)."""
        pf = self.p
        val = pf.grid(xs, ys, (0, 0))[0].ravel()
        gx = pf.grid(xs, ys, (1, 0))[0].ravel()
        gy = pf.grid(xs, ys, (0, 1))[0].ravel()
        if self.problem.equations == "ns_rot":
            u = self.u
            v = u.grid(xs, ys, (0, 0)).reshape(2, -1)
            dx = u.grid(xs, ys, (1, 0)).reshape(2, -1)
            dy = u.grid(xs, ys, (0, 1)).reshape(2, -1)
            val = val - 0.5 * np.sum(v ** 2, axis=0)
            gx = gx - np.sum(v * dx, axis=0)
            gy = gy - np.sum(v * dy, axis=0)
        return val[None], [gx[None], gy[None]]


def _d(jets, name, *dirs):
    """Partial of field ``name`` along the listed axes (0 = x, 1 = y)."""
    return jets[name, dirs.count(0), dirs.count(1)]


class FlowScheme:
    """Residual, Jacobian and linear systems for one flow problem on one space."""

    def __init__(self, problem: FlowProblem, space: TensorSplineSpace2D,
                 options: FlowOptions | None = None):
        if not isinstance(space, TensorSplineSpace2D):
            raise TypeError("flow schemes need a 2D tensor space")
        if space.degree < 2:
            raise UnsupportedDegreeError("flow collocation needs degree >= 2")
        self.problem = problem
        self.space = space
        self.options = options or FlowOptions()
        self.eq = problem.equations
        self.rotational = problem.rotational
        self.nonlinear = problem.nonlinear
        fields = ("ux", "uy", "p", "w") if self.rotational else ("ux", "uy", "p")
        self.coll = coll = Collocation(space, fields)
        cs = coll.cset
        self.f, self.grad_f = problem.forcing(cs.points)
        self.f_norm = float(np.max(np.abs(self.f))) if self.f.size else 0.0

        # boundary ownership; Neumann edges exclude their corners
        neu = np.zeros(cs.n, bool)
        for e in problem.neumann_edges:
            neu |= cs.edges[e]
        neu &= cs.kind != 2
        self.neumann = np.flatnonzero(neu)
        self.dirichlet = np.flatnonzero(cs.boundary & ~neu)
        self.interior = np.flatnonzero(cs.interior)
        gauge = self.options.gauge
        self.gauge = (len(problem.neumann_edges) == 0) if gauge is None else gauge
        self.gauge_point = cs.center_index() if self.gauge else None
        cont = np.arange(cs.n)
        if self.gauge:
            cont = cont[cont != self.gauge_point]
        self.continuity_points = cont

        h = coll.metrics.h
        self.h = h
        hb = np.nan_to_num(coll.metrics.h_b, nan=np.inf)
        self.ec = np.where(cs.boundary, self.options.C / hb, 0.0)
        self.normal = cs.normal
        if self.neumann.size:
            self.h_neumann = problem.neumann_data(cs.points[self.neumann], cs.normal[self.neumann])
        if problem.lid:
            # regularized lid: unit tangential coefficients, corners owned by the walls
            top = problem.domain[1][1]
            on_lid = (np.abs(cs.points[self.dirichlet, 1] - top) < 1e-12) \
                & (cs.kind[self.dirichlet] != 2)
            self.g = np.vstack([on_lid.astype(float), np.zeros(len(self.dirichlet))])
        else:
            self.g = problem.boundary_velocity(cs.points[self.dirichlet])
        self._stokes_tau = None

    # ------------------------------------------------------------------
    @property
    def size(self) -> int:
        return self.coll.size

    def taus(self, x=None) -> dict:
        """Stabilization parameters (values and gradients) at the current state."""
        nu = self.problem.nu
        opt = self.options
        coll = self.coll
        if not self.nonlinear:
            if self._stokes_tau is None:
                self._stokes_tau = {"pspg": coll.tau_partials(tau_pspg_stokes(self.h, nu, opt.C2))}
            return self._stokes_tau
        if x is None:
            x = np.zeros(self.size)
        c = coll.split(x)
        tab = coll.tables
        ux, uy = tab.eval(c[:, 0], (0, 0)), tab.eval(c[:, 1], (0, 0))
        form = "rot" if self.rotational else "vp"
        vals = tau_supg_pspg_ns(np.hypot(ux, uy), nu, self.h, form, opt.C3, opt.s_rot)
        t, gt = coll.tau_partials(vals)
        # the state-dependent tau carries sensitivity channels ("tau", 0..2)
        ones = np.ones_like(t)
        lt = (Lin(t, {("tau", 0): ones}),
              [Lin(gt[0], {("tau", 1): ones}), Lin(gt[1], {("tau", 2): ones})])
        # d tau / d |u|^2 at the points, for the exact Jacobian
        base = (2.0 / self.h) ** 2 * (ux * ux + uy * uy) + (opt.C3 * nu / self.h ** 2) ** 2
        scale = opt.s_rot if self.rotational else 1.0
        dtau = -2.0 * scale * base ** -1.5 / self.h ** 2
        return {"pspg": lt, "supg": lt, "gd": coll.tau_partials(tau_grad_div(self.h, nu)),
                "state": (ux, uy, dtau)}

    def tau_jvp(self, taus, weights):
        """Operator ``v -> (dF/dtau) (dtau/dx) v`` from collected row weights."""
        coll = self.coll
        ux, uy, dtau = taus["state"]
        w = [weights.get(("tau", i)) for i in range(3)]

        def apply(v):
            c = coll.split(v)
            du = coll.tables.eval(c[:, 0], (0, 0))
            dv = coll.tables.eval(c[:, 1], (0, 0))
            dvals = dtau * 2.0 * (ux * du + uy * dv)
            coef = self.space.interpolate(dvals)
            out = np.zeros(self.size)
            for i, key in enumerate(((0, 0), (1, 0), (0, 1))):
                if w[i] is not None:
                    d = dvals if i == 0 else coll.tables.eval(coef, key)
                    # rows are interleaved per point
                    out += w[i] * np.repeat(d, coll.nf)
            return out
        return apply

    def _momentum_residual(self, J):
        """Strong residual ``R_c`` and its gradient ``dR[c][j]`` (all points)."""
        nu = self.problem.nu
        f, gf = self.f, self.grad_f
        P = "p"
        if not self.rotational:
            names = ("ux", "uy")
            R, dR = [], []
            for c, uc in enumerate(names):
                lap = _d(J, uc, 0, 0) + _d(J, uc, 1, 1)
                Rc = _d(J, P, c) - nu * lap - f[c]
                dRc = [_d(J, P, c, j) - nu * (_d(J, uc, j, 0, 0) + _d(J, uc, j, 1, 1)) - gf[c][j]
                       for j in range(2)]
                if self.nonlinear:
                    u = [J["ux", 0, 0], J["uy", 0, 0]]
                    Rc = Rc + sum(u[i] * _d(J, uc, i) for i in range(2))
                    dRc = [dRc[j] + sum(_d(J, names[i], j) * _d(J, uc, i) + u[i] * _d(J, uc, i, j)
                                        for i in range(2)) for j in range(2)]
                R.append(Rc)
                dR.append(dRc)
            return R, dR
        w = "w"
        # nu * perp(grad w) = nu (w_y, -w_x)
        R = [nu * _d(J, w, 1) + _d(J, P, 0) - f[0],
             -nu * _d(J, w, 0) + _d(J, P, 1) - f[1]]
        dR = [[nu * _d(J, w, 1, j) + _d(J, P, 0, j) - gf[0][j] for j in range(2)],
              [-nu * _d(J, w, 0, j) + _d(J, P, 1, j) - gf[1][j] for j in range(2)]]
        if self.nonlinear:
            ux, uy, om = J["ux", 0, 0], J["uy", 0, 0], J[w, 0, 0]
            # omega k x u = omega (-u_y, u_x)
            R = [R[0] - om * uy, R[1] + om * ux]
            dR = [[dR[0][j] - (_d(J, w, j) * uy + om * _d(J, "uy", j)) for j in range(2)],
                  [dR[1][j] + (_d(J, w, j) * ux + om * _d(J, "ux", j)) for j in range(2)]]
        return R, dR

    def groups(self, x, taus):
        """Row groups and pins of the scheme at state ``x`` with frozen ``taus``."""
        opt = self.options
        coll = self.coll
        J = coll.jets(x)
        R, dR = self._momentum_residual(J)
        divu = _d(J, "ux", 0) + _d(J, "uy", 1)

        # continuity (all points; the gauge point is dropped below)
        cont = divu
        if opt.pspg:
            t, gt = taus["pspg"]
            divR = dR[0][0] + dR[1][1]
            Rn = R[0] * self.normal[:, 0] + R[1] * self.normal[:, 1]
            cont = divu - (gt[0] * R[0] + gt[1] * R[1] + t * divR) + (self.ec * t) * Rn

        # interior momentum
        mom = list(R)
        if self.nonlinear:
            if opt.supg:
                t, gt = taus["supg"]
                if self.rotational:
                    om = J["w", 0, 0]
                    mom = [mom[0] + t * om * R[1], mom[1] - t * om * R[0]]
                else:
                    u = [J["ux", 0, 0], J["uy", 0, 0]]
                    adv_t = gt[0] * u[0] + gt[1] * u[1]
                    mom = [mom[c] - (adv_t * R[c] + t * divu * R[c]
                                     + t * (u[0] * dR[c][0] + u[1] * dR[c][1]))
                           for c in range(2)]
            if opt.graddiv:
                t, gt = taus["gd"]
                for c in range(2):
                    ddiv = _d(J, "ux", 0, c) + _d(J, "uy", 1, c)
                    mom[c] = mom[c] - (gt[c] * divu + t * ddiv)

        interior, dpts = self.interior, self.dirichlet
        groups = []
        pins = []
        for c in range(2):
            groups.append(RowGroup("momentum_%s" % "xy"[c], coll.row(interior, c), interior,
                                   mom[c].take(interior)))
            name = ("ux", "uy")[c]
            if self.problem.lid:
                pins.append(Pins("dirichlet_%s" % "xy"[c], coll.row(dpts, c),
                                 coll.col(dpts, name), self.g[c], dpts))
            else:
                groups.append(RowGroup("dirichlet_%s" % "xy"[c], coll.row(dpts, c), dpts,
                                       J[name, 0, 0].take(dpts) - self.g[c]))
        if self.neumann.size:
            groups.extend(self._neumann_groups(J))
        cp = self.continuity_points
        groups.append(RowGroup("continuity", coll.row(cp, 2), cp, cont.take(cp)))
        if self.gauge:
            gp = np.array([self.gauge_point])
            pins.append(Pins("gauge", coll.row(gp, 2), coll.col(gp, "p"), np.zeros(1), gp))
        if self.rotational:
            curl = J["w", 0, 0] - (_d(J, "uy", 0) - _d(J, "ux", 1))
            allp = np.arange(coll.n_points)
            groups.append(RowGroup("vorticity", coll.row(allp, 3), allp, curl))
        return groups, pins

    def _neumann_groups(self, J):
        """``-nu d_n u_c + p n_c - h_c`` at Neumann points (kinematic p)."""
        nu = self.problem.nu
        idx = self.neumann
        n = self.normal[idx]
        p = J["p", 0, 0]
        if self.eq == "ns_rot":
            ux, uy = J["ux", 0, 0], J["uy", 0, 0]
            p = p - 0.5 * (ux * ux + uy * uy)
        p = p.take(idx)
        out = []
        for c, name in enumerate(("ux", "uy")):
            dn = _d(J, name, 0).take(idx) * n[:, 0] + _d(J, name, 1).take(idx) * n[:, 1]
            row = -nu * dn + p * n[:, c] - self.h_neumann[c]
            out.append(RowGroup("neumann_%s" % "xy"[c], self.coll.row(idx, c), idx, row))
        return out

    # ------------------------------------------------------------------
    def evaluate(self, x, taus=None, jacobian: bool = True, collect: dict | None = None):
        taus = self.taus(x) if taus is None else taus
        groups, pins = self.groups(x, taus)
        return self.coll.evaluate(groups, pins, x, jacobian, collect)

    def residual(self, x, taus=None) -> np.ndarray:
        return self.evaluate(x, taus, jacobian=False)[0]

    def jacobian(self, x, taus=None):
        return self.evaluate(x, taus)[1]

    def linear_system(self) -> LinearSystem:
        """Linearisation about the zero state (the full system for Stokes)."""
        x0 = np.zeros(self.size)
        F, Jm, labels = self.evaluate(x0, self.taus(x0))
        return LinearSystem(Jm, -F, labels, {"equations": self.eq, **self.options.as_dict()})

    def post_shift(self, x) -> tuple:
        """Shift the pressure so its (kinematic) quadrature mean vanishes."""
        x = np.array(x, dtype=float)
        if not self.gauge:
            return x, 0.0
        sol = FlowSolution(self.problem, self, x)
        if self.eq == "ns_rot":
            from .verify import gauss_grid
            (gx, wx), (gy, wy) = gauss_grid(self.space)
            val, _ = sol.kinematic_pressure(gx, gy)
            mean = float(val[0] @ np.outer(wx, wy).ravel() / (wx.sum() * wy.sum()))
        else:
            mean = float(field_mean(sol.p)[0])
        c = self.coll.split(x)
        c[:, self.coll.field_index("p")] -= mean     # partition of unity
        return c.ravel(), mean
