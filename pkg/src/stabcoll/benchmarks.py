"""Closed-form benchmark fields, their forcings and boundary data.

Every exact field used here is a finite sum of separable products
``c * X(x) * Y(y)`` whose factors are polynomials, exponentials times
polynomials, or sines/cosines, so all partial derivatives are available in
closed form.  Forcings are built from those partials with :class:`Taylor`
arithmetic (Leibniz rule), which keeps the strong forms readable and exact
up to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial

__all__ = [
    "Taylor", "Separable",
    "ScalarProblem", "FlowProblem",
    "boundary_layer_1d", "sine_ms", "skew_advection",
    "stokes_vortex_ms", "kovasznay", "kovasznay_lambda", "lid_cavity",
    "EQUATIONS",
]

EQUATIONS = ("stokes_vp", "stokes_rot", "ns_vp", "ns_rot")


@lru_cache(maxsize=None)
def _binom(n, k):
    return math.comb(n, k)


class Taylor:
    """Partials ``d[(a, b)]`` of a function at a set of points, a + b <= order."""

    def __init__(self, d: dict, order: int):
        self.d = d
        self.order = order

    @classmethod
    def constant(cls, c, like: "Taylor") -> "Taylor":
        z = np.zeros_like(like.val)
        d = {key: z for key in like.d}
        d[(0, 0)] = z + c
        return cls(d, like.order)

    @property
    def val(self) -> np.ndarray:
        return self.d[(0, 0)]

    def __getitem__(self, key):
        return self.d[key]

    def _keys(self, order):
        return [key for key in self.d if key[0] + key[1] <= order]

    def __add__(self, other):
        if isinstance(other, Taylor):
            order = min(self.order, other.order)
            return Taylor({key: self.d[key] + other.d[key] for key in self._keys(order)}, order)
        d = dict(self.d)
        d[(0, 0)] = d[(0, 0)] + other
        return Taylor(d, self.order)

    __radd__ = __add__

    def __neg__(self):
        return Taylor({key: -v for key, v in self.d.items()}, self.order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Taylor):
            return Taylor({key: v * other for key, v in self.d.items()}, self.order)
        order = min(self.order, other.order)
        out = {}
        for (a, b) in self._keys(order):
            acc = 0.0
            for i in range(a + 1):
                for j in range(b + 1):
                    if (a - i, b - j) not in other.d or (i, j) not in self.d:
                        continue
                    acc = acc + _binom(a, i) * _binom(b, j) * self.d[(i, j)] * other.d[(a - i, b - j)]
            out[(a, b)] = acc
        return Taylor(out, order)

    __rmul__ = __mul__

    def dx(self) -> "Taylor":
        return Taylor({(a, b): self.d[(a + 1, b)] for (a, b) in self._keys(self.order - 1)},
                      self.order - 1)

    def dy(self) -> "Taylor":
        return Taylor({(a, b): self.d[(a, b + 1)] for (a, b) in self._keys(self.order - 1)
                       if (a, b + 1) in self.d}, self.order - 1)

    def lap(self) -> "Taylor":
        out = self.dx().dx()
        if (0, 2) in self.d:
            out = out + self.dy().dy()
        return out


# ---------------------------------------------------------------------------
# univariate factors
# ---------------------------------------------------------------------------
class Factor:
    def derivs(self, x: np.ndarray, nmax: int) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Poly(Factor):
    coef: tuple     # ascending powers

    def derivs(self, x, nmax):
        p = Polynomial(self.coef)
        out = []
        for _ in range(nmax + 1):
            out.append(p(x))
            p = p.deriv()
        return np.array(out)


@dataclass(frozen=True)
class ExpPoly(Factor):
    """``exp(rate * x) * q(x)``."""

    rate: float
    coef: tuple

    def derivs(self, x, nmax):
        q = Polynomial(self.coef)
        e = np.exp(self.rate * x)
        out = []
        for _ in range(nmax + 1):
            out.append(e * q(x))
            q = self.rate * q + q.deriv()
        return np.array(out)


@dataclass(frozen=True)
class Trig(Factor):
    """``sin(freq * x + phase)``."""

    freq: float
    phase: float = 0.0

    def derivs(self, x, nmax):
        return np.array([self.freq ** n * np.sin(self.freq * x + self.phase + n * np.pi / 2)
                         for n in range(nmax + 1)])


@dataclass(frozen=True)
class BoundaryLayer(Factor):
    """``(exp(Pe x) - 1) / (exp(Pe) - 1)`` evaluated without overflow."""

    pe: float

    def derivs(self, x, nmax):
        pe = self.pe
        x = np.asarray(x, dtype=float)
        if pe < 1.0:
            val = np.expm1(pe * x) / np.expm1(pe)
            core = np.exp(pe * x) / np.expm1(pe)
        else:
            den = -np.expm1(-pe)
            val = (np.exp(pe * (x - 1.0)) - np.exp(-pe)) / den
            core = np.exp(pe * (x - 1.0)) / den
        return np.array([val] + [pe ** n * core for n in range(1, nmax + 1)])


ONE = Poly((1.0,))


@dataclass(frozen=True)
class Separable:
    """``sum_t c_t X_t(x) Y_t(y)``; 1D fields use ``Y = ONE``."""

    terms: tuple    # of (coef, Factor, Factor)

    def jet(self, pts, order: int) -> Taylor:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        x = pts[:, 0]
        y = pts[:, 1] if pts.shape[1] > 1 else np.zeros_like(x)
        two_d = pts.shape[1] > 1
        d = {}
        for c, fx, fy in self.terms:
            dx = fx.derivs(x, order)
            dy = fy.derivs(y, order if two_d else 0)
            for a in range(order + 1):
                for b in range((order - a + 1) if two_d else 1):
                    d[(a, b)] = d.get((a, b), 0.0) + c * dx[a] * dy[b]
        return Taylor(d, order)

    def __call__(self, pts) -> np.ndarray:
        return self.jet(pts, 0).val


# ---------------------------------------------------------------------------
# problem definitions
# ---------------------------------------------------------------------------
@dataclass
class ScalarProblem:
    """Steady advection-diffusion ``u . grad(phi) - kappa lap(phi) = f``.

    ``exact`` is None when no closed-form solution is used (forcing zero).
    ``dirichlet`` is either None (use ``exact`` on the boundary) or a list of
    piecewise-constant segments ``(edge, lo, hi, value)``, applied in order
    so later segments win.
    """

    name: str
    dim: int
    velocity: tuple
    kappa: float
    exact: Separable | None = None
    dirichlet: list | None = None
    domain: tuple = ((0.0, 1.0), (0.0, 1.0))

    @property
    def peclet(self) -> float:
        return float(np.linalg.norm(self.velocity)) / self.kappa

    def exact_jet(self, pts, order=1) -> Taylor:
        return self.exact.jet(pts, order)

    def forcing(self, pts):
        """Forcing values and gradient (tuple of arrays) at ``pts``."""
        pts = np.atleast_2d(pts)
        if self.exact is None:
            z = np.zeros(len(pts))
            return z, tuple(z for _ in range(self.dim))
        phi = self.exact.jet(pts, 3)
        f = self.velocity[0] * phi.dx() - self.kappa * phi.lap()
        if self.dim == 2:
            f = f + self.velocity[1] * phi.dy()
        grad = (f[(1, 0)],) if self.dim == 1 else (f[(1, 0)], f[(0, 1)])
        return f.val, grad

    def boundary_values(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        if self.dirichlet is None:
            return self.exact(pts)
        return segment_values(self.dirichlet, pts, self.domain[: self.dim])


def segment_values(segments, pts, domain) -> np.ndarray:
    """Piecewise-constant boundary data at boundary points ``pts``."""
    pts = np.atleast_2d(pts)
    out = np.zeros(len(pts))
    (x0, x1) = domain[0]
    (y0, y1) = domain[1] if len(domain) > 1 else (0.0, 0.0)
    tol = 1e-12
    for edge, lo, hi, value in segments:
        if edge == "left":
            on, s = np.abs(pts[:, 0] - x0) < tol, pts[:, 1] if pts.shape[1] > 1 else None
        elif edge == "right":
            on, s = np.abs(pts[:, 0] - x1) < tol, pts[:, 1] if pts.shape[1] > 1 else None
        elif edge == "bottom":
            on, s = np.abs(pts[:, 1] - y0) < tol, pts[:, 0]
        elif edge == "top":
            on, s = np.abs(pts[:, 1] - y1) < tol, pts[:, 0]
        else:
            raise ValueError("unknown edge %r" % edge)
        if s is not None:
            on &= (s >= lo - tol) & (s <= hi + tol)
        out[on] = value
    return out


def boundary_layer_1d(pe: float) -> ScalarProblem:
    """``u = 1, kappa = 1/Pe``; exact ``(e^{Pe x} - 1)/(e^{Pe} - 1)``."""
    if pe <= 0:
        raise ValueError("Pe must be positive")
    exact = Separable(((1.0, BoundaryLayer(float(pe)), ONE),))
    return ScalarProblem("bl1d", 1, (1.0,), 1.0 / pe, exact)


def sine_ms(dim: int = 1, pe: float = 1.0, angle_deg: float = 45.0) -> ScalarProblem:
    """``sin(pi x)`` (1D) or ``sin(pi x) sin(pi y)`` (2D) with unit speed."""
    s = Trig(np.pi)
    if dim == 1:
        return ScalarProblem("sine1d", 1, (1.0,), 1.0 / pe, Separable(((1.0, s, ONE),)))
    th = np.deg2rad(angle_deg)
    return ScalarProblem("sine2d", 2, (np.cos(th), np.sin(th)), 1.0 / pe,
                         Separable(((1.0, s, s),)))


def skew_advection(pe: float = 1000.0, angle_deg: float = 45.0,
                   inflow_fraction: float = 0.1) -> ScalarProblem:
    """Skew advection: 1 on the bottom and the lower part of the left side."""
    th = np.deg2rad(angle_deg)
    segs = [("left", 0.0, 1.0, 0.0), ("right", 0.0, 1.0, 0.0), ("top", 0.0, 1.0, 0.0),
            ("bottom", 0.0, 1.0, 1.0), ("left", 0.0, inflow_fraction, 1.0)]
    return ScalarProblem("skew", 2, (np.cos(th), np.sin(th)), 1.0 / pe, None, segs)


@dataclass
class FlowProblem:
    """Incompressible flow benchmark.

    ``u``/``p`` are closed-form exact fields (None for the cavity).  The
    forcing is built according to ``equations``.  ``lid`` marks the cavity,
    whose boundary velocity is piecewise constant.
    """

    name: str
    nu: float
    equations: str
    u: tuple | None = None
    p: Separable | None = None
    domain: tuple = ((0.0, 1.0), (0.0, 1.0))
    neumann_edges: tuple = ()
    lid: bool = False

    @property
    def reynolds(self) -> float:
        return 1.0 / self.nu

    @property
    def nonlinear(self) -> bool:
        return self.equations.startswith("ns")

    @property
    def rotational(self) -> bool:
        return self.equations.endswith("rot")

    def velocity_jet(self, pts, order=1):
        return self.u[0].jet(pts, order), self.u[1].jet(pts, order)

    def pressure_jet(self, pts, order=1) -> Taylor:
        return self.p.jet(pts, order)

    def vorticity_jet(self, pts, order=1) -> Taylor:
        ux, uy = self.velocity_jet(pts, order + 1)
        return uy.dx() - ux.dy()

    def total_pressure_jet(self, pts, order=1) -> Taylor:
        ux, uy = self.velocity_jet(pts, order)
        return self.pressure_jet(pts, order) + 0.5 * (ux * ux + uy * uy)

    def forcing(self, pts, equations: str | None = None):
        """Forcing ``f`` (2, N) and its gradient ``grad_f[c][j]`` (N,)."""
        eq = equations or self.equations
        pts = np.atleast_2d(pts)
        if self.u is None:
            z = np.zeros(len(pts))
            return np.zeros((2, len(pts))), ((z, z), (z, z))
        ux, uy = self.velocity_jet(pts, 4)
        nu = self.nu
        if eq.endswith("vp"):
            p = self.pressure_jet(pts, 4)
            fx = -nu * ux.lap() + p.dx()
            fy = -nu * uy.lap() + p.dy()
            if eq.startswith("ns"):
                fx = fx + ux * ux.dx() + uy * ux.dy()
                fy = fy + ux * uy.dx() + uy * uy.dy()
        elif eq.endswith("rot"):
            w = uy.dx() - ux.dy()
            if eq.startswith("ns"):
                P = self.total_pressure_jet(pts, 4)
                fx = nu * w.dy() - w * uy + P.dx()
                fy = -nu * w.dx() + w * ux + P.dy()
            else:
                p = self.pressure_jet(pts, 4)
                fx = nu * w.dy() + p.dx()
                fy = -nu * w.dx() + p.dy()
        else:
            raise ValueError("unknown equations %r" % eq)
        f = np.vstack([fx.val, fy.val])
        grad = ((fx[(1, 0)], fx[(0, 1)]), (fy[(1, 0)], fy[(0, 1)]))
        return f, grad

    def boundary_velocity(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        if self.lid:
            out = np.zeros((2, len(pts)))
            top = np.abs(pts[:, 1] - self.domain[1][1]) < 1e-12
            out[0, top] = 1.0
            return out
        return np.vstack([self.u[0](pts), self.u[1](pts)])

    def neumann_data(self, pts, normal) -> np.ndarray:
        """``-nu grad(u) n + p n`` from the exact fields (kinematic p)."""
        ux, uy = self.velocity_jet(pts, 1)
        p = self.pressure_jet(pts, 0).val
        n1, n2 = normal[:, 0], normal[:, 1]
        hx = -self.nu * (ux[(1, 0)] * n1 + ux[(0, 1)] * n2) + p * n1
        hy = -self.nu * (uy[(1, 0)] * n1 + uy[(0, 1)] * n2) + p * n2
        return np.vstack([hx, hy])


_E = math.e
_VORTEX_U = (
    # 2 e^x x^2 (x-1)^2 * (2y^3 - 3y^2 + y)
    Separable(((2.0, ExpPoly(1.0, (0.0, 0.0, 1.0, -2.0, 1.0)), Poly((0.0, 1.0, -3.0, 2.0))),)),
    # -e^x (x-1) x (x^2 + 3x - 2) * (y-1)^2 y^2
    Separable(((-1.0, ExpPoly(1.0, (0.0, 2.0, -5.0, 2.0, 1.0)), Poly((0.0, 0.0, 1.0, -2.0, 1.0))),)),
)
_S = (0.0, -1.0, 1.0)                       # y^2 - y
_S2 = (0.0, 0.0, 1.0, -2.0, 1.0)            # (y^2 - y)^2
_VORTEX_P = Separable((
    (-424.0 + 156.0 * _E, ONE, ONE),
    (-456.0, ONE, Poly(_S)),
    (1.0, ExpPoly(1.0, (456.0, -456.0, 228.0, -72.0, 12.0)), Poly(_S)),
    (1.0, ExpPoly(1.0, (0.0, 2.0, -5.0, 2.0, 1.0)), Poly(_S2)),
))


def stokes_vortex_ms(nu: float = 1.0, equations: str = "stokes_vp") -> FlowProblem:
    """Manufactured vortex on the unit square (zero boundary velocity)."""
    if equations not in EQUATIONS:
        raise ValueError("equations must be one of %s" % (EQUATIONS,))
    return FlowProblem("vortex", nu, equations, _VORTEX_U, _VORTEX_P)


def kovasznay_lambda(re: float) -> float:
    return re / 2.0 - math.sqrt(re * re / 4.0 + 4.0 * math.pi ** 2)


def kovasznay(re: float = 40.0, equations: str = "ns_vp") -> FlowProblem:
    """Kovasznay flow on [-0.5, 1] x [-0.5, 0.5], Neumann outflow at x = 1."""
    lam = kovasznay_lambda(re)
    two_pi = 2.0 * math.pi
    u = (
        Separable(((1.0, ONE, ONE), (-1.0, ExpPoly(lam, (1.0,)), Trig(two_pi, np.pi / 2)))),
        Separable(((lam / two_pi, ExpPoly(lam, (1.0,)), Trig(two_pi)),)),
    )
    p = Separable(((0.5, ONE, ONE), (-0.5, ExpPoly(2.0 * lam, (1.0,)), ONE)))
    return FlowProblem("kovasznay", 1.0 / re, equations, u, p,
                       domain=((-0.5, 1.0), (-0.5, 0.5)), neumann_edges=("right",))


def lid_cavity(re: float | None = None, equations: str = "ns_vp", mu: float = 1.0) -> FlowProblem:
    """Lid-driven cavity; ``re=None`` gives the Stokes cavity with viscosity ``mu``."""
    nu = mu if re is None else 1.0 / re
    return FlowProblem("cavity", nu, equations, lid=True)
