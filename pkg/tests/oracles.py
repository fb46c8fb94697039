"""Symbolic exact fields and forcings, independent of the package."""
import sympy as sp_

X, Y = sp_.symbols("x y")


def sym_vortex():
    s = Y ** 2 - Y
    u = (2 * sp_.exp(X) * (X - 1) ** 2 * X ** 2 * (Y ** 2 - Y) * (2 * Y - 1),
         -sp_.exp(X) * (X - 1) * X * (-2 + X * (3 + X)) * (Y - 1) ** 2 * Y ** 2)
    p = (-424 + 156 * sp_.E + s * (-456 + sp_.exp(X) * (456 + X ** 2 * (228 - 5 * s) + 2 * X * (-228 + s)
                                                      + 2 * X ** 3 * (-36 + s) + X ** 4 * (12 + s))))
    return u, p


def sym_kovasznay(re):
    lam = sp_.Rational(1, 2) * re - sp_.sqrt(sp_.Rational(re * re, 4) + 4 * sp_.pi ** 2)
    u = (1 - sp_.exp(lam * X) * sp_.cos(2 * sp_.pi * Y),
         lam / (2 * sp_.pi) * sp_.exp(lam * X) * sp_.sin(2 * sp_.pi * Y))
    p = (1 - sp_.exp(2 * lam * X)) / 2
    return u, p


def sym_forcing(u, p, nu, eq):
    lap = lambda f: sp_.diff(f, X, 2) + sp_.diff(f, Y, 2)
    w = sp_.diff(u[1], X) - sp_.diff(u[0], Y)
    if eq.endswith("vp"):
        f = [-nu * lap(u[c]) + sp_.diff(p, v) for c, v in enumerate((X, Y))]
        if eq.startswith("ns"):
            f = [f[c] + u[0] * sp_.diff(u[c], X) + u[1] * sp_.diff(u[c], Y) for c in range(2)]
    else:
        P = p + (u[0] ** 2 + u[1] ** 2) / 2 if eq.startswith("ns") else p
        f = [nu * sp_.diff(w, Y) + sp_.diff(P, X), -nu * sp_.diff(w, X) + sp_.diff(P, Y)]
        if eq.startswith("ns"):
            f = [f[0] - w * u[1], f[1] + w * u[0]]
    return f
