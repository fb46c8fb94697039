import math

import numpy as np
import pytest
import sympy as sp_

from stabcoll.benchmarks import (boundary_layer_1d, kovasznay, kovasznay_lambda, sine_ms,
                                 stokes_vortex_ms)
from stabcoll.spline import SplineField, SplineSpace1D, TensorSplineSpace2D, fit_spline, open_uniform_knots
from stabcoll.verify import (ConvergenceStudy, ErrorReport, centerline_profiles, compare_reference,
                             convergence_rate, divergence_max, error_norms, overshoot_metric,
                             read_reference)

from conftest import DATA
from oracles import X, Y, sym_forcing, sym_kovasznay, sym_vortex

def _points(domain, n=100, seed=0):
    (x0, x1), (y0, y1) = domain
    return np.random.default_rng(seed).uniform([x0, y0], [x1, y1], (n, 2))


# --- forcing consistency against a symbolic oracle -----------------------
@pytest.mark.parametrize("eq", ["stokes_vp", "stokes_rot", "ns_vp", "ns_rot"])
@pytest.mark.parametrize("bench", ["vortex", "kovasznay"])
def test_flow_forcing_matches_symbolic(bench, eq):
    if bench == "vortex":
        nu = 1.0 if eq.startswith("stokes") else 0.5
        prob, (u, p) = stokes_vortex_ms(nu, eq), sym_vortex()
    else:
        if eq.startswith("stokes"):
            pytest.skip("Kovasznay is a Navier-Stokes solution")
        nu = 1.0 / 40.0
        prob, (u, p) = kovasznay(40.0, eq), sym_kovasznay(40)
    f_sym = sym_forcing(u, p, nu, eq)
    pts = _points(prob.domain)
    f, grad = prob.forcing(pts)
    for c in range(2):
        ref = sp_.lambdify((X, Y), f_sym[c], "numpy")(pts[:, 0], pts[:, 1])
        scale = max(1.0, np.abs(ref).max())
        assert np.max(np.abs(f[c] - ref)) < 1e-10 * scale
        for j, v in enumerate((X, Y)):
            gref = sp_.lambdify((X, Y), sp_.diff(f_sym[c], v), "numpy")(pts[:, 0], pts[:, 1])
            assert np.max(np.abs(grad[c][j] - gref)) < 1e-10 * max(1.0, np.abs(gref).max())


def test_kovasznay_forcing_vanishes():
    prob = kovasznay(40.0)
    for eq in ("ns_vp", "ns_rot"):
        assert np.max(np.abs(prob.forcing(_points(prob.domain), eq)[0])) < 1e-10


@pytest.mark.parametrize("dim", [1, 2])
def test_scalar_forcing_matches_symbolic(dim):
    pe = 3.0
    prob = sine_ms(dim, pe)
    phi = sp_.sin(sp_.pi * X) * (sp_.sin(sp_.pi * Y) if dim == 2 else 1)
    u = prob.velocity
    f_sym = u[0] * sp_.diff(phi, X) - (sp_.diff(phi, X, 2) + sp_.diff(phi, Y, 2)) / pe
    if dim == 2:
        f_sym += u[1] * sp_.diff(phi, Y)
    pts = _points(((0, 1), (0, 1)))[:, :dim]
    f, grad = prob.forcing(pts)
    args = (pts[:, 0], pts[:, 1] if dim == 2 else 0 * pts[:, 0])
    np.testing.assert_allclose(f, sp_.lambdify((X, Y), f_sym)(*args), atol=1e-10)
    np.testing.assert_allclose(grad[0], sp_.lambdify((X, Y), sp_.diff(f_sym, X))(*args), atol=1e-10)


@pytest.mark.parametrize("prob", [stokes_vortex_ms(), kovasznay(40.0)], ids=["vortex", "kovasznay"])
def test_exact_velocity_is_solenoidal(prob):
    ux, uy = prob.velocity_jet(_points(prob.domain), 1)
    assert np.max(np.abs(ux[(1, 0)] + uy[(0, 1)])) < 1e-12


# --- benchmark examples -------------------------------------------------
def test_boundary_layer_values():
    prob = boundary_layer_1d(500.0)
    vals = prob.exact(np.array([[0.0], [0.99], [1.0]]))
    assert vals[0] == 0.0 and vals[2] == pytest.approx(1.0, abs=1e-15)
    assert vals[1] == pytest.approx(math.exp(-5.0), rel=1e-12)
    assert vals[1] == pytest.approx(6.7379e-3, abs=1e-7)
    assert np.all(np.isfinite(boundary_layer_1d(1e5).exact(np.linspace(0, 1, 11)[:, None])))


def test_boundary_layer_diffusion_limit():
    assert abs(boundary_layer_1d(1e-6).exact(np.array([[0.5]]))[0] - 0.5) < 1e-5


def test_sine_examples():
    j = sine_ms(1).exact_jet(np.array([[0.5]]), 2)
    assert j[(2, 0)][0] == pytest.approx(-math.pi ** 2)
    p2 = sine_ms(2)
    assert p2.exact(np.array([[0.5, 0.5]]))[0] == pytest.approx(1.0)
    edge = np.array([[0.0, 0.3], [1.0, 0.6], [0.2, 0.0], [0.7, 1.0]])
    np.testing.assert_allclose(p2.exact(edge), 0.0, atol=1e-15)


def test_vortex_examples():
    prob = stokes_vortex_ms()
    assert prob.u[0](np.array([[0.5, 0.5]]))[0] == pytest.approx(0.0, abs=1e-15)
    t = np.linspace(0, 1, 9)
    z = np.zeros_like(t)
    edges = np.vstack([np.column_stack(c) for c in ((t, z), (t, z + 1), (z, t), (z + 1, t))])
    for c in range(2):
        np.testing.assert_allclose(prob.u[c](edges), 0.0, atol=1e-15)


def test_kovasznay_examples():
    assert kovasznay_lambda(40.0) == pytest.approx(20.0 - math.sqrt(400.0 + 4 * math.pi ** 2))
    assert kovasznay_lambda(40.0) == pytest.approx(-0.96374, abs=1e-4)
    prob = kovasznay(40.0)
    assert prob.u[0](np.array([[0.0, 0.0]]))[0] == pytest.approx(0.0, abs=1e-15)
    assert prob.u[1](np.array([[0.0, 0.0]]))[0] == pytest.approx(0.0, abs=1e-15)
    xs = np.linspace(-0.5, 1.0, 7)
    np.testing.assert_allclose(prob.u[0](np.column_stack([xs, 0.25 + 0 * xs])), 1.0, atol=1e-14)


# --- norms and rates --------------------------------------------------------
def sine_exact(pts):
    x = pts[:, 0]
    return np.sin(np.pi * x), [np.pi * np.cos(np.pi * x)]


def test_error_norms_of_zero_field():
    sp = SplineSpace1D(open_uniform_knots(3, 8))
    l2, h1 = error_norms(SplineField(sp, np.zeros(sp.n)), sine_exact)
    assert l2 == pytest.approx(1 / math.sqrt(2), rel=1e-8)
    assert h1 == pytest.approx(math.pi / math.sqrt(2), rel=1e-8)


def test_error_norms_polynomial_reproduction():
    sp = TensorSplineSpace2D.uniform(3, 3)
    gx, gy = np.meshgrid(sp.space_x.greville, sp.space_y.greville, indexing="ij")
    fld = fit_spline(sp, (gx ** 3 - gx * gy ** 2).ravel())

    def exact(pts):
        x, y = pts[:, 0], pts[:, 1]
        return x ** 3 - x * y ** 2, [3 * x ** 2 - y ** 2, -2 * x * y]
    l2, h1 = error_norms(fld, exact)
    assert l2 < 1e-9 and h1 < 1e-9


def test_l2_of_constant():
    sp = TensorSplineSpace2D.uniform(2, 3)
    l2, _ = error_norms(SplineField(sp, np.zeros(sp.n)),
                        lambda pts: (np.full(len(pts), -1.5), [np.zeros(len(pts))] * 2))
    assert l2 == pytest.approx(1.5, abs=1e-12)


def test_convergence_rate_examples():
    assert convergence_rate([0.1, 0.05], [1e-2, 2.5e-3]) == pytest.approx(2.0)
    assert convergence_rate([0.4, 0.2, 0.1], [3.0, 3.0, 3.0]) == pytest.approx(0.0, abs=1e-14)
    h = np.array([0.5, 0.25, 0.125, 0.0625])
    assert convergence_rate(h, 7 * h ** 3) == pytest.approx(3.0, abs=1e-12)
    # only the finest three meshes are fitted
    assert convergence_rate(h, np.r_[1.0, 7 * h[1:] ** 3]) == pytest.approx(3.0, abs=1e-12)


def test_convergence_study():
    st = ConvergenceStudy()
    for n in (8, 16, 32):
        st.add(ErrorReport(2, n, 1.0 / n, "u", n ** -2.0, n ** -1.0))
    assert st.rate("u") == pytest.approx(2.0)
    assert st.rate("u", "h1") == pytest.approx(1.0)


def test_overshoot_examples():
    sp = TensorSplineSpace2D.uniform(2, 2)
    assert overshoot_metric(SplineField(sp, np.full(sp.n, 0.5)), 0, 1) == (0.0, 0.0)
    over, under = overshoot_metric(SplineField(sp, np.full(sp.n, 1.2)), 0, 1)
    assert over == pytest.approx(0.2) and under == 0.0


# --- reference and divergence ---------------------------------------------
def test_reference_files_parse():
    for re in (100, 400, 1000):
        for prof in ("u", "v"):
            data = read_reference(DATA / ("ghia_re%d_%s.txt" % (re, prof)))
            assert data.shape == (17, 2)
            ends = data[np.argsort(data[:, 0])][[0, -1], 1]
            # walls at rest, lid moving at unit speed
            assert tuple(ends) == ((0.0, 1.0) if prof == "u" else (0.0, 0.0))


def test_compare_reference_with_itself_is_zero():
    sp = TensorSplineSpace2D.uniform(3, 4)
    rng = np.random.default_rng(1)
    u = SplineField(sp, rng.normal(size=(2, sp.n)))
    ords = np.linspace(0, 1, 11)
    prof = centerline_profiles(u, ordinates={"u": ords, "v": ords})
    for name in ("u", "v"):
        ref = np.column_stack(prof[name])
        assert compare_reference(u, ref, name) == (0.0, 0.0)


def test_divergence_max_examples():
    sp = TensorSplineSpace2D.uniform(3, 4)
    assert divergence_max(SplineField(sp, np.zeros((2, sp.n)))) == 0.0
    uniform = SplineField(sp, np.vstack([np.ones(sp.n), np.zeros(sp.n)]))
    assert divergence_max(uniform) < 1e-12
    gx, gy = np.meshgrid(sp.space_x.greville, sp.space_y.greville, indexing="ij")
    rot = SplineField(sp, np.vstack([fit_spline(sp, gy.ravel()).coefficients,
                                     fit_spline(sp, -gx.ravel()).coefficients]))
    assert divergence_max(rot) < 1e-12
