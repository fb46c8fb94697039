import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabcoll.exceptions import DomainError, UnsupportedOrderError
from stabcoll.spline import (KnotVector, SplineField, SplineSpace1D, TensorSplineSpace2D,
                             eval_basis_1d, eval_field, eval_nonzero_basis_2d, fit_spline,
                             open_uniform_knots, stretched_knots)


def space1d(k, n, domain=(0.0, 1.0)):
    return SplineSpace1D(open_uniform_knots(k, n), domain)


# --- knot vectors ---------------------------------------------------------
def test_open_uniform_knots_examples():
    assert open_uniform_knots(2, 2).knots == (0, 0, 0, 0.5, 1, 1, 1)
    assert open_uniform_knots(3, 1).knots == (0, 0, 0, 0, 1, 1, 1, 1)
    np.testing.assert_allclose(open_uniform_knots(2, 4).interior_knots, [0.25, 0.5, 0.75])


def test_knot_vector_rejects_repeated_interior_and_non_open():
    with pytest.raises(ValueError):
        KnotVector((0, 0, 0, 0.5, 0.5, 1, 1, 1), 2)
    with pytest.raises(ValueError):
        KnotVector((0, 0, 0.5, 1, 1, 1), 2)


def test_stretched_knot_formula_value():
    # raw formula at i = 16 of 32: 0.5 (1 + tanh(-0.5) / tanh(2))
    expected = 0.5 * (1.0 + math.tanh(-0.5) / math.tanh(2.0))
    # evaluated independently: tanh(0.5) = 0.462117, tanh(2) = 0.964028
    assert expected == pytest.approx(0.5 * (1 - 0.462117157 / 0.964027580), abs=1e-9)
    assert expected == pytest.approx(0.26032, abs=1e-5)
    kv = stretched_knots(2, 32, mode="clamp")
    assert kv.breakpoints[16] == pytest.approx(expected, abs=1e-15)
    # rescaled variant is the affine image of the same formula
    raw_end = 0.5 * (1.0 + math.tanh(1.0) / math.tanh(2.0))
    assert stretched_knots(2, 32).breakpoints[16] == pytest.approx(expected / raw_end, abs=1e-14)


def test_stretched_knot_at_tanh_zero_is_half():
    # 3 i h - 2 = 0 -> i h = 2/3; n_elem = 3 gives i = 2
    assert stretched_knots(2, 3, mode="clamp").breakpoints[2] == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("n", [8, 16, 32, 64])
@pytest.mark.parametrize("mode", ["clamp", "rescale"])
def test_stretched_knots_strictly_increasing(n, mode):
    bp = stretched_knots(3, n, mode).breakpoints
    assert bp[0] == 0.0 and bp[-1] == 1.0
    assert np.all(np.diff(bp) > 0)
    assert len(bp) == n + 1


# --- basis evaluation -----------------------------------------------------
def test_degree_zero_basis():
    sp = SplineSpace1D(KnotVector((0.0, 1.0), 0))
    assert eval_basis_1d(sp, 0, 0.5) == 1.0


def test_cardinal_quadratic_value():
    # knots {0,1,2,3}, hand-unrolled Cox-de Boor: N_{0,2}(1.5) = 0.75.  The
    # cardinal B-spline is the middle function of the open space on [0, 3].
    kv = KnotVector((0, 0, 0, 1 / 3, 2 / 3, 1, 1, 1), 2)
    sp = SplineSpace1D(kv, (0.0, 3.0))
    assert eval_basis_1d(sp, 2, 1.5) == pytest.approx(0.75, abs=1e-14)


def test_errors():
    sp = space1d(3, 4)
    with pytest.raises(UnsupportedOrderError):
        eval_basis_1d(sp, 0, 0.3, d=4)
    with pytest.raises(DomainError):
        eval_basis_1d(sp, 0, 1.5)
    with pytest.raises(DomainError):
        eval_nonzero_basis_2d(TensorSplineSpace2D.uniform(2, 2), (0.5, -0.2))


@pytest.mark.parametrize("k", range(2, 9))
def test_partition_of_unity_and_nonnegativity(k, rng):
    sp = space1d(k, 7)
    xs = rng.uniform(0, 1, 1000)
    m = sp.matrix(xs)
    np.testing.assert_allclose(m.sum(axis=1), 1.0, atol=1e-12)
    assert m.min() >= -1e-14
    assert np.max(np.count_nonzero(np.abs(m) > 0, axis=1)) <= k + 1


def test_partition_of_unity_stretched_and_mapped(rng):
    sp = SplineSpace1D(stretched_knots(5, 20), (-0.5, 1.0))
    xs = rng.uniform(-0.5, 1.0, 500)
    np.testing.assert_allclose(sp.matrix(xs).sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(sp.matrix(xs, 1).sum(axis=1), 0.0, atol=1e-9)


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_derivatives_match_central_differences(k, rng):
    sp = space1d(k, 5, (0.0, 2.0))
    bp = sp.breakpoints
    xs = rng.uniform(0.05, 1.95, 60)
    xs = xs[np.min(np.abs(xs[:, None] - bp[None, :]), axis=1) > 1e-3]
    step = 1e-6
    for d in range(1, min(k, 3) + 1):
        exact = sp.matrix(xs, d)
        fd = (sp.matrix(xs + step, d - 1) - sp.matrix(xs - step, d - 1)) / (2 * step)
        scale = np.abs(exact).max()
        assert np.max(np.abs(fd - exact)) <= 1e-5 * scale


def test_third_derivative_average_rule_at_knot():
    # k = 3: third derivative is piecewise constant and jumps at knots
    sp = space1d(3, 4)
    x = 0.5
    left = sp.local_basis(x, 3, "left")
    right = sp.local_basis(x, 3, "right")
    avg = sp.local_basis(x, 3, "average")
    full = lambda s_tab: np.bincount(s_tab[0] + np.arange(s_tab[1].shape[1]),
                                     weights=s_tab[1][3], minlength=sp.n)
    np.testing.assert_allclose(full(avg), 0.5 * (full(left) + full(right)), atol=1e-10)
    assert not np.allclose(full(left), full(right))


def test_quadratic_space_reports_zero_third_derivatives():
    sp = TensorSplineSpace2D.uniform(2, 3)
    _, tab = eval_nonzero_basis_2d(sp, (0.4, 0.7), 3)
    for key in ((3, 0), (2, 1), (1, 2), (0, 3)):
        assert np.all(tab[key] == 0)


def test_eval_nonzero_basis_2d_window():
    sp = TensorSplineSpace2D.uniform(2, 4)
    window, tab = eval_nonzero_basis_2d(sp, (0.3, 0.6), 1)
    assert window.size == 9
    assert tab[(0, 0)].sum() == pytest.approx(1.0, abs=1e-14)
    assert tab[(1, 0)].sum() == pytest.approx(0.0, abs=1e-12)
    assert tab[(0, 1)].sum() == pytest.approx(0.0, abs=1e-12)


# --- interpolation and fields ---------------------------------------------
def test_fit_spline_hand_example():
    kv = KnotVector((0, 0, 0, 0.5, 1, 1, 1), 2)
    sp = SplineSpace1D(kv)
    np.testing.assert_allclose(sp.greville, [0, 0.25, 0.75, 1])
    fld = fit_spline(sp, [0, 1, 1, 0])
    assert eval_field(fld, 0.25) == pytest.approx(1.0, abs=1e-12)


def test_fit_constant_gives_constant_coefficients():
    sp = TensorSplineSpace2D.uniform(3, 4)
    fld = fit_spline(sp, np.full(sp.n, 2.5))
    np.testing.assert_allclose(fld.coefficients, 2.5, atol=1e-12)
    assert eval_field(fld, (0.3, 0.8), (1, 0)) == pytest.approx(0.0, abs=1e-12)


def test_zero_field_and_linear_derivative():
    sp = space1d(3, 5)
    assert eval_field(SplineField(sp, np.zeros(sp.n)), 0.4) == 0.0
    lin = fit_spline(sp, sp.greville)
    for x in np.linspace(0, 1, 17):
        assert eval_field(lin, x, 1) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_polynomial_exactness_2d(k, rng):
    sp = TensorSplineSpace2D.uniform(k, 3, domain=((-0.5, 1.0), (0.0, 2.0)))
    gx, gy = sp.space_x.greville, sp.space_y.greville
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    pts = rng.uniform([-0.5, 0.0], [1.0, 2.0], (10, 2))
    for a in range(k + 1):
        b = k - a
        fld = fit_spline(sp, (X ** a * Y ** b).ravel())
        for x, y in pts:
            assert eval_field(fld, (x, y)) == pytest.approx(x ** a * y ** b, abs=1e-8)
            dx = a * x ** (a - 1) * y ** b if a else 0.0
            dyy = b * (b - 1) * x ** a * y ** (b - 2) if b > 1 else 0.0
            dxy = a * b * x ** (a - 1) * y ** (b - 1) if a and b else 0.0
            assert eval_field(fld, (x, y), (1, 0)) == pytest.approx(dx, abs=1e-8)
            assert eval_field(fld, (x, y), (0, 2)) == pytest.approx(dyy, abs=1e-7)
            assert eval_field(fld, (x, y), (1, 1)) == pytest.approx(dxy, abs=1e-7)


@settings(max_examples=25, deadline=None)
@given(k=st.integers(2, 8), n=st.integers(1, 12),
       data=st.lists(st.floats(-10, 10, allow_nan=False), min_size=20, max_size=20))
def test_greville_round_trip(k, n, data):
    sp = space1d(k, n)
    vals = np.resize(np.asarray(data), sp.n)
    fld = fit_spline(sp, vals)
    back = fld.grid(sp.greville)[0]
    np.testing.assert_allclose(back, vals, atol=1e-10 * max(1.0, np.abs(vals).max()))


@settings(max_examples=20, deadline=None)
@given(k=st.integers(2, 8), x=st.floats(0.0, 1.0))
def test_partition_of_unity_property(k, x):
    sp = space1d(k, 9)
    start, tab = sp.local_basis(x, 0)
    assert tab[0].sum() == pytest.approx(1.0, abs=1e-12)
    assert tab.shape[1] <= k + 2


def test_field_grid_matches_pointwise():
    sp = TensorSplineSpace2D.uniform(3, 3)
    rng = np.random.default_rng(0)
    fld = SplineField(sp, rng.normal(size=sp.n))
    xs, ys = np.array([0.1, 0.55]), np.array([0.2, 0.9, 1.0])
    g = fld.grid(xs, ys, (1, 1))[0]
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            assert g[i, j] == pytest.approx(eval_field(fld, (x, y), (1, 1)), abs=1e-10)
