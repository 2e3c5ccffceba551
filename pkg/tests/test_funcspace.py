import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from funcmahal.funcspace import (
    FunctionalSample,
    Grid,
    as_curve,
    l2_inner,
    l2_norm,
    make_uniform_grid,
    project_coeffs,
)


def test_two_point_grid():
    g = make_uniform_grid(2)
    np.testing.assert_array_equal(g.points, [0, 1])
    np.testing.assert_array_equal(g.weights, [0.5, 0.5])


def test_three_point_grid():
    g = make_uniform_grid(3)
    np.testing.assert_array_equal(g.points, [0, 0.5, 1])
    np.testing.assert_array_equal(g.weights, [0.25, 0.5, 0.25])


def test_fifty_point_grid():
    g = make_uniform_grid(50)
    assert g.size == 50
    np.testing.assert_allclose(np.diff(g.points), 1 / 49)
    assert abs(g.weights.sum() - 1) <= 1e-12


def test_grid_rejects_single_point():
    with pytest.raises(ValueError):
        make_uniform_grid(1)


@pytest.mark.parametrize(
    "points",
    [[0.0, 0.5, 0.5], [0.2, 0.1], [-0.1, 0.5], [0.0, 1.2]],
)
def test_grid_rejects_bad_points(points):
    with pytest.raises(ValueError):
        Grid.from_points(points)


def test_grid_arrays_are_read_only():
    g = make_uniform_grid(5)
    with pytest.raises(ValueError):
        g.points[0] = 3.0


def test_grid_equality_and_hash():
    assert make_uniform_grid(7) == make_uniform_grid(7)
    assert hash(make_uniform_grid(7)) == hash(make_uniform_grid(7))
    assert make_uniform_grid(7) != make_uniform_grid(8)


def test_constant_inner_product_is_one():
    g = make_uniform_grid(37)
    one = np.ones(g.size)
    assert l2_inner(one, one, g) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("p", [2, 11, 50, 101])
def test_linear_times_constant_is_exact(p):
    g = make_uniform_grid(p)
    assert l2_inner(g.points, np.ones(p), g) == pytest.approx(0.5, abs=1e-14)


def test_t_squared_integral_and_richardson():
    # trapezoid error is O(h^2); Richardson on (h, h/2) should reach 1/3 much closer
    def integral(p):
        g = make_uniform_grid(p)
        return l2_inner(g.points, g.points, g)

    coarse, fine = integral(51), integral(101)
    assert abs(fine - 1 / 3) <= 1e-4
    extrapolated = (4 * fine - coarse) / 3
    assert abs(extrapolated - 1 / 3) < abs(fine - 1 / 3) / 100


def test_inner_product_length_mismatch():
    g = make_uniform_grid(5)
    with pytest.raises(ValueError):
        l2_inner(np.ones(4), np.ones(5), g)


def test_as_curve_rejects_nonfinite():
    g = make_uniform_grid(3)
    with pytest.raises(ValueError):
        as_curve([0.0, np.nan, 1.0], g)


def _orthonormal_basis(p, rng):
    g = make_uniform_grid(p)
    Q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    return g, (Q / np.sqrt(g.weights)[:, None]).T


def test_project_on_basis_element(rng):
    g, B = _orthonormal_basis(12, rng)
    for j in range(4):
        c = project_coeffs(B[j], B, g)
        np.testing.assert_allclose(c, np.eye(12)[j], atol=1e-10)


def test_project_zero_and_linear_combination(rng):
    g, B = _orthonormal_basis(10, rng)
    np.testing.assert_array_equal(project_coeffs(np.zeros(10), B, g), np.zeros(10))
    c = project_coeffs(2 * B[0] + 3 * B[1], B, g)
    direct = np.array([np.sum(g.weights * (2 * B[0] + 3 * B[1]) * b) for b in B])
    np.testing.assert_allclose(c, direct, atol=1e-12)
    np.testing.assert_allclose(c, np.r_[2, 3, np.zeros(8)], atol=1e-10)


def test_project_alignment_error(rng):
    g, B = _orthonormal_basis(6, rng)
    with pytest.raises(ValueError):
        project_coeffs(np.ones(6), B[:, :5], g)


def test_parseval(rng):
    g, B = _orthonormal_basis(20, rng)
    x = rng.standard_normal(20)
    c = project_coeffs(x, B, g)
    assert np.sum(c**2) == pytest.approx(l2_norm(x, g) ** 2, rel=1e-8)


def test_sample_validation_and_helpers():
    g = make_uniform_grid(4)
    X = np.arange(12, dtype=float).reshape(3, 4)
    s = FunctionalSample(g, X, [0, 1, 0])
    assert s.n == 3
    np.testing.assert_array_equal(s.by_label(0).curves, X[[0, 2]])
    t = s.truncate(0.5)
    assert t.grid.size == 2 and t.curves.shape == (3, 2)
    with pytest.raises(ValueError):
        FunctionalSample(g, X, [0, 1])
    with pytest.raises(ValueError):
        FunctionalSample(g, X[:, :3])
    bad = X.copy()
    bad[1, 1] = np.inf
    with pytest.raises(ValueError):
        FunctionalSample(g, bad)


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(arrays(float, 9, elements=finite), arrays(float, 9, elements=finite))
def test_cauchy_schwarz(f, g_vals):
    g = make_uniform_grid(9)
    assert abs(l2_inner(f, g_vals, g)) <= l2_norm(f, g) * l2_norm(g_vals, g) * (1 + 1e-12) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_trapezoid_exact_on_piecewise_linear_products(p, a, b, c):
    # product of a linear function with a constant is linear, hence integrated exactly
    g = make_uniform_grid(p)
    f = a + b * g.points
    exact = c * (a + b / 2)
    assert l2_inner(f, np.full(p, c), g) == pytest.approx(exact, abs=1e-10)
