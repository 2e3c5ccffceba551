import math

import numpy as np
import pytest
from scipy import stats

from funcmahal.errors import NumericalError
from funcmahal.funcspace import make_uniform_grid
from funcmahal.simulate import (
    BM_BRIDGE_CUTS,
    KernelSpec,
    ScenarioSpec,
    _gp_factor,
    bayes_error_cut,
    brownian_pair,
    contamination_model,
    fourier_basis,
    gp_sample,
    kernel_matrix,
    n_contaminated,
    scenario_sample,
)


def test_zero_kernel_returns_mean():
    g = make_uniform_grid(10)
    mean = np.sin(g.points)
    s = gp_sample(np.zeros((10, 10)), mean, g, 5, seed=1)
    np.testing.assert_array_equal(s.curves, np.tile(mean, (5, 1)))


def test_brownian_marginal_variances():
    g = make_uniform_grid(21)
    X = gp_sample(KernelSpec("brownian"), None, g, 5000, seed=3).curves
    assert np.all(X[:, 0] == 0)
    v1 = X[:, -1].var()
    assert abs(v1 - 1) <= 3 * math.sqrt(2 / 5000)


def test_ou_covariance_at_a_pair():
    g = make_uniform_grid(11)  # contains 0.2 and 0.7
    X = gp_sample(KernelSpec.ou(0.3, 0.3), None, g, 5000, seed=4).curves
    i, j = 2, 7
    prod = X[:, i] * X[:, j]
    target = 0.3 * math.exp(-5 / 3)
    assert abs(prod.mean() - target) <= 3 * prod.std() / math.sqrt(5000)


def test_gp_is_deterministic():
    g = make_uniform_grid(15)
    a = gp_sample(KernelSpec.ou(), None, g, 4, seed=9).curves
    np.testing.assert_array_equal(a, gp_sample(KernelSpec.ou(), None, g, 4, seed=9).curves)


def test_factorization_jitter_and_failure():
    # rank-deficient but PSD: needs jitter
    v = np.arange(1.0, 6.0)
    L, live = _gp_factor(np.outer(v, v))
    assert live.all() and np.all(np.isfinite(L))
    with pytest.raises(NumericalError):
        _gp_factor(np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(NumericalError):
        _gp_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec("matern")
    with pytest.raises(ValueError):
        KernelSpec.ou(-1.0, 1.0)
    with pytest.raises(ValueError):
        KernelSpec("custom-table")
    g = make_uniform_grid(3)
    np.testing.assert_array_equal(kernel_matrix(KernelSpec("custom-table", {"table": np.eye(3)}), g), np.eye(3))


@pytest.mark.parametrize("model_id", [1, 2, 3])
def test_clean_models_have_no_contamination(model_id):
    s = contamination_model(model_id, 50, 0.0, seed=1)
    assert s.labels.sum() == 0 and s.grid.size == 50


@pytest.mark.parametrize("n,c,expected", [(100, 0.1, 10), (100, 0.05, 5), (100, 0.15, 15), (99, 0.1, 10), (7, 0.2, 2)])
def test_contamination_count_is_ceiling(n, c, expected):
    assert n_contaminated(n, c) == expected
    s = contamination_model(2, n, c, seed=0)
    assert s.labels.sum() == expected
    assert np.all(s.labels[n - expected :] == 1)


def test_contamination_errors():
    with pytest.raises(ValueError):
        contamination_model(4, 10, 0.1)
    with pytest.raises(ValueError):
        contamination_model(1, 0, 0.1)
    with pytest.raises(ValueError):
        contamination_model(1, 10, 1.0)


def test_model_one_contaminated_mean():
    s = contamination_model(1, 200, 0.5, seed=8)
    t = s.grid.points
    block = s.curves[s.labels == 1]
    se = block.std(axis=0, ddof=1) / math.sqrt(block.shape[0])
    err = np.abs(block.mean(axis=0) - 30 * t**1.5 * (1 - t))
    assert np.all(err <= 3 * se + 1e-12)


def test_model_two_shape():
    s = contamination_model(2, 400, 0.5, seed=2)
    t = s.grid.points
    dev = s.curves[s.labels == 1] - 4 * t
    # +-1.8 shift: the sign pattern should be balanced
    sides = np.sign(dev.mean(axis=1))
    assert 0.35 < np.mean(sides > 0) < 0.65


def test_bridge_pins_at_one():
    s = brownian_pair(1.0, 30, 50, seed=5)
    bridge = s.curves[s.labels == 1]
    assert np.abs(bridge[:, -1]).max() <= 1e-8


def test_cut_keeps_points_up_to_t():
    s = brownian_pair(0.75, 10, 50, seed=1)
    assert s.grid.points.max() <= 0.75
    assert s.grid.size == int(np.sum(make_uniform_grid(50).points <= 0.75))


def test_motion_variance_at_half():
    s = brownian_pair(1.0, 5000, 51, seed=8)
    x = s.curves[s.labels == 0][:, 25]
    assert abs(x.var() - 0.5) <= 3 * 0.5 * math.sqrt(2 / 5000)


def test_brownian_pair_errors():
    with pytest.raises(ValueError):
        brownian_pair(0.0)
    with pytest.raises(ValueError):
        brownian_pair(1.5)


@pytest.mark.parametrize("T,expected", [(0.75, 0.339), (0.9375, 0.209), (1.0, 0.0)])
def test_bayes_error_values(T, expected):
    assert bayes_error_cut(T) == pytest.approx(expected, abs=5e-4)


def test_bayes_error_table_column():
    published = [33.9, 30.8, 26.9, 20.9, 0.0]
    got = [100 * bayes_error_cut(T) for T in BM_BRIDGE_CUTS]
    np.testing.assert_allclose(got, published, atol=0.1)
    assert np.all(np.diff(got[:4]) < 0)


def test_bayes_error_range():
    with pytest.raises(ValueError):
        bayes_error_cut(0.0)
    with pytest.raises(ValueError):
        bayes_error_cut(1.01)
    assert 0 < bayes_error_cut(0.3) < 0.5


def test_fourier_basis_is_orthonormal():
    g = make_uniform_grid(201)
    B = fourier_basis(g.points, 7)
    np.testing.assert_allclose(B[1], np.sqrt(2) * np.cos(2 * np.pi * g.points))
    np.testing.assert_allclose(B[4], np.sqrt(2) * np.sin(4 * np.pi * g.points))
    gram = (B * g.weights) @ B.T
    np.testing.assert_allclose(gram, np.eye(7), atol=1e-10)


def test_scenario_spec_validation():
    with pytest.raises(ValueError):
        ScenarioSpec("D")
    with pytest.raises(ValueError):
        ScenarioSpec("A", "other")
    np.testing.assert_allclose(ScenarioSpec("A", sd_case="diff").coefficient_variances(1)[:2], np.exp([-0.5, -1]))
    np.testing.assert_allclose(ScenarioSpec("A", sd_case="diff").coefficient_variances(0)[:2], np.exp([-1 / 3, -2 / 3]))


def test_scenario_layout_and_determinism():
    spec = ScenarioSpec("B", "diff", "diff")
    s = scenario_sample(spec, 20, seed=3)
    assert s.grid.size == 51 and s.n == 40
    np.testing.assert_array_equal(s.labels, np.repeat([0, 1], 20))
    np.testing.assert_array_equal(s.curves, scenario_sample(spec, 20, seed=3).curves)
    with pytest.raises(ValueError):
        scenario_sample(spec, 0)


def _coefficients(spec, n, seed):
    # no noise so projections recover the coefficients exactly
    g = make_uniform_grid(401)
    s = scenario_sample(ScenarioSpec(spec.scenario, spec.mean_case, spec.sd_case, noise_sd=0.0), n, g, seed=seed)
    B = fourier_basis(g.points, 50)
    return s, (s.curves * g.weights) @ B.T


def test_scenario_b_first_coefficient_moments():
    s, A = _coefficients(ScenarioSpec("B"), 10_000, 12)
    a = A[s.labels == 0, 0]
    n = a.size
    v = math.exp(-1 / 3)
    assert abs(a.mean()) <= 3 * math.sqrt(v / n)
    # centered exponential: fourth central moment 9 v^2
    assert abs(a.var() - v) <= 3 * math.sqrt((9 - 1) * v**2 / n)


def test_scenario_c_shares_a_divisor():
    s, A = _coefficients(ScenarioSpec("C"), 10_000, 13)
    a1, a2 = A[s.labels == 0, 0], A[s.labels == 0, 1]
    # uncorrelated coefficients ...
    assert abs(np.corrcoef(a1, a2)[0, 1]) < 4 / math.sqrt(a1.size)
    # ... whose squares are dependent; rank correlation has SE 1/sqrt(n) under independence
    rho = stats.spearmanr(a1**2, a2**2)[0]
    assert rho > 3 / math.sqrt(a1.size)


def test_mean_difference_case():
    s = scenario_sample(ScenarioSpec("A", "diff", "same"), 3000, seed=1)
    t = s.grid.points
    gap = s.curves[s.labels == 1].mean(axis=0) - s.curves[s.labels == 0].mean(axis=0)
    assert np.abs(gap - t).max() < 0.15
