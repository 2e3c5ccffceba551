import math

import numpy as np
import pytest

from funcmahal.covariance import (
    CovKernel,
    EigenSystem,
    eigendecompose,
    fast_mcd,
    fit_eigensystem,
    mcd_covariance,
    sample_covariance,
    sample_mean,
)
from funcmahal.funcspace import FunctionalSample, l2_inner, make_uniform_grid
from funcmahal.simulate import KernelSpec, contamination_model, gp_sample, kernel_matrix


def test_mean_of_identical_rows():
    g = make_uniform_grid(6)
    c = np.linspace(-1, 2, 6)
    np.testing.assert_array_equal(sample_mean(FunctionalSample(g, np.tile(c, (4, 1)))), c)


def test_mean_of_opposite_rows(rng):
    g = make_uniform_grid(6)
    f = rng.standard_normal(6)
    np.testing.assert_allclose(sample_mean(FunctionalSample(g, np.vstack([f, -f]))), 0, atol=1e-15)


def test_mean_of_empty_sample():
    g = make_uniform_grid(3)
    with pytest.raises(ValueError):
        sample_mean(FunctionalSample(g, np.zeros((0, 3))))


def test_brownian_sample_mean_is_small():
    # ||mean||^2 has expectation int t dt / n = 1/(2n); for n=1000 the 0.15 bound is ~6.7 sd away
    g = make_uniform_grid(50)
    s = gp_sample(KernelSpec("brownian"), None, g, 1000, seed=7)
    m = sample_mean(s)
    assert math.sqrt(l2_inner(m, m, g)) <= 0.15


def test_covariance_of_identical_rows():
    g = make_uniform_grid(5)
    K = sample_covariance(FunctionalSample(g, np.ones((3, 5)))).matrix
    np.testing.assert_array_equal(K, np.zeros((5, 5)))


def test_covariance_of_plus_minus_pair(rng):
    g = make_uniform_grid(5)
    e = rng.standard_normal(5)
    K = sample_covariance(FunctionalSample(g, np.vstack([e, -e]))).matrix
    np.testing.assert_allclose(K, np.outer(e, e), atol=1e-14)


def test_covariance_needs_two_curves():
    g = make_uniform_grid(3)
    with pytest.raises(ValueError):
        sample_covariance(FunctionalSample(g, np.ones((1, 3))))


def test_covariance_with_supplied_center(rng):
    g = make_uniform_grid(4)
    X = rng.standard_normal((10, 4))
    c = np.full(4, 0.3)
    K = sample_covariance(FunctionalSample(g, X), center=c).matrix
    np.testing.assert_allclose(K, (X - c).T @ (X - c) / 10)


def test_brownian_sample_covariance_matches_min():
    g = make_uniform_grid(50)
    s = gp_sample(KernelSpec("brownian"), None, g, 2000, seed=11)
    K = sample_covariance(s).matrix
    S, T = np.meshgrid(g.points, g.points, indexing="ij")
    assert np.abs(K - np.minimum(S, T)).max() <= 0.1


def test_kernel_rejects_asymmetry():
    g = make_uniform_grid(3)
    K = np.eye(3)
    K[0, 1] = 0.5
    with pytest.raises(ValueError):
        CovKernel(g, K)


def test_constant_kernel_has_single_unit_mode():
    g = make_uniform_grid(30)
    es = eigendecompose(CovKernel(g, np.ones((30, 30))))
    assert es.rank == 1
    assert es.eigenvalues[0] == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_allclose(es.eigenfunctions[0], 1.0, atol=1e-10)


def test_zero_kernel_has_empty_spectrum():
    g = make_uniform_grid(8)
    es = eigendecompose(CovKernel(g, np.zeros((8, 8))))
    assert es.rank == 0 and es.eigenfunctions.shape == (0, 8)


def test_brownian_leading_eigenvalues():
    g = make_uniform_grid(500)
    es = eigendecompose(CovKernel(g, kernel_matrix(KernelSpec("brownian"), g)))
    assert es.eigenvalues[0] == pytest.approx(4 / np.pi**2, rel=0.01)
    assert es.eigenvalues[1] == pytest.approx(4 / (9 * np.pi**2), rel=0.01)


def test_brownian_eigenvalues_converge_under_refinement():
    exact = 1 / ((np.arange(1, 4) - 0.5) * np.pi) ** 2
    errs = []
    for p in (50, 100, 200):
        g = make_uniform_grid(p)
        lam = eigendecompose(CovKernel(g, kernel_matrix(KernelSpec("brownian"), g))).eigenvalues[:3]
        errs.append(np.abs(lam / exact - 1).max())
    assert errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("family", ["brownian", "bridge", "ou"])
def test_spectral_invariants(family):
    g = make_uniform_grid(80)
    spec = KernelSpec.ou(0.3, 0.3) if family == "ou" else KernelSpec(family)
    K = kernel_matrix(spec, g)
    es = eigendecompose(CovKernel(g, K))
    E = es.eigenfunctions
    gram = (E * g.weights) @ E.T
    np.testing.assert_allclose(gram, np.eye(es.rank), atol=1e-8)
    assert np.sum(es.eigenvalues) == pytest.approx(np.sum(g.weights * np.diag(K)), rel=1e-6)
    recon_tol = 1e-12 * es.eigenvalues[0] * es.rank
    assert np.abs(es.kernel() - K).max() <= max(recon_tol, 1e-12)
    assert np.all(np.diff(es.eigenvalues) <= 0)


def test_weighted_operator_is_psd_for_sample_covariance(rng):
    g = make_uniform_grid(30)
    s = FunctionalSample(g, rng.standard_normal((8, 30)))
    vals = np.linalg.eigvalsh(sample_covariance(s).weighted())
    assert vals.min() >= -1e-10 * vals.max()


def test_max_rank_and_tolerance():
    g = make_uniform_grid(60)
    K = kernel_matrix(KernelSpec("brownian"), g)
    assert eigendecompose(CovKernel(g, K), max_rank=4).rank == 4
    assert eigendecompose(CovKernel(g, K), tol_rel=1e-2).eigenvalues.min() > 1e-2 * 4 / np.pi**2 * 0.99


def test_eigenfunction_sign_is_deterministic():
    g = make_uniform_grid(40)
    es = eigendecompose(CovKernel(g, kernel_matrix(KernelSpec("brownian"), g)))
    E = es.eigenfunctions
    # e_j(0) = 0 for Brownian motion, so the first live node decides the sign
    assert np.all(E[:, 1] > 0)



def test_eigensystem_validation():
    g = make_uniform_grid(3)
    with pytest.raises(ValueError):
        EigenSystem(g, np.zeros(3), [1.0, 2.0], np.eye(3)[:2])
    with pytest.raises(ValueError):
        EigenSystem(g, np.zeros(3), [1.0, 0.0], np.eye(3)[:2])


def test_fit_eigensystem_unknown_mode(rng):
    s = FunctionalSample(make_uniform_grid(5), rng.standard_normal((6, 5)))
    with pytest.raises(ValueError):
        fit_eigensystem(s, "shrinkage")


def test_mcd_full_subset_is_bit_identical():
    s = contamination_model(1, 100, 0.1, seed=2)
    K, m = mcd_covariance(s, h_fraction=1.0)
    np.testing.assert_array_equal(K.matrix, sample_covariance(s).matrix)
    np.testing.assert_array_equal(m, sample_mean(s))


def test_mcd_subset_avoids_contamination():
    good = 0
    for seed in range(50):
        s = contamination_model(1, 100, 0.2, seed=1000 + seed)
        _, _, support = mcd_covariance(s, h_fraction=0.75, seed=seed, return_support=True)
        if np.mean(s.labels[support] == 0) >= 0.9:
            good += 1
    assert good >= 45


def test_mcd_on_clean_data_tracks_empirical_spectrum():
    g = make_uniform_grid(50)
    s = gp_sample(KernelSpec.ou(1.0, 0.3), None, g, 200, seed=5)
    K, m = mcd_covariance(s, k_dims=5, seed=1)
    robust = eigendecompose(K, m).eigenvalues[:5]
    plain = fit_eigensystem(s).eigenvalues[:5]
    np.testing.assert_allclose(robust, plain, rtol=0.25)


def test_mcd_is_deterministic_under_seed():
    s = contamination_model(2, 100, 0.1, seed=4)
    a = mcd_covariance(s, seed=9, return_support=True)
    b = mcd_covariance(s, seed=9, return_support=True)
    np.testing.assert_array_equal(a[2], b[2])
    np.testing.assert_array_equal(a[0].matrix, b[0].matrix)


def test_mcd_argument_errors(rng):
    s = FunctionalSample(make_uniform_grid(10), rng.standard_normal((12, 10)))
    with pytest.raises(ValueError):
        mcd_covariance(s, k_dims=8)
    with pytest.raises(ValueError):
        mcd_covariance(s, h_fraction=0.4)


def test_fast_mcd_ignores_planted_cluster(rng):
    Z = rng.standard_normal((80, 2))
    Z[:10] += 15
    support = fast_mcd(Z, 60, seed=3, n_restarts=20)
    assert support.size == 60 and not np.any(support < 10)
    assert np.all(np.diff(support) > 0)
