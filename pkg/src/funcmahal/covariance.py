"""Mean/covariance estimation and quadrature-weighted eigendecomposition.

The covariance operator ``(Kf)(s) = int K(s, t) f(t) dt`` is discretised as
``K W`` with ``W = diag(weights)``.  Its spectrum is obtained from the
symmetric matrix ``W^{1/2} K W^{1/2}``, whose eigenvectors ``v_j`` map to
L2-orthonormal eigenfunctions ``e_j = W^{-1/2} v_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg, stats

from ._seeding import substreams
from .funcspace import FunctionalSample, Grid, as_curve

__all__ = [
    "CovKernel",
    "EigenSystem",
    "sample_mean",
    "sample_covariance",
    "eigendecompose",
    "fit_eigensystem",
    "fast_mcd",
    "mcd_covariance",
    "DEFAULT_TOL_REL",
]

DEFAULT_TOL_REL = 1e-12


@dataclass(frozen=True, eq=False)
class CovKernel:
    """Covariance function values ``K(t_i, t_j)`` on a grid."""

    grid: Grid
    matrix: np.ndarray

    def __post_init__(self):
        K = np.array(self.matrix, dtype=float)
        p = self.grid.size
        if K.shape != (p, p):
            raise ValueError(f"kernel matrix has shape {K.shape}, expected ({p}, {p})")
        if not np.all(np.isfinite(K)):
            raise ValueError("kernel matrix contains non-finite values")
        scale = max(np.abs(K).max(), np.finfo(float).tiny)
        if np.abs(K - K.T).max() > 1e-8 * scale:
            raise ValueError("kernel matrix is not symmetric")
        K = 0.5 * (K + K.T)
        K.setflags(write=False)
        object.__setattr__(self, "matrix", K)

    def weighted(self) -> np.ndarray:
        """The symmetric operator matrix ``W^{1/2} K W^{1/2}``."""
        s = np.sqrt(self.grid.weights)
        return s[:, None] * self.matrix * s[None, :]


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Mean curve plus retained eigenpairs of a covariance operator.

    ``eigenfunctions`` has one row per eigenfunction, aligned with
    ``eigenvalues`` (nonincreasing, strictly positive).
    """

    grid: Grid
    mean: np.ndarray
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray

    def __post_init__(self):
        m = as_curve(self.mean, self.grid, "mean").copy()
        lam = np.array(self.eigenvalues, dtype=float).reshape(-1)
        E = np.array(self.eigenfunctions, dtype=float).reshape(lam.size, self.grid.size)
        if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite and positive")
        if np.any(np.diff(lam) > 0):
            raise ValueError("eigenvalues must be nonincreasing")
        for a in (m, lam, E):
            a.setflags(write=False)
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenfunctions", E)

    @property
    def rank(self) -> int:
        return self.eigenvalues.size

    def coefficients(self, X) -> np.ndarray:
        """L2 inner products of each row of ``X`` with every eigenfunction."""
        X = np.asarray(X, dtype=float)
        return (X * self.grid.weights) @ self.eigenfunctions.T

    def kernel(self) -> np.ndarray:
        """Rebuild ``K(t_i, t_j) = sum_j lambda_j e_j(t_i) e_j(t_j)``."""
        E = self.eigenfunctions
        return (E.T * self.eigenvalues) @ E

    def with_mean(self, mean) -> "EigenSystem":
        return EigenSystem(self.grid, mean, self.eigenvalues, self.eigenfunctions)


def sample_mean(sample: FunctionalSample) -> np.ndarray:
    """Pointwise average of the curves."""
    if sample.n < 1:
        raise ValueError("cannot average an empty sample")
    return sample.curves.mean(axis=0)


def sample_covariance(sample: FunctionalSample, center=None) -> CovKernel:
    """Empirical covariance with divisor ``n``.

    If ``center`` is given it replaces the sample mean.
    """
    if sample.n < 2:
        raise ValueError("covariance needs at least two curves")
    if center is None:
        center = sample_mean(sample)
    else:
        center = as_curve(center, sample.grid, "center")
    Xc = sample.curves - center
    return CovKernel(sample.grid, (Xc.T @ Xc) / sample.n)


def eigendecompose(
    cov: CovKernel,
    mean=None,
    tol_rel: float = DEFAULT_TOL_REL,
    max_rank: Optional[int] = None,
) -> EigenSystem:
    """Spectrum of the covariance operator on the grid.

    Eigenvalues below ``tol_rel * lambda_max`` (and any nonpositive rounding
    artefacts) are dropped.  ``mean`` defaults to the zero curve.
    """
    grid = cov.grid
    mean = np.zeros(grid.size) if mean is None else as_curve(mean, grid, "mean")
    s = np.sqrt(grid.weights)
    vals, vecs = linalg.eigh(cov.weighted())
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    top = vals[0] if vals.size else 0.0
    if not top > 0:
        return EigenSystem(grid, mean, np.zeros(0), np.zeros((0, grid.size)))
    keep = vals > tol_rel * top
    if max_rank is not None:
        keep &= np.arange(vals.size) < max_rank
    vals, vecs = vals[keep], vecs[:, keep]
    E = vecs.T / s
    # deterministic sign: first entry above 1e-6 of the peak magnitude is positive
    # (peak entries themselves can tie, e.g. for sinusoids)
    mag = np.abs(E)
    pivot = np.argmax(mag > 1e-6 * mag.max(axis=1, keepdims=True), axis=1)
    E = E * np.sign(E[np.arange(E.shape[0]), pivot])[:, None]
    return EigenSystem(grid, mean, vals, E)


def fit_eigensystem(
    sample: FunctionalSample,
    cov_mode: str = "empirical",
    tol_rel: float = DEFAULT_TOL_REL,
    **mcd_options,
) -> EigenSystem:
    """Mean + eigensystem of a sample, empirically or via MCD."""
    if cov_mode == "empirical":
        mean = sample_mean(sample)
        cov = sample_covariance(sample, mean)
    elif cov_mode == "mcd":
        cov, mean = mcd_covariance(sample, **mcd_options)
    else:
        raise ValueError(f"unknown covariance mode {cov_mode!r}")
    return eigendecompose(cov, mean, tol_rel=tol_rel)


def _logdet_and_stats(Z, idx):
    sub = Z[idx]
    mu = sub.mean(axis=0)
    S = np.cov(sub, rowvar=False, bias=True).reshape(Z.shape[1], Z.shape[1])
    sign, logdet = np.linalg.slogdet(S)
    if sign <= 0:
        logdet = -np.inf
    return logdet, mu, S


def _sq_dists(Z, mu, S):
    D = Z - mu
    try:
        c = linalg.cho_factor(S, check_finite=False)
        return np.einsum("ij,ij->i", D, linalg.cho_solve(c, D.T, check_finite=False).T)
    except linalg.LinAlgError:
        return np.einsum("ij,ij->i", D, (np.linalg.pinv(S) @ D.T).T)


def fast_mcd(
    Z,
    h: int,
    seed: int = 0,
    n_restarts: int = 50,
    max_csteps: int = 200,
) -> np.ndarray:
    """Raw FAST-MCD support on the rows of ``Z``.

    Each restart draws a random ``(k+1)``-subset from its own seeded
    substream, grows it until its scatter is nonsingular, then applies
    concentration steps until the determinant stops decreasing.  The subset
    with the smallest determinant wins; ties go to the lowest restart.

    Returns the sorted indices of the ``h`` selected rows.
    """
    Z = np.asarray(Z, dtype=float)
    n, k = Z.shape
    if not k < h <= n:
        raise ValueError(f"subset size must satisfy k < h <= n, got h={h}, n={n}, k={k}")
    if h == n:
        return np.arange(n)

    best_logdet, best_idx = np.inf, None
    for stream in substreams(seed, n_restarts):
        rng = np.random.default_rng(stream)
        perm = rng.permutation(n)
        m = k + 1
        logdet, mu, S = _logdet_and_stats(Z, perm[:m])
        while not np.isfinite(logdet) and m < n:
            m += 1
            logdet, mu, S = _logdet_and_stats(Z, perm[:m])
        idx = np.sort(np.argsort(_sq_dists(Z, mu, S), kind="stable")[:h])
        logdet, mu, S = _logdet_and_stats(Z, idx)
        for _ in range(max_csteps):
            if not np.isfinite(logdet):
                break
            new_idx = np.sort(np.argsort(_sq_dists(Z, mu, S), kind="stable")[:h])
            if np.array_equal(new_idx, idx):
                break
            new_logdet, new_mu, new_S = _logdet_and_stats(Z, new_idx)
            if not new_logdet < logdet:
                break
            idx, logdet, mu, S = new_idx, new_logdet, new_mu, new_S
        if logdet < best_logdet:
            best_logdet, best_idx = logdet, idx
    return best_idx


def mcd_covariance(
    sample: FunctionalSample,
    h_fraction: float = 0.75,
    k_dims: Optional[int] = None,
    seed: int = 0,
    n_restarts: int = 50,
    consistency: bool = True,
    return_support: bool = False,
):
    """Robust (covariance, mean) of a functional sample via FAST-MCD.

    Curves are projected on the leading ``k_dims`` empirical eigenfunctions
    (default ``min(10, n // 5)``), FAST-MCD selects ``ceil(h_fraction * n)``
    of them on those scores, and mean and covariance are recomputed from the
    selected curves on the full grid.

    With ``consistency`` the covariance is rescaled by
    ``median(d^2) / chi2_k.median`` of the score distances, so that it is
    unbiased for Gaussian data.  With ``h_fraction == 1`` the empirical
    estimates are returned unchanged.
    """
    n = sample.n
    if not 0.5 < h_fraction <= 1:
        raise ValueError("h_fraction must lie in (0.5, 1]")
    if k_dims is None:
        k_dims = max(1, min(10, n // 5))
    if k_dims < 1 or n < 2 * k_dims:
        raise ValueError(f"need n >= 2 * k_dims (n={n}, k_dims={k_dims})")
    h = math.ceil(h_fraction * n)

    if h >= n:
        mean = sample_mean(sample)
        out = (sample_covariance(sample, mean), mean)
        return out + (np.arange(n),) if return_support else out

    full = eigendecompose(sample_covariance(sample), sample_mean(sample))
    if full.rank < k_dims:
        raise ValueError(f"k_dims={k_dims} exceeds the covariance rank {full.rank}")
    E = full.eigenfunctions[:k_dims]
    Z = ((sample.curves - full.mean) * sample.grid.weights) @ E.T
    h = max(h, k_dims + 1)
    support = fast_mcd(Z, h, seed=seed, n_restarts=n_restarts)

    sub = sample.subset(support)
    mean = sample_mean(sub)
    K = sample_covariance(sub, mean).matrix
    if consistency:
        _, mu, S = _logdet_and_stats(Z, support)
        d2 = _sq_dists(Z, mu, S)
        K = K * (np.median(d2) / stats.chi2(k_dims).isf(0.5))
    out = (CovKernel(sample.grid, K), mean)
    return out + (support,) if return_support else out
