"""Sampling law of the squared distance under a Gaussian model.

For a Gaussian process with mean ``m`` the squared distance to a fixed
``target`` is distributed as ``sum_j beta_j Y_j`` with
``beta_j = lambda_j^2 / (lambda_j + alpha)^2`` and ``Y_j`` independent
noncentral chi-square(1) variables with noncentrality
``gamma_j = <m - target, e_j>^2 / lambda_j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy import integrate, stats

from .covariance import EigenSystem, fit_eigensystem, sample_mean
from ._seeding import substreams
from .funcspace import FunctionalSample, as_curve
from .mahalanobis import MahalanobisModel, mahalanobis_distance, mahalanobis_sq

__all__ = [
    "WeightedChiSq",
    "wcs_from_model",
    "wcs_moments",
    "wcs_sample",
    "wcs_quantile",
    "sqrt_n_mean_stat",
    "mean_test",
    "kl_divergence_kde",
    "tune_alpha_kl",
    "tune_alpha_for_sample",
    "DEFAULT_KL_ALPHA_GRID",
]

_CHUNK = 8192

DEFAULT_KL_ALPHA_GRID = np.round(np.arange(1, 101) * 1e-3, 3)


@dataclass(frozen=True, eq=False)
class WeightedChiSq:
    """The law of ``sum_j betas[j] * Y_j``, ``Y_j ~ chi2_1(noncentralities[j])``."""

    betas: np.ndarray
    noncentralities: np.ndarray

    def __post_init__(self):
        b = np.array(self.betas, dtype=float).reshape(-1)
        g = np.array(self.noncentralities, dtype=float).reshape(-1)
        if g.size == 0 and b.size:
            g = np.zeros_like(b)
        if b.shape != g.shape:
            raise ValueError("betas and noncentralities must have the same length")
        if np.any(b <= 0) or not np.all(np.isfinite(b)):
            raise ValueError("betas must be positive and finite")
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ValueError("noncentralities must be nonnegative and finite")
        b.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "betas", b)
        object.__setattr__(self, "noncentralities", g)

    @classmethod
    def central(cls, betas) -> "WeightedChiSq":
        b = np.asarray(betas, dtype=float)
        return cls(b, np.zeros_like(b))

    @property
    def is_central(self) -> bool:
        return not np.any(self.noncentralities)


def wcs_from_model(eigsys: EigenSystem, alpha: float, target=None) -> WeightedChiSq:
    """Law of ``M_alpha(X, target)^2`` for ``X`` Gaussian with the fitted mean/spectrum.

    ``target=None`` means the model mean (central case).
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    lam = eigsys.eigenvalues
    betas = (lam / (lam + alpha)) ** 2
    if target is None:
        return WeightedChiSq.central(betas)
    target = as_curve(target, eigsys.grid, "target")
    mu = eigsys.coefficients(eigsys.mean - target)
    return WeightedChiSq(betas, mu * mu / lam)


def wcs_moments(law: WeightedChiSq) -> tuple[float, float]:
    """Exact (mean, variance) of the weighted chi-square law."""
    b, g = law.betas, law.noncentralities
    mean = float(np.sum(b * (1.0 + g)))
    var = float(2.0 * np.sum(b * b * (1.0 + 2.0 * g)))
    return mean, var


def wcs_sample(law: WeightedChiSq, n_mc: int, seed: int = 0) -> np.ndarray:
    """``n_mc`` Monte Carlo draws of the law.

    Draws are generated in fixed-size chunks, each from its own substream
    of ``seed``, so the output does not depend on how chunks are scheduled.
    """
    if int(n_mc) != n_mc or n_mc < 1:
        raise ValueError(f"n_mc must be a positive integer, got {n_mc!r}")
    n_mc = int(n_mc)
    out = np.zeros(n_mc)
    if law.betas.size == 0:
        return out
    shift = np.sqrt(law.noncentralities)
    n_chunks = -(-n_mc // _CHUNK)
    streams = substreams(seed, n_chunks)
    for i, ss in enumerate(streams):
        lo, hi = i * _CHUNK, min((i + 1) * _CHUNK, n_mc)
        Z = np.random.default_rng(ss).standard_normal((hi - lo, law.betas.size))
        Z += shift
        out[lo:hi] = (Z * Z) @ law.betas
    return out


def wcs_quantile(draws, q: float) -> float:
    """Empirical quantile with linear interpolation between order statistics."""
    d = np.asarray(draws, dtype=float).reshape(-1)
    if d.size == 0:
        raise ValueError("no draws to take a quantile of")
    if not 0 < q <= 1:
        raise ValueError(f"quantile level must lie in (0, 1], got {q!r}")
    return float(np.quantile(d, q))


def sqrt_n_mean_stat(sample: FunctionalSample, m0, model: MahalanobisModel) -> float:
    """``sqrt(n) * M_alpha(sample mean, m0)`` for inference on the mean.

    Under ``H0: mean == m0`` its square is asymptotically distributed as the
    central law ``wcs_from_model(model.eigsys, model.alpha)``.
    """
    if sample.grid.size != model.grid.size:
        raise ValueError("sample and model grids differ")
    m0 = as_curve(m0, model.grid, "m0")
    return float(np.sqrt(sample.n) * mahalanobis_distance(sample_mean(sample), m0, model))


def mean_test(
    sample: FunctionalSample,
    m0,
    alpha: float = 0.01,
    n_mc: int = 2000,
    seed: int = 0,
) -> tuple[float, float]:
    """Test ``H0: E X = m0``; returns (statistic, Monte Carlo p-value).

    The model is estimated from ``sample`` itself.
    """
    model = MahalanobisModel(fit_eigensystem(sample), alpha)
    stat = sqrt_n_mean_stat(sample, m0, model)
    draws = wcs_sample(wcs_from_model(model.eigsys, alpha), n_mc, seed)
    p = (1.0 + np.sum(draws >= stat * stat)) / (n_mc + 1.0)
    return stat, float(p)


def kl_divergence_kde(observed, reference, n_support: int = 512, floor: float = 1e-12) -> float:
    """KL(observed || reference) between Silverman-bandwidth Gaussian KDEs.

    Both densities are evaluated on a shared grid of ``n_support`` points
    covering both samples; the integrand is restricted to where both
    densities exceed ``floor``.
    """
    a = np.asarray(observed, dtype=float).reshape(-1)
    b = np.asarray(reference, dtype=float).reshape(-1)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two values")
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise ValueError("degenerate sample: all values identical")
    ka = stats.gaussian_kde(a, bw_method="silverman")
    kb = stats.gaussian_kde(b, bw_method="silverman")
    pad = 3.0 * max(np.sqrt(ka.covariance[0, 0]), np.sqrt(kb.covariance[0, 0]))
    lo = min(a.min(), b.min()) - pad
    hi = max(a.max(), b.max()) + pad
    x = np.linspace(lo, hi, n_support)
    p, q = ka(x), kb(x)
    ok = (p > floor) & (q > floor)
    integrand = np.where(ok, p * np.log(np.where(ok, p, 1.0) / np.where(ok, q, 1.0)), 0.0)
    return float(integrate.trapezoid(integrand, x))


DistanceSource = Union[Callable[[float], np.ndarray], Sequence, np.ndarray]


def tune_alpha_kl(
    distances_sq: DistanceSource,
    eigsys: EigenSystem,
    alpha_grid=DEFAULT_KL_ALPHA_GRID,
    n_mc: int = 2000,
    seed: int = 0,
) -> float:
    """Pick the alpha whose observed squared distances best fit the Gaussian law.

    ``distances_sq`` gives the observed ``M_alpha^2`` values for each alpha:
    either a callable ``alpha -> array`` or an array with one row per entry
    of ``alpha_grid``.  For every alpha the KL divergence between the KDE of
    the observed values and that of ``n_mc`` draws from the central law is
    computed; the minimizer is returned (ties go to the smallest alpha).
    """
    grid = np.asarray(alpha_grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise ValueError("alpha grid is empty")
    if np.any(grid <= 0):
        raise ValueError("alpha grid values must be positive")
    if callable(distances_sq):
        rows = [np.asarray(distances_sq(a), dtype=float) for a in grid]
    else:
        rows = list(np.atleast_2d(np.asarray(distances_sq, dtype=float)))
        if len(rows) != grid.size:
            raise ValueError("need one row of distances per alpha")
    if any(r.size == 0 for r in rows):
        raise ValueError("empty distance vector")
    scores = np.array(
        [
            kl_divergence_kde(d, wcs_sample(wcs_from_model(eigsys, a), n_mc, seed))
            for a, d in zip(grid, rows)
        ]
    )
    best = scores.min()
    candidates = grid[scores == best]
    return float(candidates.min())


def tune_alpha_for_sample(
    sample: FunctionalSample,
    alpha_grid=DEFAULT_KL_ALPHA_GRID,
    n_mc: int = 2000,
    seed: int = 0,
    cov_mode: str = "empirical",
    **mcd_options,
) -> float:
    """KL-based alpha for a sample, using distances of its curves to its mean."""
    es = fit_eigensystem(sample, cov_mode, **mcd_options)
    return tune_alpha_kl(
        lambda a: mahalanobis_sq(sample.curves, es.mean, MahalanobisModel(es, a)),
        es,
        alpha_grid,
        n_mc,
        seed,
    )
