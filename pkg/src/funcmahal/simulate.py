"""Seeded generators for the simulation models.

Every generator takes an integer ``seed`` and is fully deterministic for a
given argument tuple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats

from .errors import NumericalError
from ._seeding import substreams
from .funcspace import FunctionalSample, Grid, as_curve, make_uniform_grid

__all__ = [
    "KernelSpec",
    "ScenarioSpec",
    "kernel_matrix",
    "gp_sample",
    "contamination_model",
    "n_contaminated",
    "brownian_pair",
    "bayes_error_cut",
    "fourier_basis",
    "scenario_sample",
    "BM_BRIDGE_CUTS",
]

BM_BRIDGE_CUTS = (0.75, 0.8125, 0.875, 0.9375, 1.0)

_FAMILIES = ("ou", "brownian", "bridge", "custom-table")


@dataclass(frozen=True)
class KernelSpec:
    """A covariance family and its parameters.

    ``ou`` is ``scale * exp(-|s - t| / range)``; ``custom-table`` carries a
    full matrix under ``params["table"]``.
    """

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "ou":
            for key in ("scale", "range"):
                if not self.params.get(key, 1.0) > 0:
                    raise ValueError(f"OU parameter {key!r} must be positive")
        if self.family == "custom-table" and "table" not in self.params:
            raise ValueError("custom-table kernel needs params['table']")

    @classmethod
    def ou(cls, scale: float = 1.0, range: float = 1.0) -> "KernelSpec":
        return cls("ou", {"scale": scale, "range": range})


def kernel_matrix(kernel: KernelSpec, grid: Grid) -> np.ndarray:
    s, t = np.meshgrid(grid.points, grid.points, indexing="ij")
    if kernel.family == "ou":
        scale = kernel.params.get("scale", 1.0)
        rng = kernel.params.get("range", 1.0)
        return scale * np.exp(-np.abs(s - t) / rng)
    if kernel.family == "brownian":
        return np.minimum(s, t)
    if kernel.family == "bridge":
        return np.minimum(s, t) - s * t
    K = np.asarray(kernel.params["table"], dtype=float)
    if K.shape != (grid.size, grid.size):
        raise ValueError("custom kernel table does not match the grid")
    return K


def _gp_factor(K: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lower factor of ``K`` on its nondegenerate points, plus their mask.

    Points with exactly zero variance are pinned to the mean.  The rest is
    Cholesky-factorized, adding ``1e-10 * max(diag)`` to the diagonal (and
    escalating x10 up to three times) if the plain factorization fails.
    """
    K = 0.5 * (K + K.T)
    diag = np.diag(K)
    if diag.size and diag.min() < -1e-12 * max(diag.max(), 0.0):
        raise NumericalError("covariance matrix has negative variances")
    live = diag > 0
    sub = K[np.ix_(live, live)]
    if sub.size == 0:
        return np.zeros((0, 0)), live
    jitter = 1e-10 * np.diag(sub).max()
    for attempt in range(5):
        bump = 0.0 if attempt == 0 else jitter * 10 ** (attempt - 1)
        try:
            return linalg.cholesky(sub + bump * np.eye(sub.shape[0]), lower=True), live
        except linalg.LinAlgError:
            continue
    raise NumericalError("covariance matrix could not be factorized; is it positive semidefinite?")


def gp_sample(kernel, mean, grid: Grid, n: int, seed: int = 0) -> FunctionalSample:
    """``n`` Gaussian-process trajectories on ``grid``.

    ``kernel`` is a :class:`KernelSpec` or a ready ``p x p`` matrix.
    """
    K = kernel_matrix(kernel, grid) if isinstance(kernel, KernelSpec) else np.asarray(kernel, float)
    mean = np.zeros(grid.size) if mean is None else as_curve(mean, grid, "mean")
    if n < 0:
        raise ValueError("n must be nonnegative")
    L, live = _gp_factor(K)
    rng = np.random.default_rng(seed)
    X = np.tile(mean, (n, 1))
    if L.size:
        Z = rng.standard_normal((n, L.shape[0]))
        X[:, live] += Z @ L.T
    return FunctionalSample(grid, X)


def n_contaminated(n: int, c: float) -> int:
    """``ceil(c * n)``, robust to representation error in ``c``."""
    return int(math.ceil(round(c * n, 9)))


def _main_and_contaminated_means(model_id, t, rng, m):
    if model_id == 1:
        main = 30 * t * (1 - t) ** 1.5
        contam = np.tile(30 * t**1.5 * (1 - t), (m, 1))
        return main, contam
    mu = rng.uniform(0.25, 0.75, size=(m, 1))
    main = 4 * t
    if model_id == 2:
        sign = np.where(rng.random((m, 1)) < 0.5, 1.0, -1.0)
        bump = (0.02 * np.pi) ** -0.5 * np.exp(-((t - mu) ** 2) / 0.02)
        return main, main + 1.8 * sign + bump
    return main, main + 2 * np.sin(4 * (t + mu) * np.pi)


def contamination_model(model_id: int, n: int, c: float, grid: Grid = None, seed: int = 0) -> FunctionalSample:
    """Main-process curves plus ``ceil(c * n)`` contaminated ones.

    Labels are 1 for contaminated curves, which come last.

    Model 1: ``30 t (1-t)^{3/2}`` vs ``30 t^{3/2} (1-t)``, OU(0.3, 0.3) noise.
    Model 2: ``4t`` vs ``4t +/- 1.8 + Gaussian bump at mu``, exp(-|s-t|) noise.
    Model 3: ``4t`` vs ``4t + 2 sin(4 (t + mu) pi)``, exp(-|s-t|) noise.
    """
    if model_id not in (1, 2, 3):
        raise ValueError(f"model_id must be 1, 2 or 3, got {model_id!r}")
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 <= c < 1:
        raise ValueError("contamination rate must lie in [0, 1)")
    grid = make_uniform_grid(50) if grid is None else grid
    t = grid.points
    m = n_contaminated(n, c)
    noise = KernelSpec.ou(0.3, 0.3) if model_id == 1 else KernelSpec.ou(1.0, 1.0)
    s_noise, s_shape = substreams(seed, 2)
    eps = gp_sample(noise, None, grid, n, seed=s_noise).curves
    main, contam = _main_and_contaminated_means(model_id, t, np.random.default_rng(s_shape), m)
    X = eps.copy()
    X[: n - m] += main
    X[n - m :] += contam
    labels = np.r_[np.zeros(n - m, int), np.ones(m, int)]
    return FunctionalSample(grid, X, labels)


def brownian_pair(T_cut: float = 1.0, n_per_class: int = 50, grid_size: int = 50, seed: int = 0) -> FunctionalSample:
    """Brownian motion (label 0) and Brownian bridge (label 1) cut at ``T_cut``.

    Both are simulated on a ``grid_size``-point grid over [0, 1] and then
    restricted to the nodes ``<= T_cut``.
    """
    if not 0 < T_cut <= 1:
        raise ValueError("T_cut must lie in (0, 1]")
    grid = make_uniform_grid(grid_size)
    s0, s1 = substreams(seed, 2)
    bm = gp_sample(KernelSpec("brownian"), None, grid, n_per_class, seed=s0).curves
    bb = gp_sample(KernelSpec("bridge"), None, grid, n_per_class, seed=s1).curves
    labels = np.r_[np.zeros(n_per_class, int), np.ones(n_per_class, int)]
    full = FunctionalSample(grid, np.vstack([bm, bb]), labels)
    return full if T_cut >= 1 else full.truncate(T_cut)


def bayes_error_cut(T: float) -> float:
    """Bayes error for equiprobable Brownian motion vs bridge observed on [0, T]."""
    if not 0 < T <= 1:
        raise ValueError("T must lie in (0, 1]")
    if T == 1:
        return 0.0
    a = math.sqrt(-(1 - T) * math.log(1 - T))
    Phi = stats.norm.cdf
    return float(0.5 - Phi(a / math.sqrt(T * (1 - T))) + Phi(a / math.sqrt(T)))


@dataclass(frozen=True)
class ScenarioSpec:
    """Fourier-expansion classification scenario.

    ``scenario`` A has Gaussian coefficients, B centered exponential ones,
    and C divides B's coefficients by a per-curve ``chi2_30 / 30`` draw.
    """

    scenario: str
    mean_case: str = "same"
    sd_case: str = "same"
    n_modes: int = 50
    noise_sd: float = 0.1

    def __post_init__(self):
        if self.scenario not in ("A", "B", "C"):
            raise ValueError(f"scenario must be A, B or C, got {self.scenario!r}")
        for name in ("mean_case", "sd_case"):
            if getattr(self, name) not in ("same", "diff"):
                raise ValueError(f"{name} must be 'same' or 'diff'")
        if self.n_modes < 1 or self.noise_sd < 0:
            raise ValueError("invalid number of modes or noise level")

    def coefficient_variances(self, label: int) -> np.ndarray:
        j = np.arange(1, self.n_modes + 1)
        if label == 1 and self.sd_case == "diff":
            return np.exp(-j / 2)
        return np.exp(-j / 3)


def fourier_basis(t, n_modes: int) -> np.ndarray:
    """Rows ``1, sqrt2 cos(2 pi t), sqrt2 sin(2 pi t), sqrt2 cos(4 pi t), ...``."""
    t = np.asarray(t, dtype=float)
    out = np.empty((n_modes, t.size))
    out[0] = 1.0
    for j in range(1, n_modes):
        k = (j + 1) // 2
        trig = np.cos if j % 2 == 1 else np.sin
        out[j] = np.sqrt(2) * trig(2 * np.pi * k * t)
    return out


def _scenario_class(spec: ScenarioSpec, label: int, n: int, t, rng) -> np.ndarray:
    sd = np.sqrt(spec.coefficient_variances(label))
    if spec.scenario == "A":
        A = rng.standard_normal((n, spec.n_modes)) * sd
    else:
        A = rng.exponential(1.0, size=(n, spec.n_modes)) * sd - sd
    if spec.scenario == "C":
        A = A / (rng.chisquare(30, size=(n, 1)) / 30)
    X = A @ fourier_basis(t, spec.n_modes)
    if label == 1 and spec.mean_case == "diff":
        X += t
    if spec.scenario != "C" and spec.noise_sd > 0:
        X += spec.noise_sd * rng.standard_normal(X.shape)
    return X


def scenario_sample(spec: ScenarioSpec, n_per_class: int, grid: Grid = None, seed: int = 0) -> FunctionalSample:
    """``n_per_class`` curves of each class (labels 0 then 1)."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be positive")
    grid = make_uniform_grid(51) if grid is None else grid
    streams = substreams(seed, 2)
    parts = [
        _scenario_class(spec, label, n_per_class, grid.points, np.random.default_rng(ss))
        for label, ss in enumerate(streams)
    ]
    labels = np.repeat([0, 1], n_per_class)
    return FunctionalSample(grid, np.vstack(parts), labels)
