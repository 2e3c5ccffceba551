"""The alpha-regularized functional Mahalanobis distance.

For a covariance operator with eigenpairs ``(lambda_j, e_j)`` and a
regularization ``alpha > 0``::

    x_alpha        = sum_j lambda_j / (lambda_j + alpha) <x, e_j> e_j
    M_alpha(x, m)^2 = sum_j lambda_j / (lambda_j + alpha)^2 <x - m, e_j>^2

All sums run over the retained (numerically nonzero) spectrum.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .covariance import DEFAULT_TOL_REL, EigenSystem, fit_eigensystem
from .funcspace import FunctionalSample, Grid, as_curve

__all__ = [
    "MahalanobisModel",
    "fit_model",
    "smooth_trajectory",
    "mahalanobis_distance",
    "mahalanobis_sq",
    "rkhs_norm",
    "dfm_semidistance",
    "dfm_sq",
    "depth",
    "depths",
    "model_to_dict",
    "model_from_dict",
    "model_to_json",
    "model_from_json",
]


@dataclass(frozen=True, eq=False)
class MahalanobisModel:
    eigsys: EigenSystem
    alpha: float

    def __post_init__(self):
        alpha = float(self.alpha)
        if not (np.isfinite(alpha) and alpha > 0):
            raise ValueError(f"alpha must be a positive finite number, got {self.alpha!r}")
        object.__setattr__(self, "alpha", alpha)

    @property
    def grid(self) -> Grid:
        return self.eigsys.grid

    @property
    def mean(self) -> np.ndarray:
        return self.eigsys.mean

    def distance_weights(self) -> np.ndarray:
        """Per-mode weights ``lambda_j / (lambda_j + alpha)^2``."""
        lam = self.eigsys.eigenvalues
        return lam / (lam + self.alpha) ** 2

    def with_alpha(self, alpha: float) -> "MahalanobisModel":
        return MahalanobisModel(self.eigsys, alpha)


def fit_model(
    sample: FunctionalSample,
    alpha: float,
    cov_mode: str = "empirical",
    tol_rel: float = DEFAULT_TOL_REL,
    **mcd_options,
) -> MahalanobisModel:
    """Estimate mean and covariance from ``sample`` and wrap them with ``alpha``."""
    return MahalanobisModel(fit_eigensystem(sample, cov_mode, tol_rel, **mcd_options), alpha)


def smooth_trajectory(x, model: MahalanobisModel) -> np.ndarray:
    """Penalized projection ``(K + alpha I)^{-1} K x`` of ``x`` onto the RKHS."""
    x = as_curve(x, model.grid, "x")
    es = model.eigsys
    c = es.coefficients(x)
    lam = es.eigenvalues
    return (lam / (lam + model.alpha) * c) @ es.eigenfunctions


def mahalanobis_sq(X, m, model: MahalanobisModel) -> np.ndarray:
    """Squared distances ``M_alpha(X_i, m)^2`` for every row of ``X``."""
    m = as_curve(m, model.grid, "m")
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.grid.size:
        raise ValueError(f"curves have {X.shape[1]} points, model grid has {model.grid.size}")
    c = model.eigsys.coefficients(X - m)
    d2 = (c * c) @ model.distance_weights()
    return d2[0] if single else d2


def mahalanobis_distance(x, m, model: MahalanobisModel) -> float:
    """``M_alpha(x, m)``; a metric on curves for any fixed model."""
    x = as_curve(x, model.grid, "x")
    return float(np.sqrt(mahalanobis_sq(x, m, model)))


def rkhs_norm(x, eigsys: EigenSystem) -> float:
    """Rank-truncated RKHS norm ``(sum_j <x, e_j>^2 / lambda_j)^{1/2}``.

    The full series diverges for almost every process trajectory; this is
    only the finite-rank surrogate over the retained spectrum.
    """
    x = as_curve(x, eigsys.grid, "x")
    c = eigsys.coefficients(x)
    return float(np.sqrt(np.sum(c * c / eigsys.eigenvalues)))


def dfm_sq(X, m, eigsys: EigenSystem, k: int) -> np.ndarray:
    """Squared truncated semidistance over the first ``k`` modes, row-wise."""
    if int(k) != k or k < 1 or k > eigsys.rank:
        raise ValueError(f"k must be in 1..{eigsys.rank}, got {k!r}")
    k = int(k)
    m = as_curve(m, eigsys.grid, "m")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    D = (X - m) * eigsys.grid.weights
    c = D @ eigsys.eigenfunctions[:k].T
    return (c * c) @ (1.0 / eigsys.eigenvalues[:k])


def dfm_semidistance(x, m, eigsys: EigenSystem, k: int) -> float:
    """Semidistance over the first ``k`` standardized eigen-coefficients."""
    x = as_curve(x, eigsys.grid, "x")
    return float(np.sqrt(dfm_sq(x, m, eigsys, k)[0]))


def depth(x, model: MahalanobisModel) -> float:
    """Centrality ``1 / (1 + M_alpha(x, mean)^2)`` in (0, 1]."""
    x = as_curve(x, model.grid, "x")
    return float(1.0 / (1.0 + mahalanobis_sq(x, model.mean, model)))


def depths(X, model: MahalanobisModel) -> np.ndarray:
    return 1.0 / (1.0 + mahalanobis_sq(np.atleast_2d(X), model.mean, model))


def model_to_dict(model: MahalanobisModel) -> dict:
    es = model.eigsys
    return {
        "kind": "mahalanobis_model",
        "alpha": model.alpha,
        "grid": {"points": es.grid.points.tolist(), "weights": es.grid.weights.tolist()},
        "mean": es.mean.tolist(),
        "eigenvalues": es.eigenvalues.tolist(),
        "eigenfunctions": es.eigenfunctions.tolist(),
    }


def model_from_dict(doc: dict) -> MahalanobisModel:
    try:
        grid = Grid(doc["grid"]["points"], doc["grid"]["weights"])
        lam = np.asarray(doc["eigenvalues"], dtype=float)
        E = np.asarray(doc["eigenfunctions"], dtype=float).reshape(lam.size, grid.size)
        es = EigenSystem(grid, doc["mean"], lam, E)
        return MahalanobisModel(es, doc["alpha"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed model document: {exc}") from exc


def model_to_json(model: MahalanobisModel, indent: Optional[int] = None) -> str:
    # float repr is the shortest string that round-trips exactly
    return json.dumps(model_to_dict(model), indent=indent)


def model_from_json(text: str) -> MahalanobisModel:
    return model_from_dict(json.loads(text))
