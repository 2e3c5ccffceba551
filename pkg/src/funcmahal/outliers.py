"""Outlier detection and functional boxplots driven by the distance to the mean."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .covariance import fit_eigensystem
from .distribution import wcs_from_model, wcs_quantile, wcs_sample
from .funcspace import FunctionalSample
from .mahalanobis import MahalanobisModel, mahalanobis_sq

__all__ = [
    "OutlierReport",
    "BoxplotSummary",
    "detect_outliers",
    "evaluate_detection",
    "functional_boxplot",
]


@dataclass(frozen=True, eq=False)
class OutlierReport:
    flags: np.ndarray
    threshold: float
    distances_sq: np.ndarray
    level: float
    cov_mode: str
    alpha: float = 0.01

    @property
    def outlier_indices(self) -> np.ndarray:
        return np.flatnonzero(self.flags)

    def to_dict(self) -> dict:
        return {
            "kind": "outlier_report",
            "alpha": self.alpha,
            "level": self.level,
            "cov_mode": self.cov_mode,
            "threshold": self.threshold,
            "distances_sq": self.distances_sq.tolist(),
            "flags": self.flags.astype(bool).tolist(),
            "outlier_indices": self.outlier_indices.tolist(),
        }

    def to_json(self, indent: Optional[int] = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)


@dataclass(frozen=True, eq=False)
class BoxplotSummary:
    median_index: int
    central_band: tuple
    whiskers: tuple
    outlier_indices: list
    depths: np.ndarray
    report: Optional[OutlierReport] = None

    def to_dict(self) -> dict:
        doc = {
            "kind": "functional_boxplot",
            "median_index": int(self.median_index),
            "central_band": {
                "lower": self.central_band[0].tolist(),
                "upper": self.central_band[1].tolist(),
            },
            "whiskers": {
                "lower": self.whiskers[0].tolist(),
                "upper": self.whiskers[1].tolist(),
            },
            "outlier_indices": [int(i) for i in self.outlier_indices],
            "depths": self.depths.tolist(),
        }
        if self.report is not None:
            doc["threshold"] = self.report.threshold
            doc["alpha"] = self.report.alpha
            doc["level"] = self.report.level
            doc["cov_mode"] = self.report.cov_mode
        return doc

    def to_json(self, indent: Optional[int] = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _fit_and_score(sample, alpha, level, cov_mode, n_mc, seed, mcd_options):
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level!r}")
    if sample.n < 2:
        raise ValueError("need at least two curves")
    es = fit_eigensystem(sample, cov_mode, seed=seed, **mcd_options) if cov_mode == "mcd" \
        else fit_eigensystem(sample, cov_mode)
    model = MahalanobisModel(es, alpha)
    d2 = mahalanobis_sq(sample.curves, es.mean, model)
    draws = wcs_sample(wcs_from_model(es, alpha), n_mc, seed)
    return model, d2, draws


def detect_outliers(
    sample: FunctionalSample,
    alpha: float = 0.01,
    level: float = 0.95,
    cov_mode: str = "mcd",
    n_mc: int = 2000,
    seed: int = 0,
    **mcd_options,
) -> OutlierReport:
    """Flag curves whose squared distance to the mean exceeds the ``level`` quantile.

    The reference quantile is taken from ``n_mc`` Monte Carlo draws of the
    central weighted chi-square law built on the fitted spectrum.  Extra
    keyword arguments go to :func:`~funcmahal.covariance.mcd_covariance`.
    """
    _, d2, draws = _fit_and_score(sample, alpha, level, cov_mode, n_mc, seed, mcd_options)
    threshold = wcs_quantile(draws, level)
    return OutlierReport(d2 > threshold, threshold, d2, float(level), cov_mode, float(alpha))


def evaluate_detection(flags, truth) -> tuple[float, float]:
    """Rates of correct (``p_c``) and false (``p_f``) detections.

    ``p_c`` is NaN when there are no true outliers; ``p_f`` is NaN when
    every curve is a true outlier.
    """
    f = np.asarray(flags, dtype=bool).reshape(-1)
    t = np.asarray(truth, dtype=bool).reshape(-1)
    if f.shape != t.shape:
        raise ValueError("flags and truth must have the same length")
    n_true, n_false = t.sum(), (~t).sum()
    p_c = (f & t).sum() / n_true if n_true else math.nan
    p_f = (f & ~t).sum() / n_false if n_false else math.nan
    return float(p_c), float(p_f)


def functional_boxplot(
    sample: FunctionalSample,
    alpha: float = 0.01,
    level: float = 0.95,
    n_mc: int = 2000,
    seed: int = 0,
    cov_mode: str = "empirical",
    **mcd_options,
) -> BoxplotSummary:
    """Depth-ordered functional boxplot.

    The median is the deepest curve (lowest index on ties), the central
    band envelopes the ``ceil(n/2)`` deepest curves and the whiskers
    envelope every curve not flagged by :func:`detect_outliers`.
    """
    if sample.n < 4:
        raise ValueError("a functional boxplot needs at least four curves")
    report = detect_outliers(sample, alpha, level, cov_mode, n_mc, seed, **mcd_options)
    d = 1.0 / (1.0 + report.distances_sq)
    order = np.argsort(-d, kind="stable")
    X = sample.curves
    central = X[order[: math.ceil(sample.n / 2)]]
    keep = X[~report.flags]
    if keep.shape[0] == 0:
        keep = X[order[:1]]
    return BoxplotSummary(
        median_index=int(order[0]),
        central_band=(central.min(axis=0), central.max(axis=0)),
        whiskers=(keep.min(axis=0), keep.max(axis=0)),
        outlier_indices=report.outlier_indices.tolist(),
        depths=d,
        report=report,
    )
