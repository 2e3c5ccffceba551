"""Binary classification with class-wise functional Mahalanobis distances.

The homoscedastic rule assigns ``x`` to the class minimizing
``M_alpha^2(x, m_j) - 2 log pi_j`` (each distance under its own class
covariance).  The heteroscedastic rule assigns class 1 when
``M_{alpha,K0}^2(x, m0) - M_{alpha,K1}^2(x, m1) > C`` with
``C = log(prod lambda^1_j / prod lambda^0_j)`` over the ten leading
eigenvalues of each class, a functional analogue of the QDA log-determinant
correction.  Ties always go to class 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .covariance import EigenSystem, fit_eigensystem
from .funcspace import FunctionalSample, as_curve
from .mahalanobis import (
    MahalanobisModel,
    dfm_sq,
    mahalanobis_sq,
    model_from_dict,
    model_to_dict,
)

__all__ = [
    "ClassifierModel",
    "DfmClassifier",
    "DEFAULT_ALPHA_GRID",
    "fit_classifier",
    "heteroscedastic_constant",
    "predict",
    "predict_many",
    "cv_alpha",
    "fit_dfm_classifier",
    "cv_dfm_k",
    "knn_classify",
    "knn_predict",
    "evaluate_classifier",
    "stratified_folds",
    "classifier_to_json",
    "classifier_from_json",
]

DEFAULT_ALPHA_GRID = np.logspace(-4, -1, 13)
MODES = ("homoscedastic", "heteroscedastic")
N_LOGDET_MODES = 10


@dataclass(frozen=True, eq=False)
class ClassifierModel:
    class_models: tuple
    priors: tuple = (0.5, 0.5)
    mode: str = "heteroscedastic"
    threshold_C: float = 0.0

    def __post_init__(self):
        if len(self.class_models) != 2:
            raise ValueError("binary classifier needs exactly two class models")
        m0, m1 = self.class_models
        if m0.grid != m1.grid:
            raise ValueError("class models must share one grid")
        p = tuple(float(v) for v in self.priors)
        if len(p) != 2 or min(p) <= 0 or abs(sum(p) - 1) > 1e-12:
            raise ValueError(f"priors must be two positive numbers summing to 1, got {self.priors!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        object.__setattr__(self, "priors", p)
        object.__setattr__(self, "class_models", (m0, m1))

    @property
    def grid(self):
        return self.class_models[0].grid

    @property
    def alpha(self) -> float:
        return self.class_models[0].alpha


def heteroscedastic_constant(es0: EigenSystem, es1: EigenSystem, n_modes: int = N_LOGDET_MODES) -> float:
    """``log(prod_j lambda1_j / prod_j lambda0_j)`` over the leading modes.

    Uses ``min(n_modes, rank0, rank1)`` eigenvalue pairs.
    """
    k = min(n_modes, es0.rank, es1.rank)
    return float(np.sum(np.log(es1.eigenvalues[:k])) - np.sum(np.log(es0.eigenvalues[:k])))


def _check_training(train0: FunctionalSample, train1: FunctionalSample):
    if train0.n < 2 or train1.n < 2:
        raise ValueError("each class needs at least two training curves")
    if train0.grid != train1.grid:
        raise ValueError("training classes must share one grid")


def _classifier_from_eigsys(es0, es1, alpha, priors, mode):
    C = heteroscedastic_constant(es0, es1) if mode == "heteroscedastic" else 0.0
    models = (MahalanobisModel(es0, alpha), MahalanobisModel(es1, alpha))
    return ClassifierModel(models, tuple(priors), mode, C)


def fit_classifier(
    train0: FunctionalSample,
    train1: FunctionalSample,
    alpha: float = 0.01,
    priors=(0.5, 0.5),
    mode: str = "heteroscedastic",
) -> ClassifierModel:
    """Fit class-wise means, covariances and (optionally) the constant ``C``."""
    _check_training(train0, train1)
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    return _classifier_from_eigsys(fit_eigensystem(train0), fit_eigensystem(train1), alpha, priors, mode)


def _decide(d0, d1, priors, mode, C):
    # class 1 iff the penalized class-0 score exceeds the class-1 score by more than C
    s0 = d0 - 2.0 * np.log(priors[0])
    s1 = d1 - 2.0 * np.log(priors[1])
    margin = C if mode == "heteroscedastic" else 0.0
    return (s0 - s1 > margin).astype(int)


def predict_many(model: ClassifierModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m0, m1 = model.class_models
    d0 = mahalanobis_sq(X, m0.mean, m0)
    d1 = mahalanobis_sq(X, m1.mean, m1)
    return _decide(d0, d1, model.priors, model.mode, model.threshold_C)


def predict(model: ClassifierModel, x) -> int:
    x = as_curve(x, model.grid, "x")
    return int(predict_many(model, x)[0])


def stratified_folds(labels, folds: int, seed: int = 0) -> np.ndarray:
    """Fold index per observation, balanced within each label."""
    labels = np.asarray(labels)
    out = np.empty(labels.size, dtype=int)
    rng = np.random.default_rng(seed)
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        if idx.size < folds:
            raise ValueError(f"class {lab} has {idx.size} curves, fewer than {folds} folds")
        out[rng.permutation(idx)] = np.arange(idx.size) % folds
    return out


def _cv_split(train0, train1, folds, seed):
    _check_training(train0, train1)
    if folds < 2:
        raise ValueError("need at least two folds")
    X = np.vstack([train0.curves, train1.curves])
    y = np.r_[np.zeros(train0.n, int), np.ones(train1.n, int)]
    fold = stratified_folds(y, folds, seed)
    for f in range(folds):
        tr, va = fold != f, fold == f
        X0 = FunctionalSample(train0.grid, X[tr & (y == 0)])
        X1 = FunctionalSample(train0.grid, X[tr & (y == 1)])
        yield X0, X1, X[va], y[va]


def _first_min(grid, errors):
    errors = np.asarray(errors)
    return grid[errors == errors.min()].min()


def cv_alpha(
    train0: FunctionalSample,
    train1: FunctionalSample,
    alpha_grid=DEFAULT_ALPHA_GRID,
    folds: int = 5,
    seed: int = 0,
    mode: str = "heteroscedastic",
    priors=(0.5, 0.5),
) -> float:
    """Alpha minimizing stratified k-fold misclassification (ties: smallest alpha)."""
    grid = np.asarray(alpha_grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise ValueError("alpha grid is empty")
    if np.any(grid <= 0):
        raise ValueError("alpha values must be positive")
    wrong = np.zeros(grid.size)
    for X0, X1, Xv, yv in _cv_split(train0, train1, folds, seed):
        es0, es1 = fit_eigensystem(X0), fit_eigensystem(X1)
        C = heteroscedastic_constant(es0, es1) if mode == "heteroscedastic" else 0.0
        c0 = es0.coefficients(Xv - es0.mean) ** 2
        c1 = es1.coefficients(Xv - es1.mean) ** 2
        for i, a in enumerate(grid):
            d0 = c0 @ (es0.eigenvalues / (es0.eigenvalues + a) ** 2)
            d1 = c1 @ (es1.eigenvalues / (es1.eigenvalues + a) ** 2)
            wrong[i] += np.sum(_decide(d0, d1, priors, mode, C) != yv)
    return float(_first_min(grid, wrong))


@dataclass(frozen=True, eq=False)
class DfmClassifier:
    """Nearest-class rule under the truncated semidistance with ``k`` modes."""

    eigsys: tuple
    k: int

    def predict_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        es0, es1 = self.eigsys
        d0 = dfm_sq(X, es0.mean, es0, min(self.k, es0.rank))
        d1 = dfm_sq(X, es1.mean, es1, min(self.k, es1.rank))
        return (d0 > d1).astype(int)


def fit_dfm_classifier(train0, train1, k: int) -> DfmClassifier:
    _check_training(train0, train1)
    return DfmClassifier((fit_eigensystem(train0), fit_eigensystem(train1)), int(k))


def cv_dfm_k(train0, train1, k_grid: Sequence[int] = range(1, 21), folds: int = 5, seed: int = 0) -> int:
    """Number of modes for the truncated semidistance rule, by k-fold CV."""
    grid = np.asarray(list(k_grid), dtype=int)
    if grid.size == 0 or np.any(grid < 1):
        raise ValueError("k grid must hold positive integers")
    wrong = np.zeros(grid.size)
    for X0, X1, Xv, yv in _cv_split(train0, train1, folds, seed):
        clf = DfmClassifier((fit_eigensystem(X0), fit_eigensystem(X1)), 1)
        for i, k in enumerate(grid):
            pred = DfmClassifier(clf.eigsys, int(k)).predict_many(Xv)
            wrong[i] += np.sum(pred != yv)
    return int(_first_min(grid, wrong))


def knn_predict(train: FunctionalSample, X, k: int) -> np.ndarray:
    """Majority vote of the ``k`` L2-nearest training curves, row-wise."""
    if train.labels is None:
        raise ValueError("training sample needs labels")
    if int(k) != k or k < 1 or k > train.n:
        raise ValueError(f"k must be in 1..{train.n}, got {k!r}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    w = train.grid.weights
    G = train.curves
    d2 = ((X * w) * X).sum(1)[:, None] - 2 * (X * w) @ G.T + ((G * w) * G).sum(1)[None, :]
    nearest = np.argsort(d2, axis=1, kind="stable")[:, : int(k)]
    votes = train.labels[nearest]
    classes = np.unique(train.labels)
    counts = np.stack([(votes == c).sum(1) for c in classes], axis=1)
    # argmax picks the first (smallest) label among tied counts
    return classes[np.argmax(counts, axis=1)]


def knn_classify(train: FunctionalSample, x, k: int) -> int:
    x = as_curve(x, train.grid, "x")
    return int(knn_predict(train, x, k)[0])


Predictor = Union[ClassifierModel, DfmClassifier, Callable[[np.ndarray], np.ndarray]]


def evaluate_classifier(predictor: Predictor, test: FunctionalSample) -> float:
    """Misclassification rate on a labelled test sample."""
    if test.labels is None:
        raise ValueError("test sample needs labels")
    if isinstance(predictor, ClassifierModel):
        pred = predict_many(predictor, test.curves)
    elif isinstance(predictor, DfmClassifier):
        pred = predictor.predict_many(test.curves)
    else:
        pred = np.asarray(predictor(test.curves))
    return float(np.mean(pred != test.labels))


def classifier_to_dict(model: ClassifierModel) -> dict:
    return {
        "kind": "classifier_model",
        "mode": model.mode,
        "priors": list(model.priors),
        "threshold_C": model.threshold_C,
        "class_models": [model_to_dict(m) for m in model.class_models],
    }


def classifier_to_json(model: ClassifierModel, indent: Optional[int] = None) -> str:
    return json.dumps(classifier_to_dict(model), indent=indent)


def classifier_from_json(text: str) -> ClassifierModel:
    doc = json.loads(text)
    try:
        models = tuple(model_from_dict(d) for d in doc["class_models"])
        return ClassifierModel(models, tuple(doc["priors"]), doc["mode"], float(doc["threshold_C"]))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed classifier document: {exc}") from exc
