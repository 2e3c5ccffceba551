"""RKHS-regularized functional Mahalanobis distance for curves on a grid."""

from .classify import (
    ClassifierModel,
    cv_alpha,
    evaluate_classifier,
    fit_classifier,
    knn_classify,
    predict,
)
from .covariance import (
    CovKernel,
    EigenSystem,
    eigendecompose,
    mcd_covariance,
    sample_covariance,
    sample_mean,
)
from .distribution import (
    WeightedChiSq,
    sqrt_n_mean_stat,
    tune_alpha_kl,
    wcs_from_model,
    wcs_moments,
    wcs_quantile,
    wcs_sample,
)
from .errors import CurveParseError, NumericalError
from .funcspace import FunctionalSample, Grid, l2_inner, make_uniform_grid, project_coeffs
from .mahalanobis import (
    MahalanobisModel,
    depth,
    dfm_semidistance,
    fit_model,
    mahalanobis_distance,
    rkhs_norm,
    smooth_trajectory,
)
from .outliers import BoxplotSummary, OutlierReport, detect_outliers, evaluate_detection, functional_boxplot
from .simulate import (
    KernelSpec,
    ScenarioSpec,
    bayes_error_cut,
    brownian_pair,
    contamination_model,
    gp_sample,
    scenario_sample,
)

__version__ = "0.1.0"
