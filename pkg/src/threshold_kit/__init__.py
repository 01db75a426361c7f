"""Threshold estimation from p-value profiles.

Estimate the covariate level ``d0`` at which a regression function leaves its
baseline value ``tau0``, in the replicated dose-response setting and in the
standard (smoothed) regression setting.
"""

from threshold_kit.baseline import SearchConfig, tau_interval_average, tau_pvalue_fit
from threshold_kit.domain import (
    Design,
    DoseDataset,
    KernelFamily,
    KernelSpec,
    PValueMethod,
    PValueProfile,
    StumpFit,
    ThresholdError,
    VarianceKind,
    VarianceModel,
    kernel_eval,
    normal_cdf,
    normal_sf,
    validate_dataset,
)
from threshold_kit.pvalues import (
    pvalues_binary,
    pvalues_dose,
    pvalues_smooth,
    pvalues_timeseries,
)
from threshold_kit.smoothing import (
    bandwidth_rule,
    cv_bandwidth,
    nw_estimate,
    variance_estimate,
)
from threshold_kit.threshold import (
    equivalence_check,
    fit_stump,
    fit_stump_adaptive,
    stump_objective,
)

__version__ = "0.1.0"

__all__ = [
    "Design",
    "DoseDataset",
    "KernelFamily",
    "KernelSpec",
    "PValueMethod",
    "PValueProfile",
    "SearchConfig",
    "StumpFit",
    "ThresholdError",
    "VarianceKind",
    "VarianceModel",
    "bandwidth_rule",
    "cv_bandwidth",
    "equivalence_check",
    "fit_stump",
    "fit_stump_adaptive",
    "kernel_eval",
    "normal_cdf",
    "normal_sf",
    "nw_estimate",
    "pvalues_binary",
    "pvalues_dose",
    "pvalues_smooth",
    "pvalues_timeseries",
    "stump_objective",
    "tau_interval_average",
    "tau_pvalue_fit",
    "validate_dataset",
    "variance_estimate",
]
