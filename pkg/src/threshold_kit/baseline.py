"""Estimators of the baseline value tau0."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from threshold_kit.domain import (
    DoseDataset,
    KernelSpec,
    NoDataInInterval,
    PValueMethod,
    ThresholdError,
    VarianceModel,
)
from threshold_kit.pvalues import LinearPValues, dose_statistic, smooth_statistic

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchConfig:
    grid_points: int = 512
    refine_tol: float = 1e-8
    pad_sigmas: float = 3.0


def tau_interval_average(data: DoseDataset, eta: float) -> float:
    """Mean of every response observed at covariates ``<= eta``."""
    left = data.x <= eta
    if not np.any(left):
        raise NoDataInInterval(f"no observations with x <= {eta}")
    return float(np.concatenate([y for y, keep in zip(data.ys, left) if keep]).mean())


def _golden(fun, lo: float, hi: float, tol: float) -> float:
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def fit_tau(stat: LinearPValues, means, sigma=None, search: SearchConfig = SearchConfig()):
    """Minimise ``g(tau) = sum_i (p_i(tau) - 1/2)**2`` for precomputed statistics."""
    lo, hi = float(np.min(means)), float(np.max(means))
    if sigma is not None and search.pad_sigmas > 0:
        pad = search.pad_sigmas * float(np.sqrt(np.mean(np.square(sigma))))
        lo, hi = lo - pad, hi + pad

    def g(tau):
        return float(np.sum((stat.at(tau) - 0.5) ** 2))

    if hi <= lo:
        return lo, np.array([lo]), np.array([g(lo)])
    grid = np.linspace(lo, hi, search.grid_points)
    values = np.sum((stat.at(grid[:, None]) - 0.5) ** 2, axis=1)
    k = int(np.argmin(values))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    tau = _golden(g, a, b, search.refine_tol)
    # keep the grid point if refinement found nothing better
    if g(tau) > values[k]:
        tau = float(grid[k])
    return tau, grid, values


def tau_pvalue_fit(
    data: DoseDataset,
    regime,
    variance: VarianceModel,
    kernel: KernelSpec | None = None,
    search: SearchConfig = SearchConfig(),
):
    """Baseline estimate that makes the p-values as close to 1/2 as possible.

    Scans ``tau`` over the range of the group means (widened by a few error
    standard deviations when a variance model is given) and refines the best
    grid cell by golden-section search.

    Parameters
    ----------
    data : DoseDataset
    regime : {"dose", "smooth"} or PValueMethod
        Replicate p-values or kernel-smoothed p-values.
    variance : VarianceModel
        Scale used in the p-values; ``VarianceModel.none()`` gives the
        unnormalised variant.
    kernel : KernelSpec, optional
        Required for the smoothed regime.
    search : SearchConfig

    Returns
    -------
    tau_hat : float
    trace : tuple of ndarray
        Grid of ``tau`` values and the objective on it.
    """
    regime = PValueMethod(regime)
    if regime is PValueMethod.DOSE_REPLICATES:
        stat = dose_statistic(data, variance)
    elif regime is PValueMethod.SMOOTHED:
        if kernel is None:
            raise ThresholdError("smoothed regime needs a kernel")
        stat = smooth_statistic(data, kernel, variance)
    else:
        raise ThresholdError(f"unsupported regime {regime.value!r}")
    tau, grid, values = fit_tau(stat, data.means, variance.values, search)
    return tau, (grid, values)
