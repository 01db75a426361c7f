"""Approximate p-values for H0: mu(x) = tau against mu(x) > tau.

Every construction here has the form ``1 - Phi(slope_i * (center_i - tau))``:
the replicate version uses the group means and ``sqrt(m_i) / sigma_i``, the
smoothed version the Nadaraya-Watson fit and ``sqrt(n h) / V_i``. Keeping the
two pieces separate (:class:`LinearPValues`) lets the baseline estimator scan
many values of ``tau`` without recomputing any smoothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from threshold_kit.domain import (
    Design,
    DoseDataset,
    KernelSpec,
    NonBinaryResponse,
    PValueMethod,
    PValueProfile,
    TauOutOfRange,
    ThresholdError,
    VarianceKind,
    VarianceModel,
    ZeroDensity,
    normal_sf,
)
from threshold_kit.smoothing import _nw


@dataclass(frozen=True)
class LinearPValues:
    x: np.ndarray
    center: np.ndarray
    slope: np.ndarray
    method: PValueMethod
    normalized: bool
    bandwidth: Optional[float] = None

    def z(self, tau) -> np.ndarray:
        """Standardised statistics; broadcasting ``tau`` of shape ``(k, 1)`` gives ``(k, n)``."""
        diff = self.center - np.asarray(tau, dtype=float)
        with np.errstate(invalid="ignore"):
            z = self.slope * diff
        # a zero scale estimate: the sign of the difference decides, a tie is uninformative
        degenerate = np.isinf(self.slope) & (diff == 0)
        return np.where(degenerate, 0.0, z)

    def at(self, tau) -> np.ndarray:
        return normal_sf(self.z(tau))

    def profile(self, tau: float) -> PValueProfile:
        return PValueProfile(self.x, self.at(tau), self.method, self.normalized, float(tau), self.bandwidth)


def _inverse(sigma) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(sigma > 0, 1.0 / np.where(sigma > 0, sigma, 1.0), np.inf)


def dose_statistic(data: DoseDataset, variance: VarianceModel) -> LinearPValues:
    if variance.kind not in (VarianceKind.POOLED, VarianceKind.PER_DOSE, VarianceKind.NONE):
        raise ThresholdError(f"replicate p-values cannot use a {variance.kind.value!r} variance model")
    sigma = variance.sigma(data.n_groups)
    slope = np.sqrt(data.counts) * _inverse(sigma)
    return LinearPValues(data.x, data.means, slope, PValueMethod.DOSE_REPLICATES, variance.normalized)


def smooth_statistic(data: DoseDataset, kernel: KernelSpec, variance: VarianceModel) -> LinearPValues:
    n, h = data.n_groups, kernel.bandwidth
    mu, f = _nw(data.x, data.x, data.means, kernel)
    root_nh = np.sqrt(n * h)
    if variance.normalized:
        if np.any(f <= 0):
            raise ZeroDensity("design density estimate vanishes at a design point")
        sigma = variance.sigma(n)
        v = sigma * np.sqrt(kernel.k2bar / (data.counts * f))
        slope = root_nh * _inverse(v)
    else:
        slope = np.full(n, root_nh)
    return LinearPValues(data.x, mu, slope, PValueMethod.SMOOTHED, variance.normalized, h)


def pvalues_dose(data: DoseDataset, tau: float, variance: VarianceModel) -> PValueProfile:
    """Replicate-based p-values ``1 - Phi(sqrt(m_i) (Ybar_i - tau) / sigma_i)``.

    With a ``none`` variance model the scale is 1 (unnormalised p-values).
    A zero ``sigma_i`` gives ``p = 0`` or ``1`` by the sign of ``Ybar_i - tau``,
    and ``0.5`` when they are equal.
    """
    return dose_statistic(data, variance).profile(tau)


def pvalues_smooth(data: DoseDataset, tau: float, kernel: KernelSpec, variance: VarianceModel) -> PValueProfile:
    """Kernel-smoothed p-values at each design point.

    The statistic is ``T = sqrt(n h) (mu_hat(x_i) - tau)``. When ``variance``
    is not ``none`` it is divided by ``V_i = sigma_i * sqrt(k2bar / (m_i f_hat(x_i)))``,
    the estimated asymptotic standard deviation of ``T`` under the null.
    """
    return smooth_statistic(data, kernel, variance).profile(tau)


def timeseries_statistic(y, kernel: KernelSpec, tau: float):
    """Centred kernel sum ``(n h)^-1 sum_j (y_j - tau) K((i/n - j/n) / h)`` at every ``i/n``."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    grid = np.arange(1, n + 1) / n
    w = kernel.weights(grid, grid)
    return grid, (w @ (y - tau)) / (n * kernel.bandwidth)


def pvalues_timeseries(y, tau: float, kernel: KernelSpec) -> PValueProfile:
    """Unnormalised p-values for an equally spaced series on ``x_i = i/n``.

    ``kernel.bandwidth`` is on the unit scale. No variance normalisation is
    attempted, so serially dependent errors need no autocovariance estimate.
    """
    y = np.asarray(y, dtype=float).ravel()
    if len(y) < 2:
        raise ThresholdError("time series needs at least two observations")
    if not np.all(np.isfinite(y)):
        raise ThresholdError("time series contains non-finite values")
    grid, centred = timeseries_statistic(y, kernel, tau)
    z = np.sqrt(len(y) * kernel.bandwidth) * centred
    return PValueProfile(grid, normal_sf(z), PValueMethod.TIME_SERIES, False, float(tau), kernel.bandwidth)


def pvalues_binary(data: DoseDataset, tau: float) -> PValueProfile:
    """p-values for 0/1 responses using the null variance ``tau (1 - tau)``."""
    if not 0.0 < tau < 1.0:
        raise TauOutOfRange(f"tau must lie strictly in (0, 1), got {tau}")
    for y in data.ys:
        if np.any((y != 0) & (y != 1)):
            raise NonBinaryResponse("responses must be 0 or 1")
    sigma = np.full(data.n_groups, np.sqrt(tau * (1.0 - tau)))
    stat = dose_statistic(data, VarianceModel(VarianceKind.PER_DOSE, sigma))
    return stat.profile(tau)


def timeseries_dataset(y) -> DoseDataset:
    """Wrap a series as a one-replicate fixed-grid dataset on ``i/n``."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    return DoseDataset.from_groups(np.arange(1, n + 1) / n, y[:, None], Design.FIXED_GRID)
