"""Nadaraya-Watson smoothing, variance estimation and bandwidth selection."""

from __future__ import annotations

import numpy as np

from threshold_kit.domain import (
    AllBandwidthsDegenerate,
    DoseDataset,
    InsufficientReplicates,
    KernelFamily,
    KernelSpec,
    ThresholdError,
    VarianceKind,
    VarianceModel,
    ZeroKernelMass,
)


def _nw(x_eval, points, values, kernel: KernelSpec, exclude_self: bool = False):
    """Vectorised Nadaraya-Watson fit of ``values`` observed at ``points``.

    Returns ``(mu_hat, f_hat)`` evaluated at each ``x_eval``. Values are
    centred on their first entry before averaging so that constant data is
    reproduced exactly.
    """
    x_eval = np.atleast_1d(np.asarray(x_eval, dtype=float))
    values = np.asarray(values, dtype=float)
    w = kernel.weights(x_eval, points)
    if exclude_self:
        np.fill_diagonal(w, 0.0)
    mass = w.sum(axis=1)
    if np.any(mass <= 0):
        bad = x_eval[np.argmax(mass <= 0)]
        raise ZeroKernelMass(f"no design point within kernel support of x={bad:g} (h={kernel.bandwidth:g})")
    ref = values[0]
    mu = ref + (w @ (values - ref)) / mass
    n_pts = len(points) - (1 if exclude_self else 0)
    f = mass / (n_pts * kernel.bandwidth)
    return mu, f


def nw_estimate(data: DoseDataset, kernel: KernelSpec, x):
    """Nadaraya-Watson regression and design-density estimates at ``x``.

    Smooths the group means with unit weight per group, whatever the number of
    replicates in it.

    Parameters
    ----------
    data : DoseDataset
    kernel : KernelSpec
    x : float or array_like
        Evaluation point(s).

    Returns
    -------
    mu_hat, f_hat : float or ndarray
        Same shape as ``x``.

    Raises
    ------
    ZeroKernelMass
        If the kernel puts no weight on any design point at some ``x``.
    """
    mu, f = _nw(x, data.x, data.means, kernel)
    if np.ndim(x) == 0:
        return float(mu[0]), float(f[0])
    return mu, f


def variance_estimate(data: DoseDataset, kind, kernel: KernelSpec | None = None) -> VarianceModel:
    """Estimate the error standard deviation at every dose.

    ``pooled`` and ``per-dose`` use within-group spread and need at least two
    replicates per group. ``smooth`` smooths the scaled squared residuals
    ``m_i * (Ybar_i - mu_hat(x_i))**2`` with the same kernel as the mean;
    ``residual-average`` averages them (homoscedastic errors, any ``m_i``).
    """
    kind = VarianceKind(kind)
    if kind is VarianceKind.NONE:
        return VarianceModel.none()

    if kind in (VarianceKind.POOLED, VarianceKind.PER_DOSE):
        if np.any(data.counts < 2):
            raise InsufficientReplicates(f"{kind.value} variance needs at least 2 replicates per dose")
        ss = np.array([np.sum((y - y.mean()) ** 2) for y in data.ys])
        if kind is VarianceKind.POOLED:
            sigma = np.sqrt(ss.sum() / (data.total - data.n_groups))
            return VarianceModel(kind, np.full(data.n_groups, sigma))
        return VarianceModel(kind, np.sqrt(ss / (data.counts - 1)))

    if kernel is None:
        raise ThresholdError(f"{kind.value} variance needs a kernel")
    mu, _ = _nw(data.x, data.x, data.means, kernel)
    resid2 = data.counts * (data.means - mu) ** 2
    if kind is VarianceKind.AVERAGED_RESIDUALS:
        return VarianceModel(kind, np.full(data.n_groups, np.sqrt(resid2.mean())))
    smoothed, _ = _nw(data.x, data.x, resid2, kernel)
    return VarianceModel(kind, np.sqrt(np.maximum(smoothed, 0.0)))


def cv_scores(data: DoseDataset, family, grid) -> np.ndarray:
    """Leave-one-out squared prediction error of the group means for each bandwidth.

    Bandwidths for which some left-out point has no kernel mass score ``inf``.
    """
    family = KernelFamily(family)
    scores = np.empty(len(grid))
    for k, h in enumerate(grid):
        try:
            mu, _ = _nw(data.x, data.x, data.means, KernelSpec(family, h), exclude_self=True)
        except ZeroKernelMass:
            scores[k] = np.inf
            continue
        scores[k] = np.sum((data.means - mu) ** 2)
    return scores


def cv_bandwidth(data: DoseDataset, family, grid):
    """Leave-one-out cross-validated bandwidth over ``grid``.

    Returns
    -------
    h_star : float
        Minimiser of the CV score; the smallest such bandwidth on ties.
    scores : ndarray
        CV score for each grid entry, in grid order.
    """
    grid = np.asarray(grid, dtype=float).ravel()
    if len(grid) == 0 or np.any(~(grid > 0)):
        raise ThresholdError("bandwidth grid must be nonempty and positive")
    if data.n_groups < 3:
        raise ThresholdError("cross-validation needs at least 3 dose groups")
    scores = cv_scores(data, family, grid)
    if np.all(np.isinf(scores)):
        raise AllBandwidthsDegenerate("every bandwidth leaves some point without kernel mass")
    best = scores == scores.min()
    return float(grid[best].min()), scores


def bandwidth_rule(c: float, n: int, p: int = 1) -> float:
    """Bandwidth ``c * n**(-1/(2p+1))`` for a cusp of order ``p``."""
    if c <= 0 or n < 1 or p < 1:
        raise ThresholdError("need c > 0, n >= 1 and p >= 1")
    return c * n ** (-1.0 / (2 * p + 1))
