"""Stump fits to a p-value profile.

The fixed-level fit uses levels 1/2 (null side, the mean of a uniform p-value)
and 0 (alternative side). Its least-squares criterion reduces to maximising

    M(d) = n^-1 * sum_{x_i <= d} (p_i - 1/4),

a step function whose maximiser can be taken among the design points, plus an
empty-prefix candidate below all of them. The optimum is attained on a whole
interval between consecutive candidates; fits report its left end as ``d_hat``
and keep the right end so callers can use the midpoint instead.
"""

from __future__ import annotations

import numpy as np

from threshold_kit.domain import PValueProfile, StumpFit, ThresholdError


def _candidates(x: np.ndarray):
    """Split candidates and the number of points at or below each."""
    xs = np.unique(x)
    empty = 0.0 if xs[0] > 0 else float(np.nextafter(xs[0], -np.inf))
    cand = np.concatenate([[empty], xs])
    counts = np.searchsorted(x, cand, side="right")
    return cand, counts


def _upper(cand: np.ndarray, k: int) -> float:
    # the last interval runs to the right end of the unit design range
    return float(cand[k + 1]) if k + 1 < len(cand) else max(1.0, float(cand[-1]))


def stump_objective(profile: PValueProfile, d: float) -> float:
    if len(profile) == 0:
        raise ThresholdError("empty p-value profile")
    left = profile.x <= d
    return float(np.sum(profile.p[left] - 0.25) / len(profile))


def fit_stump(profile: PValueProfile) -> StumpFit:
    """Break point of the best fixed-level stump; the smallest maximiser wins ties."""
    n = len(profile)
    if n == 0:
        raise ThresholdError("empty p-value profile")
    cand, counts = _candidates(profile.x)
    prefix = np.concatenate([[0.0], np.cumsum(profile.p - 0.25)])
    objective = prefix[counts] / n
    k = int(np.argmax(objective))
    return StumpFit(float(cand[k]), cand, objective, upper=_upper(cand, k))


def stump_sse(profile: PValueProfile, d: float) -> float:
    """Squared error of the stump with level 1/2 up to ``d`` and 0 after it."""
    p = profile.p
    left = profile.x <= d
    return float(np.sum((p[left] - 0.5) ** 2) + np.sum(p[~left] ** 2))


def fit_stump_adaptive(profile: PValueProfile) -> StumpFit:
    """Stump fit with both levels estimated by least squares.

    For each split the levels are the side means. An empty left side reports
    the right-side mean as its level; an empty right side reports 0. The
    stored objective is the negated residual sum of squares, so the fit is its
    maximiser (smallest split on ties, up to rounding).
    """
    n = len(profile)
    if n < 2:
        raise ThresholdError("adaptive stump needs at least two p-values")
    p = profile.p
    cand, counts = _candidates(profile.x)
    # centring keeps the prefix-sum formula accurate for nearly constant profiles
    c = p - p.mean()
    s1 = np.concatenate([[0.0], np.cumsum(c)])
    s2 = np.concatenate([[0.0], np.cumsum(c * c)])
    k = counts
    right = n - k
    with np.errstate(invalid="ignore", divide="ignore"):
        sse_left = np.where(k > 0, s2[k] - s1[k] ** 2 / np.maximum(k, 1), 0.0)
        r1 = s1[n] - s1[k]
        sse_right = np.where(right > 0, (s2[n] - s2[k]) - r1**2 / np.maximum(right, 1), 0.0)
    sse = np.maximum(sse_left + sse_right, 0.0)
    tol = 1e-12 * max(1.0, float(np.sum(c * c)))
    best = int(np.argmax(sse <= sse.min() + tol))

    kb = counts[best]
    beta = float(p[kb:].mean()) if kb < n else 0.0
    alpha = float(p[:kb].mean()) if kb > 0 else beta
    return StumpFit(float(cand[best]), cand, -sse, levels=(alpha, beta), upper=_upper(cand, best))


def equivalence_check(profile: PValueProfile) -> bool:
    """Whether brute-force minimisation of the stump squared error agrees with :func:`fit_stump`."""
    cand, _ = _candidates(profile.x)
    sse = np.array([stump_sse(profile, d) for d in cand])
    return float(cand[int(np.argmin(sse))]) == fit_stump(profile).d_hat
