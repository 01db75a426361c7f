"""Core data types, kernels and the normal CDF shared by every estimator."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import special


class ThresholdError(ValueError):
    """Base class for every data or configuration error raised here."""


class EmptyInput(ThresholdError):
    pass


class NonFiniteValue(ThresholdError):
    def __init__(self, index: int):
        super().__init__(f"non-finite value in record {index}")
        self.index = index


class ZeroKernelMass(ThresholdError):
    """A compactly supported kernel puts no weight on any design point."""


class ZeroDensity(ThresholdError):
    pass


class InsufficientReplicates(ThresholdError):
    pass


class AllBandwidthsDegenerate(ThresholdError):
    pass


class NoDataInInterval(ThresholdError):
    pass


class NonBinaryResponse(ThresholdError):
    pass


class TauOutOfRange(ThresholdError):
    pass


class DomainError(ThresholdError):
    pass


class InvalidCombination(ThresholdError):
    pass


class Design(enum.Enum):
    RANDOM = "random"
    FIXED_GRID = "fixed_grid"


class KernelFamily(enum.Enum):
    GAUSSIAN = "gaussian"
    EPANECHNIKOV = "epanechnikov"
    UNIFORM = "uniform"


class PValueMethod(enum.Enum):
    DOSE_REPLICATES = "dose"
    SMOOTHED = "smooth"
    TIME_SERIES = "ts"


class VarianceKind(enum.Enum):
    POOLED = "pooled"
    PER_DOSE = "per-dose"
    SMOOTHED_RESIDUALS = "smooth"
    AVERAGED_RESIDUALS = "residual-average"
    NONE = "none"


# integral of K^2 over the real line, per family
_K2BAR = {
    KernelFamily.GAUSSIAN: 1.0 / (2.0 * math.sqrt(math.pi)),
    KernelFamily.EPANECHNIKOV: 3.0 / 5.0,
    KernelFamily.UNIFORM: 1.0 / 2.0,
}

_COMPACT = {KernelFamily.EPANECHNIKOV, KernelFamily.UNIFORM}

# beyond this |z| the tail probability is below double precision resolution
_Z_CLAMP = 38.0


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DoseDataset:
    """Grouped observations ``(x_i, [y_i1, ..., y_im_i])``.

    ``x`` is strictly increasing and ``ys[i]`` holds the replicates at
    ``x[i]``. Build one with :func:`validate_dataset` from raw pairs, or with
    :meth:`from_groups` when the grouping is already known.
    """

    x: np.ndarray
    ys: tuple
    design: Design = Design.RANDOM
    means: np.ndarray = field(init=False, repr=False, compare=False)
    counts: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = _readonly(self.x)
        ys = tuple(_readonly(y) for y in self.ys)
        if x.ndim != 1 or len(x) == 0 or len(ys) != len(x):
            raise EmptyInput("dataset needs at least one group and one x per group")
        if np.any(np.diff(x) <= 0):
            raise ThresholdError("group covariates must be strictly increasing")
        if any(y.ndim != 1 or len(y) == 0 for y in ys):
            raise EmptyInput("every group needs at least one response")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "means", _readonly([y.mean() for y in ys]))
        object.__setattr__(self, "counts", np.array([len(y) for y in ys]))
        self.counts.setflags(write=False)

    @classmethod
    def from_groups(cls, x, ys, design: Design = Design.RANDOM) -> "DoseDataset":
        """Build from group covariates and a matching sequence (or 2-d array) of responses."""
        if isinstance(ys, np.ndarray) and ys.ndim == 2:
            ys = tuple(ys)
        return cls(np.asarray(x, dtype=float), tuple(ys), design)

    @property
    def n_groups(self) -> int:
        return len(self.x)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def balanced(self) -> bool:
        return bool(np.all(self.counts == self.counts[0]))

    def flatten(self) -> list:
        return [(float(xi), float(y)) for xi, ys in zip(self.x, self.ys) for y in ys]

    def map(self, x=None, scale: float = 1.0, shift: float = 0.0) -> "DoseDataset":
        """Return a copy with responses mapped ``y -> scale * y + shift`` and, optionally, new covariates."""
        new_x = self.x if x is None else x
        return DoseDataset(new_x, tuple(scale * y + shift for y in self.ys), self.design)


def validate_dataset(raw: Iterable[Sequence[float]], design: Design = Design.RANDOM) -> DoseDataset:
    """Group raw ``(x, y)`` pairs by exact covariate value.

    >>> validate_dataset([(0.2, 1.0), (0.1, 0.5), (0.2, 1.2)]).x.tolist()
    [0.1, 0.2]
    """
    pairs = [tuple(r) for r in raw]
    if not pairs:
        raise EmptyInput("no observations")
    for i, (xv, yv) in enumerate(pairs):
        if not (math.isfinite(xv) and math.isfinite(yv)):
            raise NonFiniteValue(i)
    arr = np.array(pairs, dtype=float)
    # stable sort keeps replicate order within a dose
    order = np.argsort(arr[:, 0], kind="stable")
    arr = arr[order]
    xs, starts = np.unique(arr[:, 0], return_index=True)
    ys = np.split(arr[:, 1], starts[1:])
    return DoseDataset(xs, tuple(ys), design)


@dataclass(frozen=True)
class KernelSpec:
    family: KernelFamily
    bandwidth: float

    def __post_init__(self):
        family = KernelFamily(self.family)
        object.__setattr__(self, "family", family)
        h = float(self.bandwidth)
        if not (h > 0 and math.isfinite(h)):
            raise ThresholdError(f"bandwidth must be positive and finite, got {self.bandwidth!r}")
        object.__setattr__(self, "bandwidth", h)

    @property
    def k2bar(self) -> float:
        return _K2BAR[self.family]

    @property
    def compact(self) -> bool:
        return self.family in _COMPACT

    def weights(self, x, points) -> np.ndarray:
        """Kernel weights ``K((x - points) / h)``, shape ``(len(x), len(points))``."""
        u = (np.atleast_1d(np.asarray(x, dtype=float))[:, None] - np.asarray(points, dtype=float)[None, :])
        return kernel_eval(self, u / self.bandwidth)


def kernel_eval(spec: KernelSpec, u):
    """Standard (unit-bandwidth) kernel density ``K(u)``; vectorised over ``u``."""
    u = np.asarray(u, dtype=float)
    fam = spec.family
    if fam is KernelFamily.GAUSSIAN:
        out = np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
    elif fam is KernelFamily.EPANECHNIKOV:
        out = np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
    else:
        out = np.where(np.abs(u) <= 1.0, 0.5, 0.0)
    return out if out.ndim else float(out)


def normal_cdf(z):
    """Standard normal CDF; ``|z| > 38`` is clamped to exactly 0 or 1."""
    z = np.asarray(z, dtype=float)
    out = np.where(z > _Z_CLAMP, 1.0, np.where(z < -_Z_CLAMP, 0.0, special.ndtr(z)))
    return out if out.ndim else float(out)


def normal_sf(z):
    """Upper tail ``1 - Phi(z)``, computed without cancellation."""
    return normal_cdf(-np.asarray(z, dtype=float))


@dataclass(frozen=True)
class VarianceModel:
    """Per-group error standard deviations ``sigma_hat(x_i)``.

    ``values`` is ``None`` for :attr:`VarianceKind.NONE`, the unnormalised case.
    """

    kind: VarianceKind
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        kind = VarianceKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is VarianceKind.NONE:
            object.__setattr__(self, "values", None)
            return
        if self.values is None:
            raise ThresholdError(f"{kind.value} variance model needs values")
        v = _readonly(np.atleast_1d(self.values))
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ThresholdError("standard deviations must be finite and nonnegative")
        if kind is VarianceKind.POOLED and np.ptp(v) != 0:
            raise ThresholdError("pooled variance model must be constant across groups")
        object.__setattr__(self, "values", v)

    @classmethod
    def known(cls, sigma: float, n_groups: int) -> "VarianceModel":
        """A homoscedastic model with a known error standard deviation."""
        return cls(VarianceKind.POOLED, np.full(n_groups, float(sigma)))

    @classmethod
    def none(cls) -> "VarianceModel":
        return cls(VarianceKind.NONE)

    @property
    def normalized(self) -> bool:
        return self.kind is not VarianceKind.NONE

    def sigma(self, n_groups: int) -> np.ndarray:
        if self.values is None:
            return np.ones(n_groups)
        if len(self.values) != n_groups:
            raise ThresholdError(f"variance model has {len(self.values)} values for {n_groups} groups")
        return self.values


@dataclass(frozen=True)
class PValueProfile:
    x: np.ndarray
    p: np.ndarray
    method: PValueMethod
    normalized: bool
    tau_used: float
    bandwidth_used: Optional[float] = None

    def __post_init__(self):
        x, p = _readonly(self.x), _readonly(self.p)
        if x.shape != p.shape or x.ndim != 1:
            raise ThresholdError("x and p must be 1-d arrays of equal length")
        if np.any(np.diff(x) < 0):
            raise ThresholdError("profile covariates must be sorted")
        if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
            raise ThresholdError("p-values must lie in [0, 1]")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "method", PValueMethod(self.method))

    @classmethod
    def from_values(cls, x, p, method=PValueMethod.DOSE_REPLICATES, **kw) -> "PValueProfile":
        """Ad hoc profile, mostly for tests and for p-values computed elsewhere."""
        kw.setdefault("normalized", True)
        kw.setdefault("tau_used", float("nan"))
        return cls(np.asarray(x, float), np.asarray(p, float), method, **kw)

    def __len__(self):
        return len(self.x)


@dataclass(frozen=True)
class StumpFit:
    """Fitted break point.

    ``candidates`` and ``objective`` form the objective trace; the fit always
    maximises ``objective`` (the adaptive fit stores negated squared error).
    """

    d_hat: float
    candidates: np.ndarray
    objective: np.ndarray
    levels: Optional[tuple] = None
    upper: Optional[float] = None

    @property
    def interval(self) -> tuple:
        """Every break point in ``[left, right)`` attains the optimum; ``d_hat`` is ``left``."""
        return self.d_hat, (self.d_hat if self.upper is None else self.upper)

    @property
    def midpoint(self) -> float:
        left, right = self.interval
        return 0.5 * (left + right)

    def point(self, convention: str = "left") -> float:
        if convention == "left":
            return self.d_hat
        if convention == "midpoint":
            return self.midpoint
        raise ThresholdError(f"unknown break point convention {convention!r}")

    @property
    def objective_trace(self) -> list:
        return list(zip(self.candidates.tolist(), self.objective.tolist()))
