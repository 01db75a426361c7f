"""Synthetic threshold models and a reproducible Monte Carlo harness.

Every replicate draws from its own Philox stream seeded with
``base_seed + replicate``, so a report is bit-identical however the
replicates are scheduled across threads.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from threshold_kit.baseline import SearchConfig, fit_tau, tau_interval_average
from threshold_kit.domain import (
    Design,
    DomainError,
    DoseDataset,
    InvalidCombination,
    KernelSpec,
    ThresholdError,
    VarianceKind,
    VarianceModel,
)
from threshold_kit.pvalues import dose_statistic, smooth_statistic
from threshold_kit.smoothing import bandwidth_rule, variance_estimate
from threshold_kit.threshold import fit_stump, fit_stump_adaptive

REPORT_COLUMNS = ("model", "m", "n", "method", "rmse_d", "bias_d", "rmse_tau", "bias_tau", "reps", "seed")


class ModelName(enum.Enum):
    M1 = "M1"
    M2 = "M2"
    M3 = "M3"
    FLAT_NULL = "FlatNull"
    JUMP_STUMP = "JumpStump"


@dataclass(frozen=True)
class SimModel:
    """Regression function equal to ``tau0`` on ``[0, d0]`` and above it afterwards.

    M1 rises linearly to ``tau0 + 0.5`` at 1, M2 quadratically to the same
    value, M3 rises with unit slope up to 0.8 and falls with unit slope after.
    """

    name: ModelName
    d0: float = 0.5
    tau0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "name", ModelName(self.name))

    def __call__(self, x):
        return eval_model(self, x)


def eval_model(model: SimModel, x):
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)) or np.any(np.isnan(x)):
        raise DomainError("models are defined on [0, 1]")
    d0, tau0 = model.d0, model.tau0
    t = np.maximum(x - d0, 0.0)
    name = model.name
    if name is ModelName.M1:
        rise = 0.5 * t / (1.0 - d0)
    elif name is ModelName.M2:
        rise = 0.5 * (t / (1.0 - d0)) ** 2
    elif name is ModelName.M3:
        peak = max(0.8, d0)
        rise = np.where(x <= peak, t, (peak - d0) - (x - peak))
    elif name is ModelName.JUMP_STUMP:
        rise = (x > d0).astype(float)
    else:
        rise = np.zeros_like(x)
    out = tau0 + rise
    return out if out.ndim else float(out)


class ErrorKind(enum.Enum):
    GAUSSIAN_IID = "gaussian"
    GAUSSIAN_HETERO = "hetero"
    AR1 = "ar1"


@dataclass(frozen=True)
class ErrorSpec:
    kind: ErrorKind = ErrorKind.GAUSSIAN_IID
    sigma: float = 0.3
    rho: float = 0.3
    sigma_fn: Optional[Callable] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ErrorKind(self.kind))
        if self.sigma < 0:
            raise ThresholdError("sigma must be nonnegative")
        if not -1 < self.rho < 1:
            raise ThresholdError("AR(1) coefficient must lie in (-1, 1)")
        if self.kind is ErrorKind.GAUSSIAN_HETERO and self.sigma_fn is None:
            raise ThresholdError("heteroscedastic errors need sigma_fn")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def generate(model: SimModel, error: ErrorSpec, m: int, n: int, design=Design.RANDOM, seed: int = 0) -> DoseDataset:
    """Draw ``m`` responses at each of ``n`` covariate values.

    Random designs sample ``x`` from Uniform(0, 1); fixed grids use ``i/n``.
    AR(1) errors are stationary with marginal standard deviation ``sigma``
    and need a fixed grid with one response per point.
    """
    design = Design(design)
    if m < 1 or n < 1:
        raise ThresholdError("need m >= 1 and n >= 1")
    if error.kind is ErrorKind.AR1 and (design is not Design.FIXED_GRID or m != 1):
        raise InvalidCombination("AR(1) errors need a fixed grid design with m = 1")
    rng = make_rng(seed)
    if design is Design.RANDOM:
        x = np.sort(rng.uniform(0.0, 1.0, n))
    else:
        x = np.arange(1, n + 1) / n
    mu = eval_model(model, x)
    eta = rng.standard_normal((n, m))
    if error.kind is ErrorKind.GAUSSIAN_IID:
        eps = error.sigma * eta
    elif error.kind is ErrorKind.GAUSSIAN_HETERO:
        eps = np.asarray(error.sigma_fn(x), dtype=float)[:, None] * eta
    else:
        e = eta[:, 0]
        eps = np.empty(n)
        eps[0] = error.sigma * e[0]
        scale = math.sqrt(1.0 - error.rho**2) * error.sigma
        for i in range(1, n):
            eps[i] = error.rho * eps[i - 1] + scale * e[i]
        eps = eps[:, None]
    return DoseDataset.from_groups(x, mu[:, None] + eps, design)


@dataclass(frozen=True)
class SimConfig:
    """One table row: a model, an allocation ``(m, n)`` and an estimation pipeline.

    ``method`` is ``"dose"`` (replicate p-values) or ``"smooth"`` (kernel
    p-values with bandwidth ``c * n**(-1/(2 cusp + 1))``). ``tau`` is
    ``"known"``, ``"fit"`` (p-value fit) or ``"interval"`` (average over
    ``x <= eta``). ``variance`` is ``"known"`` or any variance-model kind.
    ``convention`` picks the reported point of the optimal break interval;
    the published tables are reproduced with ``"midpoint"``.
    """

    model: str
    m: int
    n: int
    method: str = "dose"
    tau: str = "known"
    variance: str = "known"
    kernel: str = "gaussian"
    c: float = 0.1
    cusp: int = 1
    sigma: float = 0.3
    eta: float = 0.25
    adaptive: bool = False
    design: str = "random"
    error: str = "gaussian"
    rho: float = 0.3
    convention: str = "midpoint"

    @property
    def label(self) -> str:
        return self.method if not self.adaptive else f"{self.method}-adaptive"

    def bandwidth(self) -> float:
        return bandwidth_rule(self.c, self.n, self.cusp)


def _variance(cfg: SimConfig, data: DoseDataset, kernel: Optional[KernelSpec]) -> VarianceModel:
    if cfg.variance == "known":
        return VarianceModel.known(cfg.sigma, data.n_groups)
    return variance_estimate(data, VarianceKind(cfg.variance), kernel)


def run_replicate(cfg: SimConfig, seed: int):
    """Run the full pipeline once; returns ``(d_hat, tau_hat)``."""
    model = SimModel(cfg.model)
    error = ErrorSpec(cfg.error, cfg.sigma, cfg.rho)
    data = generate(model, error, cfg.m, cfg.n, cfg.design, seed)
    kernel = KernelSpec(cfg.kernel, cfg.bandwidth()) if cfg.method == "smooth" else None
    variance = _variance(cfg, data, kernel)
    if cfg.method == "dose":
        stat = dose_statistic(data, variance)
    elif cfg.method == "smooth":
        stat = smooth_statistic(data, kernel, variance)
    else:
        raise ThresholdError(f"unknown method {cfg.method!r}")

    if cfg.tau == "known":
        tau = model.tau0
    elif cfg.tau == "fit":
        tau, _, _ = fit_tau(stat, data.means, variance.values, SearchConfig())
    elif cfg.tau == "interval":
        tau = tau_interval_average(data, cfg.eta)
    else:
        raise ThresholdError(f"unknown tau estimator {cfg.tau!r}")

    profile = stat.profile(tau)
    fit = fit_stump_adaptive(profile) if cfg.adaptive else fit_stump(profile)
    return fit.point(cfg.convention), tau


@dataclass(frozen=True)
class SimRow:
    model: str
    m: int
    n: int
    method: str
    rmse_d: float
    bias_d: float
    rmse_tau: float
    bias_tau: float
    reps: int
    seed: int


def _rmse_bias(err: np.ndarray):
    bias = float(np.mean(err))
    rmse = float(np.sqrt(np.mean(err * err)))
    # guard Jensen's inequality against rounding
    return max(rmse, abs(bias)), bias


@dataclass
class SimReport:
    rows: list = field(default_factory=list)

    def to_records(self) -> list:
        out = []
        for row in self.rows:
            rec = asdict(row)
            for k in ("rmse_d", "bias_d", "rmse_tau", "bias_tau"):
                if isinstance(rec[k], float) and math.isnan(rec[k]):
                    rec[k] = None
            out.append(rec)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for rec in self.to_records():
            writer.writerow(["" if rec[k] is None else (repr(rec[k]) if isinstance(rec[k], float) else rec[k])
                             for k in REPORT_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.to_records(), indent=2) + "\n"

    def find(self, model: str, m: int, n: int, method: str) -> SimRow:
        for row in self.rows:
            if (row.model, row.m, row.n, row.method) == (model, m, n, method):
                return row
        raise KeyError((model, m, n, method))

    @classmethod
    def from_csv(cls, text: str) -> "SimReport":
        rows = []
        for rec in csv.DictReader(io.StringIO(text)):
            def num(v):
                return float("nan") if v == "" else float(v)

            rows.append(SimRow(rec["model"], int(rec["m"]), int(rec["n"]), rec["method"],
                               num(rec["rmse_d"]), num(rec["bias_d"]), num(rec["rmse_tau"]),
                               num(rec["bias_tau"]), int(rec["reps"]), int(rec["seed"])))
        return cls(rows)


def default_threads() -> int:
    env = os.environ.get("THRESHOLD_KIT_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def replicate_estimates(cfg: SimConfig, replicates: int, base_seed: int = 0, threads: Optional[int] = None):
    """Arrays of ``d_hat`` and ``tau_hat`` over ``replicates`` runs, in replicate order."""
    if replicates < 1:
        raise ThresholdError("replicates must be >= 1")
    threads = default_threads() if threads is None else max(1, threads)
    seeds = [base_seed + r for r in range(replicates)]
    if threads == 1:
        results = [run_replicate(cfg, s) for s in seeds]
    else:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda s: run_replicate(cfg, s), seeds))
    d_hat = np.array([r[0] for r in results])
    tau_hat = np.array([r[1] for r in results])
    return d_hat, tau_hat


def run_table(configs: Sequence[SimConfig], replicates: int, base_seed: int = 0,
              threads: Optional[int] = None) -> SimReport:
    """Monte Carlo RMSE and bias (both x100) of ``d_hat`` and ``tau_hat`` per config.

    Columns for ``tau`` are NaN when the baseline is taken as known.
    """
    report = SimReport()
    for cfg in configs:
        d_hat, tau_hat = replicate_estimates(cfg, replicates, base_seed, threads)
        model = SimModel(cfg.model)
        rmse_d, bias_d = _rmse_bias(d_hat - model.d0)
        if cfg.tau == "known":
            rmse_t = bias_t = float("nan")
        else:
            rmse_t, bias_t = _rmse_bias(tau_hat - model.tau0)
        report.rows.append(SimRow(model.name.value, cfg.m, cfg.n, cfg.label,
                                  100 * rmse_d, 100 * bias_d, 100 * rmse_t, 100 * bias_t,
                                  replicates, base_seed))
    return report


# Smoothing constants and cusp orders used for each model in the published tables.
TABLE1_BANDWIDTH = {"M1": (0.04, 1), "M2": (0.08, 2), "M3": (0.04, 1)}
TABLE3_BANDWIDTH = {"M1": (0.1, 1), "M2": (0.15, 2), "M3": (0.1, 1)}

TABLE1_ALLOCATIONS = [(5, 5), (5, 10), (10, 10), (10, 15), (10, 20), (15, 10), (15, 15), (15, 20),
                      (20, 10), (20, 15), (20, 20), (3, 80), (3, 100), (4, 80), (4, 100)]
TABLE2_ALLOCATIONS = [(5, 5), (5, 10), (10, 10), (10, 20), (10, 50), (20, 50), (50, 100)]
TABLE3_SIZES = [20, 30, 50, 80, 100, 200, 500, 1000, 1500, 2000]
MODELS = ("M1", "M2", "M3")


def table1_config(model: str, m: int, n: int, method: str) -> SimConfig:
    c, cusp = TABLE1_BANDWIDTH[model]
    return SimConfig(model, m, n, method=method, tau="known", variance="known", c=c, cusp=cusp)


def table2_config(model: str, m: int, n: int) -> SimConfig:
    return SimConfig(model, m, n, method="dose", tau="fit", variance="pooled")


def table3_config(model: str, n: int) -> SimConfig:
    c, cusp = TABLE3_BANDWIDTH[model]
    return SimConfig(model, 1, n, method="smooth", tau="fit", variance="residual-average", c=c, cusp=cusp)


def table_configs(table: int) -> list:
    """Configurations reproducing one of the three published simulation tables."""
    if table == 1:
        return [table1_config(mod, m, n, meth) for (m, n) in TABLE1_ALLOCATIONS
                for mod in MODELS for meth in ("dose", "smooth")]
    if table == 2:
        return [table2_config(mod, m, n) for (m, n) in TABLE2_ALLOCATIONS for mod in MODELS]
    if table == 3:
        return [table3_config(mod, n) for n in TABLE3_SIZES for mod in MODELS]
    raise ThresholdError(f"unknown table {table!r}")


def config_from_dict(rec: dict) -> SimConfig:
    known = {f for f in SimConfig.__dataclass_fields__}
    unknown = set(rec) - known
    if unknown:
        raise ThresholdError(f"unknown config keys: {sorted(unknown)}")
    return SimConfig(**rec)


# Published values (x100): {(model, m, n, method): (rmse_d, bias_d[, rmse_tau, bias_tau])}
REFERENCE = {
    # Table 1, known sigma and tau0
    ("M1", 10, 20, "dose"): (10.8, 6.2), ("M1", 10, 20, "smooth"): (10.9, 4.6),
    ("M2", 10, 20, "dose"): (18.5, 16.7), ("M2", 10, 20, "smooth"): (17.6, 6.9),
    ("M3", 10, 20, "dose"): (10.9, 6.4), ("M3", 10, 20, "smooth"): (11.0, 4.9),
    ("M1", 20, 20, "dose"): (8.9, 3.3), ("M1", 20, 20, "smooth"): (9.7, 2.3),
    ("M2", 20, 20, "dose"): (15.9, 13.9), ("M2", 20, 20, "smooth"): (16.1, 5.4),
    ("M3", 20, 20, "dose"): (8.7, 3.6), ("M3", 20, 20, "smooth"): (9.3, 2.7),
}
REFERENCE_TABLE2 = {
    ("M1", 10, 50): (13.6, 12.1, 5.6, 3.8), ("M2", 10, 50): (23.5, 22.8, 3.8, 2.7),
    ("M3", 10, 50): (18.6, 15.7, 7.0, 5.8),
    ("M1", 50, 100): (5.0, 4.3, 1.1, 0.7), ("M2", 50, 100): (15.2, 14.8, 1.2, 0.9),
    ("M3", 50, 100): (5.2, 4.6, 1.4, 0.9),
}
REFERENCE_TABLE3 = {
    ("M1", 200): (15.9, 6.2, 8.8, 3.5), ("M2", 200): (19.1, 6.0, 4.9, 1.1),
    ("M3", 200): (21.0, 12.2, 9.2, 5.3),
    ("M1", 1000): (9.5, 0.4, 3.1, 0.7), ("M2", 1000): (15.0, 2.0, 2.0, 0.4),
    ("M3", 1000): (10.5, 2.1, 3.9, 1.2),
}
