"""Command-line entry point: ``threshold-kit {estimate,simulate,cv}``.

Input is a long-format CSV with a header containing ``x`` and ``y`` (repeated
``x`` values are replicates). Results go to stdout as JSON; a one-line
summary goes to stderr. Exit codes: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from threshold_kit.baseline import tau_pvalue_fit
from threshold_kit.domain import (
    Design,
    DoseDataset,
    KernelSpec,
    PValueMethod,
    PValueProfile,
    ThresholdError,
    VarianceKind,
    VarianceModel,
    validate_dataset,
)
from threshold_kit.pvalues import pvalues_binary, pvalues_dose, pvalues_smooth, pvalues_timeseries
from threshold_kit.simlab import config_from_dict, default_threads, run_table, table_configs
from threshold_kit.smoothing import cv_bandwidth, variance_estimate
from threshold_kit.threshold import fit_stump, fit_stump_adaptive

EXIT_DATA = 1
EXIT_USAGE = 2


class DataError(Exception):
    pass


class UsageError(Exception):
    pass


def read_csv(path) -> list:
    """Read ``(x, y)`` rows; an ``index`` column may stand in for ``x``."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            fields = [f.strip() for f in (reader.fieldnames or [])]
            reader.fieldnames = fields
            xcol = "x" if "x" in fields else ("index" if "index" in fields else None)
            if xcol is None or "y" not in fields:
                raise DataError(f"{path}: header must contain x (or index) and y columns")
            rows = []
            for line, rec in enumerate(reader, start=2):
                try:
                    rows.append((float(rec[xcol]), float(rec["y"])))
                except (TypeError, ValueError):
                    raise DataError(f"{path}:{line}: cannot parse numeric x/y") from None
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    return rows


def parse_grid(text: str) -> np.ndarray:
    """``"lo:hi:steps"`` (inclusive linspace) or a comma-separated list."""
    try:
        if ":" in text:
            lo, hi, steps = text.split(":")
            grid = np.linspace(float(lo), float(hi), int(steps))
        else:
            grid = np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise UsageError(f"--grid/--bandwidth-cv: cannot parse {text!r}") from None
    if len(grid) == 0 or np.any(~(grid > 0)):
        raise UsageError("--grid/--bandwidth-cv: bandwidths must be positive")
    return grid


def write_trace(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def read_trace(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        return np.array([[float(v) for v in row] for row in reader])


def _finite_or_none(v):
    return None if v is None or not math.isfinite(v) else float(v)


class _Frame:
    """Map a dataset onto the unit interval and back.

    Smoothed fits use ``(x - lo) / (hi - lo)``; time series use ``i / n``.
    With ``baseline_right`` the axis is reversed so the baseline stretch is
    always on the left. Break points are mapped back by index, so reported
    thresholds are exactly observed covariate values.
    """

    def __init__(self, data: DoseDataset, method: str, baseline_right: bool):
        x = data.x
        self.orig = x[::-1] if baseline_right else x
        n = len(x)
        if method == "ts":
            self.unit = np.arange(1, n + 1) / n
            spacing = np.diff(x)
            step = float(np.median(spacing)) if n > 1 else 1.0
            self.scale = n * step
        else:
            lo, hi = float(x[0]), float(x[-1])
            span = hi - lo if hi > lo else 1.0
            self.unit = (hi - self.orig) / span if baseline_right else (self.orig - lo) / span
            self.scale = span
        self.baseline_right = baseline_right
        self.lo_edge = float(self.orig[0])
        self.hi_edge = float(self.orig[-1])

    def to_unit_h(self, h: float) -> float:
        return h / self.scale

    def dataset(self, data: DoseDataset, sign: float) -> DoseDataset:
        ys = data.ys[::-1] if self.baseline_right else data.ys
        design = data.design
        return DoseDataset(self.unit, tuple(sign * y for y in ys), design)

    def back(self, u: float):
        """Original covariate for a unit-scale candidate; ``None`` for the empty prefix."""
        idx = np.flatnonzero(self.unit == u)
        return float(self.orig[idx[0]]) if len(idx) else None

    def next_after(self, u: float):
        idx = np.searchsorted(self.unit, u, side="right")
        return float(self.orig[idx]) if idx < len(self.orig) else self.hi_edge


def _interval_mask(data: DoseDataset, eta: float, baseline_right: bool) -> np.ndarray:
    return data.x >= eta if baseline_right else data.x <= eta


def cmd_estimate(args) -> dict:
    raw = read_csv(args.input)
    method = args.method
    data = validate_dataset(raw, Design.FIXED_GRID if method == "ts" else Design.RANDOM)

    if method == "ts" and np.any(data.counts > 1):
        raise UsageError("--method ts: input has replicated x values; time series need one response per x")
    if method == "ts" and args.variance not in (None, "none"):
        raise UsageError("--variance: time-series p-values are unnormalised; use --variance none or omit it")
    if method == "ts" and args.tau_fit:
        raise UsageError("--tau-fit is not available with --method ts; use --tau or --tau-eta")
    if args.binary and method != "dose":
        raise UsageError("--binary requires --method dose")
    if args.binary and args.tau_fit:
        raise UsageError("--binary cannot be combined with --tau-fit")
    if method in ("smooth", "ts") and args.bandwidth is None and args.bandwidth_cv is None:
        raise UsageError(f"--method {method} needs --bandwidth or --bandwidth-cv")
    if method == "dose" and (args.bandwidth is not None or args.bandwidth_cv is not None):
        raise UsageError("--bandwidth/--bandwidth-cv only apply to --method smooth or ts")

    sign = -1.0 if args.alternative == "less" else 1.0
    right = args.baseline_side == "right"
    frame = _Frame(data, method, right)
    unit = frame.dataset(data, sign)

    bandwidth = None
    kernel = None
    if method in ("smooth", "ts"):
        if args.bandwidth_cv is not None:
            grid = parse_grid(args.bandwidth_cv)
            h_star, _ = cv_bandwidth(unit, args.kernel, grid / frame.scale)
            bandwidth = h_star * frame.scale
        else:
            if not args.bandwidth > 0:
                raise UsageError("--bandwidth must be positive")
            bandwidth = args.bandwidth
        kernel = KernelSpec(args.kernel, frame.to_unit_h(bandwidth))

    variance_name = args.variance or ("pooled" if method == "dose" else "none")
    if method == "dose" and variance_name in ("smooth", "residual-average"):
        raise UsageError(f"--variance {variance_name} needs a smoother; use --method smooth")
    variance = (VarianceModel.none() if variance_name == "none"
                else variance_estimate(unit, VarianceKind(variance_name), kernel))

    if args.tau is not None:
        tau = sign * args.tau
    elif args.tau_eta is not None:
        mask = _interval_mask(data, args.tau_eta, right)
        if not np.any(mask):
            raise DataError(f"--tau-eta {args.tau_eta}: no observations in the baseline interval")
        tau = sign * float(np.concatenate([y for y, keep in zip(data.ys, mask) if keep]).mean())
    else:
        regime = PValueMethod.DOSE_REPLICATES if method == "dose" else PValueMethod.SMOOTHED
        tau, _ = tau_pvalue_fit(unit, regime, variance, kernel)

    if args.binary:
        profile = pvalues_binary(unit, tau)
    elif method == "dose":
        profile = pvalues_dose(unit, tau, variance)
    elif method == "smooth":
        profile = pvalues_smooth(unit, tau, kernel, variance)
    else:
        profile = pvalues_timeseries(unit.means, tau, kernel)
        profile = PValueProfile(frame.unit, profile.p, profile.method, False, tau, kernel.bandwidth)

    fit = fit_stump_adaptive(profile) if args.adaptive else fit_stump(profile)
    d_hat = frame.back(fit.d_hat)
    d_right = frame.next_after(fit.d_hat)

    out_dir = Path(args.trace_dir) if args.trace_dir else Path(args.input).resolve().parent
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.input).stem
    p_path = out_dir / f"{stem}_pvalues.csv"
    o_path = out_dir / f"{stem}_objective.csv"
    write_trace(p_path, ("x", "p"), zip(frame.orig, profile.p))
    cand_orig = [frame.lo_edge if frame.back(c) is None else frame.back(c) for c in fit.candidates]
    write_trace(o_path, ("d", "objective"), zip(cand_orig, fit.objective))

    counts = data.counts
    result = {
        "d_hat": d_hat,
        "d_interval": [d_hat if d_hat is not None else frame.lo_edge, d_right],
        "baseline_detected": d_hat is not None,
        "tau_hat": float(sign * tau),
        "method": method,
        "bandwidth": _finite_or_none(bandwidth),
        "n": int(data.n_groups),
        "m_summary": {"min": int(counts.min()), "max": int(counts.max()), "total": int(counts.sum())},
        "objective_trace_path": str(o_path),
        "pvalue_trace_path": str(p_path),
    }
    if fit.levels is not None:
        result["levels"] = {"alpha": fit.levels[0], "beta": fit.levels[1]}
    return result


def cmd_cv(args) -> dict:
    data = validate_dataset(read_csv(args.input))
    grid = parse_grid(args.grid)
    frame = _Frame(data, "smooth", False)
    unit = frame.dataset(data, 1.0)
    h_star, scores = cv_bandwidth(unit, args.kernel, grid / frame.scale)
    return {
        "h_star": float(h_star * frame.scale),
        "scores": [{"h": float(h), "score": _finite_or_none(s)} for h, s in zip(grid, scores)],
    }


def cmd_simulate(args) -> dict:
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    if args.reps < 500:
        print(f"warning: --reps {args.reps} is below 500; tolerance checks against the published tables "
              "need at least 500 replicates", file=sys.stderr)
    if args.config:
        try:
            spec = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read config {args.config}: {exc}") from None
        rows = spec["rows"] if isinstance(spec, dict) else spec
        configs = [config_from_dict(r) for r in rows]
        name = Path(args.config).stem
    else:
        configs = table_configs(args.table)
        name = f"table{args.table}"
    threads = args.threads if args.threads else default_threads()
    report = run_table(configs, args.reps, args.seed, threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = out / f"{name}.csv", out / f"{name}.json"
    csv_path.write_text(report.to_csv(), encoding="utf-8")
    json_path.write_text(report.to_json(), encoding="utf-8")
    return {"csv": str(csv_path), "json": str(json_path), "rows": len(report.rows),
            "reps": args.reps, "seed": args.seed}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="threshold-kit", description="Estimate where a regression function leaves its baseline.")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate the threshold of one dataset")
    est.add_argument("--input", required=True)
    est.add_argument("--method", choices=("dose", "smooth", "ts"), required=True)
    est.add_argument("--kernel", choices=("gaussian", "epanechnikov", "uniform"), default="gaussian")
    bw = est.add_mutually_exclusive_group()
    bw.add_argument("--bandwidth", type=float, help="bandwidth in covariate units")
    bw.add_argument("--bandwidth-cv", metavar="GRID", help="cross-validate over lo:hi:steps or a comma list")
    est.add_argument("--variance", choices=("pooled", "per-dose", "smooth", "residual-average", "none"))
    tau = est.add_mutually_exclusive_group(required=True)
    tau.add_argument("--tau", type=float, help="known baseline value")
    tau.add_argument("--tau-eta", type=float, metavar="ETA", help="average responses with x <= ETA")
    tau.add_argument("--tau-fit", action="store_true", help="fit the baseline from the p-values")
    est.add_argument("--adaptive", action="store_true", help="estimate both stump levels")
    est.add_argument("--binary", action="store_true", help="0/1 responses, null-variance p-values")
    est.add_argument("--alternative", choices=("greater", "less"), default="greater",
                     help="direction in which the function leaves its baseline")
    est.add_argument("--baseline-side", choices=("left", "right"), default="left")
    est.add_argument("--trace-dir", help="directory for the trace CSVs (default: next to the input)")
    est.set_defaults(func=cmd_estimate)

    sim = sub.add_parser("simulate", help="reproduce a simulation table")
    src = sim.add_mutually_exclusive_group(required=True)
    src.add_argument("--table", type=int, choices=(1, 2, 3))
    src.add_argument("--config", help="JSON list of run configurations")
    sim.add_argument("--reps", type=int, default=2000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", default=".")
    sim.add_argument("--threads", type=int, help="worker threads (default: THRESHOLD_KIT_THREADS or CPU count)")
    sim.set_defaults(func=cmd_simulate)

    cv = sub.add_parser("cv", help="leave-one-out bandwidth cross-validation")
    cv.add_argument("--input", required=True)
    cv.add_argument("--grid", required=True)
    cv.add_argument("--kernel", choices=("gaussian", "epanechnikov", "uniform"), default="gaussian")
    cv.set_defaults(func=cmd_cv)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ThresholdError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    json.dump(result, sys.stdout, indent=2)
    sys.stdout.write("\n")
    summary = {k: result[k] for k in ("d_hat", "tau_hat", "h_star", "rows") if k in result}
    print("  ".join(f"{k}={v}" for k, v in summary.items()), file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
