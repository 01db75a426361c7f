"""End-to-end acceptance checks; each records one PASS/FAIL/SKIP line.

The lines are printed in the terminal summary (see conftest.py) and also on
stdout when run with ``-s``.
"""

import json
import os
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE_LINES
from threshold_kit import PValueProfile, fit_stump, pvalues_dose
from threshold_kit.cli import main
from threshold_kit.domain import Design, VarianceModel
from threshold_kit.pvalues import dose_statistic
from threshold_kit.simlab import (
    REFERENCE,
    REFERENCE_TABLE2,
    REFERENCE_TABLE3,
    ErrorSpec,
    SimModel,
    generate,
    run_table,
    table1_config,
    table2_config,
    table3_config,
)

pytestmark = pytest.mark.slow

SEED = 20240611
MODELS = ("M1", "M2", "M3")
DATA_DIR = Path(__file__).parent / "data"


def record(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def skip(number, detail):
    line = f"[SKIP] criterion {number:>2}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    pytest.skip(detail)


def compare(observed, reference, tol):
    """Cells outside ``reference +- tol`` as (label, observed, reference) triples."""
    bad = []
    for key, ref in reference.items():
        for label, o, r in zip(("rmse_d", "bias_d", "rmse_tau", "bias_tau"), observed[key], ref):
            if abs(o - r) > tol:
                bad.append((f"{key} {label}", round(o, 2), r))
    return bad


@pytest.fixture(scope="module")
def table2_rows():
    cfgs = [table2_config(mod, m, n) for m, n in [(10, 50), (50, 100)] for mod in MODELS]
    rep = run_table(cfgs, 2000, SEED)
    return {(r.model, r.m, r.n): (r.rmse_d, r.bias_d, r.rmse_tau, r.bias_tau) for r in rep.rows}


def test_c01_table1():
    cfgs = [table1_config(mod, m, n, meth) for m, n in [(10, 20), (20, 20)]
            for mod in MODELS for meth in ("dose", "smooth")]
    rep = run_table(cfgs, 2000, SEED)
    observed = {(r.model, r.m, r.n, r.method): (r.rmse_d, r.bias_d) for r in rep.rows}
    bad = compare(observed, REFERENCE, 1.5)
    detail = f"Table 1 rows (10,20),(20,20), 12 cells x2 within 1.5; {len(bad)} off: {bad}"
    assert record(1, not bad, detail), detail


def test_c02_table2(table2_rows):
    bad = compare(table2_rows, REFERENCE_TABLE2, 1.5)
    detail = f"Table 2 rows (10,50),(50,100), 6 cells x4 within 1.5; {len(bad)} off: {bad}"
    assert record(2, not bad, detail), detail


def test_c03_table3():
    cfgs = [table3_config(mod, n) for n in (200, 1000) for mod in MODELS]
    rep = run_table(cfgs, 1000, SEED)
    observed = {(r.model, r.n): (r.rmse_d, r.bias_d, r.rmse_tau, r.bias_tau) for r in rep.rows}
    bad = compare(observed, REFERENCE_TABLE3, 2.0)
    detail = f"Table 3 rows n=200,1000, 6 cells x4 within 2.0; {len(bad)} off: {bad}"
    assert record(3, not bad, detail), detail


def brute_force_break(x, p):
    cands = np.concatenate([[0.0], np.unique(x)])
    best, best_d = np.inf, None
    for d in cands:
        left = x <= d
        sse = np.sum((p[left] - 0.5) ** 2) + np.sum(p[~left] ** 2)
        if sse < best:
            best, best_d = sse, d
    return best_d


def test_c04_oracle_equivalence():
    rng = np.random.default_rng(SEED)
    mismatches = 0
    for k in range(1000):
        n = int(rng.integers(1, 201))
        if k % 3 == 0:
            # coarse covariates and p-values force duplicates and exact ties
            x = np.sort(rng.integers(1, 20, n) / 20)
            p = rng.choice([0.0, 0.25, 0.5, 0.75, 1.0], n)
        else:
            x = np.sort(rng.uniform(0, 1, n))
            p = rng.uniform(0, 1, n)
        if fit_stump(PValueProfile.from_values(x, p)).d_hat != brute_force_break(x, p):
            mismatches += 1
    detail = f"1000 random profiles, fit_stump vs brute-force SSE argmin: {mismatches} mismatches"
    assert record(4, mismatches == 0, detail), detail


def test_c05_null_uniformity():
    rng = np.random.default_rng(SEED)
    data = generate(SimModel("FlatNull", tau0=0.2), ErrorSpec(sigma=0.3), 5, 10_000, seed=SEED)
    p = pvalues_dose(data, 0.2, VarianceModel.known(0.3, data.n_groups)).p
    pval = stats.kstest(p, "uniform").pvalue
    detail = f"KS p-value {pval:.4f} on 10,000 null p-values (needs > 0.001)"
    del rng
    assert record(5, pval > 0.001, detail), detail


def test_c06_dichotomy():
    left, right = [], []
    for r in range(200):
        data = generate(SimModel("M1"), ErrorSpec(sigma=0.3), 200, 100, seed=SEED + r)
        p = pvalues_dose(data, 0.0, VarianceModel.known(0.3, data.n_groups)).p
        left.append(p[data.x <= 0.4])
        right.append(p[data.x >= 0.7])
    lo, hi = np.concatenate(left).mean(), np.concatenate(right).mean()
    ok = 0.45 <= lo <= 0.55 and hi < 0.05
    detail = f"mean p on x<=0.4 = {lo:.4f} (in [0.45,0.55]), on x>=0.7 = {hi:.2e} (< 0.05)"
    assert record(6, ok, detail), detail


def test_c07_noiseless_recovery():
    found = {}
    for name in MODELS:
        data = generate(SimModel(name), ErrorSpec(sigma=0.0), 1, 100, Design.FIXED_GRID, seed=SEED)
        prof = dose_statistic(data, VarianceModel.known(0.0, 100)).profile(0.0)
        found[name] = fit_stump(prof).d_hat
    target = float(np.max(data.x[data.x <= 0.5]))
    ok = all(d == target for d in found.values())
    detail = f"sigma=0, grid n=100: d_hat {found} vs {target}"
    assert record(7, ok, detail), detail


def test_c08_positive_bias(table2_rows):
    signs = {mod: (table2_rows[(mod, 10, 50)][1], table2_rows[(mod, 10, 50)][3]) for mod in MODELS}
    ok = all(b_d > 0 and b_t > 0 for b_d, b_t in signs.values())
    detail = "(10,50), 2000 reps, (bias_d, bias_tau) x100: " + ", ".join(
        f"{m} ({b:.2f}, {t:.2f})" for m, (b, t) in signs.items())
    assert record(8, ok, detail), detail


def data_file(env, name):
    path = os.environ.get(env) or DATA_DIR / name
    return Path(path) if Path(path).is_file() else None


def estimate(capsys, *argv):
    code = main(["estimate", *argv])
    out = capsys.readouterr().out
    assert code == 0
    return json.loads(out)


def test_c09_data_applications(capsys, tmp_path):
    lidar = data_file("THRESHOLD_KIT_LIDAR_CSV", "lidar.csv")
    temp = data_file("THRESHOLD_KIT_TEMPERATURE_CSV", "temperature.csv")
    if lidar is None and temp is None:
        skip(9, "LIDAR and temperature CSVs not supplied (set THRESHOLD_KIT_LIDAR_CSV / "
                "THRESHOLD_KIT_TEMPERATURE_CSV or place them in tests/data/)")
    notes, ok = [], True
    if lidar is not None:
        d = [estimate(capsys, "--input", str(lidar), "--method", "smooth", "--variance", "none",
                      "--tau-eta", "480", "--alternative", "less", "--bandwidth", str(h),
                      "--trace-dir", str(tmp_path)) for h in range(5, 31, 5)]
        tau = d[0]["tau_hat"]
        hits = [r["d_hat"] for r in d]
        ok &= abs(tau - -0.0523) <= 0.0005 and all(534 <= v <= 547 for v in hits)
        notes.append(f"LIDAR tau {tau:.4f}, d_hat {hits}")
    if temp is not None:
        d = [estimate(capsys, "--input", str(temp), "--method", "ts", "--tau-eta", "1875",
                      "--bandwidth", str(h), "--trace-dir", str(tmp_path)) for h in range(5, 31, 5)]
        tau = d[0]["tau_hat"]
        hits = [r["d_hat"] for r in d]
        ok &= abs(tau - -0.3540) <= 0.0005 and all(1916 <= v <= 1921 for v in hits)
        notes.append(f"temperature tau {tau:.4f}, d_hat {hits}")
    detail = "; ".join(notes)
    assert record(9, ok, detail), detail


def test_c10_determinism(tmp_path):
    cfg = tmp_path / "mixed.json"
    cfg.write_text(json.dumps([
        {"model": "M1", "m": 10, "n": 20, "tau": "fit", "variance": "pooled"},
        {"model": "M2", "m": 1, "n": 200, "method": "smooth", "tau": "fit",
         "variance": "residual-average", "c": 0.15, "cusp": 2},
        {"model": "M3", "m": 5, "n": 30, "method": "smooth", "c": 0.04},
    ]))
    outputs = {}
    for threads in (1, 4):
        out = tmp_path / f"t{threads}"
        assert main(["simulate", "--config", str(cfg), "--reps", "40", "--seed", "99",
                     "--out", str(out), "--threads", str(threads)]) == 0
        assert main(["simulate", "--table", "2", "--reps", "10", "--seed", "99",
                     "--out", str(out), "--threads", str(threads)]) == 0
        outputs[threads] = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
    same = outputs[1] == outputs[4]
    detail = f"simulate reports with 1 vs 4 threads byte-identical: {same} ({sorted(outputs[1])})"
    assert record(10, same, detail), detail
