"""
Monte Carlo RMSE and bias
=========================

A small version of the replicate-method table: threshold and baseline
errors for the three test curves at two allocations. Set
THRESHOLD_KIT_THREADS to cap the worker count; the numbers do not depend
on it.
"""

from threshold_kit.simlab import run_table, table2_config

configs = [table2_config(model, m, n) for m, n in [(10, 50), (50, 100)] for model in ("M1", "M2", "M3")]
report = run_table(configs, replicates=200, base_seed=7)

print(f"{'model':>5} {'m':>3} {'n':>4} {'rmse_d':>7} {'bias_d':>7} {'rmse_tau':>8} {'bias_tau':>8}")
for row in report.rows:
    print(f"{row.model:>5} {row.m:>3} {row.n:>4} {row.rmse_d:7.1f} {row.bias_d:7.1f} {row.rmse_tau:8.1f} {row.bias_tau:8.1f}")
