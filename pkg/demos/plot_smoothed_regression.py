"""
One response per covariate: smoothed p-values
=============================================

With a single observation at each x, the group means are too noisy on their
own, so the p-values come from a Nadaraya-Watson fit. The bandwidth is picked
by leave-one-out cross-validation.
"""

import numpy as np

from threshold_kit import KernelSpec, cv_bandwidth, fit_stump, pvalues_smooth, tau_interval_average, variance_estimate
from threshold_kit.simlab import ErrorSpec, SimModel, generate

data = generate(SimModel("M2"), ErrorSpec(sigma=0.3), m=1, n=500, seed=11)

grid = np.linspace(0.01, 0.2, 39)
h, scores = cv_bandwidth(data, "gaussian", grid)
print(f"cross-validated bandwidth h = {h:.4f}")

kernel = KernelSpec("gaussian", h)
sigma = variance_estimate(data, "residual-average", kernel)
# the first quarter of the range is known to be flat here
tau = tau_interval_average(data, 0.25)
profile = pvalues_smooth(data, tau, kernel, sigma)
fit = fit_stump(profile)
print(f"tau from x <= 0.25: {tau:.4f}")
print(f"d_hat = {fit.d_hat:.3f} (true 0.5)")
