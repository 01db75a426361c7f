"""
Onset of a trend in an annual series
====================================

An equally spaced series with AR(1) noise. The p-values use a kernel sum
on i/n without a variance estimate, which sidesteps estimating the
autocorrelation. Without that scaling the p-values only separate once
sqrt(n h) times the rise is large, so a slow trend is picked up late with a
narrow kernel and earlier with a wide one.
"""

import numpy as np

from threshold_kit import KernelSpec, fit_stump, pvalues_timeseries
from threshold_kit.domain import Design
from threshold_kit.simlab import ErrorSpec, SimModel, generate

years = np.arange(1850, 2010)
n = len(years)
series = generate(SimModel("M1", tau0=-0.35), ErrorSpec("ar1", sigma=0.1, rho=0.5), 1, n,
                  Design.FIXED_GRID, seed=1).means

tau = series[years <= 1875].mean()
for h_years in (5, 15, 30):
    profile = pvalues_timeseries(series, tau, KernelSpec("gaussian", h_years / n))
    fit = fit_stump(profile)
    k = int(round(fit.d_hat * n)) - 1
    print(f"h = {h_years:2d} years: trend starts after {years[k]} (true {years[n // 2 - 1]})")
