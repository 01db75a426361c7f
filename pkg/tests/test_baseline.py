import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from threshold_kit import KernelSpec, SearchConfig, tau_interval_average, tau_pvalue_fit, variance_estimate
from threshold_kit.baseline import fit_tau
from threshold_kit.domain import DoseDataset, NoDataInInterval, ThresholdError, VarianceModel
from threshold_kit.pvalues import dose_statistic
from threshold_kit.simlab import ErrorSpec, SimModel, generate


def test_interval_average_examples():
    data = DoseDataset.from_groups([0.1, 0.9], [[1.0, 3.0], [10.0]])
    assert tau_interval_average(data, 0.5) == 2.0
    with pytest.raises(NoDataInInterval):
        tau_interval_average(data, 0.05)
    flat = DoseDataset.from_groups([0.1, 0.5, 0.9], [[4.0], [4.0, 4.0], [4.0]])
    assert tau_interval_average(flat, 0.6) == 4.0


def test_interval_average_is_replicate_weighted():
    data = DoseDataset.from_groups([0.1, 0.2], [[0.0], [3.0, 3.0, 3.0]])
    assert tau_interval_average(data, 0.3) == 2.25


@given(st.floats(-100, 100))
def test_interval_average_shift(b):
    data = DoseDataset.from_groups([0.1, 0.2, 0.7], [[0.5, 1.5], [2.0], [9.0]])
    assert tau_interval_average(data.map(shift=b), 0.25) == pytest.approx(4 / 3 + b, abs=1e-12)


def test_single_group():
    data = DoseDataset.from_groups([0.3], [[0.2, 0.9, 0.4]])
    tau, _ = tau_pvalue_fit(data, "dose", variance_estimate(data, "per-dose"))
    assert tau == pytest.approx(data.means[0], abs=1e-7)


def test_two_groups_symmetric():
    data = DoseDataset.from_groups([0.2, 0.8], [[0.0], [1.0]])
    tau, (grid, values) = tau_pvalue_fit(data, "dose", VarianceModel.none())
    fine = np.linspace(0, 1, 100_001)
    z = fine[:, None]
    from scipy.stats import norm
    g = ((norm.sf(np.array([0.0, 1.0]) - z) - 0.5) ** 2).sum(axis=1)
    assert fine[np.argmin(g)] == pytest.approx(0.5, abs=1e-5)
    assert tau == pytest.approx(0.5, abs=1e-7)
    assert len(grid) == 512


def test_smooth_regime_requires_kernel():
    data = DoseDataset.from_groups([0.2, 0.8], [[0.0], [1.0]])
    with pytest.raises(ThresholdError):
        tau_pvalue_fit(data, "smooth", VarianceModel.none())
    tau, _ = tau_pvalue_fit(data, "smooth", VarianceModel.none(), KernelSpec("gaussian", 0.3))
    assert 0.0 <= tau <= 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_objective_larger_at_grid_ends(seed):
    data = generate(SimModel("M1"), ErrorSpec(sigma=0.3), 5, 20, seed=seed)
    var = variance_estimate(data, "pooled")
    tau, (grid, values) = tau_pvalue_fit(data, "dose", var)
    stat = dose_statistic(data, var)
    g_min = float(np.sum((stat.at(tau) - 0.5) ** 2))
    assert g_min <= values.min() + 1e-12
    assert values[0] > g_min and values[-1] > g_min
    far = float(np.sum((stat.at(1e6) - 0.5) ** 2))
    assert far == pytest.approx(data.n_groups / 4)


def test_refinement_beats_grid():
    stat_data = DoseDataset.from_groups(np.linspace(0, 1, 9), np.linspace(0, 1, 9)[:, None] ** 2)
    var = VarianceModel.known(0.2, 9)
    stat = dose_statistic(stat_data, var)
    coarse, _, _ = fit_tau(stat, stat_data.means, var.values, SearchConfig(grid_points=8))
    fine, _, _ = fit_tau(stat, stat_data.means, var.values, SearchConfig(grid_points=20_001))
    assert coarse == pytest.approx(fine, abs=1e-4)


def tau_hats(m, n, reps, seed0=1000):
    out = []
    for r in range(reps):
        data = generate(SimModel("M1"), ErrorSpec(sigma=0.3), m, n, seed=seed0 + r)
        tau, _ = tau_pvalue_fit(data, "dose", variance_estimate(data, "pooled"))
        out.append(tau)
    return np.array(out)


def test_positive_bias_m1():
    mean = tau_hats(50, 50, 200).mean()
    assert 0 < mean <= 0.05


def test_root_m_error_shrinks():
    small = np.median(np.sqrt(10) * np.abs(tau_hats(10, 50, 200)))
    large = np.median(np.sqrt(100) * np.abs(tau_hats(100, 50, 200)))
    assert large < small
