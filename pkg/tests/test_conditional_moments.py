import datetime as dt
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from quantcond.conditional_moments import (QuantileWindow, conditional_estimates, conditioning_indices,
                                           estimates_to_json, floor_rank, reconstruct_covariance,
                                           split_window, three_way_conditional_cov,
                                           unconditional_estimates)
from quantcond.data_io import BenchmarkSeries, ReturnPanel, weighted_benchmark
from quantcond.errors import ConfigurationError, DegenerateBenchmarkError, DomainError
from quantcond.numerics import StreamKey, rule_split_quantile, sample_mv_normal, sample_student_t

from oracles import loop_moments, truncated_variance_quad


def make_panel(x, y=None):
    x = np.asarray(x, float)
    if x.ndim == 1:
        x = x[:, None]
    dates = tuple(dt.date(2000, 1, 1) + dt.timedelta(days=i) for i in range(len(x)))
    panel = ReturnPanel(dates, tuple(f"A{i}" for i in range(x.shape[1])), x)
    bench = (weighted_benchmark(panel, np.ones(x.shape[1])) if y is None
             else BenchmarkSeries(dates, np.asarray(y, float)))
    return panel, bench


def test_window_validation():
    QuantileWindow(0.0, 1.0)
    for p, q in [(0.5, 0.5), (-0.1, 0.5), (0.2, 1.1), (0.8, 0.2)]:
        with pytest.raises(DomainError):
            QuantileWindow(p, q)
    with pytest.raises(DomainError):
        QuantileWindow(0.0, 0.8).require_interior()


def test_floor_rank_guards_representation_error():
    assert 100 * 0.29 < 29
    assert floor_rank(100, 0.29) == 29
    assert floor_rank(2500, 0.19808) == 495
    assert floor_rank(10, 0.75) == 7


def test_conditioning_indices_hand_sorted():
    sel = conditioning_indices(np.array([5.0, 1.0, 3.0, 2.0, 4.0]), QuantileWindow(0.2, 0.8))
    # ranks 2..4 are the values 2, 3, 4 at 1-based positions 4, 3, 5
    assert sorted(sel.indices + 1) == [3, 4, 5]
    assert (sel.lower_rank, sel.upper_rank) == (2, 4)


def test_conditioning_indices_full_window_and_narrow_error():
    y = np.random.default_rng(0).standard_normal(10)
    np.testing.assert_array_equal(conditioning_indices(y, QuantileWindow(0.0, 1.0)).indices, np.arange(10))
    with pytest.raises(ConfigurationError):
        conditioning_indices(y, QuantileWindow(0.45, 0.5))


def test_conditioning_indices_ties_stable():
    y = np.array([1.0, 1.0, 1.0, 1.0, 1.0, 1.0])
    sel = conditioning_indices(y, QuantileWindow(0.2, 0.8))
    # ranks 2..4 of a fully tied sample are positions 1..3 (0-based) by stable order
    np.testing.assert_array_equal(sel.indices, [1, 2, 3])


def test_full_window_equals_unconditional_bitwise():
    x = np.random.default_rng(1).standard_normal((50, 3))
    panel, bench = make_panel(x)
    cond = conditional_estimates(panel, bench, QuantileWindow(0.0, 1.0))
    full = unconditional_estimates(panel, bench)
    for field in ("mean", "variance", "cov", "cov_with_benchmark"):
        np.testing.assert_array_equal(getattr(cond, field), getattr(full, field))
    assert cond.benchmark_variance == full.benchmark_variance
    # and the unconditional estimator is the divisor-n one
    np.testing.assert_allclose(full.cov, np.cov(x, rowvar=False, bias=True), rtol=1e-12)


def test_benchmark_itself_hand_values():
    y = [5.0, 1.0, 3.0, 2.0, 4.0]
    panel, bench = make_panel(y, y)
    est = conditional_estimates(panel, bench, QuantileWindow(0.2, 0.8))
    assert est.mean[0] == pytest.approx(3.0)
    assert est.variance[0] == pytest.approx(2.0 / 3.0)
    assert est.benchmark_variance == pytest.approx(2.0 / 3.0)
    assert est.count == 3


def test_identical_columns_perfect_correlation():
    x = np.random.default_rng(2).standard_normal(40)
    panel, bench = make_panel(np.column_stack([x, x]))
    est = conditional_estimates(panel, bench, QuantileWindow(0.2, 0.8))
    np.testing.assert_allclose(est.cov, est.variance[0], rtol=1e-14)
    np.testing.assert_array_equal(np.diag(est.cov), est.variance)


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(float, st.tuples(st.integers(10, 60), st.integers(1, 4)),
                  elements=st.floats(-10, 10, allow_subnormal=False), unique=True),
       st.integers(0, 2**32 - 1))
def test_permutation_invariance(x, seed):
    panel, bench = make_panel(x)
    perm = np.random.default_rng(seed).permutation(len(x))
    panel2, bench2 = make_panel(x[perm])
    w = QuantileWindow(0.2, 0.8)
    a = conditional_estimates(panel, bench, w)
    b = conditional_estimates(panel2, bench2, w)
    np.testing.assert_allclose(a.mean, b.mean, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(a.cov, b.cov, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(a.cov_with_benchmark, b.cov_with_benchmark, rtol=1e-12, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(float, st.tuples(st.integers(10, 60), st.just(3)), elements=st.floats(-1, 1)),
       hnp.arrays(float, 3, elements=st.floats(0.1, 3)))
def test_benchmark_variance_identity(x, a):
    dates = tuple(dt.date(2000, 1, 1) + dt.timedelta(days=i) for i in range(len(x)))
    panel = ReturnPanel(dates, ("A", "B", "C"), x)
    bench = weighted_benchmark(panel, a)
    est = conditional_estimates(panel, bench, QuantileWindow(0.2, 0.8))
    assert est.benchmark_variance == pytest.approx(a @ est.cov @ a, abs=1e-10)


def test_reconstruction_one_dimensional_collapses():
    y = np.random.default_rng(3).standard_normal(200)
    panel, bench = make_panel(y, y)
    rec = reconstruct_covariance(conditional_estimates(panel, bench, QuantileWindow(0.2, 0.8)))
    assert rec.sigma_bar[0, 0] == pytest.approx(rec.benchmark_sigma_bar, rel=1e-12)
    assert rec.benchmark_sigma_bar == pytest.approx(rec.estimates.benchmark_variance / rec.s_value)


def test_reconstruction_six_point_hand_oracle():
    x = [[0.010, 0.020], [-0.030, -0.010], [0.025, 0.000], [0.000, 0.015],
         [-0.012, 0.030], [0.040, -0.020]]
    panel, bench = make_panel(x)
    window = QuantileWindow(0.2, 0.8)
    rec = reconstruct_covariance(conditional_estimates(panel, bench, window))

    # spreadsheet-style: rank by y = x1 + x2, keep ranks [1.2]+1 = 2 .. [4.8] = 4
    y = [r[0] + r[1] for r in x]
    ranked = sorted(range(6), key=lambda k: (y[k], k))
    kept = [x[k] + [y[k]] for k in ranked[1:4]]
    _, cov3 = loop_moments(kept)
    s = truncated_variance_quad(0.2, 0.8)
    var_y = cov3[2][2]
    for i in range(2):
        for j in range(2):
            bi, bj = cov3[i][2] / var_y, cov3[j][2] / var_y
            expected = cov3[i][j] - (1 - 1 / s) * var_y * bi * bj
            assert rec.sigma_bar[i, j] == pytest.approx(expected, rel=1e-10, abs=1e-16)
    assert rec.benchmark_sigma_bar == pytest.approx(var_y / s, rel=1e-10)
    # diagonal matches the variance form var_B - (1 - 1/s) cov_B(X, Y)^2 / var_B(Y)
    for i in range(2):
        assert rec.variance[i] == pytest.approx(cov3[i][i] - (1 - 1 / s) * cov3[i][2] ** 2 / var_y, rel=1e-10)


def test_reconstruction_errors():
    panel, bench = make_panel(np.zeros((20, 2)))
    est = conditional_estimates(panel, bench, QuantileWindow(0.2, 0.8))
    with pytest.raises(DegenerateBenchmarkError):
        reconstruct_covariance(est)
    panel, bench = make_panel(np.random.default_rng(0).standard_normal((20, 2)))
    with pytest.raises(DomainError):
        reconstruct_covariance(conditional_estimates(panel, bench, QuantileWindow(0.0, 0.8)))


def test_reconstruction_recovers_identity_mc():
    x = sample_mv_normal(StreamKey(21), np.zeros(2), np.eye(2), 10**6)
    panel, bench = make_panel(x)
    rec = reconstruct_covariance(conditional_estimates(panel, bench, QuantileWindow(0.198, 0.802)))
    assert np.max(np.abs(rec.sigma_bar - np.eye(2))) < 0.02


def test_beta_window_invariance_mc():
    sigma = np.array([[1.0, 0.3, 0.1], [0.3, 2.0, -0.4], [0.1, -0.4, 1.5]])
    x = sample_mv_normal(StreamKey(22), np.zeros(3), sigma, 10**6)
    panel, bench = make_panel(x)
    b1 = conditional_estimates(panel, bench, QuantileWindow(0.198, 0.802)).beta
    b2 = conditional_estimates(panel, bench, QuantileWindow(0.1, 0.9)).beta
    np.testing.assert_allclose(b1, b2, rtol=0.02)


def test_three_way_sizes_partition():
    x = sample_mv_normal(StreamKey(23), np.zeros(2), np.eye(2), 10_000)
    panel, bench = make_panel(x)
    parts = three_way_conditional_cov(panel, bench)
    n = 10_000
    q = rule_split_quantile()
    assert sum(p.count for p in parts) == n
    for est, frac in zip(parts, (q, 1 - 2 * q, q)):
        assert abs(est.count - frac * n) <= 1


def test_three_way_requires_100():
    panel, bench = make_panel(np.random.default_rng(0).standard_normal((50, 2)))
    with pytest.raises(Exception):
        three_way_conditional_cov(panel, bench)


def test_three_way_balance_breaks_for_heavy_tails():
    n = 400_000
    x = np.column_stack([sample_student_t(StreamKey(24, i), 3, n) for i in range(2)])
    panel, bench = make_panel(x)
    low, mid, high = three_way_conditional_cov(panel, bench)
    assert np.all(low.variance > mid.variance)
    assert np.all(high.variance > mid.variance)


def test_three_way_balance_normal_moderate_n():
    sigma = np.array([[1.0, 0.5], [0.5, 1.0]])
    x = sample_mv_normal(StreamKey(25), np.array([0.1, -0.2]), sigma, 400_000)
    panel, bench = make_panel(x)
    covs = [e.cov for e in three_way_conditional_cov(panel, bench)]
    for a in covs:
        for b in covs:
            assert np.linalg.norm(a - b) / np.linalg.norm(b) < 0.03


def test_estimates_json_keys():
    panel, bench = make_panel(np.random.default_rng(5).standard_normal((30, 2)))
    obj = estimates_to_json(conditional_estimates(panel, bench, split_window()))
    for key in ("window", "mean", "variance", "cov", "cov_with_benchmark",
                "benchmark_variance", "count", "s_value"):
        assert key in obj
    assert json.loads(json.dumps(obj))["cov"][0][1] == obj["cov"][1][0]


def test_reconstruction_consistency_shrinks():
    sigma = np.array([[1.0, 0.4], [0.4, 0.8]])
    medians = []
    for n in (1_000, 10_000, 100_000):
        errs = []
        for r in range(15):
            x = sample_mv_normal(StreamKey(26, 1000 * r + n), np.zeros(2), sigma, n)
            panel, bench = make_panel(x)
            rec = reconstruct_covariance(conditional_estimates(panel, bench, QuantileWindow(0.198, 0.802)))
            errs.append(np.linalg.norm(rec.sigma_bar - sigma) / np.linalg.norm(sigma))
        medians.append(np.median(errs))
    assert medians[0] >= medians[1] >= medians[2]
