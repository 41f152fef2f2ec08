"""Benchmark-ordered conditional moment estimators and covariance reconstruction.

Rows of a return panel are ranked by the companion benchmark; the window
``(p, q)`` keeps ranks ``[np] + 1 .. [nq]`` (floor brackets, no interpolation).
All moments use divisor equal to the number of rows kept.

Under joint normality the central-window moments determine the full
covariance through

    cov(X) = cov_B(X) - (1 - 1/s(p, q)) var_B(Y) beta beta',
    beta   = cov_B(X, Y) / var_B(Y),

which :func:`reconstruct_covariance` applies to sample estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data_io import BenchmarkSeries, ReturnPanel
from .errors import ConfigurationError, DataError, DegenerateBenchmarkError, DomainError
from .numerics import rule_split_quantile, s_factor

__all__ = [
    "QuantileWindow",
    "ConditioningIndexSet",
    "ConditionalEstimates",
    "ReconstructedCovariance",
    "floor_rank",
    "conditioning_indices",
    "conditional_estimates",
    "unconditional_estimates",
    "reconstruct_covariance",
    "three_way_conditional_cov",
    "split_window",
    "estimates_to_json",
]

# Absorbs representation error in n*p (e.g. 100 * 0.29 = 28.999999999999996).
_RANK_EPS = 1e-9


@dataclass(frozen=True)
class QuantileWindow:
    p: float
    q: float

    def __post_init__(self):
        if not (0.0 <= self.p < self.q <= 1.0):
            raise DomainError(f"quantile window requires 0 <= p < q <= 1, got ({self.p}, {self.q})")

    @classmethod
    def symmetric(cls, p):
        """Window ``(p, 1 - p)``."""
        return cls(p, 1.0 - p)

    @property
    def interior(self):
        return 0.0 < self.p and self.q < 1.0

    def require_interior(self):
        if not self.interior:
            raise DomainError(
                f"reconstruction needs 0 < p < q < 1, got ({self.p}, {self.q})")

    def to_list(self):
        return [self.p, self.q]


def split_window() -> QuantileWindow:
    """The central 20/60/20 window ``(q~, 1 - q~)``."""
    return QuantileWindow.symmetric(rule_split_quantile())


@dataclass(frozen=True)
class ConditioningIndexSet:
    indices: np.ndarray  # 0-based row positions, ascending
    lower_rank: int      # 1-based rank of the first kept order statistic
    upper_rank: int      # 1-based rank of the last kept order statistic

    @property
    def size(self):
        return len(self.indices)


def floor_rank(n, u):
    """``[n u]`` with a guard against floating-point representation error."""
    return int(math.floor(n * u + _RANK_EPS))


def conditioning_indices(bench, window: QuantileWindow, min_count=2) -> ConditioningIndexSet:
    """Rows whose benchmark value has rank ``[np]+1 .. [nq]``.

    Ties are broken by original position (stable sort). The returned positions
    are sorted ascending so that downstream sums keep the sample's order.

    Examples
    --------
    >>> conditioning_indices(np.array([5., 1., 3., 2., 4.]), QuantileWindow(0.2, 0.8)).indices
    array([2, 3, 4])
    """
    y = np.asarray(bench.values if isinstance(bench, BenchmarkSeries) else bench, dtype=float)
    n = len(y)
    if n < 5:
        raise DataError(f"need at least 5 observations, got {n}")
    lo = floor_rank(n, window.p)
    hi = floor_rank(n, window.q)
    if hi - lo < min_count:
        raise ConfigurationError(
            f"window ({window.p}, {window.q}) keeps {hi - lo} of {n} observations; "
            f"at least {min_count} required")
    order = np.argsort(y, kind="stable")
    idx = np.sort(order[lo:hi])
    return ConditioningIndexSet(idx, lo + 1, hi)


@dataclass(frozen=True)
class ConditionalEstimates:
    window: QuantileWindow
    mean: np.ndarray
    variance: np.ndarray
    cov: np.ndarray
    cov_with_benchmark: np.ndarray
    benchmark_mean: float
    benchmark_variance: float
    count: int
    tickers: tuple = ()

    @property
    def beta(self):
        """Regression coefficients of each asset on the benchmark within the window."""
        if not self.benchmark_variance > 0:
            raise DegenerateBenchmarkError("benchmark variance over the window is zero")
        return self.cov_with_benchmark / self.benchmark_variance


def _moments(x, y):
    count = x.shape[0]
    mean = x.sum(axis=0) / count
    dx = x - mean
    cov = dx.T @ dx / count
    # exact symmetry; the two triangles can differ in the last bit
    cov = 0.5 * (cov + cov.T)
    y_mean = y.sum() / count
    dy = y - y_mean
    return mean, cov, dx.T @ dy / count, float(y_mean), float(dy @ dy / count)


def _check_aligned(panel, bench):
    if panel.n != bench.n:
        raise DataError(f"panel has {panel.n} rows but benchmark has {bench.n}")
    if tuple(panel.dates) != tuple(bench.dates):
        raise DataError("panel and benchmark dates differ; align them first")


def conditional_estimates(panel: ReturnPanel, bench: BenchmarkSeries,
                          window: QuantileWindow) -> ConditionalEstimates:
    """Conditional mean, variances and covariances over the benchmark window.

    The benchmark variance is the plain conditional variance of the benchmark
    values; for a weighted benchmark it coincides with ``a' cov_B a``.
    """
    _check_aligned(panel, bench)
    sel = conditioning_indices(bench, window)
    x = panel.returns[sel.indices]
    y = np.asarray(bench.values, dtype=float)[sel.indices]
    mean, cov, cxy, y_mean, y_var = _moments(x, y)
    return ConditionalEstimates(window, mean, np.diag(cov).copy(), cov, cxy,
                                y_mean, y_var, sel.size, tuple(panel.tickers))


def unconditional_estimates(panel: ReturnPanel, bench: BenchmarkSeries | None = None):
    """Full-sample estimates, i.e. the window (0, 1)."""
    if bench is None:
        bench = BenchmarkSeries(panel.dates, panel.returns.mean(axis=1))
    x = panel.returns
    y = np.asarray(bench.values, dtype=float)
    _check_aligned(panel, bench)
    mean, cov, cxy, y_mean, y_var = _moments(x, y)
    return ConditionalEstimates(QuantileWindow(0.0, 1.0), mean, np.diag(cov).copy(), cov, cxy,
                                y_mean, y_var, panel.n, tuple(panel.tickers))


@dataclass(frozen=True)
class ReconstructedCovariance:
    window: QuantileWindow
    sigma_bar: np.ndarray
    benchmark_sigma_bar: float
    s_value: float
    estimates: ConditionalEstimates | None = None

    @property
    def variance(self):
        return np.diag(self.sigma_bar).copy()


def reconstruct_covariance(est: ConditionalEstimates) -> ReconstructedCovariance:
    """Unconditional covariance implied by central-window moments under normality."""
    est.window.require_interior()
    if not est.benchmark_variance > 0:
        raise DegenerateBenchmarkError(
            "benchmark variance over the conditioning window is zero; cannot rescale")
    s = s_factor(est.window.p, est.window.q)
    beta = est.cov_with_benchmark / est.benchmark_variance
    correction = (1.0 - 1.0 / s) * est.benchmark_variance
    sigma_bar = est.cov - correction * np.outer(beta, beta)
    sigma_bar = 0.5 * (sigma_bar + sigma_bar.T)
    return ReconstructedCovariance(est.window, sigma_bar, est.benchmark_variance / s, s, est)


def three_way_conditional_cov(panel: ReturnPanel, bench: BenchmarkSeries, min_n=100):
    """Estimates over the lower, central and upper 20/60/20 segments.

    Windows are ``(0, q~]``, ``(q~, 1 - q~]`` and ``(1 - q~, 1)``; together they
    partition the sample. For multivariate normal data the three covariance
    matrices agree.
    """
    if panel.n < min_n:
        raise DataError(f"three-way split needs at least {min_n} observations, got {panel.n}")
    q = rule_split_quantile()
    windows = (QuantileWindow(0.0, q), QuantileWindow(q, 1.0 - q), QuantileWindow(1.0 - q, 1.0))
    return tuple(conditional_estimates(panel, bench, w) for w in windows)


def estimates_to_json(est: ConditionalEstimates, s_value=None):
    """Plain-JSON view: matrices as row-major nested lists."""
    if s_value is None and est.window.interior:
        s_value = s_factor(est.window.p, est.window.q)
    return {
        "window": est.window.to_list(),
        "tickers": list(est.tickers),
        "mean": est.mean.tolist(),
        "variance": est.variance.tolist(),
        "cov": est.cov.tolist(),
        "cov_with_benchmark": est.cov_with_benchmark.tolist(),
        "benchmark_mean": est.benchmark_mean,
        "benchmark_variance": est.benchmark_variance,
        "count": est.count,
        "s_value": s_value,
    }
