"""Quantile-conditional statistics built around the 20/60/20 split.

Conditional moments over benchmark quantile windows, reconstruction of the
unconditional covariance from the central window, the S_n tail statistic
with Monte Carlo null tables, Q-Q diagnostics and a rolling-window
classical vs conditional Markowitz backtester.
"""

__version__ = "0.1.0"

from .backtest import BacktestConfig, BacktestReport, run_backtest, sharpe_ratio, cumulative_curve, threshold
from .conditional_moments import (
    ConditionalEstimates,
    QuantileWindow,
    ReconstructedCovariance,
    conditional_estimates,
    conditioning_indices,
    reconstruct_covariance,
    split_window,
    three_way_conditional_cov,
    unconditional_estimates,
)
from .data_io import (
    BenchmarkSeries,
    PriceTable,
    ReturnPanel,
    align,
    align_prices,
    compute_returns,
    load_prices,
    weighted_benchmark,
)
from .diagnostics import qq_band, qq_dataset, qq_points, split_markers
from .markowitz import (
    PortfolioProblem,
    PortfolioWeights,
    classical_weights,
    conditional_weights,
    market_weights,
    min_variance_weights,
    optimal_weights,
)
from .numerics import (
    StreamKey,
    normal_cdf,
    normal_pdf,
    normal_quantile,
    rule_split_quantile,
    s_factor,
)
from .tail_statistic import NullTable, TailStatResult, compare_to_null, mc_null_table, s_n
