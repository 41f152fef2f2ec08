"""Rolling-window backtest of classical (M) and conditional (CM) Markowitz rules.

Iteration i (0-based) learns on rows ``[i*l, i*l + t)`` and holds the
resulting weights over rows ``[t + i*l, t + (i+1)*l)``; there are
``(n - t) // l`` iterations and a trailing partial block is dropped. The
target return of iteration i is ``max(multiplier * mean(index), floor)``
with the index mean taken over the same learning rows. Daily portfolio
return is ``w . X_t`` with w fixed for the block.

A method whose estimation fails in a block (singular covariance, degenerate
benchmark, unreachable target) holds no position for that block; the
failure is logged in ``skipped``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .conditional_moments import QuantileWindow, split_window
from .data_io import BenchmarkSeries, ReturnPanel
from .errors import (ConfigurationError, DataError, NumericalError, QuantcondError,
                     UndefinedSharpeError)
from .markowitz import classical_weights, conditional_weights

__all__ = [
    "BacktestConfig",
    "Rebalance",
    "MethodResult",
    "BacktestReport",
    "threshold",
    "sharpe_ratio",
    "cumulative_curve",
    "run_backtest",
    "write_report",
    "write_cumulative_csv",
    "METHODS",
]

METHODS = ("M", "CM")
TRADING_DAYS = 250


@dataclass(frozen=True)
class BacktestConfig:
    learn_days: int = 120
    hold_days: int = 60
    window: QuantileWindow = field(default_factory=split_window)
    methods: tuple = METHODS
    threshold_floor: float = 0.0005
    threshold_multiplier: float = 3.0

    def __post_init__(self):
        if self.hold_days < 1:
            raise ConfigurationError("hold_days must be at least 1")
        if self.threshold_floor < 0:
            raise ConfigurationError("threshold_floor must be non-negative")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise ConfigurationError(f"methods must be a non-empty subset of {METHODS}, got {self.methods}")
        if "CM" in self.methods:
            self.window.require_interior()

    def to_json(self):
        return {
            "learn_days": self.learn_days,
            "hold_days": self.hold_days,
            "window": self.window.to_list(),
            "methods": list(self.methods),
            "threshold_floor": self.threshold_floor,
            "threshold_multiplier": self.threshold_multiplier,
        }


@dataclass(frozen=True)
class Rebalance:
    date: object          # last date of the learning window
    c: float
    weights: np.ndarray | None
    skipped: str | None = None


@dataclass(frozen=True)
class MethodResult:
    method: str
    dates: tuple
    returns: np.ndarray
    rebalances: tuple
    sharpe: float | None
    cumulative: np.ndarray | None

    @property
    def skipped(self):
        return [(r.date, r.skipped) for r in self.rebalances if r.skipped]

    def to_json(self):
        return {
            "method": self.method,
            "rebalances": [
                {"date": r.date.isoformat() if hasattr(r.date, "isoformat") else r.date,
                 "weights": None if r.weights is None else r.weights.tolist(),
                 "c_i": r.c}
                for r in self.rebalances
            ],
            "returns": [{"date": _iso(d), "value": float(v)} for d, v in zip(self.dates, self.returns)],
            "sharpe": self.sharpe,
            "cumulative": None if self.cumulative is None else self.cumulative.tolist(),
            "skipped": [{"date": _iso(d), "reason": reason} for d, reason in self.skipped],
        }


@dataclass(frozen=True)
class BacktestReport:
    config: BacktestConfig
    tickers: tuple
    results: dict

    def __getitem__(self, method):
        return self.results[method]

    def to_json(self):
        return {
            "config": self.config.to_json(),
            "tickers": list(self.tickers),
            "cumulative_method": "compounded",
            "methods": [self.results[m].to_json() for m in self.config.methods],
        }


def _iso(day):
    return day.isoformat() if hasattr(day, "isoformat") else str(day)


def threshold(mu_y, config: BacktestConfig | None = None):
    """Target daily return ``max(multiplier * mu_y, floor)``."""
    config = config or BacktestConfig()
    return max(config.threshold_multiplier * mu_y, config.threshold_floor)


def sharpe_ratio(returns, periods=TRADING_DAYS):
    """Annualized ``mean / sd * sqrt(periods)`` with divisor-n standard deviation."""
    r = np.asarray(returns, dtype=float)
    if len(r) < 2:
        raise DataError("Sharpe ratio needs at least 2 returns")
    sd = r.std()
    if not sd > 0:
        raise UndefinedSharpeError("returns have zero standard deviation")
    return float(r.mean() / sd * np.sqrt(periods))


def cumulative_curve(returns):
    """Compounded cumulative return ``prod(1 + r) - 1`` up to each date."""
    r = np.asarray(returns, dtype=float)
    if np.any(r <= -1.0):
        raise DataError("returns of -100% or worse cannot be compounded")
    return np.cumprod(1.0 + r) - 1.0


def _weights_for(method, learn, bench, config, c):
    if method == "M":
        return classical_weights(learn, c).w
    return conditional_weights(learn, bench, config.window, c).w


def run_backtest(panel: ReturnPanel, index: BenchmarkSeries, config: BacktestConfig | None = None
                 ) -> BacktestReport:
    config = config or BacktestConfig()
    t, l = config.learn_days, config.hold_days
    if panel.n != index.n or tuple(panel.dates) != tuple(index.dates):
        raise DataError("panel and index must be aligned before backtesting")
    if t < panel.d + 2:
        raise ConfigurationError(f"learn_days {t} must be at least d + 2 = {panel.d + 2}")
    if panel.n < t + l:
        raise DataError(f"need at least learn + hold = {t + l} observations, got {panel.n}")

    iterations = (panel.n - t) // l
    x = panel.returns
    y = np.asarray(index.values, dtype=float)
    out = {m: {"returns": [], "rebalances": []} for m in config.methods}

    for i in range(iterations):
        lo, mid, hi = i * l, i * l + t, i * l + t + l
        learn = ReturnPanel(panel.dates[lo:mid], panel.tickers, x[lo:mid], panel.kind, panel.frequency)
        bench = BenchmarkSeries(index.dates[lo:mid], y[lo:mid], index.name)
        c = threshold(float(y[lo:mid].mean()), config)
        hold = x[mid:hi]
        for method in config.methods:
            try:
                w = _weights_for(method, learn, bench, config, c)
            except (NumericalError, QuantcondError) as exc:
                out[method]["rebalances"].append(
                    Rebalance(panel.dates[mid - 1], c, None, f"{type(exc).__name__}: {exc}"))
                out[method]["returns"].append(np.zeros(l))
                continue
            out[method]["rebalances"].append(Rebalance(panel.dates[mid - 1], c, w))
            out[method]["returns"].append(hold @ w)

    dates = tuple(panel.dates[t:t + iterations * l])
    results = {}
    for method in config.methods:
        r = np.concatenate(out[method]["returns"])
        try:
            sharpe = sharpe_ratio(r)
        except (UndefinedSharpeError, DataError):
            sharpe = None
        try:
            cum = cumulative_curve(r)
        except DataError:
            cum = None
        results[method] = MethodResult(method, dates, r, tuple(out[method]["rebalances"]), sharpe, cum)
    return BacktestReport(config, tuple(panel.tickers), results)


def write_report(report: BacktestReport, path):
    Path(path).write_text(json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8")


def write_cumulative_csv(report: BacktestReport, path):
    """Columns ``date, M, CM`` (only the methods that were run)."""
    methods = list(report.config.methods)
    first = report.results[methods[0]]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *methods])
        for k, day in enumerate(first.dates):
            row = [_iso(day)]
            for m in methods:
                cum = report.results[m].cumulative
                row.append("" if cum is None else repr(float(cum[k])))
            w.writerow(row)
