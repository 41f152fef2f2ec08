"""Price ingestion, return computation and date alignment.

File format (prices, benchmarks and serialized return panels alike)::

    date,AAA,BBB
    2020-01-02,100.0,50.5
    2020-01-03,101.2,50.1

UTF-8, comma separated, ``date`` header first, ISO dates, one column per
ticker, no blank cells.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DataError, DomainError, ParseError

__all__ = [
    "PriceTable",
    "ReturnPanel",
    "BenchmarkSeries",
    "read_table",
    "load_prices",
    "load_returns",
    "write_table",
    "compute_returns",
    "align",
    "align_prices",
    "weighted_benchmark",
    "benchmark_from_table",
]

KINDS = ("simple", "log")
FREQUENCIES = ("daily", "weekly", "monthly")


@dataclass(frozen=True)
class PriceTable:
    dates: tuple
    tickers: tuple
    prices: np.ndarray

    def column(self, ticker):
        return self.prices[:, _ticker_index(self.tickers, ticker)]


@dataclass(frozen=True)
class ReturnPanel:
    """n x d matrix of returns, one row per date."""

    dates: tuple
    tickers: tuple
    returns: np.ndarray
    kind: str = "simple"
    frequency: str = "daily"

    def __post_init__(self):
        if self.returns.ndim != 2 or self.returns.shape != (len(self.dates), len(self.tickers)):
            raise DataError(
                f"returns shape {self.returns.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers")

    @property
    def n(self):
        return self.returns.shape[0]

    @property
    def d(self):
        return self.returns.shape[1]

    def column(self, ticker):
        return self.returns[:, _ticker_index(self.tickers, ticker)]

    def select(self, tickers):
        idx = [_ticker_index(self.tickers, t) for t in tickers]
        return ReturnPanel(self.dates, tuple(tickers), self.returns[:, idx], self.kind, self.frequency)

    def take(self, rows):
        rows = np.asarray(rows)
        dates = tuple(self.dates[i] for i in rows)
        return ReturnPanel(dates, self.tickers, self.returns[rows], self.kind, self.frequency)


@dataclass(frozen=True)
class BenchmarkSeries:
    """Scalar benchmark sample.

    ``loadings`` is set when the series was built as a weighted combination
    of panel columns; it is ``None`` for an external index.
    """

    dates: tuple
    values: np.ndarray
    name: str = "benchmark"
    loadings: np.ndarray | None = field(default=None, compare=False)

    @property
    def source(self):
        return "external-index" if self.loadings is None else "weighted"

    @property
    def n(self):
        return len(self.values)

    def take(self, rows):
        rows = np.asarray(rows)
        return BenchmarkSeries(tuple(self.dates[i] for i in rows), self.values[rows],
                               self.name, self.loadings)


def _ticker_index(tickers, ticker):
    try:
        return tickers.index(ticker)
    except ValueError:
        raise ConfigurationError(f"unknown ticker {ticker!r}; available: {', '.join(tickers)}") from None


def read_table(path, positive=True):
    """Parse a date-indexed CSV into ``(dates, tickers, values)``.

    With ``positive=True`` every value must be strictly positive (prices).
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file", line=1) from None
        header = [h.strip() for h in header]
        if not header or header[0] != "date":
            raise ParseError(f"{path}: first header column must be 'date'", line=1)
        tickers = tuple(header[1:])
        if not tickers:
            raise ParseError(f"{path}: no value columns", line=1)
        if len(set(tickers)) != len(tickers):
            raise ParseError(f"{path}: duplicated ticker in header", line=1)

        dates, rows, seen = [], [], {}
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=line)
            try:
                day = dt.date.fromisoformat(row[0].strip())
            except ValueError:
                raise ParseError(f"invalid date {row[0]!r}", line=line) from None
            if day in seen:
                raise DataError(f"duplicate date {day} (lines {seen[day]} and {line})")
            seen[day] = line
            values = []
            for ticker, cell in zip(tickers, row[1:]):
                cell = cell.strip()
                if not cell:
                    raise DataError(f"missing value for {ticker} on {day} (line {line})")
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(f"invalid number {cell!r} for {ticker}", line=line) from None
                if not math.isfinite(value):
                    raise ParseError(f"non-finite value for {ticker}", line=line)
                if positive and value <= 0:
                    raise DataError(f"non-positive price {value} for {ticker} on {day} (line {line})")
                values.append(value)
            dates.append(day)
            rows.append(values)

    if not dates:
        raise ParseError(f"{path}: no data rows", line=2)
    order = sorted(range(len(dates)), key=dates.__getitem__)
    values = np.array(rows, dtype=float)[order].reshape(len(dates), len(tickers))
    return tuple(dates[i] for i in order), tickers, values


def load_prices(path) -> PriceTable:
    dates, tickers, prices = read_table(path, positive=True)
    return PriceTable(dates, tickers, prices)


def load_returns(path, kind="simple", frequency="daily") -> ReturnPanel:
    """Read a file that already holds returns (no positivity requirement)."""
    dates, tickers, values = read_table(path, positive=False)
    return ReturnPanel(dates, tickers, values, kind, frequency)


def write_table(path, dates, tickers, values):
    """Serialize a date x ticker matrix in the same CSV layout it is read from."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", *tickers])
        for day, row in zip(dates, values):
            writer.writerow([day.isoformat(), *(repr(float(v)) for v in row)])


def _period_key(day, frequency):
    if frequency == "weekly":
        iso = day.isocalendar()
        return iso[0], iso[1]
    return day.year, day.month


def _aggregate(dates, prices, frequency):
    if frequency == "daily":
        return dates, prices
    keep = []
    for i, day in enumerate(dates):
        if i + 1 == len(dates) or _period_key(dates[i + 1], frequency) != _period_key(day, frequency):
            keep.append(i)
    return tuple(dates[i] for i in keep), prices[keep]


def compute_returns(prices: PriceTable, kind="simple", frequency="daily") -> ReturnPanel:
    """Period-over-period returns.

    Weekly and monthly returns first keep the last trading date of each ISO
    week or calendar month, then difference those prices. Each return row is
    dated at the end of its period.
    """
    if kind not in KINDS:
        raise ConfigurationError(f"kind must be one of {KINDS}, got {kind!r}")
    if frequency not in FREQUENCIES:
        raise ConfigurationError(f"frequency must be one of {FREQUENCIES}, got {frequency!r}")
    dates, px = _aggregate(prices.dates, prices.prices, frequency)
    if len(dates) < 2:
        raise DataError(f"need at least 2 {frequency} observations, got {len(dates)}")
    ratio = px[1:] / px[:-1]
    returns = ratio - 1.0 if kind == "simple" else np.log(ratio)
    return ReturnPanel(tuple(dates[1:]), prices.tickers, returns, kind, frequency)


def align(panel: ReturnPanel, bench: BenchmarkSeries):
    """Restrict panel and benchmark to their common dates."""
    common = sorted(set(panel.dates) & set(bench.dates))
    if not common:
        raise DataError("panel and benchmark share no dates")
    if len(common) == panel.n and len(common) == bench.n:
        return panel, bench
    pos_p = {day: i for i, day in enumerate(panel.dates)}
    pos_b = {day: i for i, day in enumerate(bench.dates)}
    return (panel.take([pos_p[day] for day in common]),
            bench.take([pos_b[day] for day in common]))


def align_prices(*tables: PriceTable):
    """Restrict several price tables to the dates present in all of them.

    Run this before :func:`compute_returns` so that every resulting return
    spans the same pair of dates across tables.
    """
    common = set(tables[0].dates)
    for table in tables[1:]:
        common &= set(table.dates)
    if not common:
        raise DataError("price tables share no dates")
    common = sorted(common)
    out = []
    for table in tables:
        pos = {day: i for i, day in enumerate(table.dates)}
        rows = [pos[day] for day in common]
        out.append(PriceTable(tuple(common), table.tickers, table.prices[rows]))
    return tuple(out)


def weighted_benchmark(panel: ReturnPanel, a, name="benchmark") -> BenchmarkSeries:
    """Benchmark ``Y_k = sum_i a_i X_{i,k}`` with strictly positive loadings."""
    a = np.asarray(a, dtype=float)
    if a.shape != (panel.d,):
        raise DomainError(f"expected {panel.d} loadings, got shape {a.shape}")
    if not np.all(a > 0):
        raise DomainError("benchmark loadings must be strictly positive")
    return BenchmarkSeries(panel.dates, panel.returns @ a, name, a.copy())


def benchmark_from_table(panel: ReturnPanel, name=None) -> BenchmarkSeries:
    """Wrap a single-column panel (an external index) as a benchmark."""
    if panel.d != 1:
        raise DataError(f"benchmark file must have exactly one value column, got {panel.d}")
    return BenchmarkSeries(panel.dates, panel.returns[:, 0].copy(), name or panel.tickers[0])
