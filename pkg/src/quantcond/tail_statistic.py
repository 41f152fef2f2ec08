"""Tail-heaviness statistic S_n and Monte Carlo null tables.

    S_n = sqrt(n) * (var(Y) / (var_B(Y) / s(p, q)) - 1)

compares the full-sample variance with the variance a normal law would
imply given the central window. It is centred near zero for normal samples
and grows with tail weight. Its null spread has no closed form here; it is
estimated by simulation and stored in a :class:`NullTable`.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .conditional_moments import QuantileWindow, floor_rank
from .errors import ConfigurationError, DataError, DegenerateBenchmarkError, DomainError
from .numerics import StreamKey, sample_standard_normal, sample_student_t, s_factor

__all__ = [
    "TailStatResult",
    "NullTable",
    "s_n",
    "s_n_batch",
    "draw_null_sample",
    "mc_null_table",
    "compare_to_null",
    "save_null_table",
    "load_null_table",
    "DEFAULT_QUANTILE_LEVELS",
    "FORMAT_VERSION",
    "DEFAULT_TAIL_WINDOW",
]

FORMAT_VERSION = 1

DEFAULT_QUANTILE_LEVELS = (
    0.0, 0.001, 0.005, 0.01, 0.025, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45,
    0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 0.975, 0.99, 0.995, 0.999, 1.0,
)

_CHUNK = 256

# Floor ranks at the exact split quantile keep one row too few at common n,
# which biases the normal null upward; 0.198 lands on whole ranks instead.
DEFAULT_TAIL_WINDOW = QuantileWindow(0.198, 0.802)


@dataclass(frozen=True)
class TailStatResult:
    s_n: float
    n: int
    window: QuantileWindow
    sigma_hat2: float
    sigma_bar2: float

    def to_json(self):
        return {"s_n": self.s_n, "n": self.n, "window": self.window.to_list(),
                "sigma_hat2": self.sigma_hat2, "sigma_bar2": self.sigma_bar2}


def _check_window(window, n):
    window.require_interior()
    if n < 30:
        raise DataError(f"S_n needs at least 30 observations, got {n}")
    lo, hi = floor_rank(n, window.p), floor_rank(n, window.q)
    if hi - lo < 2:
        raise ConfigurationError(f"window ({window.p}, {window.q}) too narrow for n = {n}")
    return lo, hi


def s_n_batch(samples, window: QuantileWindow | None = None):
    """S_n for every row of a ``reps x n`` array.

    Returns ``(s_n, sigma_hat2, sigma_bar2)`` arrays of length ``reps``.
    """
    window = window or DEFAULT_TAIL_WINDOW
    x = np.atleast_2d(np.asarray(samples, dtype=float))
    n = x.shape[1]
    lo, hi = _check_window(window, n)
    s = s_factor(window.p, window.q)

    mean = x.mean(axis=1, keepdims=True)
    sigma_hat2 = ((x - mean) ** 2).mean(axis=1)
    # with univariate use the benchmark is the series itself, so the kept
    # rows are just the central order statistics
    central = np.sort(x, axis=1)[:, lo:hi]
    c_mean = central.mean(axis=1, keepdims=True)
    var_b = ((central - c_mean) ** 2).mean(axis=1)
    if np.any(var_b <= 0):
        raise DegenerateBenchmarkError("central-window variance is zero")
    sigma_bar2 = var_b / s
    return math.sqrt(n) * (sigma_hat2 / sigma_bar2 - 1.0), sigma_hat2, sigma_bar2


def s_n(values, window: QuantileWindow | None = None) -> TailStatResult:
    """Tail statistic of a univariate sample; default window is (0.198, 0.802)."""
    window = window or DEFAULT_TAIL_WINDOW
    x = np.asarray(values, dtype=float).ravel()
    stat, hat, bar = s_n_batch(x[None, :], window)
    return TailStatResult(float(stat[0]), len(x), window, float(hat[0]), float(bar[0]))


@dataclass(frozen=True)
class NullTable:
    distribution: str
    n: int
    reps: int
    window: QuantileWindow
    mean: float
    sd: float
    quantiles: dict
    seed: int
    df: float | None = None
    loc: float = 0.0
    scale: float = 1.0
    values: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.reps < 100:
            raise DomainError(f"null table needs at least 100 replications, got {self.reps}")

    @property
    def label(self):
        if self.distribution == "student-t":
            df = self.df
            return f"student-t({int(df) if float(df).is_integer() else df})"
        return self.distribution

    def to_json(self):
        return {
            "format_version": FORMAT_VERSION,
            "distribution": self.distribution,
            "df": self.df,
            "loc": self.loc,
            "scale": self.scale,
            "n": self.n,
            "reps": self.reps,
            "window": self.window.to_list(),
            "mean": self.mean,
            "sd": self.sd,
            "quantiles": {repr(float(k)): v for k, v in self.quantiles.items()},
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj):
        version = obj.get("format_version")
        if version != FORMAT_VERSION:
            raise ConfigurationError(f"unsupported null table format_version {version!r}")
        quantiles = {float(k): float(v) for k, v in obj["quantiles"].items()}
        return cls(
            distribution=obj["distribution"], n=int(obj["n"]), reps=int(obj["reps"]),
            window=QuantileWindow(*obj["window"]), mean=float(obj["mean"]), sd=float(obj["sd"]),
            quantiles=dict(sorted(quantiles.items())), seed=int(obj["seed"]),
            df=obj.get("df"), loc=float(obj.get("loc", 0.0)), scale=float(obj.get("scale", 1.0)),
        )


def draw_null_sample(distribution, n, key: StreamKey, df=None, loc=0.0, scale=1.0):
    """One replication's sample from the reference law ``loc + scale * Z``."""
    if distribution == "normal":
        z = sample_standard_normal(key, n)
    elif distribution == "student-t":
        if df is None:
            raise ConfigurationError("student-t null requires degrees of freedom")
        z = sample_student_t(key, df, n)
    else:
        raise ConfigurationError(f"unknown distribution {distribution!r}")
    return loc + scale * z


def _chunk_stats(args):
    distribution, n, seed, start, stop, window, df, loc, scale = args
    block = np.empty((stop - start, n))
    for row, rep in enumerate(range(start, stop)):
        block[row] = draw_null_sample(distribution, n, StreamKey(seed, rep), df, loc, scale)
    return s_n_batch(block, window)[0]


def mc_null_table(distribution="normal", n=2500, reps=10_000, window=None, seed=0, *,
                  df=None, loc=0.0, scale=1.0, workers=1,
                  quantile_levels=DEFAULT_QUANTILE_LEVELS) -> NullTable:
    """Simulate the null distribution of S_n.

    Replication ``r`` draws from stream ``StreamKey(seed, r)``; results are
    assembled by replication index, so the table is identical for any
    ``workers`` count.
    """
    window = window or DEFAULT_TAIL_WINDOW
    if reps < 100:
        raise DomainError(f"reps must be at least 100, got {reps}")
    _check_window(window, n)
    if distribution == "student-t" and (df is None or not df > 0):
        raise ConfigurationError("student-t null requires df > 0")
    if scale <= 0:
        raise DomainError("scale must be positive")

    tasks = [(distribution, n, seed, start, min(start + _CHUNK, reps), window, df, loc, scale)
             for start in range(0, reps, _CHUNK)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_stats, tasks))
    else:
        parts = [_chunk_stats(t) for t in tasks]
    values = np.concatenate(parts)

    levels = np.asarray(quantile_levels, dtype=float)
    qs = np.quantile(values, levels)
    return NullTable(
        distribution=distribution, n=n, reps=reps, window=window,
        mean=float(values.mean()), sd=float(values.std(ddof=1)),
        quantiles={float(k): float(v) for k, v in zip(levels, qs)},
        seed=seed, df=None if df is None else float(df), loc=float(loc), scale=float(scale),
        values=values,
    )


def compare_to_null(result: TailStatResult, table: NullTable):
    """z-score against the table moments and an interpolated empirical percentile."""
    if result.n != table.n:
        raise ConfigurationError(f"sample length {result.n} does not match null table n = {table.n}")
    if not (math.isclose(result.window.p, table.window.p, abs_tol=1e-12)
            and math.isclose(result.window.q, table.window.q, abs_tol=1e-12)):
        raise ConfigurationError(
            f"window {result.window.to_list()} does not match null table window {table.window.to_list()}")
    levels = np.array(sorted(table.quantiles))
    values = np.array([table.quantiles[k] for k in levels])
    percentile = float(np.interp(result.s_n, values, levels))
    return {"z_score": (result.s_n - table.mean) / table.sd, "percentile": percentile}


def save_null_table(table: NullTable, path):
    Path(path).write_text(json.dumps(table.to_json(), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def load_null_table(path) -> NullTable:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not a valid null table ({exc})") from None
    return NullTable.from_json(obj)
