"""Closed-form mean-variance portfolios and the two plug-in estimators.

With budget ``e'w = 1`` and target ``mu'w >= c`` (short sales allowed) the
solution is the minimum-variance portfolio when it already meets the target,
and otherwise the blend

    w = (1 - alpha) w_mv + alpha w_mk,
    alpha = (c - mu'w_mv) / (mu'(w_mk - w_mv)),

of the minimum-variance portfolio ``S^-1 e / e'S^-1 e`` and the market
portfolio ``S^-1 mu / e'S^-1 mu``. ``alpha`` is not clipped to [0, 1].

"M" plugs in full-sample mean and covariance; "CM" plugs in the central
window's conditional mean and the reconstructed covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conditional_moments import (QuantileWindow, conditional_estimates, reconstruct_covariance,
                                  unconditional_estimates)
from .data_io import BenchmarkSeries, ReturnPanel
from .errors import (DataError, DegenerateTangencyError, InfeasibleTargetError,
                     SingularMatrixError)
from .numerics import spd_solve

__all__ = [
    "PortfolioProblem",
    "PortfolioWeights",
    "min_variance_weights",
    "market_weights",
    "optimal_weights",
    "classical_weights",
    "conditional_weights",
    "weights_to_json",
]


@dataclass(frozen=True)
class PortfolioProblem:
    mu: np.ndarray
    sigma: np.ndarray
    c: float


@dataclass(frozen=True)
class PortfolioWeights:
    w: np.ndarray
    kind: str  # "min-var", "market" or "blended"
    alpha: float = 0.0
    tickers: tuple = ()

    def __post_init__(self):
        if abs(self.w.sum() - 1.0) > 1e-10:
            raise ArithmeticError(f"weights sum to {self.w.sum()!r}, not 1")


def _normalize(v):
    # e'v can carry a last-bit error; one correction pass restores the budget
    w = v / v.sum()
    return w + (1.0 - w.sum()) / len(w)


def min_variance_weights(sigma) -> PortfolioWeights:
    sigma = np.asarray(sigma, dtype=float)
    x = spd_solve(sigma, np.ones(len(sigma)))
    return PortfolioWeights(_normalize(x), "min-var")


def market_weights(sigma, mu) -> PortfolioWeights:
    sigma = np.asarray(sigma, dtype=float)
    x = spd_solve(sigma, np.asarray(mu, dtype=float))
    total = x.sum()
    if abs(total) <= 1e-12 * np.abs(x).sum() or total == 0.0:
        raise DegenerateTangencyError("e' S^-1 mu is zero; market portfolio undefined")
    return PortfolioWeights(_normalize(x), "market")


def optimal_weights(problem: PortfolioProblem) -> PortfolioWeights:
    """Minimum-variance weights subject to the budget and ``mu'w >= c``."""
    mu = np.asarray(problem.mu, dtype=float)
    sigma = np.asarray(problem.sigma, dtype=float)
    if len(mu) == 1:
        return PortfolioWeights(np.ones(1), "min-var")
    w_mv = min_variance_weights(sigma).w
    ret_mv = mu @ w_mv
    if ret_mv >= problem.c:
        return PortfolioWeights(w_mv, "min-var")
    try:
        w_mk = market_weights(sigma, mu).w
    except DegenerateTangencyError as exc:
        raise InfeasibleTargetError(f"target {problem.c} unreachable: {exc}") from None
    denom = mu @ (w_mk - w_mv)
    if abs(denom) <= 1e-12:
        raise InfeasibleTargetError(
            f"target {problem.c} unreachable: market and minimum-variance portfolios "
            "have the same expected return")
    alpha = (problem.c - ret_mv) / denom
    w = (1.0 - alpha) * w_mv + alpha * w_mk
    return PortfolioWeights(w, "blended", float(alpha))


def _offending_assets(sigma, tickers):
    vals, vecs = np.linalg.eigh(sigma)
    v = np.abs(vecs[:, 0])
    names = tickers or tuple(f"asset{i}" for i in range(len(v)))
    return [names[i] for i in np.flatnonzero(v > 0.1 * v.max())]


def _solve_plugin(mu, sigma, c, tickers):
    try:
        res = optimal_weights(PortfolioProblem(mu, sigma, c))
    except SingularMatrixError as exc:
        assets = _offending_assets(sigma, tickers)
        raise SingularMatrixError(
            f"covariance estimate is singular ({exc}); near-collinear assets: {', '.join(assets)}",
            assets) from None
    return PortfolioWeights(res.w, res.kind, res.alpha, tuple(tickers))


def _check_rows(panel):
    if panel.n < panel.d + 2:
        raise DataError(f"estimation window has {panel.n} rows; need at least d + 2 = {panel.d + 2}")


def classical_weights(panel: ReturnPanel, c: float) -> PortfolioWeights:
    """Plug-in weights from the full-sample mean and covariance (divisor n)."""
    _check_rows(panel)
    est = unconditional_estimates(panel)
    return _solve_plugin(est.mean, est.cov, c, panel.tickers)


def conditional_weights(panel: ReturnPanel, bench: BenchmarkSeries, window: QuantileWindow,
                        c: float) -> PortfolioWeights:
    """Plug-in weights from the conditional mean and the reconstructed covariance."""
    _check_rows(panel)
    window.require_interior()
    est = conditional_estimates(panel, bench, window)
    rec = reconstruct_covariance(est)
    return _solve_plugin(est.mean, rec.sigma_bar, c, panel.tickers)


def weights_to_json(weights: PortfolioWeights, method, window: QuantileWindow | None, c):
    return {
        "tickers": list(weights.tickers),
        "weights": weights.w.tolist(),
        "method": method,
        "window": window.to_list() if window is not None else None,
        "c": c,
        "kind": weights.kind,
        "alpha": weights.alpha,
    }
