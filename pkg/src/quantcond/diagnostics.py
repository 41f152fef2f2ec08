"""Normal Q-Q plot data with pointwise confidence bands and split markers.

Nothing is rendered; the output is a tidy CSV (``kind``, ``theoretical``,
``value``, ``lower``, ``upper``) plus a JSON sidecar, ready for any plotting
tool.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .conditional_moments import QuantileWindow
from .errors import DataError, DomainError
from .numerics import normal_pdf, normal_quantile

__all__ = [
    "QqDataset",
    "plotting_positions",
    "qq_points",
    "qq_band",
    "split_markers",
    "qq_dataset",
    "write_qq",
    "BAND_METHOD",
]

BAND_METHOD = "pointwise order-statistic normal approximation"


def plotting_positions(n):
    """``(k - 0.5) / n`` for k = 1..n."""
    return (np.arange(1, n + 1) - 0.5) / n


def qq_points(values, standardize=True):
    """Theoretical normal quantiles paired with the sorted sample.

    With ``standardize`` the sample is centred by its mean and scaled by its
    divisor-n standard deviation.
    """
    x = np.sort(np.asarray(values, dtype=float).ravel())
    n = len(x)
    if standardize:
        sd = x.std()
        if not sd > 0:
            raise DataError("cannot standardize a sample with zero standard deviation")
        x = (x - x.mean()) / sd
    return normal_quantile(plotting_positions(n)), x


def qq_band(n, level=0.95):
    """Pointwise band for standardized normal order statistics.

    Returns ``(theoretical, half_width)`` where the half width at plotting
    position u is ``z * sqrt(u (1 - u) / n) / phi(Phi^-1(u))``.
    """
    if not 0.5 < level < 1.0:
        raise DomainError(f"band level must lie in (0.5, 1), got {level}")
    if n < 1:
        raise DomainError("band needs n >= 1")
    u = plotting_positions(n)
    theo = normal_quantile(u)
    z = normal_quantile(0.5 * (1.0 + level))
    return theo, z * np.sqrt(u * (1.0 - u) / n) / normal_pdf(theo)


def split_markers(window: QuantileWindow):
    """Positions of the window edges on the theoretical axis."""
    window.require_interior()
    return normal_quantile(window.p), normal_quantile(window.q)


@dataclass(frozen=True)
class QqDataset:
    theoretical: np.ndarray
    sample: np.ndarray
    band_lower: np.ndarray
    band_upper: np.ndarray
    markers: tuple
    n: int
    standardized: bool
    level: float
    window: QuantileWindow

    @property
    def points(self):
        return list(zip(self.theoretical.tolist(), self.sample.tolist()))

    @property
    def band(self):
        return list(zip(self.theoretical.tolist(), self.band_lower.tolist(), self.band_upper.tolist()))

    def metadata(self):
        return {
            "n": self.n,
            "level": self.level,
            "window": self.window.to_list(),
            "standardized": self.standardized,
            "markers": list(self.markers),
            "plotting_positions": "(k - 0.5) / n",
            "band_method": BAND_METHOD,
        }


def qq_dataset(values, window: QuantileWindow, level=0.95, standardize=True, min_n=20) -> QqDataset:
    x = np.asarray(values, dtype=float).ravel()
    if len(x) < min_n:
        raise DataError(f"Q-Q data needs at least {min_n} observations, got {len(x)}")
    theo, sample = qq_points(x, standardize)
    _, half = qq_band(len(x), level)
    markers = tuple(float(m) for m in split_markers(window))
    return QqDataset(theo, sample, theo - half, theo + half, markers, len(x),
                     standardize, level, window)


def write_qq(ds: QqDataset, csv_path, meta_path=None, extra_meta=None):
    """Write the data CSV (n point rows, n band rows, 2 marker rows) and the sidecar."""
    csv_path = Path(csv_path)
    meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".json")
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "theoretical", "value", "lower", "upper"])
        for t, v in zip(ds.theoretical, ds.sample):
            w.writerow(["point", repr(float(t)), repr(float(v)), "", ""])
        for t, lo, hi in zip(ds.theoretical, ds.band_lower, ds.band_upper):
            w.writerow(["band", repr(float(t)), "", repr(float(lo)), repr(float(hi))])
        for m in ds.markers:
            w.writerow(["marker", repr(float(m)), "", "", ""])
    meta = ds.metadata()
    if extra_meta:
        meta.update(extra_meta)
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return csv_path, meta_path
