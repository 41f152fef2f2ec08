"""Scalar normal-distribution kernels, the s(p, q) factor, the 20/60/20 split
quantile, small dense SPD linear algebra and keyed random streams.

Everything here is a pure function of its arguments. Random draws are fully
determined by a :class:`StreamKey`; no module-level generator exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import DomainError, NotPositiveDefiniteError, SingularMatrixError

__all__ = [
    "StreamKey",
    "normal_pdf",
    "normal_cdf",
    "normal_quantile",
    "s_factor",
    "split_root",
    "rule_split_quantile",
    "cholesky",
    "spd_solve",
    "generator",
    "sample_standard_normal",
    "sample_chisquare",
    "sample_student_t",
    "sample_mv_normal",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Condition numbers above this are treated as singular.
MAX_CONDITION = 1e12

# Integer degrees of freedom up to this bound draw chi-squared variates as a
# sum of squared normals; anything else goes through the gamma sampler.
_CHI2_SUM_MAX_DF = 64


def normal_pdf(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return out if out.ndim else float(out)


def normal_cdf(x):
    """Standard normal CDF, accurate to ~1e-16 absolute via ``ndtr``."""
    out = special.ndtr(np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


# Rational approximation coefficients (Acklam) for the inverse normal CDF.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(u):
    z = np.empty_like(u)
    lo = u < _P_LOW
    hi = u > 1.0 - _P_LOW
    mid = ~(lo | hi)

    if lo.any():
        t = np.sqrt(-2.0 * np.log(u[lo]))
        z[lo] = ((((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5])
                 / ((((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0))
    if hi.any():
        t = np.sqrt(-2.0 * np.log1p(-u[hi]))
        z[hi] = -((((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5])
                  / ((((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0))
    if mid.any():
        v = u[mid] - 0.5
        r = v * v
        z[mid] = (((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * v)
                  / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    return z


def normal_quantile(u):
    """Inverse standard normal CDF.

    A rational approximation (relative error ~1e-9) followed by one Halley
    correction against :func:`normal_cdf`. The correction evaluates the
    residual on the nearer tail so that ``u`` close to 1 keeps full accuracy.

    Raises
    ------
    DomainError
        If any ``u`` is outside the open interval (0, 1).
    """
    arr = np.asarray(u, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("normal_quantile requires 0 < u < 1")
    flat = np.atleast_1d(arr).ravel()
    z = _acklam(flat)

    upper = flat > 0.5
    # residual = Phi(z) - u, computed as (1 - u) - Phi(-z) on the upper half
    resid = np.where(upper, (1.0 - flat) - special.ndtr(-z), special.ndtr(z) - flat)
    step = resid / (_INV_SQRT_2PI * np.exp(-0.5 * z * z))
    z = z - step / (1.0 + 0.5 * z * step)

    z = z.reshape(arr.shape)
    return z if z.ndim else float(z)


def _check_pair(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if not np.all((p > 0.0) & (q < 1.0) & (p < q)):
        raise DomainError("s_factor requires 0 < p < q < 1")
    return p, q


def s_factor(p, q):
    """Variance of a standard normal variable restricted to its [p, q] quantile band.

    Closed form in terms of the boundary quantiles a = Phi^-1(p), b = Phi^-1(q)::

        (a phi(a) - b phi(b)) / (q - p) - ((phi(a) - phi(b)) / (q - p))**2 + 1
    """
    p, q = _check_pair(p, q)
    a = np.asarray(normal_quantile(p))
    b = np.asarray(normal_quantile(q))
    fa = np.asarray(normal_pdf(a))
    fb = np.asarray(normal_pdf(b))
    width = q - p
    out = (a * fa - b * fb) / width - ((fa - fb) / width) ** 2 + 1.0
    return out if out.ndim else float(out)


def _split_equation(x):
    cdf = special.ndtr(x)
    return -x * cdf - normal_pdf(x) * (1.0 - 2.0 * cdf)


def split_root() -> float:
    """Negative root of ``-x Phi(x) - phi(x) (1 - 2 Phi(x)) = 0`` (about -0.84879).

    The function changes sign on [-2, -0.5] and has no other root there.
    """
    return optimize.brentq(_split_equation, -2.0, -0.5, xtol=1e-15, rtol=1e-15, maxiter=200)


def rule_split_quantile() -> float:
    """Lower quantile of the 20/60/20 covariance-balancing split, about 0.19808."""
    return normal_cdf(split_root())


def _as_spd_input(m):
    m = np.array(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DomainError(f"expected a non-empty square matrix, got shape {m.shape}")
    scale = np.max(np.abs(m))
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix has non-finite entries")
    if np.max(np.abs(m - m.T)) > 1e-12 * max(scale, np.finfo(float).tiny):
        raise DomainError("matrix is not symmetric")
    return m


def cholesky(m):
    """Lower-triangular L with ``L @ L.T == m`` for a symmetric positive definite m.

    Column-oriented (left-looking) factorization; meant for the small
    matrices that appear here (d up to about 100).

    Raises
    ------
    NotPositiveDefiniteError
        When a pivot is not strictly positive.
    """
    a = _as_spd_input(m)
    d = a.shape[0]
    L = np.zeros_like(a)
    for j in range(d):
        pivot = a[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > 0.0:
            raise NotPositiveDefiniteError(
                f"matrix is not positive definite (pivot {j} = {pivot:.3g})")
        L[j, j] = math.sqrt(pivot)
        if j + 1 < d:
            L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def _forward(L, b):
    y = np.empty_like(b)
    for i in range(L.shape[0]):
        y[i] = (b[i] - L[i, :i] @ y[:i]) / L[i, i]
    return y


def _backward(L, y):
    # solves L.T x = y
    d = L.shape[0]
    x = np.empty_like(y)
    for i in range(d - 1, -1, -1):
        x[i] = (y[i] - L[i + 1:, i] @ x[i + 1:]) / L[i, i]
    return x


def spd_solve(m, v):
    """Solve ``m x = v`` for symmetric positive definite ``m``.

    ``v`` may be a vector or a matrix of right-hand sides (one per column).

    Raises
    ------
    SingularMatrixError
        If the 2-norm condition number of ``m`` exceeds 1e12.
    NotPositiveDefiniteError
        If ``m`` is well conditioned but indefinite.
    """
    a = _as_spd_input(m)
    b = np.array(v, dtype=float)
    if b.shape[0] != a.shape[0]:
        raise DomainError(f"dimension mismatch: matrix {a.shape}, rhs {b.shape}")
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularMatrixError(f"matrix is singular or ill-conditioned (cond = {cond:.3g})")
    L = cholesky(a)
    return _backward(L, _forward(L, b))


@dataclass(frozen=True)
class StreamKey:
    """Identifies one reproducible random stream.

    Distinct ``(seed, stream_index)`` pairs map to independent Philox
    streams through ``SeedSequence`` spawning; equal pairs replay exactly.
    """

    seed: int
    stream_index: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_index"):
            value = getattr(self, name)
            if not (isinstance(value, (int, np.integer)) and 0 <= value < 2**64):
                raise DomainError(f"{name} must be an unsigned 64-bit integer, got {value!r}")


def generator(key: StreamKey) -> np.random.Generator:
    """Counter-based generator for ``key``."""
    seq = np.random.SeedSequence(int(key.seed), spawn_key=(int(key.stream_index),))
    return np.random.Generator(np.random.Philox(seq))


def _check_count(n):
    if int(n) != n or n < 1:
        raise DomainError(f"sample size must be a positive integer, got {n!r}")
    return int(n)


def sample_standard_normal(key: StreamKey, n: int) -> np.ndarray:
    return generator(key).standard_normal(_check_count(n))


def sample_chisquare(rng: np.random.Generator, df: float, n: int) -> np.ndarray:
    """Chi-squared draws: a sum of squared normals for small integer df, gamma otherwise."""
    if not df > 0:
        raise DomainError(f"degrees of freedom must be positive, got {df!r}")
    if float(df).is_integer() and df <= _CHI2_SUM_MAX_DF:
        z = rng.standard_normal((n, int(df)))
        return np.einsum("ij,ij->i", z, z)
    return 2.0 * rng.standard_gamma(0.5 * df, n)


def sample_student_t(key: StreamKey, df: float, n: int) -> np.ndarray:
    """Student-t draws built as ``Z / sqrt(V / df)`` with V chi-squared(df)."""
    n = _check_count(n)
    if not df > 0:
        raise DomainError(f"degrees of freedom must be positive, got {df!r}")
    rng = generator(key)
    z = rng.standard_normal(n)
    v = sample_chisquare(rng, df, n)
    return z / np.sqrt(v / df)


def sample_mv_normal(key: StreamKey, mean, cov, n: int) -> np.ndarray:
    """``n x d`` multivariate normal sample, ``mean + Z @ L.T`` with L = cholesky(cov)."""
    n = _check_count(n)
    mean = np.asarray(mean, dtype=float)
    L = cholesky(cov)
    if mean.shape != (L.shape[0],):
        raise DomainError(f"mean has shape {mean.shape}, covariance is {L.shape}")
    z = generator(key).standard_normal((n, L.shape[0]))
    return mean + z @ L.T
