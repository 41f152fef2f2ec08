import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quantcond.errors import DomainError, NotPositiveDefiniteError, SingularMatrixError
from quantcond.numerics import (StreamKey, cholesky, normal_cdf, normal_pdf, normal_quantile,
                                rule_split_quantile, s_factor, sample_mv_normal,
                                sample_standard_normal, sample_student_t, spd_solve, split_root)

from oracles import Phi, bisect, quantile_bisect, random_spd, truncated_variance_quad


def test_normal_pdf_values():
    assert normal_pdf(0.0) == pytest.approx(0.3989422804014327, rel=1e-14)
    assert normal_pdf(1.0) == normal_pdf(-1.0)
    # direct evaluation of exp(-x^2/2)/sqrt(2 pi) at x = 0.841621
    assert normal_pdf(0.841621) == pytest.approx(0.27996, abs=5e-6)


def test_normal_pdf_matches_closed_form_wide_range():
    x = np.linspace(-8, 8, 1601)
    ref = np.array([math.exp(-v * v / 2) / math.sqrt(2 * math.pi) for v in x])
    np.testing.assert_allclose(normal_pdf(x), ref, rtol=1e-14)


def test_normal_cdf_values():
    assert normal_cdf(0.0) == 0.5
    x = np.linspace(-8, 8, 321)
    np.testing.assert_allclose(normal_cdf(x) + normal_cdf(-x), 1.0, atol=1e-15)
    np.testing.assert_allclose(normal_cdf(x), [Phi(v) for v in x], atol=1e-12)
    assert np.all(np.diff(normal_cdf(x)) >= 0)
    # the commonly quoted -0.84879 is Phi^-1(0.198) rather than the split root
    assert normal_cdf(-0.84879) == pytest.approx(0.19808, abs=1e-4)


def test_normal_quantile_values():
    assert normal_quantile(0.5) == 0.0
    assert normal_quantile(0.8) == pytest.approx(quantile_bisect(0.8), abs=1e-12)
    assert normal_quantile(0.8) == pytest.approx(0.841621, abs=1e-6)
    assert normal_quantile(0.19808) == pytest.approx(-0.84879, abs=5e-4)
    assert normal_quantile(0.19808) == pytest.approx(quantile_bisect(0.19808), abs=1e-12)


@pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5])
def test_normal_quantile_domain(u):
    with pytest.raises(DomainError):
        normal_quantile(u)


def test_normal_quantile_round_trip():
    u = np.concatenate([np.geomspace(1e-8, 0.5, 3000), 1 - np.geomspace(1e-8, 0.5, 3000)])
    assert np.max(np.abs(normal_cdf(normal_quantile(u)) - u)) <= 1e-9
    x = np.linspace(-5.6, 5.6, 20001)
    assert np.max(np.abs(normal_quantile(normal_cdf(x)) - x)) <= 1e-9


@given(st.floats(min_value=1e-8, max_value=1 - 1e-8))
def test_normal_quantile_round_trip_property(u):
    assert abs(normal_cdf(normal_quantile(u)) - u) <= 1e-9


def test_s_factor_examples():
    assert s_factor(0.2, 0.8) == pytest.approx(0.21460, abs=1e-5)
    assert s_factor(0.2, 0.8) == pytest.approx(truncated_variance_quad(0.2, 0.8), abs=1e-10)
    assert s_factor(0.1, 0.5) == pytest.approx(truncated_variance_quad(0.1, 0.5), abs=1e-8)
    assert s_factor(1e-12, 1 - 1e-12) == pytest.approx(1.0, abs=1e-9)


def test_s_factor_grid_against_quadrature():
    levels = [0.01, 0.05, 0.1, 0.2, 0.3, 0.45, 0.5, 0.6, 0.75, 0.9, 0.99]
    pairs = [(p, q) for i, p in enumerate(levels) for q in levels[i + 1:]][:50]
    assert len(pairs) == 50
    for p, q in pairs:
        s = s_factor(p, q)
        assert 0.0 < s < 1.0
        assert abs(s - truncated_variance_quad(p, q)) <= 1e-8, (p, q)


@pytest.mark.parametrize("p,q", [(0.5, 0.5), (0.6, 0.4), (0.0, 0.5), (0.5, 1.0)])
def test_s_factor_domain(p, q):
    with pytest.raises(DomainError):
        s_factor(p, q)


def test_split_quantile():
    f = lambda x: -x * Phi(x) - math.exp(-x * x / 2) / math.sqrt(2 * math.pi) * (1 - 2 * Phi(x))
    x_oracle = bisect(f, -2.0, -0.5, tol=1e-15)
    x = split_root()
    assert x == pytest.approx(x_oracle, abs=1e-12)
    assert abs(f(x)) <= 1e-12
    assert x == pytest.approx(-0.84879, abs=5e-4)
    assert rule_split_quantile() == pytest.approx(0.19808, abs=5e-5)


def test_cholesky_examples():
    np.testing.assert_array_equal(cholesky(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(cholesky([[4.0, 2.0], [2.0, 3.0]]), [[2.0, 0.0], [1.0, math.sqrt(2)]],
                               rtol=1e-15)
    np.testing.assert_allclose(cholesky(np.diag([9.0, 2.0])), np.diag([3.0, math.sqrt(2)]))


def test_cholesky_rejects_indefinite_and_asymmetric():
    with pytest.raises(NotPositiveDefiniteError):
        cholesky([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(DomainError):
        cholesky([[1.0, 0.5], [0.4, 1.0]])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_cholesky_and_solve_round_trip(d, seed):
    rng = np.random.default_rng(seed)
    m = random_spd(rng, d)
    L = cholesky(m)
    assert np.allclose(np.triu(L, 1), 0.0)
    assert np.linalg.norm(L @ L.T - m) <= 1e-10 * np.linalg.norm(m)
    v = rng.standard_normal(d)
    x = spd_solve(m, v)
    assert np.linalg.norm(m @ x - v) <= 1e-10 * max(np.linalg.norm(v), 1.0) * np.linalg.cond(m) ** 0.5


def test_spd_solve_examples():
    v = np.array([0.3, -1.2, 4.0])
    np.testing.assert_allclose(spd_solve(np.eye(3), v), v)
    np.testing.assert_allclose(spd_solve([[4.0, 2.0], [2.0, 3.0]], [1.0, 1.0]), [1 / 8, 1 / 4], rtol=1e-14)
    np.testing.assert_allclose(spd_solve(np.diag([2.0, 4.0]), [2.0, 4.0]), [1.0, 1.0])


def test_spd_solve_multiple_rhs():
    m = np.array([[4.0, 2.0], [2.0, 3.0]])
    b = np.array([[1.0, 0.0], [1.0, 1.0]])
    np.testing.assert_allclose(m @ spd_solve(m, b), b, atol=1e-14)


def test_spd_solve_singular():
    with pytest.raises(SingularMatrixError):
        spd_solve([[1.0, 1.0], [1.0, 1.0]], [1.0, 2.0])
    with pytest.raises(SingularMatrixError):
        spd_solve(np.diag([1.0, 1e-14]), [1.0, 1.0])


def test_stream_determinism_and_independence():
    a = sample_standard_normal(StreamKey(7, 3), 1000)
    b = sample_standard_normal(StreamKey(7, 3), 1000)
    c = sample_standard_normal(StreamKey(7, 4), 1000)
    d = sample_standard_normal(StreamKey(8, 3), 1000)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)
    assert abs(np.corrcoef(a, c)[0, 1]) < 0.1
    np.testing.assert_array_equal(sample_student_t(StreamKey(1, 1), 3, 50),
                                  sample_student_t(StreamKey(1, 1), 3, 50))


def test_stream_key_validation():
    with pytest.raises(DomainError):
        StreamKey(-1, 0)
    with pytest.raises(DomainError):
        StreamKey(0, 2**64)


def test_mv_normal_law_of_large_numbers():
    x = sample_mv_normal(StreamKey(11), np.zeros(2), np.eye(2), 10**6)
    cov = np.cov(x, rowvar=False)
    assert np.max(np.abs(cov - np.eye(2))) < 0.01


def test_mv_normal_mean_and_cov():
    sigma = np.array([[2.0, 0.6], [0.6, 1.0]])
    x = sample_mv_normal(StreamKey(12), [1.0, -1.0], sigma, 200_000)
    np.testing.assert_allclose(x.mean(axis=0), [1.0, -1.0], atol=0.02)
    np.testing.assert_allclose(np.cov(x, rowvar=False), sigma, atol=0.03)


def test_mv_normal_rejects_non_spd():
    with pytest.raises(NotPositiveDefiniteError):
        sample_mv_normal(StreamKey(0), [0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]], 10)


def test_student_t_limits():
    x = sample_student_t(StreamKey(13), 1e6, 10**5)
    assert abs(x.var() - 1.0) < 0.02
    # integer df uses the chi-squared sum; variance df / (df - 2)
    y = sample_student_t(StreamKey(14), 10, 400_000)
    assert y.var() == pytest.approx(10 / 8, rel=0.02)
    # non-integer df goes through the gamma sampler
    z = sample_student_t(StreamKey(15), 7.5, 400_000)
    assert z.var() == pytest.approx(7.5 / 5.5, rel=0.03)
