import csv
import io
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bwmedge.binomial import (
    BinomialParams,
    bernoulli_sum,
    binom_pmf,
    bound_o_rhs,
    central_moment_polys,
    inverse_moment,
    inverse_moment_coefficients,
    kl_divergence_bernoulli,
    kl_tail_bound,
    moment_power_bound_check,
    pmf_vector,
)
from bwmedge.bwm import fit_loglog_slope
from bwmedge.errors import IllegalParameter, IndexOutOfRange

SIZES = [2**e for e in range(8, 15)]


def _exact_pmf(n, p, k):
    p = Fraction(p)
    return math.comb(n, k) * p**k * (1 - p) ** (n - k)


def test_params_validation():
    for n, p in [(0, 0.5), (3, 0.0), (3, 1.5), (2.5, 0.5)]:
        with pytest.raises(IllegalParameter):
            BinomialParams(n, p)


def test_pmf_examples():
    assert binom_pmf(BinomialParams(2, 0.5), 1) == pytest.approx(0.5, rel=1e-15)
    with pytest.raises(IndexOutOfRange):
        binom_pmf(BinomialParams(5, 0.5), 6)
    with pytest.raises(IndexOutOfRange):
        binom_pmf(BinomialParams(5, 0.5), -1)
    assert binom_pmf(BinomialParams(4, 1.0), 4) == 1.0
    assert binom_pmf(BinomialParams(4, 1.0), 3) == 0.0


@pytest.mark.parametrize("n,p,k", [(1000, 0.3, 300), (1000, 0.3, 250), (1000, 0.3, 1), (60, 0.9, 60),
                                   (5000, 0.01, 50), (777, 0.5, 400)])
def test_pmf_against_exact_rational(n, p, k):
    ref = float(_exact_pmf(n, p, k))
    assert binom_pmf(BinomialParams(n, p), k) == pytest.approx(ref, rel=1e-12)


def test_pmf_large_n_against_exact_rational():
    n, p = 10**6, 0.25
    k = np.array([249_000, 250_000, 251_500])
    got = binom_pmf(BinomialParams(n, p), k)
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    for kk, g in zip(k, got):
        kk = int(kk)
        ref = mpmath.binomial(n, kk) * mpmath.mpf(p) ** kk * mpmath.mpf(1 - p) ** (n - kk)
        assert g == pytest.approx(float(ref), rel=1e-12)


@given(st.integers(1, 3000), st.floats(0.001, 1.0))
def test_pmf_normalization(n, p):
    assert math.fsum(pmf_vector(BinomialParams(n, p)).tolist()) == pytest.approx(1.0, abs=1e-12)


def test_bernoulli_sum_examples():
    b = BinomialParams(2, 0.5)
    assert bernoulli_sum(b, -1) == pytest.approx(0.625, rel=1e-15)
    assert bound_o_rhs(b, -1) == pytest.approx(0.625, rel=1e-15)
    assert inverse_moment(b, 1) == pytest.approx(0.625, rel=1e-15)
    b = BinomialParams(37, 0.3)
    assert bernoulli_sum(b, 1) == pytest.approx(37 * 0.3, rel=1e-14)
    assert bernoulli_sum(b, 0) == pytest.approx(1 - 0.7**37, rel=1e-14)
    assert bound_o_rhs(b, 1) == pytest.approx(37 * 0.3, rel=1e-14)
    b = BinomialParams(50, 0.3)
    assert bound_o_rhs(b, 0.5) == pytest.approx(bernoulli_sum(b, 0.5), rel=1e-12)


@pytest.mark.parametrize("p", [0.1, 0.6, 1.0])
@pytest.mark.parametrize("alpha", [0.5, 1.0, 3.0])
def test_inverse_moment_single_trial(p, alpha):
    assert inverse_moment(BinomialParams(1, p), alpha) == pytest.approx(p, rel=1e-15)


def test_inverse_moment_leading_order():
    b = BinomialParams(10**4, 0.5)
    assert inverse_moment(b, 1) == pytest.approx(1 / (b.n * b.p), rel=1e-2)
    with pytest.raises(IllegalParameter):
        inverse_moment(b, 0)


@pytest.mark.parametrize("n", [1, 2, 5, 10, 50, 200])
@pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.9])
@pytest.mark.parametrize("alpha", [-2, -1, -0.5, 0, 0.5, 1, 2])
def test_bound_o_identity_grid(n, p, alpha):
    b = BinomialParams(n, p)
    lhs = bernoulli_sum(b, alpha)
    assert abs(lhs - bound_o_rhs(b, alpha)) <= 1e-12 * max(1.0, abs(lhs))


@given(st.integers(1, 400), st.floats(0.01, 1.0), st.floats(-3, 3))
def test_bound_o_identity_property(n, p, alpha):
    b = BinomialParams(n, p)
    lhs = bernoulli_sum(b, alpha)
    assert abs(lhs - bound_o_rhs(b, alpha)) <= 1e-12 * max(1.0, abs(lhs))


def test_central_moments_low_order():
    mus = central_moment_polys(4)
    assert mus[1] == {}
    assert mus[2] == {(1, 1): 1, (1, 2): -1}  # n p (1 - p)
    # mu_4 = 3 (npq)^2 + npq (1 - 6pq), checked at n=7, p=1/3
    n, p = 7, Fraction(1, 3)
    val = sum(c * n**r * p**s for (r, s), c in mus[4].items())
    q = 1 - p
    assert val == 3 * (n * p * q) ** 2 + n * p * q * (1 - 6 * p * q)


def test_central_moments_against_enumeration():
    mus = central_moment_polys(6)
    n, p = 9, Fraction(2, 7)
    for m in range(7):
        direct = sum(_exact_pmf(n, p, k) * (k - n * p) ** m for k in range(n + 1))
        poly = sum(c * n**r * p**s for (r, s), c in mus[m].items())
        assert poly == direct


def test_coefficient_examples():
    t = inverse_moment_coefficients(1.0, 4, 0.5)
    assert t.C[0] == 1.0
    assert t.C[1] == pytest.approx(0.5, abs=1e-15)
    exact = inverse_moment_coefficients(Fraction(1), 4, Fraction(1, 2))
    assert exact.C == (1.0, 0.5, 0.75, 1.625)
    for alpha in (0.5, 1.5, 2.0):
        for p in (0.1, 0.7):
            t = inverse_moment_coefficients(alpha, 3, p)
            assert t.C[0] == 1.0
            assert t.C[1] == pytest.approx(alpha * (alpha + 1) * (1 - p) / 2, rel=1e-13)
    with pytest.raises(IllegalParameter):
        inverse_moment_coefficients(1.0, 0, 0.5)
    with pytest.raises(IllegalParameter):
        inverse_moment_coefficients(1.0, 2, 1.0)


def test_first_coefficient_by_residual_fit():
    # f_1(n) np - 1 ~ C_1 / (np): regress on the exact sums
    p = 0.5
    u = np.array([1.0 / (n * p) for n in SIZES])
    r = np.array([inverse_moment(BinomialParams(n, p), 1.0) * n * p - 1.0 for n in SIZES])
    A = np.column_stack([u, u**2, u**3])
    c1 = np.linalg.lstsq(A, r, rcond=None)[0][0]
    assert c1 == pytest.approx(0.5, rel=1e-3)


def _residuals(alpha, K, p):
    t = inverse_moment_coefficients(alpha, K, p)
    return np.array([abs(inverse_moment(BinomialParams(n, p), alpha) - t.truncation(n)) for n in SIZES])


def test_residual_slope_example():
    res = _residuals(0.5, 3, 0.3)
    assert abs(fit_loglog_slope(SIZES, res) + 3.5) <= 0.2


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.0])
@pytest.mark.parametrize("p", [0.3, 0.5])
@pytest.mark.parametrize("K", [1, 2, 3])
def test_residual_order(alpha, p, K):
    scaled = _residuals(alpha, K, p) * (np.array(SIZES) * p) ** (alpha + K)
    assert scaled.max() / scaled.min() <= 2.0


def test_truncation_and_csv():
    t = inverse_moment_coefficients(1.0, 3, 0.5)
    assert t.truncation(100, 1) == pytest.approx(1 / 50)
    np.testing.assert_allclose(t.truncation(np.array([100, 200])), [t.truncation(100), t.truncation(200)])
    with pytest.raises(IllegalParameter):
        t.truncation(100, 5)
    rows = list(csv.DictReader(io.StringIO(t.to_csv())))
    assert [r["k"] for r in rows] == ["0", "1", "2"]
    assert float(rows[1]["C"]) == t.C[1]
    assert float(rows[0]["alpha"]) == 1.0


def test_kl_examples():
    assert kl_divergence_bernoulli(0.3, 0.3) == 0.0
    assert kl_divergence_bernoulli(0.3, 0.5) == pytest.approx(0.3 * math.log(0.6) + 0.7 * math.log(1.4), rel=1e-14)
    assert kl_divergence_bernoulli(0.3, 0.5) == pytest.approx(0.08228, abs=1e-5)
    tail, bound = kl_tail_bound(BinomialParams(10, 0.5), 0.3)
    assert tail == pytest.approx(176 / 1024, rel=1e-14)
    assert bound == pytest.approx(0.4392, abs=1e-4)
    assert tail <= bound
    tail, bound = kl_tail_bound(BinomialParams(100, 0.5), 0.1)
    assert tail <= bound < 1e-10
    with pytest.raises(IllegalParameter):
        kl_tail_bound(BinomialParams(10, 0.5), 0.5)
    with pytest.raises(IllegalParameter):
        kl_tail_bound(BinomialParams(10, 0.5), 0.7)


def test_kl_default_delta():
    tail, bound = kl_tail_bound(BinomialParams(40, 0.4))
    assert (tail, bound) == kl_tail_bound(BinomialParams(40, 0.4), 0.2)


@given(st.integers(1, 500), st.floats(0.02, 0.98), st.floats(0.01, 0.99))
def test_kl_tail_postcondition(n, p, frac):
    tail, bound = kl_tail_bound(BinomialParams(n, p), frac * p)
    assert tail <= bound * (1 + 1e-12)


def test_moment_bound_examples():
    r = moment_power_bound_check(BinomialParams(30, 0.4), 0.0)
    assert r.exact == pytest.approx(1.0, rel=1e-15) and r.holds
    r = moment_power_bound_check(BinomialParams(100, 0.3), -1.0, 0.15)
    assert r.majorant == pytest.approx(math.exp(-100 * kl_divergence_bernoulli(0.15, 0.3)) + 1 / 16)
    assert r.exact <= r.majorant
    with pytest.raises(IllegalParameter):
        moment_power_bound_check(BinomialParams(100, 0.6), 1.0)
    with pytest.raises(IllegalParameter):
        moment_power_bound_check(BinomialParams(100, 0.3), -1.0, 0.3)


@pytest.mark.parametrize("alpha", [-2, -1, 1, 2])
def test_moment_power_ratio_bounded(alpha):
    sizes = [2**e for e in range(6, 15)]
    ratios = [moment_power_bound_check(BinomialParams(n, 0.3), alpha).exact / n**alpha for n in sizes]
    assert max(ratios) / min(ratios) < 10
