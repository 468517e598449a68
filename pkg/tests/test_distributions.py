import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from bwmedge.distributions import (
    CumulantSet,
    exact_standardized_mean_cdf,
    make_distribution,
    parse_distribution,
    standardized_moments,
)
from bwmedge.edgeworth import normal_cdf
from bwmedge.errors import (
    DegenerateDistribution,
    IllegalParameter,
    NoClosedFormOracle,
    UnsupportedFamily,
    UnsupportedOrder,
)

FAMILIES = [
    ("exponential", {"rate": 1.0}),
    ("exponential", {"rate": 2.5}),
    ("uniform", {"lo": 0.0, "hi": 1.0}),
    ("uniform", {"lo": -2.0, "hi": 5.0}),
    ("gamma", {"shape": 4.0, "scale": 1.0}),
    ("gamma", {"shape": 0.7, "scale": 3.0}),
    ("lognormal", {"log_mean": 0.0, "log_sd": 0.5}),
]


def _density(d):
    pr = d.params
    if d.family == "exponential":
        lam = pr["rate"]
        return lambda y: lam * math.exp(-lam * y), (0.0, math.inf)
    if d.family == "uniform":
        w = pr["hi"] - pr["lo"]
        return lambda y: 1.0 / w, (pr["lo"], pr["hi"])
    if d.family == "gamma":
        k, th = pr["shape"], pr["scale"]
        return (lambda y: math.exp((k - 1) * math.log(y) - y / th - math.lgamma(k) - k * math.log(th))), (0.0, math.inf)
    m, s = pr["log_mean"], pr["log_sd"]
    return (lambda y: math.exp(-((math.log(y) - m) ** 2) / (2 * s * s)) / (y * s * math.sqrt(2 * math.pi))), (0.0, math.inf)


def _quad_moments(d):
    f, (lo, hi) = _density(d)
    opts = dict(epsabs=1e-14, epsrel=1e-12, limit=200)
    mean = integrate.quad(lambda y: y * f(y), lo, hi, **opts)[0]
    cm = [integrate.quad(lambda y, r=r: (y - mean) ** r * f(y), lo, hi, **opts)[0] for r in (2, 3, 4)]
    return mean, cm[0], cm[1] / cm[0] ** 1.5, cm[2] / cm[0] ** 2 - 3.0


def test_make_distribution_examples():
    d = make_distribution("exponential", rate=1)
    assert (d.mean, d.variance) == (1.0, 1.0)
    u = make_distribution("uniform", lo=0, hi=1)
    assert u.mean == 0.5 and u.variance == pytest.approx(1 / 12, rel=1e-15)
    with pytest.raises(IllegalParameter):
        make_distribution("gamma", shape=0.0, scale=1.0)
    with pytest.raises(IllegalParameter):
        make_distribution("gamma", shape=-1.0, scale=1.0)
    with pytest.raises(IllegalParameter):
        make_distribution("uniform", lo=1.0, hi=1.0)
    with pytest.raises(IllegalParameter):
        make_distribution("exponential", rate=1.0, scale=2.0)
    with pytest.raises(IllegalParameter):
        make_distribution("cauchy", loc=0.0)


def test_exponential_mean_variance_by_quadrature():
    mean, var, _, _ = _quad_moments(make_distribution("exponential", rate=1.0))
    assert mean == pytest.approx(1.0, rel=1e-10)
    assert var == pytest.approx(1.0, rel=1e-10)


def test_finite_validation_and_degeneracy():
    with pytest.raises(IllegalParameter):
        make_distribution("finite", atoms=[0, 1], probs=[0.5, 0.6])
    with pytest.raises(IllegalParameter):
        make_distribution("finite", atoms=[1, 1], probs=[0.5, 0.5])
    point = make_distribution("finite", atoms=[2.0], probs=[1.0])
    with pytest.raises(DegenerateDistribution):
        point.require_nondegenerate()
    b = make_distribution("finite", atoms=[0, 1], probs=[0.7, 0.3])
    assert b.mean == pytest.approx(0.3) and b.variance == pytest.approx(0.21)
    with pytest.raises(UnsupportedFamily):
        standardized_moments(b, 3)


def test_standardized_moment_examples():
    c = standardized_moments(make_distribution("exponential", rate=1.0), 4)
    assert c[3] == pytest.approx(2.0, abs=1e-10) and c[4] == pytest.approx(6.0, abs=1e-10)
    assert standardized_moments(make_distribution("uniform", lo=0, hi=1), 3)[3] == 0.0
    assert standardized_moments(make_distribution("gamma", shape=4, scale=1), 3)[3] == pytest.approx(1.0)
    with pytest.raises(UnsupportedOrder):
        standardized_moments(make_distribution("exponential", rate=1.0), 5)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("family,params", FAMILIES)
def test_standardized_moments_match_quadrature(family, params):
    d = make_distribution(family, **params)
    mean, var, l3, l4 = _quad_moments(d)
    c = standardized_moments(d, 4)
    assert d.mean == pytest.approx(mean, rel=1e-8)
    assert d.variance == pytest.approx(var, rel=1e-8)
    assert c[3] == pytest.approx(l3, rel=1e-8, abs=1e-10)
    assert c[4] == pytest.approx(l4, rel=1e-8, abs=1e-10)


@pytest.mark.parametrize("family,params", FAMILIES)
def test_sampler_moments(family, params):
    d = make_distribution(family, **params)
    n = 10**7
    y = d.sample(np.random.default_rng(20261019), n)
    c = standardized_moments(d, 4)
    assert abs(y.mean() - d.mean) <= 5 * d.sd / math.sqrt(n)
    # var of the sample variance ~ sigma^4 (kurtosis + 2) / n
    se_var = d.variance * math.sqrt((c[4] + 2.0) / n)
    assert abs(y.var() - d.variance) <= 5 * se_var


def test_cumulant_set_invariants():
    with pytest.raises(ValueError):
        CumulantSet(4, {3: 0.0})
    with pytest.raises(ValueError):
        CumulantSet(4, {3: 2.0, 4: 1.0})
    with pytest.raises(UnsupportedOrder):
        CumulantSet(2, {})
    g = CumulantSet.gaussian(4)
    assert g[3] == 0.0 and g[4] == 0.0


def test_text_round_trip():
    for family, params in FAMILIES:
        d = make_distribution(family, **params)
        assert parse_distribution(d.to_text()) == d
    f = parse_distribution("family=finite atoms=0,1 probs=0.25,0.75")
    assert f.params["atoms"] == (0.0, 1.0)
    assert parse_distribution(f.to_text()) == f
    with pytest.raises(IllegalParameter):
        parse_distribution("rate=1.0")
    with pytest.raises(IllegalParameter):
        parse_distribution("family=exponential rate")
    with pytest.raises(IllegalParameter):
        parse_distribution("family=exponential rate=abc")


def test_exact_cdf_examples(expo):
    assert exact_standardized_mean_cdf(expo, 1, 0.0) == pytest.approx(1 - math.exp(-1), abs=1e-15)
    assert exact_standardized_mean_cdf(expo, 7, np.inf) == 1.0
    assert abs(exact_standardized_mean_cdf(expo, 10**4, 1.0) - normal_cdf(1.0)) < 5e-3
    with pytest.raises(NoClosedFormOracle):
        exact_standardized_mean_cdf(make_distribution("uniform", lo=0, hi=1), 3, 0.0)


GAMMA_LIKE = [
    ("exponential", {"rate": 1.0}),
    ("exponential", {"rate": 3.0}),
    ("gamma", {"shape": 2.5, "scale": 0.4}),
]
# 1 - F_k(10) = Q(ks, ks + 10 sqrt(ks)) exceeds 1e-9 when ks is small: the
# right tail of a sum of few gamma variables is too heavy (k=1 exponential
# leaves e^{-11}).  Those cells fail by mathematics, not by numerics.
HEAVY_TAIL = {("exponential", 1), ("exponential", 2), ("exponential", 10), ("gamma", 1), ("gamma", 2)}


def _tail_cases():
    for family, params in GAMMA_LIKE:
        for k in (1, 2, 10, 20, 333, 5000):
            marks = ()
            if (family, k) in HEAVY_TAIL:
                marks = pytest.mark.xfail(strict=True, reason="upper tail at x=10 exceeds 1e-9 for small shape k*s")
            yield pytest.param(make_distribution(family, **params), k, marks=marks, id=f"{family}-{params}-k{k}")


@pytest.mark.parametrize("d,k", list(_tail_cases()))
def test_exact_cdf_limits_and_monotone(d, k):
    x = np.linspace(-10, 10, 2001)
    v = exact_standardized_mean_cdf(d, k, x)
    assert np.all(np.diff(v) >= 0)
    assert v[0] <= 1e-9 and v[-1] >= 1 - 1e-9


@pytest.mark.parametrize("k", [1, 2, 10])
def test_exact_cdf_small_k_tail_closed_form(expo, k):
    # Gamma(k, 1) upper tail at k + 10 sqrt(k) is e^{-t} sum_{i<k} t^i / i!
    t = k + 10 * math.sqrt(k)
    tail = math.exp(-t) * math.fsum(t**i / math.factorial(i) for i in range(k))
    assert 1 - exact_standardized_mean_cdf(expo, k, 10.0) == pytest.approx(tail, rel=1e-6)
    assert tail > 1e-9


def test_gamma_oracle_matches_scaled_exponential():
    # Gamma(shape, scale) oracle is invariant to the scale parameter
    a = make_distribution("gamma", shape=3.0, scale=1.0)
    b = make_distribution("gamma", shape=3.0, scale=7.0)
    x = np.linspace(-4, 4, 33)
    np.testing.assert_allclose(exact_standardized_mean_cdf(a, 5, x), exact_standardized_mean_cdf(b, 5, x))


@given(st.integers(1, 2000), st.floats(-6, 6), st.floats(0.0, 1.0))
def test_exact_cdf_monotone_property(k, x, dx):
    d = make_distribution("exponential", rate=1.0)
    assert exact_standardized_mean_cdf(d, k, x) <= exact_standardized_mean_cdf(d, k, x + dx) + 1e-15
