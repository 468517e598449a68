import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bwmedge.special import bd0, gammainc_lower, stirlerr


def test_gammainc_matches_reference_table(gamma_table):
    for row in gamma_table:
        got = gammainc_lower(row["a"], row["x"])
        assert abs(got - float(row["p"])) <= 1e-13, row


def test_gammainc_edges():
    assert gammainc_lower(3.0, 0.0) == 0.0
    assert gammainc_lower(3.0, -1.0) == 0.0
    assert gammainc_lower(3.0, np.inf) == 1.0
    # exponential CDF
    x = np.linspace(0.01, 30, 50)
    np.testing.assert_allclose(gammainc_lower(1.0, x), -np.expm1(-x), rtol=0, atol=1e-15)
    with pytest.raises(ValueError):
        gammainc_lower(0.0, 1.0)


@given(st.floats(0.1, 500.0), st.floats(0.0, 2.0))
def test_gammainc_monotone_in_x(a, frac):
    x = np.sort(np.array([frac * a, frac * a + 0.5, frac * a + 2.0]))
    v = gammainc_lower(a, x)
    assert np.all(np.diff(v) >= -1e-15)
    assert np.all((v >= 0) & (v <= 1))


@pytest.mark.parametrize("n", [0.5, 1.0, 3.0, 15.0, 15.5, 40.0, 1e4])
def test_stirlerr_against_mpmath(n):
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    m = mpmath.mpf(n)
    ref = mpmath.loggamma(m + 1) - (m + 0.5) * mpmath.log(m) + m - mpmath.log(2 * mpmath.pi) / 2
    assert stirlerr(n) == pytest.approx(float(ref), rel=1e-13)


@given(st.floats(0.5, 1e5), st.floats(0.5, 1e5))
def test_bd0_matches_definition(x, m):
    direct = x * math.log(x / m) + m - x
    assert bd0(x, m) >= 0.0
    assert bd0(x, m) == pytest.approx(direct, rel=1e-8, abs=1e-9 * max(x, m))
