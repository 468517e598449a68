"""Standard normal functions and the Edgeworth expansion of a standardized sample mean.

For ``k`` i.i.d. copies of ``Y`` with skewness ``l3`` and excess kurtosis ``l4``,

    P(sqrt(k) (mean - mu) / sigma <= x)
        ~ Phi(x) + k^{-1/2} p1(x) phi(x) + k^{-1} p2(x) phi(x)

with

    p1(x) = -(l3 / 6) (x^2 - 1)
    p2(x) = -x [ (l4 / 24) (x^2 - 3) + (l3^2 / 72) (x^4 - 10 x^2 + 15) ]

(Hall, *The Bootstrap and Edgeworth Expansion*, ch. 2.2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import ndtr

from .errors import UnsupportedOrder

__all__ = [
    "ExpansionSet",
    "edgeworth_polynomials",
    "normal_cdf",
    "normal_pdf",
    "sample_mean_edgeworth_cdf",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
SUPPORTED_ORDERS = (3, 4)


def normal_cdf(x):
    """Standard normal CDF (Cephes ``ndtr``; absolute error below 1e-16)."""
    out = ndtr(np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ExpansionSet:
    """Correction polynomials ``terms = [(exponent, poly), ...]`` for a target order ``q``.

    The j-th entry multiplies ``size**exponent * phi(x)`` with ``exponent = -j/2``.
    """

    q: int
    terms: tuple[tuple[float, Polynomial], ...]

    def __post_init__(self):
        exps = [e for e, _ in self.terms]
        if exps != [-j / 2 for j in range(1, self.q - 1)]:
            raise ValueError(f"exponents {exps} do not match order q={self.q}")

    def __len__(self):
        return len(self.terms)

    def poly(self, j: int) -> Polynomial:
        """The j-th polynomial (1-based)."""
        return self.terms[j - 1][1]

    def correction(self, size, x):
        """``sum_j size^{-j/2} poly_j(x) phi(x)`` evaluated on the broadcast of ``size`` and ``x``."""
        x = np.asarray(x, dtype=float)
        size = np.asarray(size, dtype=float)
        total = np.zeros(np.broadcast(size, x).shape)
        for exponent, poly in self.terms:
            total = total + size**exponent * poly(x)
        return total * normal_pdf(x)

    def cdf(self, size, x):
        out = normal_cdf(x) + self.correction(size, x)
        return out if np.ndim(out) else float(out)

    def describe(self) -> list[dict]:
        """Coefficient lists, lowest degree first, for printing."""
        return [
            {"j": j, "exponent": e, "coeffs": [float(c) for c in _trimmed(p).coef]}
            for j, (e, p) in enumerate(self.terms, start=1)
        ]


def _trimmed(poly: Polynomial) -> Polynomial:
    coef = np.trim_zeros(np.asarray(poly.coef, dtype=float), "b")
    return Polynomial(coef if coef.size else [0.0])


def degree(poly: Polynomial) -> int:
    """Index of the last nonzero coefficient; -1 for the zero polynomial."""
    nz = np.flatnonzero(np.asarray(poly.coef) != 0.0)
    return int(nz[-1]) if nz.size else -1


def _check_order(q: int):
    if q not in SUPPORTED_ORDERS:
        raise UnsupportedOrder(f"expansion order q={q} not in {SUPPORTED_ORDERS}")


def edgeworth_polynomials(cumulants, q: int) -> ExpansionSet:
    """Edgeworth correction polynomials ``p_1 .. p_{q-2}`` for the standardized mean.

    ``cumulants`` is a :class:`~bwmedge.distributions.CumulantSet` holding at
    least skewness (and excess kurtosis when ``q == 4``).
    """
    _check_order(q)
    if cumulants.q < q:
        raise UnsupportedOrder(f"cumulants only available to order {cumulants.q}, need {q}")
    l3 = cumulants[3]
    p1 = Polynomial([l3 / 6.0, 0.0, -l3 / 6.0])
    terms = [(-0.5, p1)]
    if q == 4:
        l4 = cumulants[4]
        a, b = l4 / 24.0, l3 * l3 / 72.0
        # -x [a (x^2 - 3) + b (x^4 - 10 x^2 + 15)]
        p2 = Polynomial([0.0, 3.0 * a - 15.0 * b, 0.0, -a + 10.0 * b, 0.0, -b])
        terms.append((-1.0, p2))
    return ExpansionSet(q=q, terms=tuple(terms))


def sample_mean_edgeworth_cdf(cumulants, k, q: int, x):
    """Edgeworth approximation of ``P(sqrt(k) (mean_k - mu) / sigma <= x)``.

    Not clamped to [0, 1].  ``k`` and ``x`` broadcast.
    """
    if np.any(np.asarray(k) < 1):
        raise ValueError("sample size k must be >= 1")
    return edgeworth_polynomials(cumulants, q).cdf(k, x)
