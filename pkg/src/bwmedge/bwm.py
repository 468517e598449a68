"""Distribution of the standardized Bernoulli weighted mean.

With ``N = sum T_i`` and ``Z = sqrt(N) (muhat - mu) / sigma`` (``Z = 0`` when
``N = 0``), conditioning on ``N`` gives the exact finite-n mixture

    F_Z(x) = sum_{k=1}^n P(N = k) F_k(x) + 1{x >= 0} (1 - p)^n

where ``F_k`` is the CDF of the standardized mean of ``k`` draws of ``Y``.
Replacing ``F_k`` by its Edgeworth expansion and expanding the inverse binomial
moments in powers of ``1/(np)`` gives the closed form

    F_Z(x) = Phi(x) + sum_{j=1}^{q-2} n^{-j/2} pstar_j(x) phi(x) + O(n^{-(q-1)/2}).
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial

from .binomial import BinomialParams, bernoulli_sum, inverse_moment_coefficients, pmf_vector
from .distributions import CumulantSet, DistributionSpec, exact_standardized_mean_cdf, standardized_moments
from .edgeworth import (
    SUPPORTED_ORDERS,
    ExpansionSet,
    edgeworth_polynomials,
    normal_cdf,
    normal_pdf,
)
from .errors import GridMismatch, IllegalParameter, UnsupportedOrder

SCHEMA_VERSION = 1
ORACLE = "oracle"
EDGEWORTH = "edgeworth"
PER_K_MODES = (ORACLE, EDGEWORTH)
# beyond this size, binomial support with mass below PRUNE_MASS is dropped
FULL_SUM_MAX_N = 100_000
PRUNE_MASS = 1e-18


def default_grid(lo: float = -8.0, hi: float = 8.0, step: float = 0.01) -> np.ndarray:
    """Uniform grid on ``[lo, hi]`` plus both sides of the jump at zero."""
    if not (hi > lo and step > 0):
        raise IllegalParameter("grid needs lo < hi and step > 0")
    m = int(round((hi - lo) / step))
    grid = np.round(lo + step * np.arange(m + 1), 12)
    extra = [v for v in (-1e-9, 0.0) if lo <= v <= hi]
    return np.unique(np.concatenate([grid, extra]))


@dataclass(frozen=True)
class BwmProblem:
    d: DistributionSpec
    b: BinomialParams
    q: int = 4

    def __post_init__(self):
        if self.q not in SUPPORTED_ORDERS:
            raise UnsupportedOrder(f"q must be one of {SUPPORTED_ORDERS}")
        self.d.require_continuous()
        self.d.require_nondegenerate()

    @property
    def n(self) -> int:
        return self.b.n

    @property
    def p(self) -> float:
        return self.b.p

    @cached_property
    def cumulants(self) -> CumulantSet:
        return standardized_moments(self.d, self.q)

    def with_n(self, n: int) -> "BwmProblem":
        return BwmProblem(self.d, BinomialParams(n, self.p), self.q)


def _support(b: BinomialParams):
    w = pmf_vector(b)[1:]
    k = np.arange(1, b.n + 1)
    keep = w >= PRUNE_MASS if b.n > FULL_SUM_MAX_N else w > 0.0
    return k[keep], w[keep]


def atom_mass(b: BinomialParams) -> float:
    """``P(N = 0) = (1 - p)^n``."""
    return math.exp(b.n * math.log1p(-b.p)) if b.p < 1.0 else 0.0


def mixture_cdf(prob: BwmProblem, x, per_k: str = ORACLE):
    """Exact mixture ``sum_k P(N=k) F_k(x) + 1{x>=0} (1-p)^n``.

    ``per_k="oracle"`` uses the exact Gamma-convolution CDF (exponential and
    gamma ``Y`` only); ``per_k="edgeworth"`` uses the order-``q`` Edgeworth
    expansion of each ``F_k``.
    """
    x = np.asarray(x, dtype=float)
    xs = np.atleast_1d(x)
    b = prob.b
    if per_k == ORACLE:
        k, w = _support(b)
        body = np.zeros(xs.shape)
        # blocks of k keep the k-by-x matrix bounded in memory
        step = max(1, 4_000_000 // max(xs.size, 1))
        for start in range(0, k.size, step):
            kk = k[start:start + step]
            F = exact_standardized_mean_cdf(prob.d, kk[:, None], xs[None, :])
            body += w[start:start + step] @ F
    elif per_k == EDGEWORTH:
        # sum_k w_k [Phi + sum_j k^{-j/2} p_j phi] = mass * Phi + sum_j f_{j/2}(n) p_j phi
        exp_set = edgeworth_polynomials(prob.cumulants, prob.q)
        mass = bernoulli_sum(b, 0.0)
        body = mass * normal_cdf(xs)
        for j, (_, poly) in enumerate(exp_set.terms, start=1):
            body = body + bernoulli_sum(b, -j / 2.0) * poly(xs) * normal_pdf(xs)
    else:
        raise IllegalParameter(f"per_k must be one of {PER_K_MODES}")
    out = body + np.where(xs >= 0.0, atom_mass(b), 0.0)
    return out.reshape(x.shape) if x.ndim else float(out[0])


def coefficient_orders(j: int, q: int) -> int:
    """Number of inverse-moment coefficients requested for ``f_{j/2}``: ``q - 2 + ceil(j/2)``."""
    return q - 2 + math.ceil(j / 2)


def star_polynomials(c: CumulantSet, q: int, p: float) -> ExpansionSet:
    """Correction polynomials of the Bernoulli weighted mean.

    ``pstar_k = p^{-k/2} sum_{j + 2i = k} C_{j/2, i} p_j`` for ``k = 1..q-2``,
    grouping every ``(np)^{-j/2 - i}`` contribution by its total exponent.
    """
    if q not in SUPPORTED_ORDERS:
        raise UnsupportedOrder(f"q must be one of {SUPPORTED_ORDERS}")
    if not 0.0 < p <= 1.0:
        raise IllegalParameter("p must lie in (0, 1]")
    base = edgeworth_polynomials(c, q)
    tables = {}
    for j in range(1, q - 1):
        K = coefficient_orders(j, q)
        if p < 1.0:
            tables[j] = inverse_moment_coefficients(j / 2.0, K, p).C
        else:
            tables[j] = (1.0,) + (0.0,) * (K - 1)  # N = n surely
    terms = []
    for k in range(1, q - 1):
        acc = Polynomial([0.0])
        for j in range(k % 2 or 2, k + 1, 2):
            i = (k - j) // 2
            acc = acc + tables[j][i] * base.poly(j)
        terms.append((-k / 2.0, acc * p ** (-k / 2.0)))
    return ExpansionSet(q=q, terms=tuple(terms))


def bwm_edgeworth_cdf(prob: BwmProblem, x):
    """``Phi(x) + sum_j n^{-j/2} pstar_j(x) phi(x)``; not clamped."""
    prob.d.require_nondegenerate()
    return star_polynomials(prob.cumulants, prob.q, prob.p).cdf(prob.n, x)


# ---------------------------------------------------------------------------
# uniform error measurement
# ---------------------------------------------------------------------------


@dataclass
class UniformErrorReport:
    grid: np.ndarray = field(repr=False)
    sup_error: float
    argmax: float
    table: list = field(default_factory=list)
    fitted_slope: float | None = None
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "grid": {"lo": float(self.grid[0]), "hi": float(self.grid[-1]), "points": int(self.grid.size)},
            "supError": self.sup_error,
            "argmax": self.argmax,
            "fittedSlope": self.fitted_slope,
            "table": self.table,
            "meta": self.meta,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    def to_csv(self) -> str:
        cols = ["n", "p", "q", "family", "supError", "scaledError", "fittedSlope"]
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for row in self.table:
            w.writerow({**row, "fittedSlope": self.fitted_slope})
        return buf.getvalue()


def _on_grid(f, grid):
    vals = f(grid) if callable(f) else np.asarray(f, dtype=float)
    if vals.shape != grid.shape:
        raise GridMismatch(f"curve has shape {vals.shape}, grid has {grid.shape}")
    return vals


def sup_error(f, g, grid) -> UniformErrorReport:
    """Max over ``grid`` of ``|f - g|``; curves are callables or arrays on the grid."""
    grid = np.asarray(grid, dtype=float)
    diff = np.abs(_on_grid(f, grid) - _on_grid(g, grid))
    i = int(np.argmax(diff))
    return UniformErrorReport(grid=grid, sup_error=float(diff[i]), argmax=float(grid[i]))


def fit_loglog_slope(sizes, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(size)``."""
    sizes, errors = np.asarray(sizes, float), np.asarray(errors, float)
    if sizes.size < 2 or np.any(errors <= 0):
        raise ValueError("need >= 2 positive errors to fit a slope")
    slope, _ = np.polyfit(np.log(sizes), np.log(errors), 1)
    return float(slope)


def sweep_sup_error(prob: BwmProblem, sizes, reference: str = EDGEWORTH, grid=None, workers: int = 1) -> UniformErrorReport:
    """Sup-norm gap between ``mixture_cdf(reference)`` and :func:`bwm_edgeworth_cdf` per size.

    Rows carry ``scaledError = supError * n^{(q-1)/2}``.  Sizes are evaluated
    independently (optionally on ``workers`` threads) and merged in size order.
    """
    sizes = [int(n) for n in sizes]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise IllegalParameter("sizes must be strictly increasing")
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    rate = (prob.q - 1) / 2.0

    def one(n):
        pn = prob.with_n(n)
        rep = sup_error(mixture_cdf(pn, grid, reference), bwm_edgeworth_cdf(pn, grid), grid)
        return {
            "n": n,
            "p": prob.p,
            "q": prob.q,
            "family": prob.d.family,
            "supError": rep.sup_error,
            "scaledError": rep.sup_error * n**rate,
            "argmax": rep.argmax,
        }

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, sizes))
    else:
        rows = [one(n) for n in sizes]
    worst = max(rows, key=lambda r: r["supError"])
    slope = fit_loglog_slope(sizes, [r["supError"] for r in rows]) if len(rows) >= 3 else None
    meta = {"reference": reference, "distribution": prob.d.to_text(), "target_slope": -rate}
    return UniformErrorReport(grid, worst["supError"], worst["argmax"], rows, slope, meta)


def problem_dict(prob: BwmProblem) -> dict:
    return {"distribution": prob.d.to_text(), **asdict(prob.b), "q": prob.q}
