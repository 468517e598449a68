"""Parametric laws for the summands ``Y`` and their exact moment data.

Text form used by the CLI and config files (whitespace separated ``key=value``)::

    family=exponential rate=1.0
    family=uniform lo=0.0 hi=1.0
    family=gamma shape=4.0 scale=1.0
    family=lognormal log_mean=0.0 log_sd=0.5
    family=finite atoms=0,1 probs=0.3,0.7
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateDistribution,
    IllegalParameter,
    NoClosedFormOracle,
    UnsupportedFamily,
    UnsupportedOrder,
)
from .special import gammainc_lower

FAMILIES = {
    "exponential": ("rate",),
    "uniform": ("lo", "hi"),
    "gamma": ("shape", "scale"),
    "lognormal": ("log_mean", "log_sd"),
    "finite": ("atoms", "probs"),
}
CONTINUOUS = ("exponential", "uniform", "gamma", "lognormal")
MAX_MOMENT_ORDER = 4


@dataclass(frozen=True)
class DistributionSpec:
    family: str
    params: dict = field(hash=False)
    mean: float
    variance: float

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    @property
    def is_continuous(self) -> bool:
        return self.family in CONTINUOUS

    def require_nondegenerate(self):
        if not self.variance > 0.0:
            raise DegenerateDistribution(f"{self.family} has zero variance")

    def require_continuous(self):
        if not self.is_continuous:
            raise UnsupportedFamily(
                f"{self.family} is lattice-capable; only continuous laws are accepted here"
            )

    def sample(self, rng: np.random.Generator, size):
        pr = self.params
        if self.family == "exponential":
            return rng.exponential(1.0 / pr["rate"], size)
        if self.family == "uniform":
            return rng.uniform(pr["lo"], pr["hi"], size)
        if self.family == "gamma":
            return rng.gamma(pr["shape"], pr["scale"], size)
        if self.family == "lognormal":
            return rng.lognormal(pr["log_mean"], pr["log_sd"], size)
        return rng.choice(np.asarray(pr["atoms"], dtype=float), size=size, p=pr["probs"])

    def to_text(self) -> str:
        parts = [f"family={self.family}"]
        for key in FAMILIES[self.family]:
            val = self.params[key]
            if isinstance(val, (list, tuple)):
                parts.append(f"{key}=" + ",".join(repr(float(v)) for v in val))
            else:
                parts.append(f"{key}={float(val)!r}")
        return " ".join(parts)

    @classmethod
    def from_text(cls, text: str) -> "DistributionSpec":
        return parse_distribution(text)


@dataclass(frozen=True)
class CumulantSet:
    """Standardized moment data: ``lambdas[3]`` skewness, ``lambdas[4]`` excess kurtosis."""

    q: int
    lambdas: dict

    def __post_init__(self):
        if self.q < 3:
            raise UnsupportedOrder("cumulant order must be >= 3")
        missing = [j for j in range(3, self.q + 1) if j not in self.lambdas]
        if missing:
            raise ValueError(f"missing standardized moments for orders {missing}")
        if self.q >= 4 and self.lambdas[4] < self.lambdas[3] ** 2 - 2.0 - 1e-12:
            raise ValueError("infeasible moments: excess kurtosis < skewness^2 - 2")

    def __getitem__(self, j: int) -> float:
        return self.lambdas[j]

    @classmethod
    def gaussian(cls, q: int = 4) -> "CumulantSet":
        return cls(q, {j: 0.0 for j in range(3, q + 1)})


def make_distribution(family: str, **params) -> DistributionSpec:
    """Validate parameters and attach the closed-form mean and variance."""
    family = family.lower()
    if family not in FAMILIES:
        raise IllegalParameter(f"unknown family {family!r}; choose from {sorted(FAMILIES)}")
    expected = set(FAMILIES[family])
    if set(params) != expected:
        raise IllegalParameter(f"{family} takes parameters {sorted(expected)}, got {sorted(params)}")

    if family == "finite":
        atoms = [float(a) for a in params["atoms"]]
        probs = [float(w) for w in params["probs"]]
        if not atoms or len(atoms) != len(probs):
            raise IllegalParameter("atoms and probs must be nonempty and of equal length")
        if min(probs) < 0 or abs(math.fsum(probs) - 1.0) > 1e-12:
            raise IllegalParameter("probs must be nonnegative and sum to 1")
        if len(set(atoms)) != len(atoms):
            raise IllegalParameter("atoms must be distinct")
        mean = math.fsum(a * w for a, w in zip(atoms, probs))
        var = math.fsum(w * (a - mean) ** 2 for a, w in zip(atoms, probs))
        return DistributionSpec(family, {"atoms": tuple(atoms), "probs": tuple(probs)}, mean, var)

    pr = {k: float(v) for k, v in params.items()}
    if not all(math.isfinite(v) for v in pr.values()):
        raise IllegalParameter("parameters must be finite")
    if family == "exponential":
        if pr["rate"] <= 0:
            raise IllegalParameter("rate must be > 0")
        mean, var = 1.0 / pr["rate"], 1.0 / pr["rate"] ** 2
    elif family == "uniform":
        if not pr["lo"] < pr["hi"]:
            raise IllegalParameter("need lo < hi")
        mean, var = 0.5 * (pr["lo"] + pr["hi"]), (pr["hi"] - pr["lo"]) ** 2 / 12.0
    elif family == "gamma":
        if pr["shape"] <= 0 or pr["scale"] <= 0:
            raise IllegalParameter("shape and scale must be > 0")
        mean, var = pr["shape"] * pr["scale"], pr["shape"] * pr["scale"] ** 2
    else:
        if pr["log_sd"] <= 0:
            raise IllegalParameter("log_sd must be > 0")
        m, s2 = pr["log_mean"], pr["log_sd"] ** 2
        mean = math.exp(m + 0.5 * s2)
        var = math.expm1(s2) * math.exp(2 * m + s2)
    return DistributionSpec(family, pr, mean, var)


def parse_distribution(text: str) -> DistributionSpec:
    fields = {}
    for token in text.split():
        key, sep, val = token.partition("=")
        if not sep or not val:
            raise IllegalParameter(f"malformed token {token!r}; expected key=value")
        if key in fields:
            raise IllegalParameter(f"duplicate key {key!r}")
        fields[key] = val
    family = fields.pop("family", None)
    if family is None:
        raise IllegalParameter("missing family=...")
    try:
        if family == "finite":
            params = {k: [float(v) for v in s.split(",")] for k, s in fields.items()}
        else:
            params = {k: float(v) for k, v in fields.items()}
    except ValueError as exc:
        raise IllegalParameter(str(exc)) from None
    return make_distribution(family, **params)


def standardized_moments(d: DistributionSpec, q: int) -> CumulantSet:
    """Closed-form skewness (and excess kurtosis for ``q = 4``)."""
    if q < 3 or q > MAX_MOMENT_ORDER:
        raise UnsupportedOrder(f"standardized moments implemented for 3 <= q <= {MAX_MOMENT_ORDER}")
    d.require_nondegenerate()
    pr = d.params
    if d.family == "exponential":
        l3, l4 = 2.0, 6.0
    elif d.family == "uniform":
        l3, l4 = 0.0, -1.2
    elif d.family == "gamma":
        l3, l4 = 2.0 / math.sqrt(pr["shape"]), 6.0 / pr["shape"]
    elif d.family == "lognormal":
        w = math.exp(pr["log_sd"] ** 2)
        l3 = (w + 2.0) * math.sqrt(w - 1.0)
        l4 = w**4 + 2 * w**3 + 3 * w**2 - 6.0
    else:
        raise UnsupportedFamily("finite supports are only handled by the cramer module")
    lambdas = {3: l3}
    if q >= 4:
        lambdas[4] = l4
    return CumulantSet(q, lambdas)


def exact_standardized_mean_cdf(d: DistributionSpec, k, x):
    """Exact ``P(sqrt(k) (mean_k - mu) / sigma <= x)`` for exponential and gamma ``Y``.

    The k-fold sum of Gamma(shape, scale) is Gamma(k * shape, scale).  ``k`` and
    ``x`` broadcast against each other.
    """
    if d.family == "exponential":
        shape = 1.0
    elif d.family == "gamma":
        shape = d.params["shape"]
    else:
        raise NoClosedFormOracle(f"no closed-form k-fold convolution for {d.family}")
    k = np.asarray(k, dtype=float)
    if np.any(k < 1):
        raise ValueError("k must be >= 1")
    x = np.asarray(x, dtype=float)
    a = k * shape
    # standardized in units of the scale: sum/scale ~ Gamma(a, 1), mean a, sd sqrt(a)
    y = a + x * np.sqrt(a)
    return gammainc_lower(a, y)
