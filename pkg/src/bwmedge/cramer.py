"""Lattice and semi-lattice classification, characteristic functions, Cramér scans.

A random vector ``X`` is semi-lattice when some direction ``t != 0`` makes
``t . X`` live on ``{x0 + k delta}``.  Along such a direction ``|psi(r t)|`` is
``2 pi / delta``-periodic, so Cramér's condition fails; conversely
``|psi(t)| = 1`` at some ``t != 0`` forces ``t . X`` onto a lattice.

Exactness policy:

* Rational atoms (``int``, ``Fraction``) and :class:`ExactReal` atoms built
  from the constants ``E`` and ``PI`` are decided exactly.  ``1, e, pi`` are
  treated as linearly independent over the rationals.
* ``float`` atoms get verdicts qualified by the denominator bound of the
  continued-fraction test; they are never declared NonLattice.
* NonLattice is never claimed from a bounded direction search in ``d > 1``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

from .distributions import DistributionSpec
from .errors import EmptySupport, IllegalParameter, UnsupportedFamily

LATTICE = "Lattice"
SEMI_LATTICE = "SemiLattice"
NON_LATTICE = "NonLattice"
UNRESOLVED = "Unresolved"

DEFAULT_DENOMINATOR_BOUND = 10**6
DEFAULT_HEIGHT_BOUND = 50
CERTIFY_TOL = 1e-12
PERIOD_TOL = 1e-10
FLOAT_COMMENSURABLE_TOL = 1e-10

_CONSTANTS = {"e": math.e, "pi": math.pi}


# ---------------------------------------------------------------------------
# exact reals over Q(1, e, pi)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactReal:
    """``rational + sum c_name * name`` with rational ``c``; names from ``e``, ``pi``."""

    rational: Fraction = Fraction(0)
    coeffs: tuple = ()

    @classmethod
    def constant(cls, name: str) -> "ExactReal":
        if name not in _CONSTANTS:
            raise ValueError(f"unknown constant {name!r}")
        return cls(Fraction(0), ((name, Fraction(1)),))

    @classmethod
    def coerce(cls, v) -> "ExactReal":
        if isinstance(v, ExactReal):
            return v
        if isinstance(v, (int, Fraction)):
            return cls(Fraction(v))
        raise TypeError(f"{v!r} is not an exact real")

    def vector(self, basis) -> list[Fraction]:
        c = dict(self.coeffs)
        return [self.rational] + [c.get(name, Fraction(0)) for name in basis]

    def _combine(self, other, sign):
        other = ExactReal.coerce(other)
        c = dict(self.coeffs)
        for name, v in other.coeffs:
            c[name] = c.get(name, Fraction(0)) + sign * v
        return ExactReal(
            self.rational + sign * other.rational,
            tuple(sorted((k, v) for k, v in c.items() if v)),
        )

    def __add__(self, other):
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __rsub__(self, other):
        return ExactReal.coerce(other)._combine(self, -1)

    def __mul__(self, k):
        k = Fraction(k)
        return ExactReal(self.rational * k, tuple((n, v * k) for n, v in self.coeffs if v * k))

    __rmul__ = __mul__

    def __float__(self):
        return float(self.rational) + sum(float(v) * _CONSTANTS[n] for n, v in self.coeffs)

    def is_rational(self) -> bool:
        return not self.coeffs

    def __str__(self):
        parts = [f"{v}*{n}" for n, v in self.coeffs]
        if self.rational or not parts:
            parts.insert(0, str(self.rational))
        return " + ".join(parts)


E = ExactReal.constant("e")
PI = ExactReal.constant("pi")


def parse_atom(token: str):
    """``"e"``, ``"pi"``, ``"2*pi"``, ``"1/3"`` or ``"0.25"`` (decimal literals are exact)."""
    token = token.strip()
    coef, sep, name = token.partition("*")
    if not sep:
        coef, name = ("1", token) if token in _CONSTANTS else (token, "")
    if name:
        return Fraction(coef) * ExactReal.constant(name)
    try:
        return Fraction(token)
    except ValueError:
        raise IllegalParameter(f"cannot parse atom {token!r}") from None


def _is_exact(v) -> bool:
    return isinstance(v, (int, Fraction, ExactReal)) and not isinstance(v, bool)


def _frac_gcd(values) -> Fraction:
    values = [abs(Fraction(v)) for v in values if v]
    if not values:
        return Fraction(0)
    num = reduce(math.gcd, (v.numerator for v in values))
    den = reduce(lambda a, b: a * b // math.gcd(a, b), (v.denominator for v in values))
    return Fraction(num, den)


# ---------------------------------------------------------------------------
# supports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Atoms1D:
    values: tuple
    probs: tuple | None = None


@dataclass(frozen=True)
class AtomsND:
    vectors: tuple
    probs: tuple | None = None

    @property
    def dim(self) -> int:
        return len(self.vectors[0])


@dataclass(frozen=True)
class LinearImage:
    """``X = coeffs * W`` for a continuous scalar ``W`` (e.g. ``(W, 4W)``).

    ``base=None`` stands for a standard normal ``W``.
    """

    coeffs: tuple
    base: DistributionSpec | None = None


@dataclass(frozen=True)
class BernoulliGated:
    """The vector ``(Y T, T)`` with ``T ~ Bernoulli(p)`` independent of ``Y``."""

    inner: DistributionSpec
    p: float


def _weights(values, probs):
    if not values:
        raise EmptySupport("support has no atoms")
    if probs is None:
        probs = [1.0 / len(values)] * len(values)
    if len(probs) != len(values):
        raise IllegalParameter("values and probs differ in length")
    probs = [float(w) for w in probs]
    if min(probs) < 0 or abs(math.fsum(probs) - 1.0) > 1e-12:
        raise IllegalParameter("probs must be nonnegative and sum to 1")
    kept = [(v, w) for v, w in zip(values, probs) if w > 0]
    return [v for v, _ in kept], [w for _, w in kept]


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------


@dataclass
class LatticeVerdict:
    verdict: str
    direction: tuple | None = None
    offset: float = 0.0
    span: float = 0.0
    evidence: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "direction": None if self.direction is None else [float(v) for v in self.direction],
            "offset": float(self.offset),
            "span": float(self.span),
            "evidence": list(self.evidence),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def certificate(self) -> str:
        head = f"verdict: {self.verdict}"
        if self.direction is not None:
            head += f"\ndirection t*: {tuple(float(v) for v in self.direction)}"
        if self.verdict in (LATTICE, SEMI_LATTICE):
            head += f"\nlattice: {{{self.offset!r} + k * {self.span!r}}}"
        return head + "".join(f"\n  - {e}" for e in self.evidence)


def _certify(points, offset, span, exact: bool):
    """Residual of ``(points - offset) / span`` from the integers (or from 0 when span = 0)."""
    worst = 0.0
    for v in points:
        dv = v - offset
        if exact:
            if span == 0:
                ok = dv == 0 if not isinstance(dv, ExactReal) else dv == ExactReal()
                res = 0.0 if ok else math.inf
            else:
                ratio = _exact_ratio(ExactReal.coerce(dv), ExactReal.coerce(span))
                res = 0.0 if ratio is not None and ratio.denominator == 1 else math.inf
        else:
            dv, s = float(dv), float(span)
            if s == 0:
                res = abs(dv)
            else:
                r = dv / s
                res = abs(r - round(r))
        worst = max(worst, res)
    return worst


def _exact_ratio(a: ExactReal, b: ExactReal) -> Fraction | None:
    """``a / b`` when it is rational, else ``None``."""
    basis = sorted({n for n, _ in a.coeffs} | {n for n, _ in b.coeffs})
    va, vb = a.vector(basis), b.vector(basis)
    ratio = None
    for x, y in zip(va, vb):
        if y == 0:
            if x != 0:
                return None
            continue
        r = x / y
        if ratio is None:
            ratio = r
        elif r != ratio:
            return None
    return ratio if ratio is not None else Fraction(0)


def lattice_check_1d(atoms, probs=None, denominator_bound: int = DEFAULT_DENOMINATOR_BOUND) -> LatticeVerdict:
    """Decide whether a finite 1-D law sits on ``{x0 + k delta}``.

    Exact atoms are decided exactly (``x0`` = smallest atom, ``delta`` = gcd of
    the differences).  Float atoms use a continued-fraction commensurability
    test with the given denominator bound and return Lattice or Unresolved.
    """
    atoms, _ = _weights(list(atoms), probs)
    exact = all(_is_exact(a) for a in atoms)
    order = sorted(range(len(atoms)), key=lambda i: float(atoms[i]))
    x0 = atoms[order[0]]
    if len(set(float(a) for a in atoms)) == 1:
        return LatticeVerdict(LATTICE, None, float(x0), 0.0, ["single atom: degenerate lattice, delta = 0"])

    if exact:
        diffs = [ExactReal.coerce(a) - ExactReal.coerce(x0) for a in atoms]
        nonzero = [dv for dv in diffs if dv != ExactReal()]
        unit = nonzero[0]
        ratios = []
        for dv in nonzero:
            r = _exact_ratio(dv, unit)
            if r is None:
                return LatticeVerdict(
                    NON_LATTICE, None, float(x0), 0.0,
                    [f"differences {unit} and {dv} are rationally independent "
                     "(1, e, pi assumed linearly independent over Q)"],
                )
            ratios.append(r)
        g = _frac_gcd(ratios)
        delta = unit * g
        if float(delta) < 0:
            delta = delta * -1
        span = delta.rational if delta.is_rational() else delta
        res = _certify(atoms, x0, span, exact=True)
        if res > CERTIFY_TOL:
            raise AssertionError("lattice certificate failed")
        return LatticeVerdict(
            LATTICE, None, float(x0), float(delta),
            [f"exact atoms; offset {x0}, span {delta}", "certified: all atoms are offset + integer * span"],
        )

    vals = np.array([float(a) for a in atoms])
    diffs = vals - vals.min()
    nz = diffs[diffs > 0]
    unit = nz.min()
    fracs = []
    for dv in nz:
        r = dv / unit
        fr = Fraction(r).limit_denominator(denominator_bound)
        if abs(r - float(fr)) > FLOAT_COMMENSURABLE_TOL * max(1.0, abs(r)):
            return LatticeVerdict(
                UNRESOLVED, None, float(vals.min()), 0.0,
                [f"difference ratio {r!r} has no rational approximation with denominator <= "
                 f"{denominator_bound}; float atoms are never declared NonLattice"],
            )
        fracs.append(fr)
    delta = unit * float(_frac_gcd(fracs))
    res = _certify(vals, vals.min(), delta, exact=False)
    if res > FLOAT_COMMENSURABLE_TOL * 1e3:
        return LatticeVerdict(
            UNRESOLVED, None, float(vals.min()), 0.0,
            [f"rational approximations at denominator bound {denominator_bound} leave "
             f"certificate residual {res:.3g}; float atoms are never declared NonLattice"],
        )
    return LatticeVerdict(
        LATTICE, None, float(vals.min()), float(delta),
        [f"float atoms commensurable at denominator bound {denominator_bound}",
         f"certificate residual {res:.3g}"],
    )


def _rank_and_null(rows: list[list[Fraction]], d: int):
    """Rank of ``rows`` and, if deficient, a primitive integer null vector."""
    m = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(d):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        pv = m[r][c]
        m[r] = [v / pv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    if r == d:
        return r, None
    free = next(c for c in range(d) if c not in pivots)
    vec = [Fraction(0)] * d
    vec[free] = Fraction(1)
    for row, c in zip(m, pivots):
        vec[c] = -row[free]
    den = reduce(lambda a, b: a * b // math.gcd(a, b), (v.denominator for v in vec))
    ints = [int(v * den) for v in vec]
    g = reduce(math.gcd, (abs(v) for v in ints if v))
    ints = [v // g for v in ints]
    if next(v for v in ints if v) < 0:
        ints = [-v for v in ints]
    return r, tuple(ints)


def _directions(d: int, height: int):
    """Primitive integer directions ordered by height, L1 norm, then axis preference."""
    for h in range(1, height + 1):
        cands = []
        for t in itertools.product(range(-h, h + 1), repeat=d):
            if max(abs(v) for v in t) != h:
                continue
            first = next(v for v in t if v)
            if first < 0 or reduce(math.gcd, (abs(v) for v in t)) != 1:
                continue
            cands.append(t)
        cands.sort(key=lambda t: (sum(abs(v) for v in t), [-abs(v) for v in t], [-v for v in t]))
        yield from cands


def semilattice_search(s, height_bound: int = DEFAULT_HEIGHT_BOUND,
                       denominator_bound: int = DEFAULT_DENOMINATOR_BOUND) -> LatticeVerdict:
    """Look for a direction ``t*`` along which the law is lattice.

    Returns SemiLattice with a certified ``(t*, x0, delta)`` or, when the
    bounded search finds nothing, Unresolved.
    """
    if isinstance(s, BernoulliGated):
        if not 0.0 < s.p <= 1.0:
            raise IllegalParameter("p must lie in (0, 1]")
        return LatticeVerdict(
            SEMI_LATTICE, (0, 1), 0.0, 1.0,
            ["t* = (0, 1) projects (YT, T) onto T, which lies in {0, 1}",
             "certified: T takes values 0 + k * 1, k in {0, 1}"],
        )
    if isinstance(s, LinearImage):
        a = list(s.coeffs)
        if not any(a):
            raise IllegalParameter("coefficient vector must be nonzero")
        if len(a) == 1:
            return LatticeVerdict(
                NON_LATTICE, None, 0.0, 0.0,
                [f"1-D image of an absolutely continuous "
                 f"{s.base.family if s.base else 'normal'} law is not lattice"],
            )
        i = next(k for k, v in enumerate(a) if v)
        j = next(k for k in range(len(a)) if k != i)
        t = [0] * len(a)
        t[j], t[i] = a[i], -a[j]
        dot = sum(tv * av for tv, av in zip(t, a))
        if abs(float(dot)) > CERTIFY_TOL:
            raise AssertionError("normal direction failed to annihilate the image")
        return LatticeVerdict(
            SEMI_LATTICE, tuple(t), 0.0, 0.0,
            [f"t* . X = ({dot}) * W = 0 almost surely: degenerate lattice with delta = 0"],
        )
    if isinstance(s, Atoms1D):
        return lattice_check_1d(s.values, s.probs, denominator_bound)
    if not isinstance(s, AtomsND):
        raise IllegalParameter(f"unsupported support spec {type(s).__name__}")

    vectors, _ = _weights(list(s.vectors), s.probs)
    d = len(vectors[0])
    if any(len(v) != d for v in vectors):
        raise IllegalParameter("atoms have inconsistent dimensions")
    if d == 1:
        return lattice_check_1d([v[0] for v in vectors], None, denominator_bound)
    exact = all(_is_exact(c) and not isinstance(c, ExactReal) for v in vectors for c in v)

    if exact:
        vecs = [[Fraction(c) for c in v] for v in vectors]
        diffs = [[a - b for a, b in zip(v, vecs[0])] for v in vecs[1:]]
        rank, null = _rank_and_null(diffs, d) if diffs else (0, (1,) + (0,) * (d - 1))
        if null is not None:
            offset = sum(t * c for t, c in zip(null, vecs[0]))
            proj = [sum(t * c for t, c in zip(null, v)) for v in vecs]
            if _certify(proj, offset, 0, exact=True) > CERTIFY_TOL:
                raise AssertionError("null-direction certificate failed")
            return LatticeVerdict(
                SEMI_LATTICE, null, float(offset), 0.0,
                [f"atoms span an affine set of dimension {rank} < {d}; "
                 "t* is normal to it (degenerate lattice, delta = 0)"],
            )
    else:
        vecs = [[float(c) for c in v] for v in vectors]

    for t in _directions(d, height_bound):
        proj = [sum(tv * c for tv, c in zip(t, v)) for v in vecs]
        sub = lattice_check_1d(proj, None, denominator_bound)
        if sub.verdict == LATTICE:
            return LatticeVerdict(
                SEMI_LATTICE, t, sub.offset, sub.span,
                [f"direction search (height <= {height_bound}) found t* = {t}"] + sub.evidence,
            )
    return LatticeVerdict(
        UNRESOLVED, None, 0.0, 0.0,
        [f"no lattice direction with integer height <= {height_bound}; "
         "a bounded search never certifies NonLattice"],
    )


# ---------------------------------------------------------------------------
# characteristic functions
# ---------------------------------------------------------------------------


def _psi_scalar_dist(d: DistributionSpec, t: np.ndarray) -> np.ndarray:
    pr = d.params
    if d.family == "exponential":
        lam = pr["rate"]
        return lam / (lam - 1j * t)
    if d.family == "gamma":
        return (1.0 - 1j * pr["scale"] * t) ** (-pr["shape"])
    if d.family == "uniform":
        lo, hi = pr["lo"], pr["hi"]
        w = 0.5 * t * (hi - lo)
        return np.exp(0.5j * t * (lo + hi)) * np.sinc(w / np.pi)
    if d.family == "finite":
        atoms = np.asarray(pr["atoms"], dtype=float)
        probs = np.asarray(pr["probs"], dtype=float)
        return np.exp(1j * np.multiply.outer(t, atoms)) @ probs
    raise UnsupportedFamily(f"no closed-form characteristic function for {d.family}")


def characteristic_function(s, t):
    """``E exp(i t . X)``.  ``t`` is an array of shape ``(..., d)`` (or ``(...)`` in 1-D)."""
    t = np.asarray(t, dtype=float)
    if isinstance(s, DistributionSpec):
        return _psi_scalar_dist(s, t)
    if isinstance(s, Atoms1D):
        vals, w = _weights(list(s.values), s.probs)
        return np.exp(1j * np.multiply.outer(t, np.array([float(v) for v in vals]))) @ np.array(w)
    if isinstance(s, AtomsND):
        vecs, w = _weights(list(s.vectors), s.probs)
        X = np.array([[float(c) for c in v] for v in vecs])
        return np.exp(1j * (t @ X.T)) @ np.array(w)
    if isinstance(s, LinearImage):
        a = np.array([float(c) for c in s.coeffs])
        u = t @ a
        if s.base is None:
            return np.exp(-0.5 * u * u) + 0j
        return _psi_scalar_dist(s.base, u)
    if isinstance(s, BernoulliGated):
        return (1.0 - s.p) + s.p * np.exp(1j * t[..., 1]) * _psi_scalar_dist(s.inner, t[..., 0])
    raise IllegalParameter(f"unsupported support spec {type(s).__name__}")


def char_fn_modulus(s, t):
    """``|E exp(i t . X)|``, in [0, 1]."""
    out = np.abs(characteristic_function(s, t))
    return out if np.ndim(out) else float(out)


@dataclass
class ScanReport:
    direction: tuple
    r_range: tuple
    max_tail_modulus: float
    argmax_r: float
    period: float | None = None
    period_confirmed: bool | None = None
    max_period_deviation: float | None = None
    semilattice_certified: bool = False
    evidence: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def cramer_scan(s, direction, r_max: float = 200.0, step: float = 0.01, span: float | None = None) -> ScanReport:
    """Sample ``|psi(r t*)|`` for ``r`` in ``[r_max/2, r_max]``.

    The max is a lower bound on the limsup along the ray.  With ``span > 0`` the
    multiples of ``2 pi / span`` are added to the grid and periodicity
    ``|psi(r)| = |psi(r + 2 pi / span)|`` is checked to 1e-10.  A sampled
    modulus within 1e-12 of 1 marks the law as semi-lattice.
    """
    direction = np.atleast_1d(np.asarray(direction, dtype=float))
    if not np.any(direction):
        raise IllegalParameter("scan direction must be nonzero")
    if not (r_max > 0 and step > 0):
        raise IllegalParameter("need r_max > 0 and step > 0")
    lo = r_max / 2.0
    r = lo + step * np.arange(int(math.floor((r_max - lo) / step)) + 1)
    period = None
    if span is not None and span > 0:
        period = 2.0 * math.pi / span
        m = np.arange(math.ceil(lo / period), math.floor(r_max / period) + 1)
        r = np.union1d(r, m * period)

    def psi_abs(rv):
        tt = np.multiply.outer(rv, direction)
        if direction.size == 1 and not isinstance(s, (AtomsND, LinearImage, BernoulliGated)):
            tt = tt[..., 0]
        return np.abs(characteristic_function(s, tt))

    mod = psi_abs(r)
    i = int(np.argmax(mod))
    rep = ScanReport(tuple(direction.tolist()), (lo, r_max), float(mod[i]), float(r[i]))
    if np.max(mod) > 1.0 + 1e-14:
        raise AssertionError("characteristic function modulus exceeds 1")
    if period is not None:
        dev = float(np.max(np.abs(mod - psi_abs(r + period))))
        rep.period, rep.max_period_deviation = period, dev
        rep.period_confirmed = dev <= PERIOD_TOL
        rep.evidence.append(f"period 2*pi/delta = {period:.12g}: max deviation {dev:.3g}")
    if mod[i] >= 1.0 - CERTIFY_TOL:
        rep.semilattice_certified = True
        rep.evidence.append(
            f"|psi(r t*)| = 1 within {CERTIFY_TOL:g} at r = {r[i]:.12g}: the law is semi-lattice"
        )
    return rep
