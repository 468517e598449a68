"""Seeded simulation of ``Z = sqrt(N) (muhat - mu) / sigma`` and DKW bands.

Replications are cut into fixed-size blocks.  Block ``b`` draws from a Philox
counter-based generator with ``key = seed`` and the block index in the high
counter words, so the output depends only on ``(seed, reps, block_size)``.
``streams`` just decides how many threads share the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bwm import BwmProblem
from .errors import EmptySample, IllegalParameter

DEFAULT_BLOCK = 4096


@dataclass(frozen=True)
class SimConfig:
    prob: BwmProblem
    reps: int
    seed: int = 0
    streams: int = 1
    block_size: int = DEFAULT_BLOCK

    def __post_init__(self):
        if self.reps < 1 or self.streams < 1 or self.block_size < 1:
            raise IllegalParameter("reps, streams and block_size must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise IllegalParameter("seed must be a 64-bit unsigned integer")

    @property
    def n_blocks(self) -> int:
        return -(-self.reps // self.block_size)


def block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=block << 128))


def _simulate_block(cfg: SimConfig, block: int) -> np.ndarray:
    prob = cfg.prob
    start = block * cfg.block_size
    m = min(cfg.block_size, cfg.reps - start)
    rng = block_generator(cfg.seed, block)
    N = rng.binomial(prob.n, prob.p, size=m)
    Y = prob.d.sample(rng, int(N.sum()))
    S = np.bincount(np.repeat(np.arange(m), N), weights=Y, minlength=m)
    z = np.zeros(m)
    pos = N > 0
    Np = N[pos]
    z[pos] = (S[pos] - Np * prob.d.mean) / (prob.d.sd * np.sqrt(Np))
    return z


def sample_z(cfg: SimConfig) -> np.ndarray:
    """``reps`` draws of ``Z``, ordered by replication index.

    Each replication draws ``N ~ Binomial(n, p)``; ``Z = 0`` when ``N = 0``,
    otherwise ``N`` fresh copies of ``Y`` give the standardized mean.
    """
    blocks = range(cfg.n_blocks)
    if cfg.streams == 1:
        parts = [_simulate_block(cfg, b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.streams) as pool:
            parts = list(pool.map(lambda b: _simulate_block(cfg, b), blocks))
    return np.concatenate(parts)


class EmpiricalCdf:
    """Right-continuous step function ``F(x) = #{samples <= x} / size``."""

    def __init__(self, samples):
        s = np.sort(np.asarray(samples, dtype=float).ravel())
        if s.size == 0:
            raise EmptySample("empirical CDF needs at least one sample")
        self.sorted_samples = s

    def __len__(self):
        return self.sorted_samples.size

    def __call__(self, x):
        out = np.searchsorted(self.sorted_samples, x, side="right") / self.sorted_samples.size
        return out if np.ndim(out) else float(out)


def empirical_cdf(samples) -> EmpiricalCdf:
    return EmpiricalCdf(samples)


def dkw_band(reps: int, confidence: float) -> float:
    """Half-width ``sqrt(log(2 / (1 - confidence)) / (2 reps))`` of the DKW band."""
    if reps < 1:
        raise EmptySample("need at least one replication")
    if not 0.0 < confidence < 1.0:
        raise IllegalParameter("confidence must lie in (0, 1)")
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * reps))


@dataclass
class BandComparison:
    epsilon: float
    max_deviation: float
    argmax: float
    inside: bool
    zero_fraction: float
    zero_expected: float
    zero_stderr: float

    @property
    def zero_z_score(self) -> float:
        if self.zero_stderr == 0:
            return 0.0 if self.zero_fraction == self.zero_expected else math.inf
        return (self.zero_fraction - self.zero_expected) / self.zero_stderr


def compare_with_cdf(samples, grid, reference, atom: float, confidence: float = 0.999) -> BandComparison:
    """Check an empirical CDF against ``reference`` values on ``grid`` with a DKW band."""
    grid = np.asarray(grid, dtype=float)
    ecdf = empirical_cdf(samples)
    eps = dkw_band(len(ecdf), confidence)
    dev = np.abs(ecdf(grid) - np.asarray(reference, dtype=float))
    i = int(np.argmax(dev))
    frac = float(np.mean(np.asarray(samples) == 0.0))
    se = math.sqrt(atom * (1.0 - atom) / len(ecdf))
    return BandComparison(eps, float(dev[i]), float(grid[i]), bool(dev[i] <= eps), frac, atom, se)
