"""Limit objects: independent geometric prime-exponent arrays, the limit
product ``F_inf``, the zeta law of the GCD and its moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from . import arith
from .errors import ConfigError, DomainError
from .multfunc import MultiplicativeFunction

SAMPLE_CHUNK = 10_000


def worker_rng(base_seed: int, worker: int = 0) -> np.random.Generator:
    """Independent stream for worker ``i`` derived from ``(base_seed, i)``."""
    return np.random.default_rng([int(base_seed), int(worker)])


def sample_geometric(p: int, rng: np.random.Generator, size=None):
    """``P{G = j} = (1 - 1/p) p^-j`` by inversion: ``floor(log U / log(1/p))``.

    ``U = 1 - random()`` lies in ``(0, 1]``, so ``log U`` is finite.
    """
    if p < 2:
        raise ConfigError(f"p must be >= 2, got {p}")
    u = 1.0 - rng.random(size)
    g = np.floor(np.log(u) / -math.log(p)).astype(np.int64)
    return int(g) if size is None else g


@dataclass(frozen=True)
class LimitSampleConfig:
    prime_cutoff: int = 1000
    d: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.prime_cutoff < 2:
            raise ConfigError(f"prime cutoff must be >= 2, got {self.prime_cutoff}")
        if self.d < 1:
            raise ConfigError(f"dimension must be >= 1, got {self.d}")

    @cached_property
    def primes(self) -> np.ndarray:
        return arith.primes_array(self.prime_cutoff)


@dataclass(frozen=True)
class GeometricArraySample:
    prime_cutoff: int
    primes: np.ndarray  # (m,)
    exponents: np.ndarray  # (m, d)

    def as_dict(self) -> dict[int, tuple[int, ...]]:
        return {int(p): tuple(e) for p, e in zip(self.primes.tolist(), self.exponents.tolist())}

    def nonzero(self) -> dict[int, tuple[int, ...]]:
        return {p: e for p, e in self.as_dict().items() if any(e)}


def geometric_batch(primes: np.ndarray, d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``(n, len(primes), d)`` array of independent geometric exponents."""
    u = 1.0 - rng.random((n, len(primes), d))
    return np.floor(np.log(u) / -np.log(primes.astype(float))[None, :, None]).astype(np.int64)


def sample_geometric_array(config: LimitSampleConfig, rng: np.random.Generator) -> GeometricArraySample:
    exps = geometric_batch(config.primes, config.d, 1, rng)[0]
    return GeometricArraySample(config.prime_cutoff, config.primes, exps)


@lru_cache(maxsize=64)
def tail_risk_bound(prime_cutoff: int, d: int) -> float:
    """Union bound on some ``p > P`` having two nonzero coordinates or one coordinate >= 2.

    ``sum_{p > P} (d(d-1)/2 + d) p^-2``, with the prime sum taken exactly up
    to ``L = max(10^6, 10 P)`` and ``sum_{k > L} k^-2 < 1/L`` added on top.
    The bound is nonincreasing in ``P``.
    """
    L = max(10**6, 10 * prime_cutoff)
    ps = arith.primes_array(L).astype(float)
    tail = float(np.sum(ps[ps > prime_cutoff] ** -2.0)) + 1.0 / L
    return (d * (d - 1) / 2 + d) * tail


@dataclass
class FInfinitySample:
    values: list
    prime_cutoff: int
    d: int
    tail_risk: float
    zero_count: int

    @property
    def certificate(self) -> dict:
        return {"prime_cutoff": self.prime_cutoff, "tail_risk_bound": self.tail_risk, "zero_products": self.zero_count}


def sample_F_infinity(F: MultiplicativeFunction, config: LimitSampleConfig, rng: np.random.Generator,
                      size: int = 1) -> FInfinitySample:
    """Draws of ``prod_{p <= P} F(p^G_1(p), ..., p^G_d(p))``.

    The returned certificate bounds the probability that a prime beyond the
    cutoff would have contributed a factor other than ``F(1, .., p, .., 1)``.
    """
    d = F.dim(config.d)
    primes = config.primes
    kernel = lru_cache(maxsize=None)(F.kernel)
    values: list = []
    zeros = 0
    for start in range(0, size, SAMPLE_CHUNK):
        k = min(SAMPLE_CHUNK, size - start)
        exps = geometric_batch(primes, d, k, rng)
        rows, cols = np.nonzero(exps.any(axis=2))
        chunk = [1] * k
        ps = primes[cols].tolist()
        es = [tuple(e) for e in exps[rows, cols].tolist()]
        for r, p, e in zip(rows.tolist(), ps, es):
            chunk[r] = chunk[r] * kernel(p, e)
        zeros += sum(1 for v in chunk if v == 0)
        values.extend(chunk)
    return FInfinitySample(values, config.prime_cutoff, d, tail_risk_bound(config.prime_cutoff, d), zeros)


# ---------------------------------------------------------------------------
# zeta law


def zeta_law_pmf(d: int, j: int) -> float:
    """``P{GCD limit = j} = 1 / (zeta(d) j^d)``."""
    if d < 2:
        raise DomainError(f"zeta law needs d >= 2, got {d}")
    if j < 1:
        return 0.0
    return 1.0 / (arith.zeta(d) * float(j) ** d)


class ZetaLaw:
    """Law with mass ``1/(zeta(d) j^d)`` on ``j = 1, 2, ...``.

    Sampling inverts a CDF table up to ``J`` (the first index with tail below
    ``1e-12``, capped at ``10^6``); draws beyond the table use the analytic tail
    ``T(j) ~ (j + 1/2)^(1-d) / ((d - 1) zeta(d))``.
    """

    TABLE_CAP = 10**6
    TABLE_TAIL = 1e-12

    def __init__(self, d: int):
        if d < 2:
            raise DomainError(f"zeta law needs d >= 2, got {d}")
        self.d = int(d)
        self.z = arith.zeta(self.d)

    def pmf(self, j: int) -> float:
        return zeta_law_pmf(self.d, j)

    def tail(self, j: float) -> float:
        """Approximate ``P{X > j}``."""
        return (j + 0.5) ** (1 - self.d) / ((self.d - 1) * self.z)

    @cached_property
    def table(self) -> np.ndarray:
        J = min(self.TABLE_CAP, math.ceil((self.TABLE_TAIL * (self.d - 1) * self.z) ** (-1 / (self.d - 1))))
        j = np.arange(1, J + 1, dtype=float)
        return np.cumsum(j ** -float(self.d) / self.z)

    def cdf(self, j: int) -> float:
        if j < 1:
            return 0.0
        if j <= len(self.table):
            return float(self.table[j - 1])
        return 1.0 - self.tail(j)

    def sample(self, rng: np.random.Generator, size=None):
        u = rng.random(size)
        cdf = self.table
        j = np.searchsorted(cdf, u, side="right") + 1
        far = j > len(cdf)
        if np.any(far):
            rest = np.maximum(1.0 - np.asarray(u)[far], np.finfo(float).tiny)
            jf = np.ceil((rest * (self.d - 1) * self.z) ** (-1 / (self.d - 1)) - 0.5)
            j = np.asarray(j, dtype=np.int64)
            j[far] = np.maximum(jf, len(cdf) + 1).astype(np.int64)
        return int(j) if size is None else np.asarray(j, dtype=np.int64)

    def describe(self) -> dict:
        return {"law": "zeta", "d": self.d, "zeta_d": self.z}


def sample_zeta_law(d: int, rng: np.random.Generator, size=None):
    return _zeta_law(d).sample(rng, size)


@lru_cache(maxsize=16)
def _zeta_law(d: int) -> ZetaLaw:
    return ZetaLaw(d)


def gcd_limit_moment(d: int, s: float) -> float:
    """``E[GCD_inf^s] = zeta(d - s) / zeta(d)`` for ``s < d - 1``."""
    if not s < d - 1:
        raise DomainError(f"moment of order s={s} is infinite for d={d} (need s < d - 1)")
    if s == 0:
        return 1.0
    return arith.zeta(d - s) / arith.zeta(d)
