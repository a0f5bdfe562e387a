"""Integer kernels: smallest-prime-factor sieve, factorization, prime-exponent
algebra and a certified real zeta function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DomainError, OutOfRangeError, ResourceError

DEFAULT_SIEVE_LIMIT = 10**7
MEMORY_BUDGET_BYTES = 1 << 30


@dataclass(frozen=True)
class SpfTable:
    """Smallest prime factor of every integer in ``[2, limit]``.

    ``spf[0]`` and ``spf[1]`` are 0 and 1 respectively; they are never used
    for factorization.
    """

    limit: int
    spf: np.ndarray = field(repr=False)

    def __contains__(self, n: int) -> bool:
        return 1 <= n <= self.limit


def build_spf_table(limit: int, memory_budget: int = MEMORY_BUDGET_BYTES) -> SpfTable:
    if limit < 2:
        raise ConfigError(f"sieve limit must be >= 2, got {limit}")
    dtype = np.int32 if limit < 2**31 else np.int64
    if (limit + 1) * np.dtype(dtype).itemsize > memory_budget:
        raise ResourceError(
            f"sieve up to {limit} needs {(limit + 1) * np.dtype(dtype).itemsize} bytes, "
            f"budget is {memory_budget}"
        )
    spf = np.zeros(limit + 1, dtype=dtype)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            multiples = spf[p * p :: p]
            multiples[multiples == 0] = p
    unset = spf == 0
    spf[unset] = np.arange(limit + 1, dtype=dtype)[unset]
    spf.setflags(write=False)
    return SpfTable(limit, spf)


@lru_cache(maxsize=8)
def default_table(limit: int = DEFAULT_SIEVE_LIMIT) -> SpfTable:
    """Process-wide cached sieve (tables are immutable, so sharing is safe)."""
    return build_spf_table(limit)


def table_for(n_max: int) -> SpfTable:
    """Smallest cached table covering ``n_max``, rounded up to a power of ten."""
    limit = 10 ** max(3, math.ceil(math.log10(max(n_max, 2) + 1)))
    return default_table(limit)


def primes_up_to(limit: int) -> list[int]:
    if limit < 2:
        raise ConfigError(f"limit must be >= 2, got {limit}")
    return primes_array(limit).tolist()


def primes_array(limit: int) -> np.ndarray:
    """Primes ``<= limit`` as an int64 array (Eratosthenes on odd numbers)."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(limit // 2 + 1, dtype=bool)  # sieve[i] <-> 2i+1
    sieve[0] = False
    for i in range(1, (math.isqrt(limit) - 1) // 2 + 1):
        if sieve[i]:
            p = 2 * i + 1
            sieve[p * p // 2 :: p] = False
    odd = 2 * np.flatnonzero(sieve) + 1
    odd = odd[odd <= limit]
    return np.concatenate(([2], odd)).astype(np.int64)


@dataclass(frozen=True)
class PrimeExponentVector:
    """Sparse map prime -> exponent.

    Exponents are nonzero; negative exponents (from ``max - sum``) make the
    vector stand for a reduced fraction rather than an integer.
    """

    entries: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        clean = {int(p): int(e) for p, e in sorted(self.entries.items()) if e != 0}
        object.__setattr__(self, "entries", clean)

    def get(self, p: int) -> int:
        return self.entries.get(p, 0)

    def primes(self) -> list[int]:
        return list(self.entries)

    def value(self) -> int | Fraction:
        num, den = 1, 1
        for p, e in self.entries.items():
            if e > 0:
                num *= p**e
            else:
                den *= p ** (-e)
        return num if den == 1 else Fraction(num, den)

    def __sub__(self, other: PrimeExponentVector) -> PrimeExponentVector:
        keys = set(self.entries) | set(other.entries)
        return PrimeExponentVector({p: self.get(p) - other.get(p) for p in keys})

    def __eq__(self, other):
        if isinstance(other, PrimeExponentVector):
            return self.entries == other.entries
        if isinstance(other, Mapping):
            return self.entries == {p: e for p, e in other.items() if e}
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self.entries.items()))

    def __repr__(self):
        return f"PrimeExponentVector({self.entries})"


def _check_range(n: int, table: SpfTable) -> None:
    if not 1 <= n <= table.limit:
        raise OutOfRangeError(f"{n} outside sieve range [1, {table.limit}]")


def factorize(n: int, table: SpfTable) -> PrimeExponentVector:
    _check_range(n, table)
    spf = table.spf
    out: dict[int, int] = {}
    while n > 1:
        p = int(spf[n])
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        out[p] = e
    return PrimeExponentVector(out)


def lambda_p(n: int, p: int, table: SpfTable) -> int:
    _check_range(n, table)
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


def lambda_p_array(xs: np.ndarray, p: int) -> np.ndarray:
    """Vectorised p-adic valuation of a positive integer array."""
    xs = np.asarray(xs, dtype=np.int64).copy()
    out = np.zeros(xs.shape, dtype=np.int64)
    mask = xs % p == 0
    while mask.any():
        out[mask] += 1
        xs[mask] //= p
        mask = xs % p == 0
    return out


def reconstruct(v: PrimeExponentVector) -> int | Fraction:
    return v.value()


def _combine(vs: Sequence[PrimeExponentVector], op) -> dict[int, int]:
    keys = sorted(set().union(*(v.entries for v in vs)))
    return {p: op([v.get(p) for v in vs]) for p in keys}


def exponent_min(vs: Sequence[PrimeExponentVector]) -> PrimeExponentVector:
    if not vs:
        raise ConfigError("exponent_min of an empty list")
    return PrimeExponentVector(_combine(vs, min))


def exponent_max(vs: Sequence[PrimeExponentVector]) -> PrimeExponentVector:
    if not vs:
        raise ConfigError("exponent_max of an empty list")
    return PrimeExponentVector(_combine(vs, max))


def exponent_sum(vs: Sequence[PrimeExponentVector]) -> PrimeExponentVector:
    if not vs:
        raise ConfigError("exponent_sum of an empty list")
    return PrimeExponentVector(_combine(vs, sum))


def zeta_terms_needed(s: float, rel_tol: float) -> int:
    return max(1, math.ceil(rel_tol ** (-1.0 / s)))


def zeta(s: float, rel_tol: float = 1e-12, max_terms: int = 10**9) -> float:
    """Riemann zeta for real ``s > 1``.

    Sums ``N`` terms and adds ``N**(1-s)/(s-1)``. The added integral
    overshoots the true tail by at most ``N**-s``, and ``N`` is chosen so that
    this is below ``rel_tol`` (``zeta(s) > 1`` turns it into a relative bound).
    """
    if not s > 1:
        raise DomainError(f"zeta(s) requires s > 1, got {s}")
    if not 0 < rel_tol < 1:
        raise ConfigError(f"rel_tol must be in (0, 1), got {rel_tol}")
    n_terms = zeta_terms_needed(s, rel_tol)
    if n_terms > max_terms:
        raise ResourceError(f"zeta({s}) to rel_tol={rel_tol} needs {n_terms} terms")
    return _zeta_cached(float(s), n_terms)


@lru_cache(maxsize=256)
def _zeta_cached(s: float, n_terms: int) -> float:
    chunk = 1 << 22
    total = 0.0
    # smallest terms first
    for hi in range(n_terms, 0, -chunk):
        lo = max(1, hi - chunk + 1)
        k = np.arange(hi, lo - 1, -1, dtype=np.float64)
        total += float(np.sum(k**-s))
    return total + n_terms ** (1.0 - s) / (s - 1.0)


def euclid_gcd(values: Iterable[int]) -> int:
    g = 0
    for v in values:
        g = math.gcd(g, int(v))
    return g
