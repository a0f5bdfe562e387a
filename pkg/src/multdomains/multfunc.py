"""Multivariate multiplicative functions given by their prime-power kernels.

A kernel maps ``(p, (e_1, ..., e_d))`` with ``sum(e) >= 1`` to the value
``F(p^e_1, ..., p^e_d)``; the value at the all-zero tuple is 1 by definition.
Kernels returning ``int`` or ``Fraction`` keep evaluation exact.

Builtins also carry a vectorised *code* path: ``codes(points)`` maps each
point to an integer code and ``decode(code)`` turns a code into the exact
value. Tallying codes with ``np.unique`` is what makes exact distributions
over ``10^7``-point domains affordable.
"""

from __future__ import annotations

import cmath
import itertools
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import arith
from .domains import LatticeDomain
from .errors import ConfigError, ResourceError, SingularValueError, SummabilityError

Kernel = Callable[[int, tuple], object]

ENUMERATION_BUDGET = 5 * 10**7
GENERIC_BUDGET = 10**6
DEFAULT_TAU = 1e-10
EXPONENT_CAP = 60


@dataclass(frozen=True)
class MultiplicativeFunction:
    kernel: Kernel
    name: str = "custom"
    d: Optional[int] = None
    params: dict = field(default_factory=dict)
    codes: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False, compare=False)
    decode: Optional[Callable[[int], object]] = field(default=None, repr=False, compare=False)

    def __call__(self, *x, table: arith.SpfTable | None = None):
        return evaluate(self, x, table)

    def dim(self, d: int | None = None) -> int:
        d = d if d is not None else self.d
        if d is None:
            raise ConfigError(f"function {self.name!r} needs an explicit dimension")
        return d

    @property
    def spec(self) -> dict:
        return {"name": self.name, "params": dict(self.params)}


def evaluate(F: MultiplicativeFunction, x, table: arith.SpfTable | None = None):
    """``F(x)`` as the product of kernel values over primes dividing some coordinate."""
    x = tuple(int(v) for v in x)
    if table is None:
        table = arith.table_for(max(x))
    vecs = [arith.factorize(v, table) for v in x]
    primes = sorted(set().union(*(v.entries for v in vecs)))
    out = 1
    for p in primes:
        out = out * F.kernel(p, tuple(v.get(p) for v in vecs))
    return out


# ---------------------------------------------------------------------------
# builtins


def _gcd_codes(pts):
    return np.gcd.reduce(np.asarray(pts, dtype=np.int64), axis=1)


def _lcm_codes(pts):
    """``prod(x) / lcm(x)``; LCM/prod is always the unit fraction ``1/code``."""
    pts = np.asarray(pts, dtype=np.int64)
    if pts.shape[1] * math.log2(max(int(pts.max()), 2)) < 62:
        return np.prod(pts, axis=1) // np.lcm.reduce(pts, axis=1)
    obj = pts.astype(object)
    prod = np.prod(obj, axis=1)
    lcm = np.array([math.lcm(*row) for row in pts.tolist()], dtype=object)
    return prod // lcm


def _gcd_kernel(p, e):
    return p ** min(e)


def _lcm_ratio_kernel(p, e):
    return Fraction(1, p ** (sum(e) - max(e)))


def _coprime_kernel(p, e):
    return 1 if min(e) == 0 else 0


def _one_kernel(p, e):
    return 1


def builtin_gcd(d: int | None = None) -> MultiplicativeFunction:
    return MultiplicativeFunction(_gcd_kernel, "gcd", d, {}, _gcd_codes, int)


def builtin_lcm_ratio(d: int | None = None) -> MultiplicativeFunction:
    return MultiplicativeFunction(_lcm_ratio_kernel, "lcm_ratio", d, {}, _lcm_codes, lambda k: Fraction(1, int(k)))


def builtin_coprime_indicator(d: int | None = None) -> MultiplicativeFunction:
    return MultiplicativeFunction(
        _coprime_kernel, "coprime", d, {}, lambda pts: (_gcd_codes(pts) == 1).astype(np.int64), int
    )


def builtin_gcd_power(s: float, d: int | None = None) -> MultiplicativeFunction:
    s = float(s)

    def kernel(p, e):
        return float(p) ** (s * min(e))

    return MultiplicativeFunction(kernel, "gcd_power", d, {"s": s}, _gcd_codes, lambda g: float(g) ** s)


def builtin_one(d: int | None = None) -> MultiplicativeFunction:
    return MultiplicativeFunction(_one_kernel, "one", d, {}, lambda pts: np.zeros(len(pts), dtype=np.int64), lambda c: 1)


def _demo_log(weight: Callable[[int], float], name: str, d):
    """Kernel ``exp(weight(p) * sum(e))``, so that ``F_i(p) = weight(p)``."""

    def kernel(p, e):
        return math.exp(weight(p) * sum(e))

    return MultiplicativeFunction(kernel, name, d, {})


def demo_log_one(d: int | None = None) -> MultiplicativeFunction:
    return _demo_log(lambda p: 1.0, "demo_log_one", d)


def demo_log_inv_p(d: int | None = None) -> MultiplicativeFunction:
    return _demo_log(lambda p: 1.0 / p, "demo_log_inv_p", d)


BUILTINS = {
    "gcd": builtin_gcd,
    "lcm_ratio": builtin_lcm_ratio,
    "coprime": builtin_coprime_indicator,
    "gcd_power": builtin_gcd_power,
    "one": builtin_one,
    "demo_log_one": demo_log_one,
    "demo_log_inv_p": demo_log_inv_p,
}


def builtin(name: str, d: int | None = None, **params) -> MultiplicativeFunction:
    if name not in BUILTINS:
        raise ConfigError(f"unknown function {name!r}; choose from {sorted(BUILTINS)}")
    return BUILTINS[name](d=d, **params)


# ---------------------------------------------------------------------------
# values over a domain


def value_counts(F: MultiplicativeFunction, D: LatticeDomain, budget: int = ENUMERATION_BUDGET,
                 threads: int = 1) -> Counter:
    """Exact tally ``value -> #{x in D : F(x) = value}``.

    With ``threads > 1`` the vectorised path tallies enumeration blocks on a
    thread pool; partial tallies are merged in block order.
    """
    n = D.cardinality
    if F.codes is None:
        if n > min(budget, GENERIC_BUDGET):
            raise ResourceError(
                f"{n} points exceed the budget for kernel-by-kernel evaluation; use Monte Carlo sampling"
            )
        lo, hi = D._box()
        table = arith.table_for(max(hi))
        return Counter(evaluate(F, x, table) for x in D.enumerate())
    if n > budget:
        raise ResourceError(f"{n} points exceed the enumeration budget {budget}; use Monte Carlo sampling")
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    tally: Counter = Counter()
    if threads == 1:
        for block in D.iter_blocks():
            tally.update(code_counts(F, block))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(lambda b: code_counts(F, b), D.iter_blocks()):
                tally.update(part)
    return Counter({F.decode(c): k for c, k in tally.items()})


def code_counts(F: MultiplicativeFunction, pts: np.ndarray) -> Counter:
    codes = F.codes(pts)
    vals, counts = np.unique(codes, return_counts=True)
    return Counter(dict(zip(vals.tolist(), counts.tolist())))


def values_at(F: MultiplicativeFunction, pts: np.ndarray) -> list:
    """Exact values of ``F`` at each row of ``pts``."""
    if F.codes is not None:
        decode = lru_cache(maxsize=None)(F.decode)
        return [decode(c) for c in F.codes(pts).tolist()]
    table = arith.table_for(int(np.max(pts)))
    return [evaluate(F, row, table) for row in pts.tolist()]


def empirical_mean(F: MultiplicativeFunction, D: LatticeDomain, budget: int = ENUMERATION_BUDGET,
                   threads: int = 1):
    """Average of ``F`` over the domain; exact ``Fraction`` on the rational path."""
    counts = value_counts(F, D, budget, threads)
    total = sum(counts.values())
    acc = sum(v * k for v, k in counts.items())
    if isinstance(acc, (int, Fraction)):
        return Fraction(acc, total)
    return acc / total


# ---------------------------------------------------------------------------
# Euler product


@dataclass
class MeanValueResult:
    value: complex
    prime_cutoff: int
    tau: float
    max_tail_bound: float
    total_tail_bound: float
    max_degree: int

    @property
    def certificate(self) -> dict:
        return {
            "prime_cutoff": self.prime_cutoff,
            "tau": self.tau,
            "max_prime_tail_bound": self.max_tail_bound,
            "sum_prime_tail_bounds": self.total_tail_bound,
            "max_exponent_degree": self.max_degree,
        }


@lru_cache(maxsize=None)
def compositions(t: int, d: int) -> tuple[tuple[int, ...], ...]:
    """All ``e in N_0^d`` with ``sum(e) == t`` (stars and bars)."""
    out = []
    for bars in itertools.combinations(range(t + d - 1), d - 1):
        prev, e = -1, []
        for b in bars:
            e.append(b - prev - 1)
            prev = b
        e.append(t + d - 2 - prev)
        out.append(tuple(e))
    return tuple(out)


def local_factor(F: MultiplicativeFunction, p: int, d: int, tau: float = DEFAULT_TAU,
                 exponent_cap: int = EXPONENT_CAP) -> tuple[complex, float, int]:
    """``(1 - 1/p)^d * sum_e F(p^e) / p^|e|``, truncated by total degree.

    Degree ``t`` contributes ``S_t``. Summation stops once the successive
    ratio ``q = |S_t| / |S_{t-1}|`` is below 1 and the geometric bound
    ``|S_t| q / (1 - q)`` on the remaining degrees is below ``tau``; the bound
    is exact when the ratios are nonincreasing. Returns ``(factor, bound, t)``.
    """
    total = 1.0 + 0j
    prev = 1.0
    for t in range(1, exponent_cap + 1):
        s_t = sum(complex(F.kernel(p, e)) for e in compositions(t, d)) * float(p) ** -t
        total += s_t
        mag = abs(s_t)
        if mag == 0.0 and prev == 0.0:
            return total * (1 - 1 / p) ** d, 0.0, t
        if prev > 0:
            q = mag / prev
            if q < 1:
                bound = mag * q / (1 - q)
                if bound < tau:
                    return total * (1 - 1 / p) ** d, bound, t
        prev = mag
    raise SummabilityError(
        f"local sum of {F.name} at p={p} does not decay below tau={tau} within degree {exponent_cap}"
    )


def mean_value(F: MultiplicativeFunction, prime_cutoff: int = 10**4, tau: float = DEFAULT_TAU,
               d: int | None = None, exponent_cap: int = EXPONENT_CAP) -> MeanValueResult:
    """Truncated Euler product ``prod_{p <= P}`` of local factors."""
    d = F.dim(d)
    value = 1.0 + 0j
    worst, total_bound, deg = 0.0, 0.0, 0
    for p in arith.primes_up_to(prime_cutoff):
        factor, bound, t = local_factor(F, p, d, tau, exponent_cap)
        value *= factor
        worst, total_bound, deg = max(worst, bound), total_bound + bound, max(deg, t)
    return MeanValueResult(value, prime_cutoff, tau, worst, total_bound, deg)


# ---------------------------------------------------------------------------
# series conditions


def f_i_log(F: MultiplicativeFunction, i: int, p: int, d: int | None = None) -> tuple[complex, bool]:
    """Principal log of ``F(1, .., p, .., 1)`` (``p`` at 0-based position ``i``).

    The flag is true when the value sits on the branch cut (negative reals).
    """
    d = F.dim(d)
    e = tuple(1 if k == i else 0 for k in range(d))
    v = complex(F.kernel(p, e))
    if v == 0:
        raise SingularValueError(f"{F.name}(1,..,{p},..,1) = 0 at position {i}")
    return cmath.log(v), (v.imag == 0 and v.real < 0)


@dataclass
class SeriesCheckResult:
    prime_cutoff: int
    A: float
    S1: float
    S2: complex
    S3: float
    T1: float
    T2: float
    branch_cut_incidents: int
    allowance: int
    singular: bool
    partials: dict  # cutoff -> {"S1","S2","S3","T1","T2"}
    tol: float
    three_series_convergent: bool
    two_series_convergent: bool

    @property
    def convergent(self) -> bool:
        return self.three_series_convergent

    def to_json(self) -> dict:
        def enc(v):
            if isinstance(v, complex):
                return v.real if v.imag == 0 else {"re": v.real, "im": v.imag}
            return v

        return {
            "prime_cutoff": self.prime_cutoff,
            "A": self.A,
            "S1": self.S1, "S2": enc(self.S2), "S3": self.S3,
            "T1": self.T1, "T2": self.T2,
            "branch_cut_incidents": self.branch_cut_incidents,
            "branch_cut_allowance": self.allowance,
            "singular": self.singular,
            "tol": self.tol,
            "partials": {str(k): {n: enc(v) for n, v in row.items()} for k, row in self.partials.items()},
            "three_series_convergent": self.three_series_convergent,
            "two_series_convergent": self.two_series_convergent,
        }


def _series(F, A, prime_cutoff, d, tol, allowance) -> SeriesCheckResult:
    if not A > 0:
        raise ConfigError(f"A must be positive, got {A}")
    d = F.dim(d)
    checkpoints = sorted({max(2, prime_cutoff // 100), max(2, prime_cutoff // 10), prime_cutoff})
    sums = dict(S1=0.0, S2=0j, S3=0.0, T1=0.0, T2=0.0)
    partials, incidents, singular = {}, 0, False
    primes = arith.primes_up_to(prime_cutoff)
    nxt = iter(checkpoints)
    mark = next(nxt)
    for p in primes:
        while p > mark:
            partials[mark] = dict(sums)
            mark = next(nxt)
        for i in range(d):
            try:
                val, cut = f_i_log(F, i, p, d)
            except SingularValueError:
                singular = True
                continue
            incidents += cut
            a = abs(val)
            if a > A:
                sums["S1"] += 1 / p
                sums["T1"] += 1 / p
            else:
                sums["S2"] += val / p
                sums["S3"] += a * a / p
                sums["T2"] += a / p
    for m in checkpoints:
        partials.setdefault(m, dict(sums))

    def stable(name):
        vals = [partials[m][name] for m in checkpoints]
        return all(abs(b - a) < tol for a, b in zip(vals, vals[1:]))

    ok = not singular and incidents <= allowance
    return SeriesCheckResult(
        prime_cutoff, A, sums["S1"], sums["S2"], sums["S3"], sums["T1"], sums["T2"],
        incidents, allowance, singular, partials, tol,
        ok and all(stable(n) for n in ("S1", "S2", "S3")),
        ok and all(stable(n) for n in ("T1", "T2")),
    )


def three_series_check(F: MultiplicativeFunction, A: float = 1.0, prime_cutoff: int = 10**4,
                       d: int | None = None, tol: float = 1e-2, allowance: int = 0) -> SeriesCheckResult:
    """Partial sums of the three Kolmogorov-type series over ``p <= prime_cutoff``.

    Convergence is judged by stability over the last two decades of the
    cutoff; more than ``allowance`` branch-cut values counts as divergence.
    """
    return _series(F, A, prime_cutoff, d, tol, allowance)


def two_series_check(F: MultiplicativeFunction, A: float = 1.0, prime_cutoff: int = 10**4,
                     d: int | None = None, tol: float = 1e-2, allowance: int = 0) -> SeriesCheckResult:
    """Absolute-convergence variant; read ``T1``, ``T2`` and ``two_series_convergent``."""
    return _series(F, A, prime_cutoff, d, tol, allowance)
