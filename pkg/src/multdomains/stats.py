"""Exact and Monte Carlo laws of ``F(X)`` for ``X`` uniform on a domain, and
their distances to limit laws.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Union

import numpy as np

from .domains import DomainFamily, LatticeDomain
from .errors import ConfigError, ResourceError
from .limitlaw import LimitSampleConfig, ZetaLaw, sample_F_infinity
from .multfunc import ENUMERATION_BUDGET, MultiplicativeFunction, value_counts, values_at

DEFAULT_GRID = 1e-9
EXACT = "exact"


def bin_value(v, grid: float = DEFAULT_GRID):
    """Exact values pass through; reals and complexes snap to ``grid``."""
    if isinstance(v, (int, Fraction, np.integer)):
        return int(v) if isinstance(v, np.integer) else v
    v = complex(v)
    re = round(v.real / grid) * grid
    if v.imag == 0:
        return re
    return complex(re, round(v.imag / grid) * grid)


@dataclass
class EmpiricalDistribution:
    masses: dict
    grid: Union[str, float] = EXACT
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_counts(cls, counts: Counter, grid: float = DEFAULT_GRID, **meta) -> EmpiricalDistribution:
        total = sum(counts.values())
        if total <= 0:
            raise ConfigError("cannot build a distribution from zero observations")
        exact = all(isinstance(k, (int, Fraction)) for k in counts)
        if exact:
            masses = {k: Fraction(c, total) for k, c in sorted(counts.items())}
            return cls(masses, EXACT, meta)
        binned: Counter = Counter()
        for k, c in counts.items():
            binned[bin_value(k, grid)] += c
        return cls({k: c / total for k, c in binned.items()}, float(grid), meta)

    @classmethod
    def from_values(cls, values: Iterable, grid: float = DEFAULT_GRID, **meta) -> EmpiricalDistribution:
        return cls.from_counts(Counter(values), grid, **meta)

    @property
    def total_mass(self):
        return sum(self.masses.values())

    def mass(self, key):
        return self.masses.get(key, 0)

    def mean(self):
        return sum(k * m for k, m in self.masses.items())

    def cdf_points(self) -> tuple[list, list]:
        keys = sorted(self.masses, key=_real_key)
        acc, out = 0, []
        for k in keys:
            acc += self.masses[k]
            out.append(acc)
        return keys, out

    def to_json(self) -> dict:
        return {
            "grid": self.grid,
            "meta": self.meta,
            "support": [{"value": fmt_value(k), "mass": fmt_value(m)} for k, m in sorted(self.masses.items(), key=lambda kv: _real_key(kv[0]))],
        }

    def to_csv(self, fh=None) -> str | None:
        out = fh or io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["value", "mass"])
        for k in sorted(self.masses, key=_real_key):
            w.writerow([fmt_value(k), fmt_value(self.masses[k])])
        return out.getvalue() if fh is None else None


def fmt_value(v) -> str | float:
    """Fractions as ``num/den`` strings; other values unchanged (complex as ``a+bj``)."""
    if isinstance(v, Fraction) and v.denominator == 1:
        return str(v.numerator)
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, complex):
        return repr(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _real_key(k):
    if isinstance(k, complex):
        if k.imag != 0:
            raise ConfigError("complex-valued laws have no CDF")
        return k.real
    return k


def exact_distribution(F: MultiplicativeFunction, D: LatticeDomain, budget: int = ENUMERATION_BUDGET,
                       grid: float = DEFAULT_GRID, threads: int = 1) -> EmpiricalDistribution:
    counts = value_counts(F, D, budget, threads)
    return EmpiricalDistribution.from_counts(counts, grid, method="exact", domain=D.spec, function=F.spec,
                                             cardinality=D.cardinality)


def monte_carlo_distribution(F: MultiplicativeFunction, D: LatticeDomain, N: int, rng: np.random.Generator,
                             grid: float = DEFAULT_GRID, strategy: str = "auto") -> EmpiricalDistribution:
    if N < 1:
        raise ConfigError(f"sample count must be >= 1, got {N}")
    pts = D.sample_uniform(rng, size=N, strategy=strategy)
    return EmpiricalDistribution.from_values(values_at(F, pts), grid, method="monte_carlo", samples=N,
                                             domain=D.spec, function=F.spec)


def f_infinity_reference(F: MultiplicativeFunction, config: LimitSampleConfig, rng: np.random.Generator,
                         N: int, grid: float = DEFAULT_GRID) -> EmpiricalDistribution:
    s = sample_F_infinity(F, config, rng, N)
    return EmpiricalDistribution.from_values(s.values, grid, method="f_infinity", samples=N, **s.certificate)


# ---------------------------------------------------------------------------
# distances


def _check_grids(P: EmpiricalDistribution, Q: EmpiricalDistribution) -> None:
    if P.grid != Q.grid:
        raise ConfigError(f"incomparable key grids {P.grid!r} and {Q.grid!r}")


def tv_distance(P: EmpiricalDistribution, Q) -> float:
    """Total variation ``(1/2) sum |P - Q|``; exact when both laws are exact.

    ``Q`` may be an analytic law with a ``pmf`` (e.g. :class:`ZetaLaw`): the
    mass of ``Q`` outside the support of ``P`` is then ``1 - Q(supp P)``.
    """
    if isinstance(Q, EmpiricalDistribution):
        _check_grids(P, Q)
        keys = set(P.masses) | set(Q.masses)
        return sum(abs(P.mass(k) - Q.mass(k)) for k in keys) / 2
    qs = {k: Q.pmf(_int_key(k)) for k in P.masses}
    outside = max(0.0, 1.0 - sum(qs.values()))
    return float((sum(abs(float(P.masses[k]) - q) for k, q in qs.items()) + outside) / 2)


def _int_key(k) -> int:
    if isinstance(k, Fraction) and k.denominator == 1:
        k = k.numerator
    if isinstance(k, int):
        return k
    raise ConfigError(f"analytic integer law compared with non-integer value {k!r}")


def ks_distance(P: EmpiricalDistribution, Q) -> float:
    """Kolmogorov-Smirnov ``sup |CDF_P - CDF_Q|`` over the union support."""
    if isinstance(Q, EmpiricalDistribution):
        _check_grids(P, Q)
        keys = sorted(set(P.masses) | set(Q.masses), key=_real_key)
        fp = fq = 0
        worst = 0
        for k in keys:
            fp += P.mass(k)
            fq += Q.mass(k)
            worst = max(worst, abs(fp - fq))
        return worst
    # analytic integer law: its CDF jumps at every integer
    top = max(_int_key(k) for k in P.masses)
    fp, worst = 0, 0.0
    for j in range(1, top + 1):
        fp += P.mass(j)
        worst = max(worst, abs(float(fp) - Q.cdf(j)))
    return worst


# ---------------------------------------------------------------------------
# convergence reports


@dataclass
class ConvergenceReport:
    reference: dict
    rows: list
    function: dict
    family: dict | None

    def to_json(self) -> dict:
        return {"reference": self.reference, "function": self.function, "family": self.family, "rows": self.rows}


def _describe(reference) -> dict:
    if isinstance(reference, ZetaLaw):
        return reference.describe()
    if isinstance(reference, EmpiricalDistribution):
        return {"law": "empirical", **reference.meta}
    raise ConfigError(f"unsupported reference {reference!r}")


def _as_float(x) -> float:
    return float(x)


def convergence_sweep(F: MultiplicativeFunction, family: DomainFamily, reference, budget: int = ENUMERATION_BUDGET,
                      rng: np.random.Generator | None = None, mc_samples: int = 10**5,
                      grid: float = DEFAULT_GRID, threads: int = 1) -> tuple[ConvergenceReport, dict]:
    """Distances from the law of ``F`` on each ``D_n`` to ``reference``.

    Uses the exact law when ``D_n`` fits in ``budget`` points, otherwise a
    Monte Carlo estimate with ``mc_samples`` draws (``rng`` required). Returns
    the report and the per-``n`` distributions.
    """
    rows, dists = [], {}
    for n, D in family:
        dist = None
        if D._materialize_ok(budget):
            try:
                dist = exact_distribution(F, D, budget, grid, threads)
                method, samples = "exact", None
            except ResourceError:
                dist = None
        if dist is None:
            if rng is None:
                raise ConfigError(f"domain at n={n} exceeds the budget and no rng was supplied")
            dist = monte_carlo_distribution(F, D, mc_samples, rng, grid)
            method, samples = "monte_carlo", mc_samples
        dists[n] = dist
        ks = None
        try:
            ks = _as_float(ks_distance(dist, reference))
        except ConfigError:
            pass
        rows.append({
            "n": n,
            "method": method,
            "samples": samples,
            "cardinality": D.cardinality if method == "exact" else None,
            "tv": _as_float(tv_distance(dist, reference)),
            "ks": ks,
        })
    report = ConvergenceReport(_describe(reference), rows, F.spec, family.template)
    return report, dists
