"""Finite-n evidence for the two standing hypotheses on a domain sequence:
regular growth (shifted copies overlap almost fully) and the divisibility
bound ``ab * #(D cap Z_i(a) cap Z_j(b)) <= K #D``.

These are diagnostics, not proofs: every flag is reported together with the
threshold that produced it. Coordinate indices are 0-based throughout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .domains import DomainFamily, LatticeDomain
from .errors import ConfigError

GROWTH_THRESHOLD = 0.25
RESIDUE_THRESHOLD = 0.01


def _shift(c: Sequence[int], d: int) -> np.ndarray:
    c = np.asarray(c, dtype=np.int64)
    if c.shape != (d,):
        raise ConfigError(f"shift {tuple(c)} does not match dimension {d}")
    return c


def unit_shift(k: int, d: int, sign: int = 1) -> tuple[int, ...]:
    return tuple(sign if i == k else 0 for i in range(d))


def symdiff_shift_count(D: LatticeDomain, c: Sequence[int]) -> int:
    """``#(D symmetric-difference (D + c))``.

    ``D \\ (D + c)`` holds the members ``x`` with ``x - c`` outside ``D``;
    ``(D + c) \\ D`` is counted by the mirrored pass over ``x + c``.
    """
    c = _shift(c, D.d)
    if not c.any():
        return 0
    total = 0
    for block in D.iter_blocks():
        total += int(np.count_nonzero(~D.contains(block - c)))
        total += int(np.count_nonzero(~D.contains(block + c)))
    return total


def van_hove_ratio(D: LatticeDomain, c: Sequence[int]) -> float:
    return symdiff_shift_count(D, c) / D.cardinality


def neighborhood_growth_ratio(D: LatticeDomain) -> float:
    """``#(D^1 \\ D) / #D`` with ``D^1`` the sup-metric 1-neighbourhood in Z^d."""
    offsets = [np.array(o, dtype=np.int64) for o in itertools.product((-1, 0, 1), repeat=D.d) if any(o)]
    outside = []
    for block in D.iter_blocks():
        for o in offsets:
            moved = block + o
            outside.append(moved[~D.contains(moved)])
    pts = np.concatenate(outside)
    n_out = len(np.unique(pts, axis=0)) if len(pts) else 0
    return n_out / D.cardinality


def residue_count(D: LatticeDomain, residues: Sequence[int], moduli: Sequence[int]) -> int:
    if len(residues) != D.d or len(moduli) != D.d:
        raise ConfigError("need one residue and one modulus per coordinate")
    for j, m in zip(residues, moduli):
        if m < 1 or not 0 <= j < m:
            raise ConfigError(f"need 0 <= j < m, got j={j}, m={m}")
    return D.count_where({k: (j, m) for k, (j, m) in enumerate(zip(residues, moduli)) if m > 1})


def residue_errors(D: LatticeDomain, moduli: Sequence[int]) -> float:
    """``max_j |#D^(j,m) / #D - 1/prod(m)|`` over all residue tuples."""
    target = Fraction(1, math.prod(moduli))
    worst = Fraction(0)
    n = D.cardinality
    for js in itertools.product(*(range(m) for m in moduli)):
        worst = max(worst, abs(Fraction(residue_count(D, js, moduli), n) - target))
    return float(worst)


def divisibility_count(D: LatticeDomain, i: int, a: int, j: int | None = None, b: int | None = None) -> int:
    """``#(D cap Z_i(a) cap Z_j(b))``; omit ``j``/``b`` for the single-index count."""
    if a < 1 or (b is not None and b < 1):
        raise ConfigError("divisors must be >= 1")
    if not 0 <= i < D.d or (j is not None and not 0 <= j < D.d):
        raise ConfigError(f"coordinate index out of range for d={D.d}")
    filters = {i: (0, a)}
    if j is not None:
        if j == i:
            raise ConfigError("divisibility_count needs distinct coordinates i != j")
        filters[j] = (0, b if b is not None else 1)
    return D.count_where({k: v for k, v in filters.items() if v[1] > 1})


@dataclass
class KEstimate:
    value: Fraction
    argmax: tuple  # (i, j, a, b)
    grid: dict

    def __float__(self):
        return float(self.value)

    def to_json(self) -> dict:
        return {"K_estimate": float(self.value), "exact": f"{self.value.numerator}/{self.value.denominator}",
                "argmax": list(self.argmax), "grid": self.grid}


def estimate_K(D: LatticeDomain, a_max: int = 30, b_max: int = 30) -> KEstimate:
    """``max ab #(D cap Z_i(a) cap Z_j(b)) / #D`` over ``i != j``, ``a <= a_max``, ``b <= b_max``.

    A lower bound on any admissible constant, valid only for the scanned grid.
    """
    if a_max < 1 or b_max < 1:
        raise ConfigError("grid bounds must be >= 1")
    if D.d < 2:
        raise ConfigError("the divisibility bound needs d >= 2")
    n = D.cardinality
    best, arg = Fraction(0), None
    for i, j in itertools.permutations(range(D.d), 2):
        for a in range(1, a_max + 1):
            for b in range(1, b_max + 1):
                val = Fraction(a * b * divisibility_count(D, i, a, j, b), n)
                if val > best:
                    best, arg = val, (i, j, a, b)
    return KEstimate(best, arg, {"a_max": a_max, "b_max": b_max, "pairs": "all i != j"})


def boundary_slice_ratio(family: DomainFamily, i: int) -> dict:
    """``#D_{n,i} / #D_n`` where ``D_{n,i}`` fixes argument ``i`` of ``f`` to 1."""
    out = {}
    for n, D in family:
        if not D.is_sublevel:
            raise ConfigError(f"{D.spec['type']} is not a monotone sublevel domain")
        out[n] = D.count_where({i: (1, 1 << 62)}) / D.cardinality
    return out


# ---------------------------------------------------------------------------
# reports


def _decreasing(seq: Sequence[float]) -> bool:
    return all(b < a or a == b == 0 for a, b in zip(seq, seq[1:]))


@dataclass
class DiagnosticsReport:
    domain_spec: dict | None
    entries: list = field(default_factory=list)
    flags: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)

    def ratios(self, c: Sequence[int]) -> list[float]:
        key = list(c)
        return [s["ratio"] for e in self.entries for s in e["shifts"] if s["c"] == key]

    def to_json(self) -> dict:
        return {"domain_spec": self.domain_spec, "entries": self.entries, "flags": self.flags,
                "thresholds": self.thresholds}


def _shift_set(d: int, unit_shifts_only: bool) -> list[tuple[int, ...]]:
    shifts = [unit_shift(k, d) for k in range(d)]
    if not unit_shifts_only:
        shifts += [unit_shift(k, d, -1) for k in range(d)]
        shifts.append((1,) * d)
    return shifts


def regular_growth_check(family: DomainFamily, unit_shifts_only: bool = True,
                         threshold: float = GROWTH_THRESHOLD) -> DiagnosticsReport:
    """Van Hove ratios along the family for the unit shifts (optionally ``-e_k`` and ``1``).

    Flagged consistent when every unit-shift ratio sequence strictly decreases
    and its last value is at most ``threshold``.
    """
    if len(family) < 3:
        raise ConfigError("regular growth check needs at least 3 family members")
    d = family[family.ns[0]].d
    shifts = _shift_set(d, unit_shifts_only)
    report = DiagnosticsReport(family.template, thresholds={"growth_ratio": threshold})
    for n, D in family:
        size = D.cardinality
        rows = []
        for c in shifts:
            delta = symdiff_shift_count(D, c)
            rows.append({"c": list(c), "delta": delta, "ratio": delta / size})
        report.entries.append({"n": n, "cardinality": size, "shifts": rows})
    ok = True
    for k in range(d):
        seq = report.ratios(unit_shift(k, d))
        ok &= all(b < a for a, b in zip(seq, seq[1:])) and seq[-1] <= threshold
    report.flags["regular_growth_consistent"] = bool(ok)
    return report


def uniformity_report(family: DomainFamily, moduli_list: Sequence[Sequence[int]],
                      threshold: float = RESIDUE_THRESHOLD) -> dict:
    out = {}
    for m in moduli_list:
        errs = [residue_errors(D, m) for _, D in family]
        out[",".join(map(str, m))] = {
            "moduli": list(m),
            "errors": dict(zip(family.ns, errs)),
            "decreasing": _decreasing(errs),
            "final_below_threshold": errs[-1] <= threshold,
        }
    return out


def diagnose(family: DomainFamily, moduli_list: Sequence[Sequence[int]] = ((2, 2),), a_max: int = 30,
             b_max: int = 30, unit_shifts_only: bool = True, threshold: float = GROWTH_THRESHOLD,
             residue_threshold: float = RESIDUE_THRESHOLD, neighborhood: bool = True) -> DiagnosticsReport:
    """Full report: shift ratios, neighbourhood growth, residue errors and K estimates per ``n``."""
    report = regular_growth_check(family, unit_shifts_only, threshold)
    report.thresholds["residue_error"] = residue_threshold
    uni = uniformity_report(family, moduli_list, residue_threshold)
    k_ok = True
    for entry in report.entries:
        D = family[entry["n"]]
        entry["domain_spec"] = D.spec
        if neighborhood:
            entry["neighborhood_ratio"] = neighborhood_growth_ratio(D)
        entry["residue_errors"] = {key: u["errors"][entry["n"]] for key, u in uni.items()}
        if D.d >= 2:
            K = estimate_K(D, a_max, b_max)
            entry.update(K.to_json())
            k_ok &= K.value <= 1
    report.flags["residue_uniformity_decreasing"] = {key: u["decreasing"] for key, u in uni.items()}
    if family[family.ns[0]].d >= 2:
        report.flags["K_at_most_1_on_grid"] = bool(k_ok)
    return report
