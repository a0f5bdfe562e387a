"""Finite integer domains in N^d = {1, 2, ...}^d.

Every domain is stored internally as *runs*: maximal intervals ``[lo, hi]``
along the last axis, keyed by the prefix of the first ``d - 1`` coordinates
and sorted lexicographically. Cardinality, enumeration, residue counting and
index-based uniform sampling all work on runs, so a domain with ``10^7``
points usually costs only ``10^3``--``10^6`` runs of memory.

Membership functions and sublevel functions are vectorised: they receive an
``(m, d)`` array of coordinates and return an ``(m,)`` array.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import (
    ConfigError,
    ContractViolationError,
    EmptyDomainError,
    ResourceError,
    StrategyError,
)

MATERIALIZE_CAP = 2 * 10**7
REJECTION_FLOOR = 1e-6
PROBE_DRAWS = 1000
BLOCK_POINTS = 1 << 20
_GALLOP_LIMIT = 1 << 62

Point = tuple


@dataclass(frozen=True)
class Runs:
    prefix: np.ndarray  # (m, d-1) int64
    lo: np.ndarray  # (m,)
    hi: np.ndarray  # (m,)

    @property
    def lengths(self) -> np.ndarray:
        return self.hi - self.lo + 1

    @cached_property
    def ends(self) -> np.ndarray:
        """Cumulative point count through each run."""
        return np.cumsum(self.lengths)

    def __len__(self):
        return len(self.lo)

    @classmethod
    def empty(cls, d: int) -> Runs:
        z = np.zeros(0, dtype=np.int64)
        return cls(np.zeros((0, d - 1), dtype=np.int64), z, z.copy())


def _expand(prefix: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Materialise the points of a batch of runs as an ``(n, d)`` array."""
    lengths = hi - lo + 1
    total = int(lengths.sum())
    starts = np.cumsum(lengths) - lengths
    offsets = np.arange(total, dtype=np.int64) - np.repeat(starts, lengths)
    last = np.repeat(lo, lengths) + offsets
    rows = np.repeat(prefix, lengths, axis=0)
    return np.column_stack([rows, last]) if prefix.shape[1] else last[:, None]


def _extend_prefixes(prefix: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Append one coordinate ranging over ``[lo, hi]`` to every prefix row."""
    keep = hi >= lo
    return _expand(prefix[keep], lo[keep], hi[keep])


def _box_prefixes(lo: Sequence[int], hi: Sequence[int]) -> np.ndarray:
    prefix = np.zeros((1, 0), dtype=np.int64)
    for a, b in zip(lo, hi):
        m = len(prefix)
        prefix = _extend_prefixes(prefix, np.full(m, a, dtype=np.int64), np.full(m, b, dtype=np.int64))
    return prefix


class LatticeDomain:
    """Base class: a finite nonempty subset of N^d."""

    d: int

    # -- to be provided by subclasses -------------------------------------
    def contains(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _compute_runs(self) -> Runs:
        raise NotImplementedError

    def _box(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        raise NotImplementedError

    @property
    def spec(self) -> dict:
        raise NotImplementedError

    # sublevel domains know their slice sets (fix one argument of f to 1)
    is_sublevel = False

    # -- shared machinery --------------------------------------------------
    def __contains__(self, point) -> bool:
        pts = np.asarray(point, dtype=np.int64).reshape(1, -1)
        if pts.shape[1] != self.d:
            return False
        return bool(self.contains(pts)[0])

    @cached_property
    def runs(self) -> Runs:
        try:
            runs = self._compute_runs()
        except MemoryError as exc:
            raise ResourceError(f"run table for {self.spec} does not fit in memory") from exc
        if len(runs) == 0:
            raise EmptyDomainError(f"domain {self.spec} has no lattice points")
        return runs

    @cached_property
    def cardinality(self) -> int:
        return int(self.runs.lengths.sum())

    def __len__(self):
        return self.cardinality

    def bounding_box(self) -> Box:
        lo, hi = self._box()
        return Box(lo, hi)

    def iter_blocks(self, block_points: int = BLOCK_POINTS) -> Iterator[np.ndarray]:
        """Yield the members as ``(k, d)`` int64 arrays, in lexicographic order."""
        runs = self.runs
        ends = runs.ends
        start = 0
        n_runs = len(runs)
        while start < n_runs:
            base = ends[start - 1] if start else 0
            stop = int(np.searchsorted(ends, base + block_points, side="right"))
            stop = max(stop, start + 1)
            # a single run longer than a block is split
            if stop == start + 1 and runs.lengths[start] > block_points:
                lo, hi = int(runs.lo[start]), int(runs.hi[start])
                pre = runs.prefix[start : start + 1]
                for a in range(lo, hi + 1, block_points):
                    b = min(hi, a + block_points - 1)
                    yield _expand(pre, np.array([a]), np.array([b]))
            else:
                yield _expand(runs.prefix[start:stop], runs.lo[start:stop], runs.hi[start:stop])
            start = stop

    def enumerate(self) -> Iterator[Point]:
        for block in self.iter_blocks():
            yield from map(tuple, block.tolist())

    def points(self) -> np.ndarray:
        return np.concatenate(list(self.iter_blocks()))

    def point_at(self, index: np.ndarray) -> np.ndarray:
        """Members at the given positions of the lexicographic enumeration."""
        runs = self.runs
        index = np.asarray(index, dtype=np.int64)
        k = np.searchsorted(runs.ends, index, side="right")
        offset = index - (runs.ends[k] - runs.lengths[k])
        last = runs.lo[k] + offset
        return np.column_stack([runs.prefix[k], last])

    def count_where(self, axis_filters: dict[int, tuple[int, int]]) -> int:
        """Number of members with ``x[axis] % m == r`` for every ``axis: (r, m)``."""
        runs = self.runs
        weight = runs.lengths.copy()
        last = self.d - 1
        if last in axis_filters:
            r, m = axis_filters[last]
            weight = (runs.hi - r) // m - (runs.lo - 1 - r) // m
        mask = np.ones(len(runs), dtype=bool)
        for axis, (r, m) in axis_filters.items():
            if axis != last:
                mask &= runs.prefix[:, axis] % m == r % m
        return int(weight[mask].sum())

    def to_csv(self, fh=None) -> str | None:
        out = fh or io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(self.d)])
        for block in self.iter_blocks():
            w.writerows(block.tolist())
        return out.getvalue() if fh is None else None

    # -- sampling ----------------------------------------------------------
    def sample_uniform(
        self,
        rng: np.random.Generator,
        size: int | None = None,
        strategy: str = "auto",
        cap: int = MATERIALIZE_CAP,
        floor: float = REJECTION_FLOOR,
    ):
        """Uniform draw(s) from the domain.

        ``materialized`` indexes into the run table; ``rejection`` draws in the
        bounding box and retests membership. ``auto`` picks materialised
        sampling whenever the run table is affordable and the cardinality is at
        most ``cap``.
        """
        n = 1 if size is None else int(size)
        if strategy == "auto":
            strategy = "materialized" if self._materialize_ok(cap) else "rejection"
        if strategy == "materialized":
            if self.cardinality > cap:
                raise ResourceError(
                    f"cardinality {self.cardinality} exceeds materialization cap {cap}"
                )
            pts = self.point_at(rng.integers(0, self.cardinality, size=n))
        elif strategy == "rejection":
            pts = self._rejection(rng, n, floor)
        else:
            raise ConfigError(f"unknown sampling strategy {strategy!r}")
        return tuple(pts[0].tolist()) if size is None else pts

    def _materialize_ok(self, cap: int) -> bool:
        if "runs" in self.__dict__:
            return self.cardinality <= cap
        lo, hi = self._box()
        n_prefix = math.prod(b - a + 1 for a, b in zip(lo[:-1], hi[:-1]))
        if n_prefix > cap:
            return False
        return self.cardinality <= cap

    def _rejection(self, rng: np.random.Generator, n: int, floor: float) -> np.ndarray:
        lo, hi = self._box()
        lo_a = np.asarray(lo, dtype=np.int64)
        hi_a = np.asarray(hi, dtype=np.int64) + 1

        def draw(k):
            pts = rng.integers(lo_a, hi_a, size=(k, self.d))
            return pts[self.contains(pts)]

        # probe phase: escalate until a hit or until the floor is certified
        accepted, tried, probe = [], 0, PROBE_DRAWS
        hits = 0
        budget = int(math.ceil(10 / floor))
        while True:
            got = draw(probe)
            accepted.append(got)
            hits += len(got)
            tried += probe
            if hits >= 10 or tried >= budget:
                break
            probe = min(probe * 10, budget - tried, BLOCK_POINTS)
        rate = hits / tried
        if rate < floor:
            raise StrategyError(
                f"rejection acceptance {rate:.3g} below floor {floor:g} "
                f"after {tried} probes; use the materialized strategy"
            )
        while hits < n:
            k = min(BLOCK_POINTS, int(1.2 * (n - hits) / rate) + 16)
            got = draw(k)
            accepted.append(got)
            hits += len(got)
        return np.concatenate(accepted)[:n]

    def __repr__(self):
        return f"{type(self).__name__}({self.spec})"


# ---------------------------------------------------------------------------
# rectangles


class Box(LatticeDomain):
    """The lattice rectangle ``prod [lo_i, hi_i]``."""

    is_sublevel = True

    def __init__(self, lo: Sequence[int], hi: Sequence[int]):
        if len(lo) < 1 or len(lo) != len(hi):
            raise ConfigError("box needs d >= 1 matching lower and upper bounds")
        self.lo = tuple(max(1, int(a)) for a in lo)
        self.hi = tuple(int(b) for b in hi)
        self.d = len(self.lo)
        if any(b < a for a, b in zip(self.lo, self.hi)):
            raise EmptyDomainError(f"empty box {self.lo}..{self.hi}")

    @property
    def spec(self):
        if all(a == 1 for a in self.lo):
            return {"type": "rectangle", "params": {"dims": list(self.hi)}}
        return {"type": "box", "params": {"lo": list(self.lo), "hi": list(self.hi)}}

    def contains(self, pts):
        pts = np.asarray(pts)
        return np.all((pts >= np.asarray(self.lo)) & (pts <= np.asarray(self.hi)), axis=1)

    def _box(self):
        return self.lo, self.hi

    def _materialize_ok(self, cap):
        return self.cardinality <= cap

    @cached_property
    def cardinality(self) -> int:
        return math.prod(b - a + 1 for a, b in zip(self.lo, self.hi))

    def _compute_runs(self):
        prefix = _box_prefixes(self.lo[:-1], self.hi[:-1])
        m = len(prefix)
        return Runs(prefix, np.full(m, self.lo[-1], dtype=np.int64), np.full(m, self.hi[-1], dtype=np.int64))

    def __eq__(self, other):
        return isinstance(other, Box) and (self.lo, self.hi) == (other.lo, other.hi)

    def __hash__(self):
        return hash((self.lo, self.hi))


def rectangle(*dims: int) -> Box:
    if len(dims) == 1 and isinstance(dims[0], (list, tuple)):
        dims = tuple(dims[0])
    if len(dims) < 1:
        raise ConfigError("rectangle needs at least one side length")
    if any(int(n) < 1 for n in dims):
        raise ConfigError(f"rectangle sides must be >= 1, got {dims}")
    return Box([1] * len(dims), [int(n) for n in dims])


# ---------------------------------------------------------------------------
# sublevel sets of coordinate-wise nondecreasing functions


def _with_ones(prefix: np.ndarray, t: np.ndarray, d: int) -> np.ndarray:
    m, k = prefix.shape
    pts = np.ones((m, d), dtype=np.int64)
    pts[:, :k] = prefix
    pts[:, k] = t
    return pts


class MonotoneSublevel(LatticeDomain):
    """``{x in N^d : f(x) <= n}`` for coordinate-wise nondecreasing, divergent ``f``.

    Enumeration fixes a prefix and locates the cut on the next axis, where
    ``f(prefix, t, 1, ..., 1)`` first exceeds ``n``. The cut is found by
    vectorised bisection over all prefixes at once; it agrees with a linear
    scan whenever ``f`` is monotone. Monotonicity is spot-checked along every
    scanned ray and across neighbouring prefixes, and a violation raises
    :class:`ContractViolationError`.
    """

    is_sublevel = True

    def __init__(self, f: Callable[[np.ndarray], np.ndarray], n: float, d: int, spec: dict | None = None):
        if d < 1:
            raise ConfigError(f"dimension must be >= 1, got {d}")
        self.f = f
        self.n = n
        self.d = int(d)
        self._spec = spec or {"type": "monotone_sublevel", "params": {"f": getattr(f, "__name__", "?"), "n": n, "d": d}}
        if not self._ok(np.ones((1, self.d), dtype=np.int64))[0]:
            raise EmptyDomainError(f"sublevel set {self._spec} is empty")

    @property
    def spec(self):
        return self._spec

    def _ok(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(self.f(pts)) <= self.n

    def contains(self, pts):
        pts = np.asarray(pts, dtype=np.int64)
        inside = np.all(pts >= 1, axis=1)
        out = np.zeros(len(pts), dtype=bool)
        if inside.any():
            out[inside] = self._ok(pts[inside])
        return out

    @cached_property
    def _axis_max(self) -> tuple[int, ...]:
        """Largest admissible value on each axis (others set to 1), by galloping."""
        out = []
        for k in range(self.d):
            prefix = np.ones((1, k), dtype=np.int64)
            t, prev_val = 1, None
            while True:
                val = float(np.asarray(self.f(_with_ones(prefix, np.array([t]), self.d)))[0])
                if prev_val is not None and val < prev_val:
                    raise ContractViolationError(f"f decreases along axis {k + 1} at t={t}")
                prev_val = val
                if val > self.n:
                    break
                t *= 2
                if t > _GALLOP_LIMIT:
                    raise ContractViolationError(f"f does not diverge along axis {k + 1}")
            h = self._bisect(prefix, np.array([t // 2 if t > 1 else 0]), np.array([t - 1]))
            out.append(int(h[0]))
        return tuple(out)

    def _bisect(self, prefix, lo, hi) -> np.ndarray:
        """Largest ``t`` in ``[lo, hi]`` with ``f(prefix, t, 1..1) <= n`` (``lo`` assumed valid)."""
        lo = lo.astype(np.int64).copy()
        hi = hi.astype(np.int64).copy()
        active = np.flatnonzero(lo < hi)
        while len(active):
            mid = (lo[active] + hi[active] + 1) // 2
            ok = self._ok(_with_ones(prefix[active], mid, self.d))
            lo[active] = np.where(ok, mid, lo[active])
            hi[active] = np.where(ok, hi[active], mid - 1)
            active = active[lo[active] < hi[active]]
        return lo

    def _box(self):
        return (1,) * self.d, self._axis_max

    def _compute_runs(self):
        bound = self._axis_max
        prefix = np.zeros((1, 0), dtype=np.int64)
        for k in range(self.d):
            m = len(prefix)
            h = self._bisect(prefix, np.zeros(m, dtype=np.int64), np.full(m, bound[k], dtype=np.int64))
            self._check_monotone(prefix, h)
            if k < self.d - 1:
                prefix = _extend_prefixes(prefix, np.ones(m, dtype=np.int64), h)
            else:
                keep = h >= 1
                return Runs(prefix[keep], np.ones(int(keep.sum()), dtype=np.int64), h[keep])
        raise AssertionError("unreachable")

    def _check_monotone(self, prefix: np.ndarray, h: np.ndarray) -> None:
        ok = h >= 1
        if not ok.any():
            return
        pre, hh = prefix[ok], h[ok]
        probes = [np.ones_like(hh), (hh + 1) // 2, hh, hh + 1]
        vals = [np.asarray(self.f(_with_ones(pre, t, self.d)), dtype=float) for t in probes]
        for a, b in zip(vals, vals[1:]):
            if np.any(b < a):
                raise ContractViolationError("f decreases along a scanned ray")
        if np.any(vals[2] > self.n):
            raise ContractViolationError("sublevel cut is not an interval: f is not monotone")
        # heights must not grow when the previous coordinate grows
        k = prefix.shape[1]
        if k >= 1 and len(h) > 1:
            same_parent = np.all(prefix[1:, :-1] == prefix[:-1, :-1], axis=1)
            step = prefix[1:, -1] == prefix[:-1, -1] + 1
            if np.any(same_parent & step & (h[1:] > h[:-1])):
                raise ContractViolationError("sublevel heights increase along an axis: f is not monotone")

    def slice_count(self, i: int) -> int:
        """``#{x in D : x_i = 1}`` (0-based ``i``), i.e. the slice set with argument ``i`` fixed to 1."""
        return self.count_where({i: (1, 1 << 62)})


def _f_product(x):
    return np.prod(x, axis=1)


def _f_sum(x):
    return np.sum(x, axis=1)


def _f_max(x):
    return np.max(x, axis=1)


def _f_sumsq(x):
    return np.sum(x * x, axis=1)


def elementary_symmetric(x: np.ndarray, ell: int) -> np.ndarray:
    """``P_ell`` evaluated row-wise (dynamic programming over columns)."""
    m, d = x.shape
    e = [np.ones(m, dtype=x.dtype)] + [np.zeros(m, dtype=x.dtype) for _ in range(ell)]
    for j in range(d):
        col = x[:, j]
        for k in range(min(ell, j + 1), 0, -1):
            e[k] = e[k] + col * e[k - 1]
    return e[ell]


def _linear(coeffs):
    a = np.asarray(coeffs, dtype=float)

    def f(x):
        return x @ a

    return f


def monotone_sublevel(f: Callable, n: float, d: int) -> MonotoneSublevel:
    return MonotoneSublevel(f, n, d)


def hyperbolic(d: int, n: int) -> MonotoneSublevel:
    if d < 1 or n < 1:
        raise ConfigError(f"hyperbolic needs d >= 1 and n >= 1, got d={d}, n={n}")
    return MonotoneSublevel(_f_product, n, d, {"type": "hyperbolic", "params": {"d": d, "n": n}})


def sym_poly_hyperbolic(ell: int, d: int, n: int) -> MonotoneSublevel:
    if not 2 <= ell <= d:
        raise ConfigError(f"need 2 <= ell <= d, got ell={ell}, d={d}")
    return MonotoneSublevel(
        lambda x: elementary_symmetric(x, ell), n, d,
        {"type": "sym_poly_hyperbolic", "params": {"ell": ell, "d": d, "n": n}},
    )


def tetrahedron(a: Sequence[float], n: float) -> MonotoneSublevel:
    a = [float(v) for v in a]
    if not a or any(v <= 0 for v in a):
        raise ConfigError(f"tetrahedron coefficients must be positive, got {a}")
    return MonotoneSublevel(_linear(a), n, len(a), {"type": "tetrahedron", "params": {"a": a, "n": n}})


def ball(d: int, n: int) -> MonotoneSublevel:
    if n < d:
        raise EmptyDomainError(f"ball(d={d}, n={n}) is empty (needs n >= d)")
    return MonotoneSublevel(_f_sumsq, n, d, {"type": "ball", "params": {"d": d, "n": n}})


# ---------------------------------------------------------------------------
# Weyl chambers


class WeylChamber(LatticeDomain):
    """``{x : x_1 <= x_2 <= ... <= x_d <= n}``."""

    def __init__(self, d: int, n: int):
        if d < 1 or n < 1:
            raise ConfigError(f"weyl_chamber needs d >= 1 and n >= 1, got d={d}, n={n}")
        self.d, self.n = int(d), int(n)

    @property
    def spec(self):
        return {"type": "weyl_chamber", "params": {"d": self.d, "n": self.n}}

    def contains(self, pts):
        pts = np.asarray(pts)
        ok = (pts[:, 0] >= 1) & (pts[:, -1] <= self.n)
        return ok & np.all(np.diff(pts, axis=1) >= 0, axis=1)

    def _box(self):
        return (1,) * self.d, (self.n,) * self.d

    def _compute_runs(self):
        prefix = np.zeros((1, 0), dtype=np.int64)
        for _ in range(self.d - 1):
            m = len(prefix)
            lo = prefix[:, -1] if prefix.shape[1] else np.ones(m, dtype=np.int64)
            prefix = _extend_prefixes(prefix, lo, np.full(m, self.n, dtype=np.int64))
        m = len(prefix)
        lo = prefix[:, -1].copy() if prefix.shape[1] else np.ones(m, dtype=np.int64)
        return Runs(prefix, lo, np.full(m, self.n, dtype=np.int64))


def weyl_chamber(d: int, n: int) -> WeylChamber:
    return WeylChamber(d, n)


# ---------------------------------------------------------------------------
# dilations of a convex body


def _mask_runs(prefix: np.ndarray, t0: int, mask: np.ndarray) -> Runs:
    """Runs of True along the rows of ``mask`` (column j <-> last coordinate t0 + j)."""
    pad = np.zeros((mask.shape[0], 1), dtype=bool)
    edges = np.diff(np.hstack([pad, mask, pad]).astype(np.int8), axis=1)
    r_start, c_start = np.nonzero(edges == 1)
    _, c_stop = np.nonzero(edges == -1)
    return Runs(prefix[r_start], c_start.astype(np.int64) + t0, c_stop.astype(np.int64) + t0 - 1)


def _concat_runs(parts: list[Runs], d: int) -> Runs:
    if not parts:
        return Runs.empty(d)
    return Runs(
        np.concatenate([r.prefix for r in parts]),
        np.concatenate([r.lo for r in parts]),
        np.concatenate([r.hi for r in parts]),
    )


class DilatedBody(LatticeDomain):
    """``{x in N^d : x / scale in body}`` for a compact body inside ``box``.

    Convexity and nonempty interior of the body are caller assertions.
    """

    def __init__(self, membership: Callable[[np.ndarray], np.ndarray], box: Sequence[tuple[float, float]],
                 scale: float, spec: dict | None = None):
        if scale <= 0:
            raise ConfigError(f"scale must be positive, got {scale}")
        self.membership = membership
        self.body_box = [(float(a), float(b)) for a, b in box]
        self.scale = float(scale)
        self.d = len(self.body_box)
        self._spec = spec or {"type": "dilated_body", "params": {"body": getattr(membership, "__name__", "?"),
                                                                 "box": self.body_box, "scale": scale}}

    @property
    def spec(self):
        return self._spec

    def contains(self, pts):
        pts = np.asarray(pts, dtype=np.int64)
        inside = np.all(pts >= 1, axis=1)
        out = np.zeros(len(pts), dtype=bool)
        if inside.any():
            out[inside] = np.asarray(self.membership(pts[inside] / self.scale), dtype=bool)
        return out

    def _box(self):
        lo = tuple(max(1, math.floor(self.scale * a)) for a, _ in self.body_box)
        hi = tuple(math.ceil(self.scale * b) for _, b in self.body_box)
        return lo, hi

    def _compute_runs(self):
        lo, hi = self._box()
        if any(b < a for a, b in zip(lo, hi)):
            return Runs.empty(self.d)
        prefix = _box_prefixes(lo[:-1], hi[:-1])
        ts = np.arange(lo[-1], hi[-1] + 1, dtype=np.int64)
        rows = max(1, BLOCK_POINTS // len(ts))
        parts = []
        for s in range(0, len(prefix), rows):
            pre = prefix[s : s + rows]
            grid = np.column_stack([np.repeat(pre, len(ts), axis=0), np.tile(ts, len(pre))])
            mask = self.contains(grid).reshape(len(pre), len(ts))
            parts.append(_mask_runs(pre, lo[-1], mask))
        return _concat_runs(parts, self.d)


def dilated_body(membership: Callable, box: Sequence[tuple[float, float]], scale: float) -> DilatedBody:
    return DilatedBody(membership, box, scale)


def _body_cube(u):
    return np.all(u <= 1.0, axis=1)


def _body_quarter_ball(u):
    return np.sum(u * u, axis=1) <= 1.0


def _body_simplex(u):
    return np.sum(u, axis=1) <= 1.0


def _body_weyl(u):
    return (u[:, -1] <= 1.0) & np.all(np.diff(u, axis=1) >= 0, axis=1)


NAMED_BODIES = {
    "cube": _body_cube,
    "quarter_ball": _body_quarter_ball,
    "simplex": _body_simplex,
    "weyl": _body_weyl,
}


def named_body(name: str, d: int, scale: float) -> DilatedBody:
    if name not in NAMED_BODIES:
        raise ConfigError(f"unknown body {name!r}; choose from {sorted(NAMED_BODIES)}")
    return DilatedBody(NAMED_BODIES[name], [(0.0, 1.0)] * d, scale,
                       {"type": "dilated_body", "params": {"body": name, "d": d, "scale": scale}})


# ---------------------------------------------------------------------------
# set-theoretic combinators


def _runs_by_prefix(runs: Runs) -> dict[tuple, list[tuple[int, int]]]:
    out: dict[tuple, list[tuple[int, int]]] = {}
    for pre, a, b in zip(map(tuple, runs.prefix.tolist()), runs.lo.tolist(), runs.hi.tolist()):
        out.setdefault(pre, []).append((a, b))
    return out


def _union_iv(xs, ys):
    merged = []
    for a, b in sorted(xs + ys):
        if merged and a <= merged[-1][1] + 1:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


def _intersect_iv(xs, ys):
    out, i, j = [], 0, 0
    while i < len(xs) and j < len(ys):
        a, b = max(xs[i][0], ys[j][0]), min(xs[i][1], ys[j][1])
        if a <= b:
            out.append((a, b))
        if xs[i][1] < ys[j][1]:
            i += 1
        else:
            j += 1
    return out


def _subtract_iv(xs, ys):
    out = []
    for a, b in xs:
        cur = a
        for c, e in ys:
            if e < cur or c > b:
                continue
            if c > cur:
                out.append((cur, c - 1))
            cur = max(cur, e + 1)
        if cur <= b:
            out.append((cur, b))
    return out


def _runs_from_dict(table: dict, d: int) -> Runs:
    rows = [(pre, a, b) for pre in sorted(table) for a, b in table[pre]]
    if not rows:
        return Runs.empty(d)
    prefix = np.array([r[0] for r in rows], dtype=np.int64).reshape(len(rows), d - 1)
    return Runs(prefix, np.array([r[1] for r in rows], dtype=np.int64), np.array([r[2] for r in rows], dtype=np.int64))


def _child_runs(dom: LatticeDomain) -> Runs:
    try:
        return dom.runs
    except EmptyDomainError:
        return Runs.empty(dom.d)


class _Combined(LatticeDomain):
    op = ""

    def __init__(self, left: LatticeDomain, right: LatticeDomain):
        if left.d != right.d:
            raise ConfigError(f"dimension mismatch: {left.d} vs {right.d}")
        self.left, self.right, self.d = left, right, left.d

    @property
    def spec(self):
        return {"type": self.op, "params": {"left": self.left.spec, "right": self.right.spec}}

    def _compute_runs(self):
        a, b = _runs_by_prefix(_child_runs(self.left)), _runs_by_prefix(_child_runs(self.right))
        return _runs_from_dict(self._merge(a, b), self.d)


class Union(_Combined):
    op = "union"

    def contains(self, pts):
        return self.left.contains(pts) | self.right.contains(pts)

    def _box(self):
        (l1, h1), (l2, h2) = self.left._box(), self.right._box()
        return tuple(map(min, l1, l2)), tuple(map(max, h1, h2))

    def _merge(self, a, b):
        return {k: _union_iv(a.get(k, []), b.get(k, [])) for k in set(a) | set(b)}


class Intersection(_Combined):
    op = "intersection"

    def contains(self, pts):
        return self.left.contains(pts) & self.right.contains(pts)

    def _box(self):
        (l1, h1), (l2, h2) = self.left._box(), self.right._box()
        return tuple(map(max, l1, l2)), tuple(map(min, h1, h2))

    def _merge(self, a, b):
        out = {k: _intersect_iv(a[k], b[k]) for k in set(a) & set(b)}
        return {k: v for k, v in out.items() if v}


class Difference(_Combined):
    op = "difference"

    def contains(self, pts):
        return self.left.contains(pts) & ~self.right.contains(pts)

    def _box(self):
        return self.left._box()

    def _merge(self, a, b):
        out = {k: _subtract_iv(v, b.get(k, [])) for k, v in a.items()}
        return {k: v for k, v in out.items() if v}


def union(d1: LatticeDomain, d2: LatticeDomain) -> Union:
    return Union(d1, d2)


def intersection(d1: LatticeDomain, d2: LatticeDomain) -> Intersection:
    return Intersection(d1, d2)


def difference(d1: LatticeDomain, d2: LatticeDomain) -> Difference:
    return Difference(d1, d2)


# ---------------------------------------------------------------------------
# stand-alone operations and (de)serialisation


def enumerate_points(D: LatticeDomain) -> Iterator[Point]:
    return D.enumerate()


def cardinality(D: LatticeDomain) -> int:
    return D.cardinality


def bounding_box(D: LatticeDomain) -> Box:
    return D.bounding_box()


def sample_uniform(D: LatticeDomain, rng: np.random.Generator, strategy: str = "auto", size: int | None = None):
    return D.sample_uniform(rng, size=size, strategy=strategy)


SUBLEVEL_FUNCTIONS = {"product": _f_product, "sum": _f_sum, "max": _f_max, "sumsq": _f_sumsq}


def _named_sublevel(params: dict) -> MonotoneSublevel:
    name = params["f"]
    if name == "sym_poly":
        return sym_poly_hyperbolic(int(params["ell"]), int(params["d"]), params["n"])
    if name == "linear":
        return tetrahedron(params["a"], params["n"])
    if name not in SUBLEVEL_FUNCTIONS:
        raise ConfigError(f"unknown sublevel function {name!r}; choose from {sorted(SUBLEVEL_FUNCTIONS)}")
    d, n = int(params["d"]), params["n"]
    return MonotoneSublevel(SUBLEVEL_FUNCTIONS[name], n, d,
                            {"type": "monotone_sublevel", "params": {"f": name, "d": d, "n": n}})


def domain_from_spec(spec: dict) -> LatticeDomain:
    """Build a domain from its JSON description ``{type, params}``."""
    try:
        kind, p = spec["type"], dict(spec.get("params", {}))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed domain spec {spec!r}") from exc
    try:
        if kind == "rectangle":
            dims = p["dims"] if "dims" in p else [p["n"]] * int(p["d"])
            return rectangle(*[int(v) for v in dims])
        if kind == "box":
            return Box(p["lo"], p["hi"])
        if kind == "hyperbolic":
            return hyperbolic(int(p["d"]), int(p["n"]))
        if kind == "sym_poly_hyperbolic":
            return sym_poly_hyperbolic(int(p["ell"]), int(p["d"]), int(p["n"]))
        if kind == "tetrahedron":
            return tetrahedron(p["a"], p["n"])
        if kind == "ball":
            return ball(int(p["d"]), int(p["n"]))
        if kind == "weyl_chamber":
            return weyl_chamber(int(p["d"]), int(p["n"]))
        if kind == "monotone_sublevel":
            return _named_sublevel(p)
        if kind == "dilated_body":
            return named_body(p["body"], int(p["d"]), float(p["scale"]))
        if kind in ("union", "intersection", "difference"):
            ctor = {"union": union, "intersection": intersection, "difference": difference}[kind]
            return ctor(domain_from_spec(p["left"]), domain_from_spec(p["right"]))
    except KeyError as exc:
        raise ConfigError(f"domain spec {spec!r} is missing parameter {exc}") from exc
    raise ConfigError(f"unknown domain type {kind!r}")


def _with_n(spec: dict, n) -> dict:
    """Copy of ``spec`` with the growth parameter set to ``n`` (recursing into combinators)."""
    params = dict(spec.get("params", {}))
    if spec["type"] in ("union", "intersection", "difference"):
        params = {k: _with_n(v, n) for k, v in params.items()}
    elif spec["type"] == "dilated_body":
        params["scale"] = n
    elif spec["type"] == "rectangle" and "dims" not in params:
        params["n"] = n
    elif spec["type"] == "rectangle":
        params["dims"] = [n] * len(params["dims"])
    else:
        params["n"] = n
    return {"type": spec["type"], "params": params}


@dataclass
class DomainFamily:
    """A sequence ``n -> D_n`` along increasing parameters ``ns``."""

    ns: list
    builder: Callable[[object], LatticeDomain]
    template: dict | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.ns = list(self.ns)
        if any(b <= a for a, b in zip(self.ns, self.ns[1:])):
            raise ConfigError(f"family parameters must be strictly increasing, got {self.ns}")

    @classmethod
    def from_spec(cls, template: dict, ns: Sequence) -> DomainFamily:
        return cls(list(ns), lambda n: domain_from_spec(_with_n(template, n)), template)

    @classmethod
    def constant(cls, domain: LatticeDomain, ns: Sequence) -> DomainFamily:
        return cls(list(ns), lambda n: domain, {"type": "constant", "params": {"domain": domain.spec}})

    def __getitem__(self, n) -> LatticeDomain:
        if n not in self._cache:
            self._cache[n] = self.builder(n)
        return self._cache[n]

    def __iter__(self):
        for n in self.ns:
            yield n, self[n]

    def __len__(self):
        return len(self.ns)
