"""Cylindrical cascades over exact odometer (or tower-backed) bases.

The cascade of a base map S and an integer function f sends (x, a) to
(S x, a + f(x)) on X x Z; when f has zero mean the orbit sums
F(x, i) = sum_{m<i} f(S^m x) return to zero infinitely often for almost
every x.  Bases here are exact: an odometer is carried as positions in
[0, h_depth) with digit arithmetic, a tower-backed base as level indices
of a fixed stage of a cutting construction.  Orbits that leave the
realized domain raise ``UndefinedOrbit`` carrying the partial record.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import rank_one
from .errors import ShiftTooLarge, StageOrder, UndefinedOrbit

_rank_one_correlation = rank_one.correlation


@dataclass(frozen=True)
class Odometer:
    """Adic adding machine: cut counts per stage, no spacers.

    Stage ``s`` has ``h_s = r_1 * ... * r_s`` levels (stage 0 is trivial);
    points are positions in [0, h_depth).  The successor map adds one; the
    all-top point has no successor at finite depth.
    """

    cuts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "cuts", tuple(int(r) for r in self.cuts))
        if any(r < 2 for r in self.cuts):
            raise ValueError("cut counts must be at least 2")

    @classmethod
    def b_adic(cls, base: int, depth: int) -> "Odometer":
        return cls((base,) * depth)

    @property
    def depth(self) -> int:
        return len(self.cuts)

    def height(self, stage: int) -> int:
        if not 0 <= stage <= self.depth:
            raise StageOrder(f"stage {stage} outside 0..{self.depth}")
        h = 1
        for r in self.cuts[:stage]:
            h *= r
        return h

    @property
    def n_points(self) -> int:
        return self.height(self.depth)

    def digits_of_position(self, p: int) -> tuple[int, ...]:
        if not 0 <= p < self.n_points:
            raise ValueError(f"position {p} outside domain")
        out = []
        for r in self.cuts:
            out.append(p % r)
            p //= r
        return tuple(out)

    def position_of_digits(self, digits: Sequence[int]) -> int:
        if len(digits) != self.depth:
            raise ValueError("digit path length must equal depth")
        p, w = 0, 1
        for d, r in zip(digits, self.cuts):
            if not 0 <= d < r:
                raise ValueError(f"digit {d} outside 0..{r - 1}")
            p += d * w
            w *= r
        return p

    def step(self, p: int, direction: int = 1) -> int:
        """One application of the map (+1) or its inverse (-1)."""
        q = p + direction
        if not 0 <= q < self.n_points:
            raise UndefinedOrbit(f"orbit leaves depth-{self.depth} domain", 0)
        return q

    def sample_positions(self, count: int, rng: random.Random) -> list[int]:
        return [rng.randrange(self.n_points) for _ in range(count)]


@dataclass(frozen=True)
class TowerBase:
    """A cutting construction frozen at one stage, as a partial base map."""

    construction: rank_one.Construction
    stage: int

    def __post_init__(self):
        self.construction.check_stage(self.stage)

    @property
    def n_points(self) -> int:
        return self.construction.height(self.stage)

    def step(self, p: int, direction: int = 1) -> int:
        q = p + direction
        if not 0 <= q < self.n_points:
            raise UndefinedOrbit("orbit leaves the realized tower", 0)
        return q


@dataclass(frozen=True)
class CocycleFunction:
    """Integer values on the levels of one stage, with zero mean.

    For an odometer base the value at a deep position p is
    ``values[p mod h_stage]``; spacers do not exist.  For tower-backed
    bases levels created after ``stage`` (spacers) take value zero, which
    preserves the zero mean exactly.
    """

    stage: int
    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if sum(self.values) != 0:
            raise ValueError("cocycle must have zero mean (zero level sum)")

    @property
    def mean(self) -> Fraction:
        return Fraction(sum(self.values), len(self.values))


def _value_table(base, f: CocycleFunction) -> np.ndarray:
    """Cocycle values on every point of the realized base domain."""
    if isinstance(base, Odometer):
        h = base.height(f.stage)
        if len(f.values) != h:
            raise ValueError(f"need {h} values for stage {f.stage}")
        reps = base.n_points // h
        return np.tile(np.array(f.values, dtype=np.int64), reps)
    if isinstance(base, TowerBase):
        c = base.construction
        if len(f.values) != c.height(f.stage):
            raise ValueError("value count must match the stage height")
        table = np.array(f.values, dtype=np.int64)
        for n in range(f.stage, base.stage):
            h = c.height(n)
            prof = c.profile(n)
            parts = []
            for s in prof.spacers:
                parts.append(table)
                parts.append(np.zeros(s, dtype=np.int64))  # spacer levels
            table = np.concatenate(parts)
        return table
    raise TypeError(f"unsupported base {type(base).__name__}")


@dataclass(frozen=True)
class OrbitRecord:
    """Partial sums and zero returns along one orbit."""

    start: tuple[int, ...]
    length: int
    partial_sums: tuple[int, ...]
    zero_returns: tuple[int, ...]


def orbit_sums(base, f: CocycleFunction, x, length: int) -> OrbitRecord:
    """Exact partial sums F(x, 0..L) and the zero-return times.

    ``x`` is a position or (for odometers) a digit path.  If the orbit
    leaves the realized domain first, ``UndefinedOrbit`` is raised with
    the partial record attached.
    """
    return _orbit_record(base, f, _value_table(base, f), x, length)


def _orbit_record(base, f, table, x, length: int) -> OrbitRecord:
    if isinstance(base, Odometer) and not isinstance(x, int):
        x = base.position_of_digits(tuple(x))
    if not 0 <= x < base.n_points:
        raise ValueError(f"start {x} outside domain")
    avail = base.n_points - x  # number of defined forward values
    reached = min(length, avail)
    vals = table[x : x + reached]
    sums = np.concatenate(([0], np.cumsum(vals, dtype=np.int64)))
    zeros = np.flatnonzero(sums == 0)
    start = (
        base.digits_of_position(x) if isinstance(base, Odometer) else (x,)
    )
    record = OrbitRecord(
        start=start,
        length=reached,
        partial_sums=tuple(int(v) for v in sums),
        zero_returns=tuple(int(z) for z in zeros),
    )
    if reached < length:
        raise UndefinedOrbit(
            f"orbit defined for {reached} of {length} steps",
            reached=reached,
            record=record,
        )
    return record


@dataclass(frozen=True)
class RecurrenceResult:
    fraction: Fraction
    included: int
    excluded: int
    per_point: tuple[tuple[int, int], ...]  # (start position, zero returns)


def recurrence_statistic(
    base, f: CocycleFunction, sample: Sequence[int], length: int, min_returns: int
) -> RecurrenceResult:
    """Fraction of sampled points with >= min_returns zero sums in L steps.

    Points whose orbit leaves the domain before L steps are excluded and
    reported; the zero return at time 0 is not counted.
    """
    if not sample:
        raise ValueError("sample must be nonempty")
    table = _value_table(base, f)
    hits = 0
    per_point = []
    excluded = 0
    for x in sample:
        if not 0 <= x < base.n_points:
            raise ValueError(f"sample point {x} outside domain")
        if base.n_points - x < length:
            excluded += 1
            continue
        sums = np.cumsum(table[x : x + length], dtype=np.int64)
        returns = int(np.count_nonzero(sums == 0))  # q_0 = 0 not counted
        per_point.append((int(x), returns))
        if returns >= min_returns:
            hits += 1
    included = len(per_point)
    if included == 0:
        raise UndefinedOrbit("every sampled orbit left the domain", 0)
    return RecurrenceResult(
        Fraction(hits, included), included, excluded, tuple(per_point)
    )


def cocycle_sums_from(base, f: CocycleFunction, upto: int) -> np.ndarray:
    """Prefix sums of the cocycle over the base domain, F[p] = sum_{q<p} f(q)."""
    table = _value_table(base, f)
    out = np.zeros(len(table) + 1, dtype=np.int64)
    np.cumsum(table, out=out[1:])
    return out[: upto + 1] if upto is not None else out


def skew_correlation(
    base,
    fiber: rank_one.Construction,
    n_cocycle: CocycleFunction,
    sets: Sequence[tuple[rank_one.LevelSet, rank_one.LevelSet]],
    shifts: Sequence[int],
    base_stage: int | None = None,
    fiber_stage: int | None = None,
    budget: int = rank_one.DEFAULT_LEVEL_BUDGET,
) -> rank_one.CorrelationBound:
    """Enclosure of mu(cap_i R^{k_i} (A_i x B_i)) for R = (S, T^{n(x)}).

    A point (x, y) lies in R^k (A x B) iff S^{-k} x is in A and y is in
    T^{F(S^{-k} x, k)} B, with F the cocycle sum of n along the base
    orbit.  Base cells where some S^{-k_i} x is unresolved contribute
    their full product mass to the upper bound; fiber factors are
    rank-one correlation enclosures grouped by their shift tuples.
    """
    if not sets or len(sets) != len(shifts):
        raise ValueError("need equally many rectangle sets and shifts")
    prefix = cocycle_sums_from(base, n_cocycle, None)

    def cocycle_sum(x: int, k: int) -> int:
        # F(x, k) = sum_{m=0}^{k-1} n(S^m x); negative k sums backwards
        if k >= 0:
            return int(prefix[x + k] - prefix[x])
        return -int(prefix[x] - prefix[x + k])

    npts = base.n_points
    base_sets = []
    for (a, _b) in sets:
        if isinstance(base, Odometer):
            h = base.height(a.stage)
            reps = npts // h
            bits = 0
            for rep in range(reps):
                bits |= a.bits << (rep * h)
            base_sets.append(bits)
        else:
            base_sets.append(rank_one.refine(base.construction, a, base.stage).bits)

    window = (1 << npts) - 1
    certain = window
    lost_cells = 0
    for bits, k in zip(base_sets, shifts):
        if abs(k) >= npts:
            raise ShiftTooLarge(f"base shift {k} exceeds domain {npts}")
        shifted = ((bits << k) & window) if k >= 0 else bits >> (-k)
        lost_cells += bits.bit_count() - shifted.bit_count()
        certain &= shifted
    wb = Fraction(1, npts)  # base cell mass, normalized

    fiber_total_lower = Fraction(0)
    fiber_total_width = Fraction(0)
    groups: dict[tuple[int, ...], int] = {}
    b = certain
    while b:
        p = (b & -b).bit_length() - 1
        b &= b - 1
        key = tuple(cocycle_sum(p - k, k) for k in shifts)
        groups[key] = groups.get(key, 0) + 1
    fsets = [bset for _, bset in sets]
    eval_stage = fiber_stage or max(s.stage for s in fsets)
    for key, count in groups.items():
        bound = _rank_one_correlation(
            fiber, fsets, list(key), eval_stage=fiber_stage, budget=budget
        )
        eval_stage = max(eval_stage, bound.eval_stage)
        fiber_total_lower += count * wb * bound.lower
        fiber_total_width += count * wb * bound.width
    lower = fiber_total_lower
    width = fiber_total_width + lost_cells * wb * min(
        rank_one.measure(fiber, bset) for bset in fsets
    )
    cap = min(
        _base_measure(base, a) * rank_one.measure(fiber, bset)
        for (a, bset) in sets
    )
    upper = min(lower + width, cap, Fraction(1))
    return rank_one.CorrelationBound(lower, max(lower, upper), eval_stage)


def _base_measure(base, a: rank_one.LevelSet) -> Fraction:
    if isinstance(base, Odometer):
        return Fraction(len(a), base.height(a.stage))
    return rank_one.measure(base.construction, a)
