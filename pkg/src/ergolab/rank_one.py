"""Exact symbolic engine for rank-one cutting-and-stacking transformations.

A construction is a finite prefix of a cutting recipe.  Stage ``n`` cuts the
current tower (height ``h_n``, level width ``w_n``) into ``r_n`` columns of
width ``w_n / r_n``, adds ``s_{n,c}`` spacer levels above column ``c`` and
restacks the columns left to right, so that

    h_{n+1} = r_n * h_n + sum_c s_{n,c}

and level ``l`` of stage ``n`` becomes the stage-``n+1`` levels
``{ o_c + l : c < r_n }`` with offsets ``o_c = sum_{d<c} (h_n + s_{n,d})``.

All widths and masses are exact rationals.  The transformation ``T`` sends
level ``l`` to level ``l+1`` within a stage; on the top levels it is only
resolved by deeper stages, so any shifted quantity is certified as an
interval enclosure: the unresolved mass is added to the upper bound, never
guessed.  Enclosures at deeper stages are nested inside shallower ones.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadWeights,
    BudgetExceeded,
    DivergentMass,
    EmptyRecipe,
    ShiftTooLarge,
    StageOrder,
    UnknownPreset,
)

#: default ceiling for dense (bitset) evaluation, in tower levels
DEFAULT_LEVEL_BUDGET = 10**7


@dataclass(frozen=True)
class SpacerProfile:
    """One cutting stage: ``cuts`` columns, ``spacers[c]`` levels above column c."""

    cuts: int
    spacers: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "spacers", tuple(int(s) for s in self.spacers))
        if self.cuts < 2:
            raise ValueError(f"cuts must be >= 2, got {self.cuts}")
        if len(self.spacers) != self.cuts:
            raise ValueError(
                f"need exactly {self.cuts} spacer entries, got {len(self.spacers)}"
            )
        if any(s < 0 for s in self.spacers):
            raise ValueError("spacer counts must be non-negative")

    @property
    def added_levels(self) -> int:
        return sum(self.spacers)

    def offsets(self, height: int) -> tuple[int, ...]:
        """Stage-(n+1) offsets of the column copies of a stage-n tower."""
        out, acc = [], 0
        for s in self.spacers:
            out.append(acc)
            acc += height + s
        return tuple(out)


@dataclass(frozen=True)
class Construction:
    """A finite prefix of a cutting-and-stacking recipe.

    ``stages[n-1]`` is the profile applied to the stage-``n`` tower; towers
    are indexed 1 .. len(stages)+1.  ``mass_cap`` rejects recipes whose
    committed mass (initial tower plus all spacers of the prefix) diverges;
    the default cap is twice the initial mass.
    """

    initial_height: int
    initial_width: Fraction
    stages: tuple[SpacerProfile, ...]
    mass_cap: Fraction | None = None
    _heights: tuple[int, ...] = field(repr=False, compare=False, default=())

    def __post_init__(self):
        object.__setattr__(self, "initial_width", Fraction(self.initial_width))
        object.__setattr__(self, "stages", tuple(self.stages))
        if self.initial_height < 1:
            raise EmptyRecipe("initial tower height must be positive")
        if self.initial_width <= 0:
            raise ValueError("initial width must be positive")
        hs = [0, self.initial_height]
        for p in self.stages:
            hs.append(p.cuts * hs[-1] + p.added_levels)
        object.__setattr__(self, "_heights", tuple(hs))
        cap = self.mass_cap
        if cap is None:
            cap = 2 * self.initial_height * self.initial_width
        else:
            cap = Fraction(cap)
        object.__setattr__(self, "mass_cap", cap)
        if self.total_mass > cap:
            raise DivergentMass(
                f"committed mass {self.total_mass} exceeds cap {cap}"
            )

    @property
    def top_stage(self) -> int:
        return len(self.stages) + 1

    def height(self, stage: int) -> int:
        self.check_stage(stage)
        return self._heights[stage]

    def width(self, stage: int) -> Fraction:
        self.check_stage(stage)
        w = self.initial_width
        for p in self.stages[: stage - 1]:
            w /= p.cuts
        return w

    def tower_mass(self, stage: int) -> Fraction:
        return self.height(stage) * self.width(stage)

    @property
    def total_mass(self) -> Fraction:
        """Mass committed by the whole prefix (= top tower mass)."""
        return self._heights[-1] * self.width(self.top_stage)

    def profile(self, stage: int) -> SpacerProfile:
        if not 1 <= stage <= len(self.stages):
            raise StageOrder(f"no profile leaving stage {stage}")
        return self.stages[stage - 1]

    def offsets(self, stage: int) -> tuple[int, ...]:
        """Offsets of the stage-``stage`` column copies inside stage+1."""
        return self.profile(stage).offsets(self.height(stage))

    def check_stage(self, stage: int) -> None:
        if stage == 0:
            raise EmptyRecipe("stage 0 has no tower")
        if not 1 <= stage <= self.top_stage:
            raise StageOrder(
                f"stage {stage} not built (have 1..{self.top_stage})"
            )

    def extended(self, more: Iterable[SpacerProfile]) -> "Construction":
        return Construction(
            self.initial_height,
            self.initial_width,
            self.stages + tuple(more),
            mass_cap=self.mass_cap,
        )


@dataclass(frozen=True)
class TowerView:
    """Realized data of one stage of a construction."""

    stage: int
    height: int
    level_width: Fraction
    tower_mass: Fraction
    total_mass: Fraction
    construction: Construction


def build(c: Construction, depth: int) -> TowerView:
    """Realize stage ``depth``; exact heights, widths and masses."""
    c.check_stage(depth)
    return TowerView(
        stage=depth,
        height=c.height(depth),
        level_width=c.width(depth),
        tower_mass=c.tower_mass(depth),
        total_mass=c.total_mass,
        construction=c,
    )


@dataclass(frozen=True)
class LevelSet:
    """A union of levels of one stage, stored as an int bitset."""

    stage: int
    bits: int

    def __post_init__(self):
        if self.bits < 0:
            raise ValueError("bitset must be non-negative")

    @classmethod
    def from_levels(cls, stage: int, levels: Iterable[int]) -> "LevelSet":
        bits = 0
        for l in levels:
            if l < 0:
                raise ValueError("level indices must be non-negative")
            bits |= 1 << l
        return cls(stage, bits)

    @classmethod
    def full(cls, c: Construction, stage: int) -> "LevelSet":
        return cls(stage, (1 << c.height(stage)) - 1)

    @classmethod
    def empty(cls, stage: int) -> "LevelSet":
        return cls(stage, 0)

    def levels(self) -> tuple[int, ...]:
        out, b = [], self.bits
        while b:
            low = (b & -b).bit_length() - 1
            out.append(low)
            b &= b - 1
        return tuple(out)

    def __len__(self) -> int:
        return self.bits.bit_count()

    @property
    def is_empty(self) -> bool:
        return self.bits == 0


def mass(c: Construction, a: LevelSet) -> Fraction:
    """Unnormalized Lebesgue mass |levels| * w_stage."""
    return len(a) * c.width(a.stage)


def measure(c: Construction, a: LevelSet) -> Fraction:
    """Mass normalized by the committed total mass."""
    return mass(c, a) / c.total_mass


def refine(c: Construction, a: LevelSet, to_stage: int) -> LevelSet:
    """Rewrite ``a`` as a stage-``to_stage`` level set; mass is preserved."""
    c.check_stage(a.stage)
    c.check_stage(to_stage)
    if to_stage < a.stage:
        raise StageOrder(f"cannot refine stage {a.stage} down to {to_stage}")
    if a.bits >> c.height(a.stage):
        raise ValueError("level set has bits above its tower height")
    bits = a.bits
    for n in range(a.stage, to_stage):
        out = 0
        for o in c.offsets(n):
            out |= bits << o
        bits = out
    return LevelSet(to_stage, bits)


def shift(
    c: Construction, a: LevelSet, k: int
) -> tuple[LevelSet, Fraction]:
    """Translate the level set by ``k``, truncating at the tower boundary.

    Returns the surviving set and the exact truncated mass: the image of
    the truncated levels is not resolved at this stage.
    """
    h = c.height(a.stage)
    if abs(k) >= h:
        raise ShiftTooLarge(f"|{k}| >= tower height {h}")
    if k >= 0:
        bits = (a.bits << k) & ((1 << h) - 1)
    else:
        bits = a.bits >> (-k)
    lost = (len(a) - bits.bit_count()) * c.width(a.stage)
    return LevelSet(a.stage, bits), lost


@dataclass(frozen=True)
class CorrelationBound:
    """Certified enclosure of a normalized correlation value."""

    lower: Fraction
    upper: Fraction
    eval_stage: int

    def __post_init__(self):
        if not 0 <= self.lower <= self.upper <= 1:
            raise ValueError(f"invalid enclosure [{self.lower}, {self.upper}]")

    @property
    def midpoint(self) -> Fraction:
        return (self.lower + self.upper) / 2

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    def contains(self, other: "CorrelationBound") -> bool:
        return self.lower <= other.lower and other.upper <= self.upper


def _min_eval_stage(c: Construction, sets, shifts) -> int:
    need = sum(abs(k) for k in shifts)
    j = max(a.stage for a in sets)
    while c.height(j) <= need:
        if j == c.top_stage:
            raise ShiftTooLarge(
                f"total shift {need} does not fit any built stage"
            )
        j += 1
    return j


def correlation(
    c: Construction,
    sets: Sequence[LevelSet],
    shifts: Sequence[int],
    eval_stage: int | None = None,
    tol: Fraction | None = None,
    budget: int = DEFAULT_LEVEL_BUDGET,
) -> CorrelationBound:
    """Enclosure of ``mu(T^{k_0} A_0 cap ... cap T^{k_m} A_m) / mu(X)``.

    Certain part: bitset intersection of the shifted refinements at the
    evaluation stage.  Every level whose shift leaves the tower window may
    or may not belong to the intersection, so its mass widens the upper
    bound.  With ``eval_stage=None`` the stage is the smallest admissible
    one, deepened while the width exceeds ``tol`` (if given) within the
    level ``budget`` and the built prefix.
    """
    if not sets or len(sets) != len(shifts):
        raise ValueError("need equally many sets and shifts, at least one")
    for a in sets:
        c.check_stage(a.stage)
    if eval_stage is not None:
        j = eval_stage
        c.check_stage(j)
        if j < max(a.stage for a in sets):
            raise StageOrder("evaluation stage above a set stage")
        if c.height(j) <= sum(abs(k) for k in shifts):
            raise ShiftTooLarge(
                f"total shift needs height > {sum(abs(k) for k in shifts)}"
            )
        return _correlation_at(c, sets, shifts, j)
    j = _min_eval_stage(c, sets, shifts)
    if c.height(j) > budget:
        raise BudgetExceeded(
            f"stage {j} has {c.height(j)} levels, budget {budget}"
        )
    out = _correlation_at(c, sets, shifts, j)
    if tol is not None:
        while out.width > tol and j < c.top_stage and c.height(j + 1) <= budget:
            j += 1
            out = _correlation_at(c, sets, shifts, j)
    return out


def _correlation_at(c, sets, shifts, j) -> CorrelationBound:
    h = c.height(j)
    window = (1 << h) - 1
    w = c.width(j)
    m = c.total_mass
    inter = window
    lost_total = Fraction(0)
    cap = min(measure(c, a) for a in sets)
    for a, k in zip(sets, shifts):
        ref = refine(c, a, j)
        if abs(k) >= h:
            raise ShiftTooLarge(f"|{k}| >= height {h} at stage {j}")
        shifted, lost = shift(c, ref, k)
        inter &= shifted.bits
        lost_total += lost
    lower = inter.bit_count() * w / m
    upper = min(lower + lost_total / m, cap, Fraction(1))
    return CorrelationBound(lower, max(lower, upper), j)


# -- presets and recipe files -------------------------------------------------

def preset(name: str, num_stages: int = 12, **params) -> Construction:
    """Named construction recipes.

    ``chacon``    three columns, one spacer over the middle column.
    ``asym5``     five columns with spacers (0,1,1,2,2): column heights
                  h, h+1, h+1, h+2, h+2.
    ``staircase`` spacers (0,1,...,r_n-1); pass ``cuts=[r_1, r_2, ...]``
                  (default r_n = n+1, which satisfies r_n^2/h_n -> 0).
    ``custom``    pass ``path=`` to a recipe file (see construction_from_text).
    """
    if name == "chacon":
        return Construction(
            1,
            Fraction(2, 3),
            tuple(SpacerProfile(3, (0, 1, 0)) for _ in range(num_stages)),
            mass_cap=Fraction(1),
        )
    if name == "asym5":
        return Construction(
            1,
            Fraction(2, 5),
            tuple(SpacerProfile(5, (0, 1, 1, 2, 2)) for _ in range(num_stages)),
            mass_cap=Fraction(1),
        )
    if name == "staircase":
        cuts = params.get("cuts")
        if cuts is None:
            cuts = [n + 1 for n in range(1, num_stages + 1)]
        profiles = tuple(SpacerProfile(r, tuple(range(r))) for r in cuts)
        # mass cap: staircase spacer mass adds w_n (r_n - 1)/2 per stage,
        # bounded by a small multiple of the initial mass for growing r_n
        return Construction(
            1, Fraction(1), profiles, mass_cap=params.get("mass_cap", Fraction(4))
        )
    if name == "custom":
        path = params.get("path")
        if path is None:
            raise UnknownPreset("custom preset needs a path= argument")
        with open(path) as fh:
            return construction_from_text(fh.read())
    raise UnknownPreset(name)


def construction_from_text(text: str) -> Construction:
    """Parse a plain key-value recipe.

    Required keys: ``h1`` (integer), ``w1`` (exact rational, "p/q" with an
    optional quote), ``stages = [[r, [s0..s_{r-1}]], ...]``; optional
    ``mass_cap``.  Unknown keys are rejected.
    """
    import json as _json

    from .errors import ConfigError

    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in fields:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        fields[key] = value
    unknown = set(fields) - {"h1", "w1", "stages", "mass_cap"}
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    for req in ("h1", "w1", "stages"):
        if req not in fields:
            raise ConfigError(f"missing key {req!r}")
    try:
        h1 = int(fields["h1"])
    except ValueError:
        raise ConfigError(f"h1 must be an integer, got {fields['h1']!r}")
    w1 = _parse_exact(fields["w1"])
    try:
        raw_stages = _json.loads(fields["stages"])
    except _json.JSONDecodeError as exc:
        raise ConfigError(f"stages is not a valid array: {exc}")
    profiles = []
    for entry in raw_stages:
        try:
            r, spacers = entry
            profiles.append(SpacerProfile(int(r), tuple(spacers)))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad stage entry {entry!r}: {exc}")
    cap = _parse_exact(fields["mass_cap"]) if "mass_cap" in fields else None
    return Construction(h1, w1, tuple(profiles), mass_cap=cap)


def _parse_exact(text: str) -> Fraction:
    import re as _re

    from .errors import ConfigError

    text = text.strip().strip('"').strip("'")
    if _re.fullmatch(r"-?\d+(/\d+)?", text) is None:
        raise ConfigError(f"not an exact rational: {text!r} (floats rejected)")
    return Fraction(text)


# -- weak operator limits ---------------------------------------------------

@dataclass(frozen=True)
class WeakLimitResult:
    deviation: Fraction
    width: Fraction
    eval_stage: int


def weak_limit_deviation(
    c: Construction,
    k: int,
    mix: Sequence[tuple[int, Fraction]],
    theta_weight: Fraction,
    family: Sequence[tuple[LevelSet, LevelSet]],
    eval_stage: int | None = None,
    tol: Fraction | None = None,
    budget: int = DEFAULT_LEVEL_BUDGET,
) -> WeakLimitResult:
    """Max over (A, B) of |<T^k chi_A, chi_B> - <Q chi_A, chi_B>|.

    ``Q = sum_p a_p T^p + theta_weight * Theta`` with ``mix = [(p, a_p)]``;
    weights must be non-negative and sum to one.  Inner products are
    correlation midpoints; the accumulated enclosure width is reported
    alongside the deviation.

    Families consisting of single-level pairs at one common stage are
    canonicalized by translation invariance (mu(T^m L_a cap L_b) =
    mu(T^{m+a-b} L_0 cap L_0)) and evaluated by exact offset-difference
    counting, so deep stages cost memory proportional to the offset count
    (which is what ``budget`` caps on this path), not the tower height.
    """
    theta_weight = Fraction(theta_weight)
    weights = [Fraction(a) for _, a in mix]
    if theta_weight < 0 or any(a < 0 for a in weights):
        raise BadWeights("negative weight")
    if sum(weights) + theta_weight != 1:
        raise BadWeights("weights must sum to one exactly")
    if not family:
        raise ValueError("family must be nonempty")

    stages = {a.stage for a, b in family} | {b.stage for a, b in family}
    if len(stages) == 1 and all(
        len(a) == 1 and len(b) == 1 for a, b in family
    ):
        s = next(iter(stages))
        pairs = [(a.levels()[0], b.levels()[0]) for a, b in family]
        if eval_stage is not None:
            return _single_level_deviation(c, k, mix, theta_weight, pairs, s, eval_stage)
        j = s
        while c.height(j) <= abs(k) + c.height(s):
            if j == c.top_stage:
                raise ShiftTooLarge(f"shift {k} does not fit any built stage")
            j += 1
        out = _single_level_deviation(c, k, mix, theta_weight, pairs, s, j)
        if tol is not None:
            while (
                out.width > tol
                and j < c.top_stage
                and _offset_count(c, s, j + 1) <= budget
            ):
                j += 1
                out = _single_level_deviation(c, k, mix, theta_weight, pairs, s, j)
        return out

    best_dev = Fraction(0)
    best_width = Fraction(0)
    used_stage = 0
    for a, b in family:
        mid_k, width_k, j = _inner_product(c, a, b, k, eval_stage, tol, budget)
        q_mid = theta_weight * measure(c, a) * measure(c, b)
        q_width = Fraction(0)
        for (p, ap) in mix:
            mp, wp, _ = _inner_product(c, a, b, p, eval_stage, tol, budget)
            q_mid += Fraction(ap) * mp
            q_width += Fraction(ap) * wp
        best_dev = max(best_dev, abs(mid_k - q_mid))
        best_width = max(best_width, width_k + q_width)
        used_stage = max(used_stage, j)
    return WeakLimitResult(best_dev, best_width, used_stage)


def _inner_product(c, a, b, k, eval_stage, tol, budget):
    bound = correlation(
        c, [a, b], [k, 0], eval_stage=eval_stage, tol=tol, budget=budget
    )
    return bound.midpoint, bound.width, bound.eval_stage


_offsets_cache: dict[tuple, np.ndarray] = {}
_profile_cache: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def _offsets_array(c: Construction, s: int, j: int) -> np.ndarray:
    """Sorted positions of the copies of stage-``s`` level 0 inside stage j."""
    key = (c, s, j)
    hit = _offsets_cache.get(key)
    if hit is not None:
        return hit
    out = np.array([0], dtype=np.int64)
    for n in range(s, j):
        offs = np.array(c.offsets(n), dtype=np.int64)
        out = (out[None, :] + offs[:, None]).ravel()
    out.sort()
    if len(_offsets_cache) > 8:
        _offsets_cache.clear()
    _offsets_cache[key] = out
    return out


def _pair_profile(c: Construction, s: int, j: int, qmin: int, qmax: int):
    """certain[q], escaped[q] for mu(T^q L_0 cap L_0), L_0 = stage-s level 0.

    certain[q] = #{(o, o') offset pairs : o' - o = q}; both endpoints lie
    in the window by construction.  escaped[q] = #{o : o + q outside
    [0, h_j)}: copies whose shifted position is unresolved at stage j.
    """
    key = (c, s, j, qmin, qmax)
    hit = _profile_cache.get(key)
    if hit is not None:
        return hit
    o = _offsets_array(c, s, j)
    h = c.height(j)
    lo = np.searchsorted(o, o + qmin, side="left")
    hi = np.searchsorted(o, o + qmax, side="right")
    counts = hi - lo
    total = int(counts.sum())
    span = qmax - qmin + 1
    if total == 0:
        certain = np.zeros(span, dtype=np.int64)
    else:
        left = np.repeat(o, counts)
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        idx = (np.arange(total) - np.repeat(starts, counts)) + np.repeat(lo, counts)
        q = o[idx] - left
        certain = np.bincount((q - qmin).astype(np.int64), minlength=span)
    qs = np.arange(qmin, qmax + 1, dtype=np.int64)
    above = len(o) - np.searchsorted(o, h - qs, side="left")
    below = np.searchsorted(o, -qs, side="left")
    escaped = np.where(qs >= 0, above, below)
    if len(_profile_cache) > 16:
        _profile_cache.clear()
    _profile_cache[key] = (certain, escaped)
    return certain, escaped


def _single_level_deviation(c, k, mix, theta_weight, pairs, s, j):
    """Vectorized replica of the generic per-pair correlation midpoints.

    For single levels a, b the certain count of mu(T^m L_a cap L_b) at
    stage j depends only on q = m + a - b (matching offset pairs, always
    inside the window), while the escaped count of the shifted set is
    #{o : o + a + m >= h_j}.  Midpoints and widths therefore reproduce
    ``correlation`` exactly, pair by pair.
    """
    hs = c.height(s)
    c.check_stage(j)
    h = c.height(j)
    if h <= abs(k) + hs:
        raise ShiftTooLarge(f"shift {k} does not fit stage {j}")
    w = c.width(j)
    m = c.total_mass
    av = np.array([a for a, _ in pairs], dtype=np.int64)
    bv = np.array([b for _, b in pairs], dtype=np.int64)
    dmin, dmax = int((av - bv).min()), int((av - bv).max())
    ck, _ = _pair_profile(c, s, j, k + dmin, k + dmax)
    ps = [p for p, _ in mix] or [0]
    lo0, hi0 = dmin + min(ps), dmax + max(ps)
    c0, _ = _pair_profile(c, s, j, lo0, hi0)
    offs = _offsets_array(c, s, j)

    def esc_for(mshift: int) -> np.ndarray:
        # escaped copies of L_a under shift m, per pair:
        # #{o : o + a + m >= h} plus #{o : o + a + m < 0}
        above = len(offs) - np.searchsorted(offs, h - mshift - av, side="left")
        below = np.searchsorted(offs, -mshift - av, side="left")
        return above + below

    # integer arithmetic in units w/(2 D m), D = lcm of mix denominators
    dens = [Fraction(ap).denominator for _, ap in mix] or [1]
    dcm = 1
    for dd in dens:
        dcm = dcm * dd // _gcd(dcm, dd)
    mid2_k = 2 * ck[(av - bv) - dmin] + esc_for(k)
    dev_num = dcm * mid2_k
    width2 = dcm * esc_for(k)
    for (p, ap) in mix:
        ap = Fraction(ap)
        coef = ap.numerator * (dcm // ap.denominator)
        mid2_p = 2 * c0[(av - bv) + p - lo0] + esc_for(p)
        dev_num = dev_num - coef * mid2_p
        width2 = width2 + coef * esc_for(p)
    unit = w / (2 * dcm * m)
    if theta_weight:
        theta_term = theta_weight * (c.width(s) / m) ** 2
        best_dev = max(
            abs(int(n) * unit - theta_term) for n in dev_num
        )
    else:
        best_dev = int(np.abs(dev_num).max()) * unit
    best_width = int(width2.max()) * (2 * unit)
    return WeakLimitResult(best_dev, best_width, j)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def _offset_count(c: Construction, s: int, j: int) -> int:
    n = 1
    for st in range(s, j):
        n *= c.profile(st).cuts
    return n


def single_level_pairs(c: Construction, stage: int):
    """All ordered pairs of single-level sets of one stage."""
    h = c.height(stage)
    sets = [LevelSet.from_levels(stage, [l]) for l in range(h)]
    return [(a, b) for a in sets for b in sets]


def scan_weak_limit(
    c: Construction,
    ks: Sequence[int],
    mix: Sequence[tuple[int, Fraction]],
    theta_weight: Fraction,
    family: Sequence[tuple[LevelSet, LevelSet]],
    eval_stage: int | None = None,
    budget: int = DEFAULT_LEVEL_BUDGET,
) -> list[tuple[int, WeakLimitResult]]:
    """Deviation of T^k from Q for each candidate k, in input order."""
    return [
        (k, weak_limit_deviation(c, k, mix, theta_weight, family, eval_stage, budget))
        for k in ks
    ]


# -- mixing deviation scan ---------------------------------------------------

@dataclass(frozen=True)
class MixingScanResult:
    d: Fraction
    offenders: tuple[tuple[int, int], ...]
    eval_stage: int
    pairs_scanned: int


def mixing_scan(
    c: Construction,
    a: LevelSet,
    b: LevelSet,
    e: LevelSet,
    h: int,
    eps: Fraction,
    eval_stage: int | None = None,
    budget: int = DEFAULT_LEVEL_BUDGET,
) -> MixingScanResult:
    """Count triple-correlation deviations over the off-diagonal shift grid.

    Scans pairs (z, w) in [0, h]^2 with z, w, |z - w| all > eps*h, flags
    those where |mu(A cap T^z B cap T^w C) - mu(A)mu(B)mu(C)| > eps using
    correlation midpoints, and returns the count normalized by h.
    """
    eps = Fraction(eps)
    grid = [
        (z, w)
        for z in range(h + 1)
        for w in range(h + 1)
        if z > eps * h and w > eps * h and abs(z - w) > eps * h
    ]
    if not grid:
        return MixingScanResult(Fraction(0), (), 0, 0)
    j = eval_stage
    if j is None:
        j = _min_eval_stage(c, [a, b, e], [0, h, h])
    c.check_stage(j)
    if c.height(j) > budget:
        raise BudgetExceeded(f"stage {j} exceeds level budget {budget}")
    hj = c.height(j)
    if 2 * h >= hj:
        raise ShiftTooLarge(f"scan range {h} does not fit stage {j}")
    window = (1 << hj) - 1
    wj = c.width(j)
    m = c.total_mass
    ra, rb, rc = (refine(c, x, j) for x in (a, b, e))
    prod = measure(c, a) * measure(c, b) * measure(c, e)
    nb, nc = len(rb), len(rc)
    # precompute shifted copies of C unless that would hold too much memory
    keep = (h + 1) * hj <= 2**31
    cshift = [((rc.bits << w) & window) for w in range(h + 1)] if keep else None
    offenders = []
    for z in range(h + 1):
        sb = (rb.bits << z) & window
        zloss = nb - sb.bit_count()
        ab = ra.bits & sb
        for (_, w) in _grid_for_z(grid, z):
            cw = cshift[w] if keep else ((rc.bits << w) & window)
            inter = ab & cw
            lower = inter.bit_count() * wj / m
            width = (zloss + (nc - cw.bit_count())) * wj / m
            mid = lower + width / 2
            if abs(mid - prod) > eps:
                offenders.append((z, w))
    return MixingScanResult(
        Fraction(len(offenders), h), tuple(offenders), j, len(grid)
    )


def _grid_for_z(grid, z):
    # grid is sorted by z then w
    i = bisect.bisect_left(grid, (z, -1))
    while i < len(grid) and grid[i][0] == z:
        yield grid[i]
        i += 1
