"""Independent brute-force checks used by the property suites.

These deliberately avoid the engine's bitset machinery: refinements are
per-level offset loops over python sets, and shifts walk orbits one step
at a time.  They are only usable at small tower heights and exist to
cross-examine the certified fast paths.
"""

from __future__ import annotations

from fractions import Fraction

from .rank_one import Construction, CorrelationBound, LevelSet


def refine_pointwise(c: Construction, levels, stage: int, to_stage: int) -> set[int]:
    pts = set(levels)
    for n in range(stage, to_stage):
        offs = []
        acc = 0
        h = c.height(n)
        for s in c.profile(n).spacers:
            offs.append(acc)
            acc += h + s
        pts = {o + p for p in pts for o in offs}
    return pts


def walk(p: int, k: int, height: int) -> int | None:
    """Apply the successor map |k| times, one step at a time."""
    step = 1 if k >= 0 else -1
    for _ in range(abs(k)):
        p += step
        if not 0 <= p < height:
            return None
    return p


def pointwise_enclosure(
    c: Construction, sets, shifts, eval_stage: int
) -> CorrelationBound:
    """Orbit-enumeration enclosure of a normalized correlation.

    A stage-``eval_stage`` level is certainly in the intersection when
    walking back each shift lands inside the corresponding refined set.
    Membership anywhere else can only come from source levels whose
    forward walk leaves the window, so their total mass widens the upper
    bound.  Complexity is height * total shift: keep towers small.
    """
    h = c.height(eval_stage)
    refined = [
        refine_pointwise(c, a.levels(), a.stage, eval_stage) for a in sets
    ]
    certain = 0
    for p in range(h):
        ok = True
        for pts, k in zip(refined, shifts):
            q = walk(p, -k, h)
            if q is None or q not in pts:
                ok = False
                break
        certain += ok
    escaped = 0
    for pts, k in zip(refined, shifts):
        escaped += sum(1 for q in pts if walk(q, k, h) is None)
    w = c.width(eval_stage)
    m = c.total_mass
    lower = certain * w / m
    cap = min(len(pts) for pts in refined) * w / m
    return CorrelationBound(
        lower, min(lower + escaped * w / m, cap, Fraction(1)), eval_stage
    )


def odometer_zero_returns(cuts, values, stage_height: int, start: int, length: int):
    """Zero-return times by literal digit-arithmetic stepping.

    Returns (zero times among F(0..reached), reached), where the orbit
    provides ``reached <= length`` defined steps from ``start``.
    """
    radix = list(cuts)

    def successor(digits):
        out = list(digits)
        for i, r in enumerate(radix):
            out[i] += 1
            if out[i] < r:
                return out
            out[i] = 0
        return None  # wrapped past the top point

    def position(digits):
        pos, w = 0, 1
        for d, r in zip(digits, radix):
            pos += d * w
            w *= r
        return pos

    digits = []
    p = start
    for r in radix:
        digits.append(p % r)
        p //= r
    total = 0
    zeros = [0]  # F(0) = 0
    cur = digits
    reached = 0
    for _ in range(length):
        total += values[position(cur) % stage_height]
        reached += 1
        if total == 0:
            zeros.append(reached)
        cur = successor(cur)
        if cur is None:
            break
    return zeros, reached
