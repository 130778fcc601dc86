"""Exact GF(2) realization of the five-point lattice system on Z^2.

The configuration group H consists of all h: Z^2 -> GF(2) with

    h(x+1, y) + h(x-1, y) + h(x, y+1) + h(x, y-1) = h(x, y).

Every assignment of the two seed columns x = 0 and x = 1 extends uniquely
to a full configuration (the relation is a bilateral recurrence in x), so
H is freely parameterized by the seed coordinates and each site functional
h -> h(x, y) is an exact GF(2) vector over finitely many seed variables.
Haar measure of a cylinder is then 2^(-rank) of its constraint system, or
zero when inconsistent: the projection of H onto any finite set of sites
is a subgroup of a GF(2) space, and Haar pushes forward to the uniform
measure on it.

A window bound ``n`` limits the sites a system instance may touch; it caps
the seed rows that must be materialized.  Periodizing to a torus instead
would kill the system: on Z_N x Z_N with N a power of two the five-point
stencil is a unit of the group algebra (it is 1 plus a nilpotent in
F_2[u,v]/(u^N, v^N), u = x+1, v = y+1), so the kernel is trivial there.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import BudgetExceeded

Site = tuple[int, int]

#: default bound on |x|, |y| of any site touched by a system
DEFAULT_WINDOW = 64


@dataclass(frozen=True)
class Cylinder:
    """Finitely many bit constraints ``h(site) = bit``."""

    constraints: tuple[tuple[Site, int], ...]

    def __post_init__(self):
        norm = tuple(
            ((int(x), int(y)), int(b) & 1) for (x, y), b in self.constraints
        )
        object.__setattr__(self, "constraints", norm)
        sites = [s for s, _ in norm]
        if len(set(sites)) != len(sites):
            raise ValueError("constraint sites must be distinct")

    @classmethod
    def single(cls, site: Site, bit: int) -> "Cylinder":
        return cls(((site, bit),))

    def shifted(self, vec: Site) -> "Cylinder":
        dx, dy = vec
        return Cylinder(tuple(
            (((x + dx), (y + dy)), b) for (x, y), b in self.constraints
        ))


class F2System:
    """Seed-variable functional table for the five-point system.

    ``window`` bounds |x| and |y| of usable sites.  Site functionals are
    cached int bitsets over the seed variables h(0, r), h(1, r) with
    ``|r| <= rows``.
    """

    def __init__(self, window: int = 16):
        if window < 4:
            raise ValueError("window must be at least 4")
        if window > DEFAULT_WINDOW:
            raise BudgetExceeded(
                f"window {window} above bit-packed budget {DEFAULT_WINDOW}"
            )
        self.window = window
        self.rows = 2 * window + 2
        self._memo: dict[Site, int] = {}

    @property
    def seed_count(self) -> int:
        return 2 * (2 * self.rows + 1)

    def _seed_index(self, x: int, y: int) -> int:
        return (y + self.rows) * 2 + x

    def functional(self, site: Site) -> int:
        """GF(2) functional of ``site`` over seed variables, as a bitset."""
        x, y = site
        if max(abs(x), abs(y)) > self.window:
            raise BudgetExceeded(f"site {site} outside window {self.window}")
        return self._phi(x, y)

    def _phi(self, x: int, y: int) -> int:
        memo = self._memo
        got = memo.get((x, y))
        if got is not None:
            return got
        if x in (0, 1):
            if abs(y) > self.rows:
                raise BudgetExceeded(f"seed row {y} outside materialized rows")
            v = 1 << self._seed_index(x, y)
        elif x >= 2:
            v = (
                self._phi(x - 1, y)
                ^ self._phi(x - 2, y)
                ^ self._phi(x - 1, y + 1)
                ^ self._phi(x - 1, y - 1)
            )
        else:
            v = (
                self._phi(x + 1, y)
                ^ self._phi(x + 2, y)
                ^ self._phi(x + 1, y + 1)
                ^ self._phi(x + 1, y - 1)
            )
        memo[(x, y)] = v
        return v

    def relation_residual(self, site: Site) -> int:
        """XOR of the five stencil functionals at ``site``; always zero."""
        x, y = site
        return (
            self.functional((x, y))
            ^ self.functional((x + 1, y))
            ^ self.functional((x - 1, y))
            ^ self.functional((x, y + 1))
            ^ self.functional((x, y - 1))
        )

    def window_basis(self) -> list[dict[Site, int]]:
        """Configurations over the window generated by each seed variable.

        Every returned configuration satisfies the relation at all window
        sites (it is the restriction of a genuine lattice configuration).
        """
        n = self.window
        sites = [(x, y) for x in range(-n, n + 1) for y in range(-n, n + 1)]
        vecs = {s: self.functional(s) for s in sites}
        out = []
        for i in range(self.seed_count):
            cfg = {s: (vecs[s] >> i) & 1 for s in sites}
            if any(cfg.values()):
                out.append(cfg)
        return out

    def restricted_dimension(self) -> int:
        """dim of the projection of H onto the window sites."""
        n = self.window
        cols = [
            self.functional((x, y))
            for x in range(-n, n + 1)
            for y in range(-n, n + 1)
        ]
        # rank of the seed -> window map = rank of the transposed system
        basis: list[int] = []
        packed = []
        for i in range(self.seed_count):
            row = 0
            for jx, v in enumerate(cols):
                row |= ((v >> i) & 1) << jx
            packed.append(row)
        return _gf2_rank(packed)


def build_system(window: int = 16) -> F2System:
    """Construct the functional table for sites within ``window``."""
    return F2System(window)


def _gf2_rank(vecs: Iterable[int]) -> int:
    pivots: dict[int, int] = {}
    rank = 0
    for v in vecs:
        cur = v
        while cur:
            top = cur.bit_length() - 1
            hit = pivots.get(top)
            if hit is None:
                pivots[top] = cur
                rank += 1
                break
            cur ^= hit
    return rank


def _solve_affine(rows: list[tuple[int, int]]) -> tuple[int, bool]:
    """Rank and consistency of a GF(2) affine system (vector, bit) rows."""
    pivots: dict[int, tuple[int, int]] = {}
    rank = 0
    for vec, bit in rows:
        cur, b = vec, bit
        while cur:
            top = cur.bit_length() - 1
            hit = pivots.get(top)
            if hit is None:
                pivots[top] = (cur, b)
                rank += 1
                break
            cur ^= hit[0]
            b ^= hit[1]
        else:
            if b:
                return rank, False
    return rank, True


def cylinder_measure(sys: F2System, cyl: Cylinder) -> Fraction:
    """Exact Haar measure of the cylinder: 2^(-rank) or 0 if inconsistent."""
    rows = [(sys.functional(site), bit) for site, bit in cyl.constraints]
    rank, consistent = _solve_affine(rows)
    if not consistent:
        return Fraction(0)
    return Fraction(1, 2**rank)


def shifted_correlation(
    sys: F2System, base: Cylinder, shifts: Sequence[Site]
) -> Fraction:
    """Measure of the intersection of the translates of ``base``.

    Duplicate constraints arising from overlapping translates are merged;
    contradictory ones make the measure zero.
    """
    merged: dict[Site, int] = {}
    for vec in shifts:
        for site, bit in base.shifted(vec).constraints:
            if site in merged and merged[site] != bit:
                return Fraction(0)
            merged[site] = bit
    rows = [(sys.functional(site), bit) for site, bit in merged.items()]
    rank, consistent = _solve_affine(rows)
    return Fraction(1, 2**rank) if consistent else Fraction(0)


def dependency_scan(
    sys: F2System, site_families: Sequence[Sequence[Site]]
) -> list[list[tuple[Site, ...]]]:
    """GF(2) dependencies among the coordinate functionals per family.

    For each family, returns a basis of the relations sum_{s in S} h(s) = 0
    valid on all of H, each given as the tuple of participating sites.
    """
    out = []
    for family in site_families:
        family = [tuple(s) for s in family]
        if len(family) > 8:
            raise BudgetExceeded("families of more than 8 sites not supported")
        vecs = [sys.functional(s) for s in family]
        deps = _left_kernel(vecs)
        out.append([
            tuple(family[i] for i in range(len(family)) if (mask >> i) & 1)
            for mask in deps
        ])
    return out


def _left_kernel(vecs: list[int]) -> list[int]:
    """Masks m with XOR_{i in m} vecs[i] = 0, as a reduced basis."""
    # eliminate on (vector, tracking mask) pairs
    rows = [(v, 1 << i) for i, v in enumerate(vecs)]
    pivots: dict[int, tuple[int, int]] = {}
    kernel = []
    for vec, mask in rows:
        cur, m = vec, mask
        while cur:
            top = cur.bit_length() - 1
            hit = pivots.get(top)
            if hit is None:
                pivots[top] = (cur, m)
                break
            cur ^= hit[0]
            m ^= hit[1]
        else:
            kernel.append(m)
    return kernel


def mixing_failure_witness(sys: F2System, k: int) -> dict:
    """The five-shift pattern at dyadic distance d = 2^k, with its measures.

    Iterating the five-point relation 2^k times collapses (freshman's
    dream over GF(2)) to h(z) = h(z + d e1) + h(z - d e1) + h(z + d e2)
    + h(z - d e2), so the five functionals carry exactly one dependency
    and the joint zero-cylinder has measure 2^{-4} = 1/16 instead of the
    product 2^{-5}.
    """
    d = 2**k
    base = Cylinder.single((0, 0), 0)
    shifts = [(0, 0), (d, 0), (-d, 0), (0, d), (0, -d)]
    joint = shifted_correlation(sys, base, shifts)
    singles = [cylinder_measure(sys, base.shifted(v)) for v in shifts]
    product = Fraction(1)
    for s in singles:
        product *= s
    deps = dependency_scan(sys, [[(v[0], v[1]) for v in shifts]])[0]
    return {
        "distance": d,
        "joint": joint,
        "product": product,
        "singles": singles,
        "dependencies": deps,
    }
