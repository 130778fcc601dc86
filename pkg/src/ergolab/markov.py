"""Finite doubly stochastic (Markov) operator algebra over exact rationals.

Matrices act on functions over ``n`` uniform atoms; the inner product is
``<u, v> = (1/n) sum_i u_i v_i`` so that constants have norm one and the
adjoint of a matrix is its transpose.  ``theta(n)`` (all entries ``1/n``)
is the orthoprojection onto constants and absorbs every doubly stochastic
matrix on both sides.

Everything is exact except the spectral-gap estimate used as the finite
mixing surrogate, which runs in floating point and is flagged as such.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadMarginals,
    BadWeights,
    DimensionMismatch,
    NotErgodic,
    NotMixing,
    OverlapViolation,
)

Q = Fraction


def _as_rows(rows) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


@dataclass(frozen=True)
class MarkovMatrix:
    """An exactly doubly stochastic matrix (rows and columns sum to one)."""

    rows: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", _as_rows(self.rows))
        n = len(self.rows)
        if n == 0 or any(len(r) != n for r in self.rows):
            raise DimensionMismatch("matrix must be square and nonempty")
        for r in self.rows:
            if any(x < 0 for x in r):
                raise ValueError("entries must be non-negative")
            if sum(r) != 1:
                raise ValueError("row sums must equal 1 exactly")
        for j in range(n):
            if sum(r[j] for r in self.rows) != 1:
                raise ValueError("column sums must equal 1 exactly")

    @property
    def n(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def apply(self, f: Sequence[Fraction]) -> tuple[Fraction, ...]:
        if len(f) != self.n:
            raise DimensionMismatch("vector length mismatch")
        return tuple(
            sum(self.rows[i][j] * Fraction(f[j]) for j in range(self.n))
            for i in range(self.n)
        )

    @classmethod
    def identity(cls, n: int) -> "MarkovMatrix":
        return cls(tuple(
            tuple(Q(1) if i == j else Q(0) for j in range(n)) for i in range(n)
        ))

    @classmethod
    def permutation(cls, perm: Sequence[int]) -> "MarkovMatrix":
        """Matrix with (Pf)_i = f_{perm[i]}."""
        n = len(perm)
        if sorted(perm) != list(range(n)):
            raise ValueError("not a permutation")
        return cls(tuple(
            tuple(Q(1) if j == perm[i] else Q(0) for j in range(n))
            for i in range(n)
        ))

    @classmethod
    def lazy_cycle(cls, n: int) -> "MarkovMatrix":
        """Lazy cyclic walk 1/2 I + 1/2 C with (Cf)_i = f_{i+1 mod n}."""
        ident = cls.identity(n)
        cyc = cls.permutation([(i + 1) % n for i in range(n)])
        return mix([(ident, Q(1, 2)), (cyc, Q(1, 2))])

    @classmethod
    def random_birkhoff(
        cls, n: int, rng: random.Random, terms: int | None = None
    ) -> "MarkovMatrix":
        """Random exact doubly stochastic matrix: a rational convex
        combination of random permutation matrices (Birkhoff corner of the
        polytope is dense enough for property tests)."""
        if terms is None:
            terms = rng.randint(2, n + 2)
        perms = []
        for _ in range(terms):
            p = list(range(n))
            rng.shuffle(p)
            perms.append(cls.permutation(p))
        weights = [rng.randint(1, 9) for _ in range(terms)]
        s = sum(weights)
        return mix([(p, Q(wt, s)) for p, wt in zip(perms, weights)])


def theta(n: int) -> MarkovMatrix:
    """Orthoprojection onto constants: all entries 1/n."""
    return MarkovMatrix(tuple(tuple(Q(1, n) for _ in range(n)) for _ in range(n)))


def compose(p: MarkovMatrix, q: MarkovMatrix) -> MarkovMatrix:
    """Matrix product; double stochasticity is closed under it."""
    if p.n != q.n:
        raise DimensionMismatch(f"{p.n} != {q.n}")
    n = p.n
    return MarkovMatrix(tuple(
        tuple(sum(p.rows[i][k] * q.rows[k][j] for k in range(n)) for j in range(n))
        for i in range(n)
    ))


def adjoint(p: MarkovMatrix) -> MarkovMatrix:
    """Transpose = adjoint for the uniform inner product."""
    return MarkovMatrix(tuple(
        tuple(p.rows[j][i] for j in range(p.n)) for i in range(p.n)
    ))


def mix(parts: Sequence[tuple[MarkovMatrix, Fraction]]) -> MarkovMatrix:
    """Convex combination of doubly stochastic matrices."""
    if not parts:
        raise ValueError("empty combination")
    n = parts[0][0].n
    if any(p.n != n for p, _ in parts):
        raise DimensionMismatch("mixed sizes")
    weights = [Fraction(a) for _, a in parts]
    if any(a < 0 for a in weights) or sum(weights) != 1:
        raise BadWeights("weights must be non-negative and sum to 1")
    return MarkovMatrix(tuple(
        tuple(
            sum(a * p.rows[i][j] for (p, _), a in zip(parts, weights))
            for j in range(n)
        )
        for i in range(n)
    ))


# -- vectors ------------------------------------------------------------------

@dataclass(frozen=True)
class AtomVector:
    """A rational function on the n uniform atoms."""

    values: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(Fraction(x) for x in self.values))

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> Fraction:
        return sum(self.values) / self.n

    def zero_mean(self) -> "AtomVector":
        m = self.mean
        return AtomVector(tuple(x - m for x in self.values))

    def norm_sq(self) -> Fraction:
        return sum(x * x for x in self.values) / self.n

    @classmethod
    def indicator(cls, n: int, atom: int) -> "AtomVector":
        return cls(tuple(Q(1) if i == atom else Q(0) for i in range(n)))

    @classmethod
    def random(cls, n: int, rng: random.Random) -> "AtomVector":
        return cls(tuple(Q(rng.randint(-9, 9), rng.randint(1, 9)) for _ in range(n)))


def _vec(f) -> AtomVector:
    return f if isinstance(f, AtomVector) else AtomVector(tuple(f))


def norm_sq(values: Iterable[Fraction]) -> Fraction:
    vals = tuple(Fraction(x) for x in values)
    return sum(x * x for x in vals) / len(vals)


# -- operator principles ------------------------------------------------------

@dataclass(frozen=True)
class SymmetrizationIdentity:
    """Both sides of ||P g||^2 = <P*P g, g> for g = f - theta f."""

    lhs: Fraction
    rhs: Fraction

    @property
    def residual(self) -> Fraction:
        return self.lhs - self.rhs


def symmetrization_residual(p: MarkovMatrix, f) -> SymmetrizationIdentity:
    """Evaluate both sides of the symmetrization identity exactly.

    The two sides agree for every doubly stochastic P and every f; the
    returned object exposes them and their (zero) residual.  Consequently
    ``P* P = theta`` forces ``||P(f - theta f)|| = 0`` for every f.
    """
    f = _vec(f)
    if f.n != p.n:
        raise DimensionMismatch("vector/matrix size mismatch")
    g = f.zero_mean().values
    pg = p.apply(g)
    lhs = norm_sq(pg)
    ptp = compose(adjoint(p), p)
    rhs = sum(x * y for x, y in zip(ptp.apply(g), g)) / p.n
    if lhs != rhs:  # mathematically impossible; guards the implementation
        raise ArithmeticError("symmetrization identity violated")
    return SymmetrizationIdentity(lhs, rhs)


def frobenius_sq(p: MarkovMatrix, q: MarkovMatrix) -> Fraction:
    """Squared (unweighted) Frobenius distance between two matrices."""
    if p.n != q.n:
        raise DimensionMismatch(f"{p.n} != {q.n}")
    return sum(
        (p.rows[i][j] - q.rows[i][j]) ** 2
        for i in range(p.n)
        for j in range(p.n)
    )


def spectral_gap(t: MarkovMatrix) -> float:
    """1 minus the largest non-constant eigenvalue modulus (approximate).

    Floating point by design: the gap is only used as the finite mixing
    surrogate T^k -> theta; all certified quantities stay rational.
    """
    a = np.array([[float(x) for x in row] for row in t.rows])
    lams = np.linalg.eigvals(a)
    idx = int(np.argmin(np.abs(lams - 1.0)))
    rest = np.delete(lams, idx)
    if len(rest) == 0:
        return 1.0
    return 1.0 - float(np.max(np.abs(rest)))


def blum_hanson_average(
    t: MarkovMatrix,
    weight_rows: Sequence[dict[int, Fraction]],
    f,
    gap_tol: float = 1e-9,
) -> list[tuple[Fraction, Fraction]]:
    """Norms of dissipative averages against the mean projection.

    Each row maps powers z >= 0 to weights a_z summing to one; returns,
    per row, the pair ``(max_z a_z, ||sum_z a_z T^z f - theta f||^2)``
    exactly.  Requires a spectral gap on the zero-mean space (the finite
    surrogate for mixing); raises ``NotMixing`` otherwise.
    """
    f = _vec(f)
    if f.n != t.n:
        raise DimensionMismatch("vector/matrix size mismatch")
    if spectral_gap(t) <= gap_tol:
        raise NotMixing("no spectral gap on zero-mean space")
    out = []
    mean = f.mean
    for row in weight_rows:
        weights = {int(z): Fraction(a) for z, a in row.items()}
        if any(a < 0 for a in weights.values()) or sum(weights.values()) != 1:
            raise BadWeights("row weights must be non-negative and sum to 1")
        if any(z < 0 for z in weights):
            raise BadWeights("powers must be non-negative")
        zmax = max(weights)
        acc = [Q(0)] * t.n
        cur = list(f.values)
        for z in range(zmax + 1):
            a = weights.get(z)
            if a:
                for i in range(t.n):
                    acc[i] += a * cur[i]
            if z < zmax:
                cur = list(t.apply(cur))
        dev = norm_sq(x - mean for x in acc)
        out.append((max(weights.values()), dev))
    return out


def uniform_window(n: int) -> dict[int, Fraction]:
    """Weights 1/n on powers 0..n-1 (a dissipative family as n grows)."""
    return {z: Q(1, n) for z in range(n)}


def _kernel_dim_minus_identity(t: MarkovMatrix) -> int:
    """dim ker(T - I) by exact Gaussian elimination."""
    n = t.n
    rows = [
        [t.rows[i][j] - (1 if i == j else 0) for j in range(n)] for i in range(n)
    ]
    rank = 0
    for col in range(n):
        piv = next((r for r in range(rank, n) if rows[r][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = 1 / rows[rank][col]
        rows[rank] = [x * inv for x in rows[rank]]
        for r in range(n):
            if r != rank and rows[r][col] != 0:
                fac = rows[r][col]
                rows[r] = [x - fac * y for x, y in zip(rows[r], rows[rank])]
        rank += 1
    return n - rank


def cesaro_average(t: MarkovMatrix, f, n_terms: int) -> Fraction:
    """||V_N f - theta f||^2 for V_N = (1/N) sum_{i<N} T^i, exactly.

    Requires the ergodic surrogate: the fixed space of T is exactly the
    constants (raises ``NotErgodic`` otherwise, e.g. for T = I, n >= 2).
    """
    f = _vec(f)
    if f.n != t.n:
        raise DimensionMismatch("vector/matrix size mismatch")
    if n_terms < 1:
        raise ValueError("need at least one term")
    if _kernel_dim_minus_identity(t) != 1:
        raise NotErgodic("fixed space larger than constants")
    acc = [Q(0)] * t.n
    cur = list(f.values)
    for i in range(n_terms):
        for k in range(t.n):
            acc[k] += cur[k]
        if i < n_terms - 1:
            cur = list(t.apply(cur))
    mean = f.mean
    return norm_sq(x / n_terms - mean for x in acc)


def intertwining_residual(
    p: MarkovMatrix, t: MarkovMatrix, s: MarkovMatrix
) -> Fraction:
    """Squared Frobenius norm of PT - SP; zero iff P intertwines T with S."""
    return frobenius_sq(compose(p, t), compose(s, p))


# -- product-set bound --------------------------------------------------------

@dataclass(frozen=True)
class ProductSetBound:
    measure: Fraction
    bound: Fraction
    holds: bool


def product_set_bound(
    family: Sequence[tuple[frozenset[int], frozenset[int]]], ground_size: int
) -> ProductSetBound:
    """mu x mu of a union of products of disjoint pairs, vs 1 - 2^(-4r).

    ``family`` is a list of pairs (A_i, B_i) of subsets of range(m) with
    A_i disjoint from B_i; mu is uniform on the m atoms.  The union measure
    is computed exactly by inclusion-exclusion over subfamilies.
    """
    m = ground_size
    masks = []
    for a, b in family:
        am = _mask(a, m)
        bm = _mask(b, m)
        if am & bm:
            raise OverlapViolation(f"pair not disjoint: {sorted(a)} vs {sorted(b)}")
        masks.append((am, bm))
    r = len(masks)
    count = 0
    for k in range(1, r + 1):
        for sub in itertools.combinations(range(r), k):
            ia = (1 << m) - 1
            ib = (1 << m) - 1
            for i in sub:
                ia &= masks[i][0]
                ib &= masks[i][1]
            count += (-1) ** (k + 1) * ia.bit_count() * ib.bit_count()
    meas = Q(count, m * m)
    bound = 1 - Q(1, 2 ** (4 * r))
    return ProductSetBound(meas, bound, meas <= bound)


def _mask(s: Iterable[int], m: int) -> int:
    out = 0
    for x in s:
        if not 0 <= x < m:
            raise ValueError(f"element {x} outside ground set of size {m}")
        out |= 1 << x
    return out


def exhaustive_product_set_search(r: int, m: int):
    """Max union measure over all families of r disjoint pairs on m atoms.

    Each element independently goes to A only, B only, or neither, per
    pair; all 3^m assignments per pair are enumerated.  Returns the
    maximizing measure and one witness family.
    """
    pairs = []
    for assign in itertools.product((0, 1, 2), repeat=m):
        a = frozenset(i for i, x in enumerate(assign) if x == 1)
        b = frozenset(i for i, x in enumerate(assign) if x == 2)
        pairs.append((a, b))
    best = (Q(0), tuple())
    for fam in itertools.product(pairs, repeat=r):
        res = product_set_bound(fam, m)
        if res.measure > best[0]:
            best = (res.measure, fam)
    return best


def random_disjoint_family(
    r: int, m: int, rng: random.Random
) -> list[tuple[frozenset[int], frozenset[int]]]:
    fam = []
    for _ in range(r):
        a, b = set(), set()
        for x in range(m):
            roll = rng.randint(0, 2)
            if roll == 1:
                a.add(x)
            elif roll == 2:
                b.add(x)
        fam.append((frozenset(a), frozenset(b)))
    return fam


def dissipative_norm_bound(
    max_weight: float, rho: float, tail_terms: int = 2000
) -> float:
    """Explicit modulus bound for dissipative averages of a normal matrix.

    If all weights in one level are at most ``max_weight`` and the matrix
    has non-constant eigenvalue moduli at most ``rho < 1``, then

        ||sum_z a_z T^z g||^2 <= min_W [ (2W+1) max_weight + rho^W ] ||g||^2

    for zero-mean g: the symmetrized weights b_w are bounded by max_weight
    and |<T^w g, g>| <= rho^|w| ||g||^2.  Floating point, like the
    spectral-gap estimate it depends on.
    """
    best = 1.0
    power = 1.0
    for w in range(tail_terms):
        best = min(best, (2 * w + 1) * max_weight + power)
        power *= rho
        if power < max_weight:  # further W only add weight terms
            best = min(best, (2 * w + 3) * max_weight + power)
            break
    return best


# -- matrix I/O ----------------------------------------------------------------

def matrix_to_csv(p: MarkovMatrix) -> str:
    """Rows of exact "p/q" entries, one matrix row per line."""
    return "\n".join(
        ",".join(str(x) for x in row) for row in p.rows
    ) + "\n"


def matrix_from_csv(text: str) -> MarkovMatrix:
    rows = []
    for line in text.strip().splitlines():
        line = line.strip()
        if not line:
            continue
        rows.append(tuple(Fraction(cell.strip()) for cell in line.split(",")))
    return MarkovMatrix(tuple(rows))


# -- joinings of the uniform n-atom space -------------------------------------

def joining_of_matrix(p: MarkovMatrix) -> tuple[tuple[Fraction, ...], ...]:
    """Joining table nu(i, j) = P_{ji} / n; marginals are uniform."""
    n = p.n
    return tuple(tuple(p.rows[j][i] / n for j in range(n)) for i in range(n))


def matrix_of_joining(nu: Sequence[Sequence[Fraction]]) -> MarkovMatrix:
    """Inverse of :func:`joining_of_matrix`; validates uniform marginals."""
    table = _as_rows(nu)
    n = len(table)
    if any(len(r) != n for r in table):
        raise DimensionMismatch("joining table must be square")
    for i in range(n):
        if sum(table[i]) != Q(1, n):
            raise BadMarginals(f"row {i} marginal is not 1/n")
        if sum(row[i] for row in table) != Q(1, n):
            raise BadMarginals(f"column {i} marginal is not 1/n")
    return MarkovMatrix(tuple(
        tuple(n * table[i][j] for i in range(n)) for j in range(n)
    ))
