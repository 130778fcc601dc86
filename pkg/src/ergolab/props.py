"""Seeded randomized property suites for every module (CLI ``props``)."""

from __future__ import annotations

import random
from fractions import Fraction

from . import cascade, ledrappier, markov, oracles, rank_one

Q = Fraction


def _random_level_set(rng, stage, height, density=0.4):
    return rank_one.LevelSet.from_levels(
        stage, [l for l in range(height) if rng.random() < density]
    )


def rank_one_props(seed: int) -> list[tuple[str, bool]]:
    rng = random.Random(seed)
    out = []
    c = rank_one.preset("chacon", 6)
    ok = True
    for _ in range(25):
        s = rng.randint(1, 5)
        a = _random_level_set(rng, s, c.height(s))
        j = rng.randint(s, min(7, c.top_stage))
        ok &= rank_one.mass(c, rank_one.refine(c, a, j)) == rank_one.mass(c, a)
    out.append(("measure conservation under refine", ok))

    ok = True
    for _ in range(15):
        s = rng.randint(2, 4)
        a = _random_level_set(rng, s, c.height(s))
        b = _random_level_set(rng, s, c.height(s))
        k = rng.randint(0, c.height(s) // 2)
        bounds = [
            rank_one.correlation(c, [a, b], [0, k], eval_stage=j)
            for j in range(s, s + 3)
        ]
        ok &= all(x.contains(y) for x, y in zip(bounds, bounds[1:]))
    out.append(("nested enclosures when deepening", ok))

    ok = True
    for _ in range(15):
        s = rng.randint(2, 4)
        a = _random_level_set(rng, s, c.height(s))
        b = _random_level_set(rng, s, c.height(s))
        k = rng.randint(1, c.height(s) - 1)
        lhs = rank_one.correlation(c, [a, b], [0, k], eval_stage=s + 2)
        rhs = rank_one.correlation(c, [b, a], [0, -k], eval_stage=s + 2)
        ok &= lhs.lower <= rhs.upper and rhs.lower <= lhs.upper
    out.append(("shift-adjoint symmetry up to width", ok))

    ok = True
    for _ in range(10):
        s = rng.randint(2, 3)
        a = _random_level_set(rng, s, c.height(s))
        b = _random_level_set(rng, s, c.height(s))
        k = rng.randint(0, c.height(s) - 1)
        for j in (s, s + 1):
            if c.height(j) > 200:
                continue
            eng = rank_one.correlation(c, [a, b], [0, k], eval_stage=j)
            orc = oracles.pointwise_enclosure(c, [a, b], [0, k], j)
            ok &= eng.lower == orc.lower and eng.upper == orc.upper
    out.append(("pointwise orbit oracle agreement", ok))

    # the single-level fast path agrees with the generic bitset path
    ok = True
    half = Q(1, 2)
    fam = rank_one.single_level_pairs(c, 2)
    for k in (4, 5, 13, 14):
        fast = rank_one.weak_limit_deviation(
            c, k, [(0, half), (1, half)], Q(0), fam, eval_stage=5
        )
        slow_dev = Q(0)
        for a, b in fam:
            mid_k = rank_one.correlation(c, [a, b], [k, 0], eval_stage=5).midpoint
            q = (
                rank_one.correlation(c, [a, b], [0, 0], eval_stage=5).midpoint / 2
                + rank_one.correlation(c, [a, b], [1, 0], eval_stage=5).midpoint / 2
            )
            slow_dev = max(slow_dev, abs(mid_k - q))
        ok &= fast.deviation == slow_dev
    out.append(("single-level fast path equals generic path", ok))
    return out


def markov_props(seed: int) -> list[tuple[str, bool]]:
    rng = random.Random(seed)
    out = []
    ok = True
    for _ in range(20):
        n = rng.randint(2, 6)
        p = markov.MarkovMatrix.random_birkhoff(n, rng)
        q = markov.MarkovMatrix.random_birkhoff(n, rng)
        markov.compose(p, q)  # constructor re-validates double stochasticity
        markov.adjoint(p)
        th = markov.theta(n)
        ok &= markov.compose(th, p) == th == markov.compose(p, th)
    out.append(("closure and theta absorption", ok))

    ok = True
    for _ in range(50):
        n = rng.randint(2, 6)
        p = markov.MarkovMatrix.random_birkhoff(n, rng)
        f = markov.AtomVector.random(n, rng)
        ok &= markov.symmetrization_residual(p, f).residual == 0
    out.append(("symmetrization identity", ok))

    ok = True
    for _ in range(30):
        n = rng.randint(2, 6)
        p = markov.MarkovMatrix.random_birkhoff(n, rng)
        ok &= markov.matrix_of_joining(markov.joining_of_matrix(p)) == p
    out.append(("joining round-trip", ok))

    ok = True
    for _ in range(200):
        r = rng.randint(1, 4)
        m = rng.randint(2, 8)
        fam = markov.random_disjoint_family(r, m, rng)
        ok &= markov.product_set_bound(fam, m).holds
    out.append(("product-set union bound", ok))
    return out


def ledrappier_props(seed: int) -> list[tuple[str, bool]]:
    rng = random.Random(seed)
    sys = ledrappier.build_system(16)
    out = []
    sites = [(rng.randint(-10, 10), rng.randint(-10, 10)) for _ in range(10)]
    out.append((
        "five-point relation holds identically",
        all(sys.relation_residual(s) == 0 for s in sites),
    ))

    ok = True
    for _ in range(10):
        s = (rng.randint(-6, 6), rng.randint(-6, 6))
        cyl = ledrappier.Cylinder.single(s, rng.randint(0, 1))
        t = (rng.randint(-6, 6), rng.randint(-6, 6))
        ok &= ledrappier.cylinder_measure(sys, cyl) == ledrappier.cylinder_measure(
            sys, cyl.shifted(t)
        )
    out.append(("translation invariance", ok))

    ok = True
    for _ in range(10):
        k = rng.randint(1, 4)
        csites = set()
        while len(csites) < k:
            csites.add((rng.randint(-6, 6), rng.randint(-6, 6)))
        cons = tuple((s, rng.randint(0, 1)) for s in csites)
        cyl = ledrappier.Cylinder(cons)
        m1 = ledrappier.cylinder_measure(sys, cyl)
        extra = ((rng.randint(-6, 6), rng.randint(-6, 6)), rng.randint(0, 1))
        if extra[0] in csites:
            continue
        m2 = ledrappier.cylinder_measure(sys, ledrappier.Cylinder(cons + (extra,)))
        ok &= m2 <= m1 and (m2 == 0 or m2 in (m1, m1 / 2))
        # dyadic (or zero) measures
        ok &= m1 == 0 or m1.numerator == 1 and (m1.denominator & (m1.denominator - 1)) == 0
    out.append(("monotone dyadic cylinder measures", ok))
    return out


def cascade_props(seed: int) -> list[tuple[str, bool]]:
    rng = random.Random(seed)
    out = []
    base = cascade.Odometer.b_adic(3, 7)
    f = cascade.CocycleFunction(1, (1, 0, -1))

    ok = True
    for _ in range(15):
        x = rng.randrange(base.n_points // 2)
        i = rng.randint(0, 200)
        j = rng.randint(0, 200)
        rec = cascade.orbit_sums(base, f, x, i + j)
        mid = cascade.orbit_sums(base, f, x + i, j)
        ok &= rec.partial_sums[i + j] == rec.partial_sums[i] + mid.partial_sums[j]
    out.append(("cocycle identity F(x,i+j) = F(x,i)+F(S^i x,j)", ok))

    ok = True
    for _ in range(15):
        x = rng.randrange(base.n_points // 2)
        steps = rng.randint(0, 500)
        p = x
        for _ in range(steps):
            p = base.step(p, 1)
        for _ in range(steps):
            p = base.step(p, -1)
        ok &= p == x
        ok &= base.position_of_digits(base.digits_of_position(x)) == x
    out.append(("odometer forward-backward bijectivity", ok))

    ok = True
    for _ in range(10):
        x = rng.randrange(base.n_points // 3)
        length = rng.randint(10, 3**5)
        rec = cascade.orbit_sums(base, f, x, length)
        zeros, reached = oracles.odometer_zero_returns(
            base.cuts, f.values, 3, x, length
        )
        ok &= reached == length and tuple(zeros) == rec.zero_returns
    out.append(("zero returns match digit-walk oracle", ok))

    fiber = rank_one.preset("chacon", 6)
    zero = cascade.CocycleFunction(1, (0, 0))
    b2 = cascade.Odometer.b_adic(2, 6)
    ok = True
    for _ in range(8):
        a = rank_one.LevelSet.from_levels(1, [rng.randint(0, 1)])
        bset = _random_level_set(rng, 3, fiber.height(3), 0.5)
        d = _random_level_set(rng, 3, fiber.height(3), 0.5)
        k = rng.randint(0, 16)
        got = cascade.skew_correlation(
            b2, fiber, zero, [(a, bset), (a, d)], [0, k], fiber_stage=6
        )
        base_part = Fraction(_overlap(a, k, b2), b2.n_points)
        fib = rank_one.correlation(fiber, [bset, d], [0, 0], eval_stage=6)
        ok &= got.lower == base_part * fib.lower
    out.append(("zero cocycle makes the skew product factor", ok))
    return out


def _overlap(a, k, base):
    h = base.height(a.stage)
    reps = base.n_points // h
    bits = 0
    for rep in range(reps):
        bits |= a.bits << (rep * h)
    window = (1 << base.n_points) - 1
    return (bits & ((bits << k) & window)).bit_count()


SUITES = {
    "rank_one": rank_one_props,
    "markov": markov_props,
    "ledrappier": ledrappier_props,
    "cascade": cascade_props,
}


def run_props(seed: int) -> dict:
    results = {}
    all_ok = True
    for name, fn in sorted(SUITES.items()):
        rows = fn(seed)
        results[name] = [{"property": p, "pass": bool(ok)} for p, ok in rows]
        all_ok &= all(ok for _, ok in rows)
    return {"seed": seed, "all_pass": all_ok, "suites": results}
