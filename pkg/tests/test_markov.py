"""Doubly stochastic operator algebra: identities, averages, bounds."""

import random
from fractions import Fraction as Q

import pytest

from ergolab import markov
from ergolab.errors import (
    BadMarginals,
    BadWeights,
    DimensionMismatch,
    NotErgodic,
    NotMixing,
    OverlapViolation,
)
from ergolab.markov import (
    AtomVector,
    MarkovMatrix,
    adjoint,
    blum_hanson_average,
    cesaro_average,
    compose,
    exhaustive_product_set_search,
    frobenius_sq,
    intertwining_residual,
    joining_of_matrix,
    matrix_of_joining,
    norm_sq,
    product_set_bound,
    random_disjoint_family,
    symmetrization_residual,
    theta,
    uniform_window,
)


def test_theta_absorbing_and_idempotent():
    rng = random.Random(0)
    th = theta(4)
    assert compose(th, th) == th
    for _ in range(5):
        p = MarkovMatrix.random_birkhoff(4, rng)
        assert compose(th, p) == th
        assert compose(p, th) == th
    th2 = theta(2)
    p2 = MarkovMatrix.permutation([1, 0])
    assert compose(th2, p2) == th2


def test_adjoint_of_permutation_is_inverse():
    perm = [2, 0, 3, 1]
    p = MarkovMatrix.permutation(perm)
    inv = [perm.index(i) for i in range(4)]
    assert adjoint(p) == MarkovMatrix.permutation(inv)
    assert compose(p, adjoint(p)) == MarkovMatrix.identity(4)


def test_compose_closure_random():
    # products of exact doubly stochastic matrices revalidate exactly
    rng = random.Random(1)
    for _ in range(10):
        p = MarkovMatrix.random_birkhoff(4, rng)
        q = MarkovMatrix.random_birkhoff(4, rng)
        pq = compose(p, q)
        assert all(sum(row) == 1 for row in pq.rows)
        assert all(
            sum(pq.rows[i][j] for i in range(4)) == 1 for j in range(4)
        )


def test_matrix_validation():
    with pytest.raises(ValueError):
        MarkovMatrix(((Q(1, 2), Q(1, 2)), (Q(1), Q(0))))  # bad column sums
    with pytest.raises(DimensionMismatch):
        compose(MarkovMatrix.identity(2), MarkovMatrix.identity(3))


def test_symmetrization_identity_examples():
    rng = random.Random(2)
    th = theta(5)
    f = AtomVector.random(5, rng)
    ident = symmetrization_residual(th, f)
    assert ident.residual == 0 and ident.lhs == 0  # theta kills zero-mean
    p = MarkovMatrix.permutation([4, 0, 1, 3, 2])
    g = f.zero_mean()
    assert norm_sq(p.apply(g.values)) == g.norm_sq()  # isometry
    assert symmetrization_residual(p, f).residual == 0


def test_symmetrization_quantitative_bound():
    # ||P g||^4 <= ||P*P - theta||_F^2 ||g||^4 over 100 seeded matrices
    rng = random.Random(3)
    th = theta(5)
    for _ in range(100):
        p = MarkovMatrix.random_birkhoff(5, rng)
        f = AtomVector.random(5, rng)
        g = f.zero_mean()
        lhs = norm_sq(p.apply(g.values))
        delta_sq = frobenius_sq(compose(adjoint(p), p), th)
        assert lhs**2 <= delta_sq * g.norm_sq() ** 2


def _matrix_power(p: MarkovMatrix, k: int) -> MarkovMatrix:
    # independent path: binary exponentiation of the matrix itself
    out = MarkovMatrix.identity(p.n)
    base = p
    while k:
        if k & 1:
            out = compose(out, base)
        base = compose(base, base)
        k >>= 1
    return out


def test_blum_hanson_window_goldens():
    t = MarkovMatrix.lazy_cycle(8)
    f = AtomVector.indicator(8, 0)
    rows = [uniform_window(n) for n in (10, 100, 400)]
    got = blum_hanson_average(t, rows, f)
    assert [float(w) for w, _ in got] == [0.1, 0.01, 0.0025]
    # decreasing norms as the max weight shrinks
    assert got[0][1] > got[1][1] > got[2][1]
    # direct power computation oracle (matrix binary exponentiation)
    for (n, (_, dev_sq)) in zip((10, 100), got):
        acc = [Q(0)] * 8
        for z in range(n):
            pz = _matrix_power(t, z)
            fz = pz.apply(f.values)
            acc = [a + x / n for a, x in zip(acc, fz)]
        assert norm_sq(x - f.mean for x in acc) == dev_sq
    assert float(got[0][1]) == pytest.approx(5.087051e-3, rel=1e-6)


def test_blum_hanson_trivial_rows():
    t = theta(4)
    f = AtomVector.random(4, random.Random(4))
    # point mass on any positive power of theta gives theta f exactly
    got = blum_hanson_average(t, [{1: Q(1)}], f)
    assert got[0][1] == 0
    # constant functions are fixed by every average
    const = AtomVector((Q(2), Q(2), Q(2), Q(2)))
    t8 = MarkovMatrix.lazy_cycle(8)
    got = blum_hanson_average(t8, [uniform_window(7)], AtomVector((Q(2),) * 8))
    assert got[0][1] == 0


def test_blum_hanson_rejects_non_mixing():
    cyc = MarkovMatrix.permutation([(i + 1) % 6 for i in range(6)])
    f = AtomVector.indicator(6, 0)
    with pytest.raises(NotMixing):
        blum_hanson_average(cyc, [uniform_window(5)], f)
    with pytest.raises(NotMixing):
        blum_hanson_average(MarkovMatrix.identity(3), [uniform_window(5)],
                            AtomVector.indicator(3, 0))
    with pytest.raises(BadWeights):
        blum_hanson_average(
            MarkovMatrix.lazy_cycle(4), [{0: Q(1, 2)}], AtomVector.indicator(4, 0)
        )


def test_cesaro_rejects_identity():
    with pytest.raises(NotErgodic):
        cesaro_average(MarkovMatrix.identity(3), AtomVector.indicator(3, 0), 5)


def test_cesaro_full_cycles_exact():
    cyc = MarkovMatrix.permutation([(i + 1) % 5 for i in range(5)])
    rng = random.Random(5)
    for m in (1, 2, 4):
        f = AtomVector.random(5, rng)
        assert cesaro_average(cyc, f, 5 * m) == 0
    # partial cycles generally miss
    f = AtomVector.indicator(5, 0)
    assert cesaro_average(cyc, f, 7) > 0


def test_cesaro_lazy_walk_goldens():
    t = MarkovMatrix.lazy_cycle(8)
    f = AtomVector.indicator(8, 0)
    got = [cesaro_average(t, f, n) for n in (10, 100, 1000)]
    assert got[0] > got[1] > got[2]
    assert float(got[0]) == pytest.approx(5.087051e-3, rel=1e-6)
    assert float(got[1]) == pytest.approx(3.281250e-5, rel=1e-6)
    assert float(got[2]) == pytest.approx(3.281250e-7, rel=1e-6)


def test_intertwining_residual():
    rng = random.Random(6)
    t = MarkovMatrix.random_birkhoff(5, rng)
    s = MarkovMatrix.random_birkhoff(5, rng)
    th = theta(5)
    assert intertwining_residual(th, t, s) == 0
    assert intertwining_residual(MarkovMatrix.identity(5), t, t) == 0
    # independent random permutations generally fail to intertwine
    p1 = MarkovMatrix.permutation([1, 2, 3, 4, 0])
    p2 = MarkovMatrix.permutation([2, 0, 4, 1, 3])
    res = intertwining_residual(MarkovMatrix.identity(5), p1, p2)
    assert res == frobenius_sq(p1, p2) > 0


def test_product_set_bound_examples():
    res = product_set_bound(
        [(frozenset({0, 1}), frozenset({2, 3}))], ground_size=4
    )
    assert res.measure == Q(1, 4) and res.bound == Q(15, 16) and res.holds
    empty = product_set_bound([], ground_size=4)
    assert empty.measure == 0 and empty.holds
    with pytest.raises(OverlapViolation):
        product_set_bound([(frozenset({0}), frozenset({0, 1}))], 3)


def test_product_set_inclusion_exclusion_vs_cells():
    rng = random.Random(7)
    for _ in range(50):
        r = rng.randint(1, 4)
        m = rng.randint(2, 6)
        fam = random_disjoint_family(r, m, rng)
        got = product_set_bound(fam, m).measure
        cells = sum(
            1
            for x in range(m)
            for y in range(m)
            if any(x in a and y in b for a, b in fam)
        )
        assert got == Q(cells, m * m)


EXHAUSTIVE_MAX = {(2, 4): Q(1, 2), (2, 5): Q(12, 25)}


def test_exhaustive_product_set_search():
    for (r, m), expected in EXHAUSTIVE_MAX.items():
        best, fam = exhaustive_product_set_search(r, m)
        assert best == expected
        assert best <= 1 - Q(1, 2 ** (4 * r))
        assert product_set_bound(fam, m).measure == best


def test_blum_hanson_explicit_modulus():
    # ||avg - theta f||^2 <= [(2W+1) max_w + rho^W] ||g||^2 for the lazy
    # walk (a normal matrix), with rho from the spectral-gap estimate
    t = MarkovMatrix.lazy_cycle(8)
    rho = 1.0 - markov.spectral_gap(t)
    f = AtomVector.indicator(8, 0)
    g_sq = float(f.zero_mean().norm_sq())
    for n in (10, 100, 1000):
        (max_w, dev_sq), = blum_hanson_average(t, [uniform_window(n)], f)
        bound = markov.dissipative_norm_bound(float(max_w), rho)
        assert float(dev_sq) <= bound * g_sq


def test_theta_maps_to_mean_exactly():
    rng = random.Random(9)
    for n in (2, 5, 8):
        v = AtomVector.random(n, rng)
        assert theta(n).apply(v.values) == (v.mean,) * n


def test_matrix_csv_round_trip():
    rng = random.Random(10)
    p = MarkovMatrix.random_birkhoff(5, rng)
    text = markov.matrix_to_csv(p)
    assert markov.matrix_from_csv(text) == p
    assert "/" in text  # exact rationals, never floats


def test_joining_round_trip():
    ident = MarkovMatrix.identity(3)
    nu = joining_of_matrix(ident)
    assert all(nu[i][i] == Q(1, 3) for i in range(3))
    th = theta(3)
    assert all(x == Q(1, 9) for row in joining_of_matrix(th) for x in row)
    rng = random.Random(8)
    for _ in range(20):
        p = MarkovMatrix.random_birkhoff(3, rng)
        assert matrix_of_joining(joining_of_matrix(p)) == p
    with pytest.raises(BadMarginals):
        matrix_of_joining(((Q(1, 2), Q(0), Q(0)),) * 3)
