"""Odometer cascades: orbit sums, recurrence, skew products."""

import random
from fractions import Fraction as Q

import pytest

from ergolab import oracles, rank_one
from ergolab.cascade import (
    CocycleFunction,
    Odometer,
    TowerBase,
    _value_table,
    orbit_sums,
    recurrence_statistic,
    skew_correlation,
)
from ergolab.errors import StageOrder, UndefinedOrbit


def test_odometer_basics():
    od = Odometer.b_adic(3, 4)
    assert od.n_points == 81
    assert od.height(2) == 9
    p = od.position_of_digits((2, 1, 0, 2))
    assert od.digits_of_position(p) == (2, 1, 0, 2)
    with pytest.raises(StageOrder):
        od.height(5)
    with pytest.raises(UndefinedOrbit):
        od.step(80, 1)
    with pytest.raises(UndefinedOrbit):
        od.step(0, -1)


def test_cocycle_requires_zero_mean():
    with pytest.raises(ValueError):
        CocycleFunction(1, (1, 1))
    f = CocycleFunction(1, (1, -1))
    assert f.mean == 0


def test_zero_cocycle_every_index_returns():
    od = Odometer.b_adic(2, 6)
    f = CocycleFunction(1, (0, 0))
    rec = orbit_sums(od, f, 0, 20)
    assert set(rec.partial_sums) == {0}
    assert rec.zero_returns == tuple(range(21))


def test_alternating_cocycle():
    # +1 on level 0, -1 on level 1 of the height-2 stage: sums alternate
    od = Odometer.b_adic(2, 8)
    f = CocycleFunction(1, (1, -1))
    rec = orbit_sums(od, f, 0, 40)
    assert rec.partial_sums[:4] == (0, 1, 0, 1)
    assert rec.zero_returns == tuple(range(0, 41, 2))


def test_triadic_cocycle_returns_every_third():
    # direct-simulation example: zero returns at the multiples of three
    od = Odometer.b_adic(3, 7)
    f = CocycleFunction(1, (1, 0, -1))
    rec = orbit_sums(od, f, 0, 3**6)
    assert rec.zero_returns == tuple(range(0, 3**6 + 1, 3))
    zeros, reached = oracles.odometer_zero_returns(od.cuts, f.values, 3, 0, 3**6)
    assert reached == 3**6 and tuple(zeros) == rec.zero_returns


def test_orbit_matches_digit_walk_oracle():
    rng = random.Random(0)
    od = Odometer.b_adic(2, 10)
    f = CocycleFunction(2, (1, -2, 2, -1))
    for _ in range(10):
        x = rng.randrange(od.n_points // 2)
        length = rng.randint(5, 300)
        rec = orbit_sums(od, f, x, length)
        zeros, reached = oracles.odometer_zero_returns(
            od.cuts, f.values, 4, x, length
        )
        assert reached == length
        assert tuple(zeros) == rec.zero_returns


def test_undefined_orbit_carries_partial_record():
    od = Odometer.b_adic(2, 4)  # 16 points
    f = CocycleFunction(1, (1, -1))
    with pytest.raises(UndefinedOrbit) as exc:
        orbit_sums(od, f, 10, 100)
    assert exc.value.reached == 6
    assert exc.value.record.length == 6
    zeros, reached = oracles.odometer_zero_returns(od.cuts, f.values, 2, 10, 100)
    assert reached == 6 and tuple(zeros) == exc.value.record.zero_returns


def test_cocycle_identity():
    od = Odometer.b_adic(3, 6)
    f = CocycleFunction(1, (2, -1, -1))
    rec = orbit_sums(od, f, 7, 300)
    for i, j in [(0, 5), (100, 150), (13, 200)]:
        mid = orbit_sums(od, f, 7 + i, j)
        assert rec.partial_sums[i + j] == rec.partial_sums[i] + mid.partial_sums[j]


def test_recurrence_statistic_trivial_cases():
    od = Odometer.b_adic(2, 10)
    zero = CocycleFunction(1, (0, 0))
    res = recurrence_statistic(od, zero, list(range(0, 512, 7)), 64, 64)
    assert res.fraction == 1
    alt = CocycleFunction(1, (1, -1))
    res = recurrence_statistic(od, alt, list(range(0, 512, 7)), 64, 32)
    assert res.fraction == 1  # K = L/2 zero returns on every orbit


def test_recurrence_statistic_excludes_overflow():
    od = Odometer.b_adic(2, 6)  # 64 points
    f = CocycleFunction(1, (1, -1))
    res = recurrence_statistic(od, f, [0, 60], 32, 2)
    assert res.included == 1 and res.excluded == 1
    with pytest.raises(UndefinedOrbit):
        recurrence_statistic(od, f, [60], 32, 2)


def test_recurrence_trend_nondecreasing_in_length():
    od = Odometer.b_adic(2, 14)
    f = CocycleFunction(3, (1, 1, -1, -1, 1, -1, 1, -1))
    sample = list(range(0, 4096, 37))
    fractions = [
        recurrence_statistic(od, f, sample, length, 40).fraction
        for length in (256, 1024, 4096)
    ]
    assert fractions[0] <= fractions[1] <= fractions[2]


def test_value_table_zero_mean_preserved():
    od = Odometer.b_adic(2, 9)
    f = CocycleFunction(2, (3, -1, -1, -1))
    assert int(_value_table(od, f).sum()) == 0
    c = rank_one.preset("chacon", 5)
    tb = TowerBase(c, 5)
    g = CocycleFunction(2, (1, 0, -1, 0))
    table = _value_table(tb, g)
    assert len(table) == c.height(5)
    assert int(table.sum()) == 0  # spacers carry value zero


def test_tower_base_orbit():
    c = rank_one.preset("chacon", 4)
    tb = TowerBase(c, 4)  # 40 levels
    f = CocycleFunction(2, (1, 0, -1, 0))
    rec = orbit_sums(tb, f, 0, 30)
    assert rec.length == 30
    with pytest.raises(UndefinedOrbit):
        orbit_sums(tb, f, 35, 30)


def test_skew_zero_cocycle_factorizes():
    base = Odometer.b_adic(2, 6)
    fiber = rank_one.preset("chacon", 6)
    zero = CocycleFunction(1, (0, 0))
    a = rank_one.LevelSet.from_levels(1, [0])
    b = rank_one.LevelSet.from_levels(3, [0, 2, 7])
    d = rank_one.LevelSet.from_levels(3, [1, 2, 9])
    got = skew_correlation(base, fiber, zero, [(a, b), (a, d)], [0, 16],
                           fiber_stage=6)
    # R^16 = S^16 x Id: base overlap times an exact fiber intersection;
    # the even cells {16, ..., 62} survive the shift, 8 cells escape
    base_overlap = Q(24, 64)
    fib = rank_one.correlation(fiber, [b, d], [0, 0], eval_stage=6)
    assert fib.width == 0
    assert got.lower == base_overlap * fib.lower
    assert got.upper == got.lower + Q(8, 64) * rank_one.measure(fiber, b)


def test_skew_shift_zero_is_product():
    base = Odometer.b_adic(2, 5)
    fiber = rank_one.preset("chacon", 5)
    n = CocycleFunction(1, (1, -1))
    a = rank_one.LevelSet.from_levels(2, [0, 3])
    b = rank_one.LevelSet.from_levels(3, [0, 5, 11])
    got = skew_correlation(base, fiber, n, [(a, b)], [0], fiber_stage=5)
    expect = Q(len(a), base.height(2)) * rank_one.measure(fiber, b)
    assert got.lower == got.upper == expect


def test_skew_alternating_cocycle_even_shift():
    # n = (+1, -1): every window of even length sums to zero, so R^16
    # acts as S^16 x Id; enclosures at a deeper fiber stage must nest
    base = Odometer.b_adic(2, 6)
    fiber = rank_one.preset("chacon", 7)
    n = CocycleFunction(1, (1, -1))
    a = rank_one.LevelSet.from_levels(1, [0])
    sets = [(a, rank_one.LevelSet.from_levels(4, range(0, 40, 3)))] * 2
    got5 = skew_correlation(base, fiber, n, sets, [0, 16], fiber_stage=5)
    got6 = skew_correlation(base, fiber, n, sets, [0, 16], fiber_stage=6)
    assert got5.lower <= got6.lower and got6.upper <= got5.upper
    zero = CocycleFunction(1, (0, 0))
    same = skew_correlation(base, fiber, zero, sets, [0, 16], fiber_stage=6)
    assert (got6.lower, got6.upper) == (same.lower, same.upper)
