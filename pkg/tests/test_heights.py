import math

import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import P
from henon_lab.automorphism import henon_auto, reversible_henon
from henon_lab.errors import InputError, OverflowHorizon
from henon_lab.green import green_system
from henon_lab.heights import (
    INFINITY,
    PERIODIC,
    POSITIVE_HEIGHT,
    UNDECIDED,
    PlaceQ,
    abs_at_place,
    dyn_height,
    exact_orbit,
    lcm_height_exact,
    local_green,
    log_abs_exact,
    naive_height,
    naive_height_exact,
    periodicity_from_height,
    product_formula_residual,
    random_rationals,
    support_set,
    valuation,
)
from henon_lab.polyalg import rat

TWO, THREE, FIVE, SEVEN = (PlaceQ(q) for q in (2, 3, 5, 7))


def test_place_validation():
    with pytest.raises(InputError):
        PlaceQ(4)
    assert sorted([SEVEN, INFINITY, TWO]) == [INFINITY, TWO, SEVEN]
    assert PlaceQ.parse("inf") == INFINITY and PlaceQ.parse("5") == FIVE
    assert str(INFINITY) == "inf"


def test_abs_three_halves():
    x = rat("3/2")
    assert abs_at_place(x, INFINITY) == 1.5
    assert abs_at_place(x, TWO) == 2.0
    assert abs_at_place(x, THREE) == pytest.approx(1 / 3, abs=0)
    assert abs_at_place(x, FIVE) == 1.0
    assert product_formula_residual(x) == {}


def test_abs_minus_seven_tenths():
    x = rat("-7/10")
    vals = {v: abs_at_place(x, v) for v in (INFINITY, TWO, FIVE, SEVEN)}
    assert vals == {INFINITY: 0.7, TWO: 2.0, FIVE: 5.0, SEVEN: 1 / 7}
    assert math.prod(vals.values()) == pytest.approx(1.0, rel=1e-15)
    assert product_formula_residual(x) == {}


def test_abs_one():
    for v in (INFINITY, TWO, THREE):
        assert abs_at_place(1, v) == 1.0
    assert product_formula_residual(1) == {}


def test_exact_logs():
    assert log_abs_exact(rat("12/5"), INFINITY) == {2: 2, 3: 1, 5: -1}
    assert log_abs_exact(rat("12/5"), TWO) == {2: -2}
    assert log_abs_exact(rat("12/5"), FIVE) == {5: 1}
    assert valuation(rat("-7/10"), 2) == -1


def test_product_formula_random():
    xs = random_rationals(1000, seed=3)
    assert len(xs) == 1000
    assert all(product_formula_residual(x) == {} for x in xs)


def test_naive_height_examples():
    h = naive_height((rat("3/2"), 5))
    assert h.value == pytest.approx(math.log(10), abs=1e-15)
    assert h.local_contributions == {INFINITY: pytest.approx(math.log(5)), TWO: pytest.approx(math.log(2))}
    assert naive_height_exact((rat("3/2"), 5)) == 10
    assert lcm_height_exact((rat("3/2"), 5)) == 10
    assert naive_height((0, 0)).value == 0.0
    assert naive_height((1, 1)).value == 0.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.fractions(max_denominator=10**4).filter(lambda q: abs(q) < 10**6), min_size=1, max_size=3))
def test_naive_height_matches_lcm(coords):
    pt = [mpq(c.numerator, c.denominator) for c in coords]
    assert naive_height_exact(pt) == lcm_height_exact(pt)
    h = naive_height(pt)
    assert h.value == pytest.approx(math.fsum(h.local_contributions.values()), abs=1e-12)
    assert all(c >= 0 for c in h.local_contributions.values())


def test_support_set(quadratic):
    assert support_set(quadratic, (rat("1/6"), 5)) == [TWO, THREE]
    f = henon_auto("1/3", P("1/5", 0, 1))
    assert support_set(f, (1, 0)) == [THREE, FIVE]


def test_local_green_periodic(quadratic):
    for v in (INFINITY, TWO, THREE):
        assert local_green(quadratic, (2, 2), v, 6) == 0.0
        assert local_green(quadratic, (0, 0), v, 6) == 0.0


def test_local_green_archimedean_stabilizes(quadratic):
    vals = [local_green(quadratic, (10, 0), INFINITY, n) for n in range(4, 12)]
    assert vals[0] > 0
    assert all(abs(v - vals[-1]) < 5e-4 for v in vals[4:])
    assert vals[-1] == pytest.approx(2.3023348426601489, abs=1e-3)


def test_local_green_two_adic(quadratic):
    v = local_green(quadratic, (rat("1/2"), 0), TWO, 6)
    assert v > 0
    assert v == pytest.approx(math.log(2), rel=1e-12)
    # a prime outside the support never contributes
    assert local_green(quadratic, (rat("1/2"), 0), THREE, 6) == 0.0


def test_overflow_horizon(quadratic):
    with pytest.raises(OverflowHorizon):
        exact_orbit(quadratic.forward, (3, 0), 40, cap=1024)
    with pytest.raises(OverflowHorizon):
        local_green(quadratic, (3, 0), INFINITY, 40, cap=1024)
    trunc = exact_orbit(quadratic.forward, (3, 0), 40, cap=1024, strict=False)
    assert 2 < len(trunc) < 41


def test_dyn_height_fixed_points(quadratic):
    for p in ((0, 0), (2, 2)):
        h = dyn_height(quadratic, p, 10)
        assert h.value == 0.0
        assert h.place_sum == 0.0


def test_dyn_height_positive_point(quadratic):
    hs = [dyn_height(quadratic, (1, 0), n) for n in (8, 9, 10)]
    assert all(h.value > 0 for h in hs)
    assert abs(hs[-1].value - hs[-2].value) < 1e-3
    assert hs[-1].agrees()
    assert hs[-1].value == pytest.approx(0.0598, abs=5e-4)
    assert hs[-1].error_bound == pytest.approx(2 * 2.485 / 2**10 * 0.5, rel=0.1) or hs[-1].error_bound < 0.01


def test_green_shift_relations(quadratic):
    # G+ o f = d G+ and G- o f = G- / d, so max(G+, G-) is not f-invariant:
    # at (1, 0) the backward escape dominates and halves along the orbit
    gs = green_system(quadratic)
    p, q = (1 + 0j, 0j), (1 + 0j, 1 + 0j)
    gp, gq = gs.plus(p), gs.plus(q)
    mp, mq = gs.minus(p), gs.minus(q)
    assert abs(gq.value - 2 * gp.value) <= gq.error_bound + 2 * gp.error_bound + 1e-12
    assert abs(2 * mq.value - mp.value) <= 2 * mq.error_bound + mp.error_bound + 1e-12
    a = dyn_height(quadratic, (1, 0), 10)
    b = dyn_height(quadratic, (1, 1), 10)
    assert a.value == pytest.approx(max(gp.value, mp.value), abs=a.combined_error)
    assert b.value == pytest.approx(max(gq.value, mq.value), abs=b.combined_error)


def test_dyn_height_bad_reduction():
    f = henon_auto("1/3", P("1/5", 0, 1))
    h = dyn_height(f, (1, 0), 7)
    assert h.value > 0
    assert set(h.local_contributions) == {INFINITY, THREE, FIVE}
    assert h.agrees()


def test_dyn_height_json(quadratic):
    js = dyn_height(quadratic, (1, 0), 6).to_json()
    assert set(js) >= {"value", "error_bound", "contributions", "n_used"}
    assert js["contributions"][0]["place"] == "inf"
    assert js["n_used"] == 6


def test_dyn_height_non_regular():
    from henon_lab.cli import load_spec

    f = load_spec("conjugated_quadratic").f
    h = dyn_height(f, (1, 0), 3)
    assert h.value > 0 and math.isnan(h.error_bound) and h.place_sum is None


def test_periodicity_verdicts(quadratic):
    assert periodicity_from_height(quadratic, (2, 2), 0.01).verdict == PERIODIC
    assert periodicity_from_height(quadratic, (0, 0), 0.01).verdict == PERIODIC
    assert periodicity_from_height(quadratic, (2, 2), 0.01).period == 1
    two_cycle = periodicity_from_height(reversible_henon(P(-4, 0, 1)), (0, -2), 0.01)
    assert (two_cycle.verdict, two_cycle.period) == (PERIODIC, 2)
    assert periodicity_from_height(quadratic, (1, 0), 0.01).verdict == POSITIVE_HEIGHT
    assert periodicity_from_height(quadratic, (1, 0), 0.01, n=2).verdict == UNDECIDED
