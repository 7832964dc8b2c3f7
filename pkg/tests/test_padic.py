from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from padic_cells import padic
from padic_cells.errors import InsufficientPrecision, NotIntegral
from padic_cells.padic import (
    INF, PAdicContext, ac, hensel_root, mth_root, newton_polygon, res, root_distance_vals, slope_factor, vp,
)

C3, C5, C7 = PAdicContext(3), PAdicContext(5), PAdicContext(7)


def test_context_rejects_composite_and_bad_precision():
    with pytest.raises(ValueError):
        PAdicContext(6)
    with pytest.raises(ValueError):
        PAdicContext(5, 0)
    with pytest.raises(ValueError):
        PAdicContext(5, 10, "other")


def test_ord_examples():
    assert padic.ord(C5(0)) == INF
    assert padic.ord(C5(75)) == 2
    assert padic.ord(C3(Fraction(1, 9))) == -2


def test_ac_examples():
    assert ac(C5(0), 1) == 0 and ac(C5(0), 3) == 0
    assert ac(C5(75), 1) == 3
    assert ac(C5(75), 2) == 3
    assert ac(C5(-25), 2) == 24


def test_res_examples():
    assert res(C5(0), 2) == 0
    assert res(C5(75), 2) == 0
    assert res(C5(76), 2) == 1


def test_mth_root_square_root_of_six():
    y = mth_root(C5(6), 1, 0, 2, 0)
    assert res(y, 2) == 16
    assert y * y == C5(6)


def test_mth_root_default_clause():
    assert mth_root(C5(5), 1, 0, 2, 0).is_zero()
    assert mth_root(C5(7), 1, 1, 2, 0).is_zero()


def test_hensel_root_examples():
    r = hensel_root([C7(-1), C7(0), C7(1)], 6, 0)
    assert r == C7(-1)
    assert hensel_root([C7(-1), C7(0), C7(1)], 2, 0).is_zero()


def test_hensel_root_agrees_with_mth_root():
    assert hensel_root([C5(6), C5(0), C5(-1)], 1, 0) == mth_root(C5(6), 1, 0, 2, 0)


def test_newton_polygon_examples():
    npg = newton_polygon([Fraction(-3), Fraction(1)], 5)
    assert npg.root_valuations() == [(0, 1)]
    assert newton_polygon([-5, 0, 1], 5).root_valuations() == [(Fraction(1, 2), 2)]
    assert sorted(newton_polygon([5, -6, 1], 5).root_valuations()) == [(0, 1), (1, 1)]


def test_slope_factor_examples():
    facs = slope_factor([5, -6, 1], C5)
    slopes = sorted(f.slope for f in facs)
    assert slopes == [0, 1]
    unit_root = [f for f in facs if f.slope == 0][0]
    assert (-unit_root.coeffs[0]) % 5 == 1
    single = slope_factor([-5, 0, 1], C5)
    assert len(single) == 1 and single[0].slope == Fraction(1, 2)
    cubic = slope_factor([0, -1, 0, 1], C7)
    assert sorted(f.residue_factor[0] for f in cubic) == [0, 1, 6]


def test_root_distance_examples():
    assert root_distance_vals([0, 1], [-1, 1], 5) == [0]
    assert root_distance_vals([0, 1], [-5, 1], 5) == [1]
    assert root_distance_vals([-1, 1], [-5, 0, 1], 5) == [0, 0]


rationals = st.fractions(min_value=-10**6, max_value=10**6, max_denominator=10**4)


def agrees(x, r) -> bool:
    """x equals the rational r to the precision x carries."""
    if x.absolute_precision == INF:
        return r == 0
    return r == x.lift() or vp(Fraction(r) - x.lift(), x.p) >= x.absolute_precision


@given(rationals, rationals)
def test_arithmetic_matches_rationals(a, b):
    for ctx in (C3, C5):
        x, y = ctx(a), ctx(b)
        assert agrees(x + y, a + b)
        assert agrees(x - y, a - b)
        assert agrees(x * y, a * b)


@given(rationals, rationals)
def test_ord_is_a_valuation(a, b):
    p = 5
    assert vp(a * b, p) == vp(a, p) + vp(b, p) if a and b else True
    if a + b:
        assert vp(a + b, p) >= min(vp(a, p), vp(b, p))


@given(st.lists(st.integers(-50, 50), min_size=2, max_size=6).filter(lambda c: c[-1] != 0 and c[0] != 0))
def test_newton_polygon_lengths_sum_to_degree(coeffs):
    npg = newton_polygon([Fraction(c) for c in coeffs], 3)
    assert npg.degree + npg.zero_roots == len(coeffs) - 1


@given(st.integers(-10**6, 10**6).filter(lambda v: v % 5))
def test_ac_of_unit_is_residue(a):
    assert ac(C5(a), 1) == a % 5
