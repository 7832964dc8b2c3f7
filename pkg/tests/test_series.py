import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from padic_cells.errors import NotRegular, ZeroSeries
from padic_cells.padic import PAdicContext, vp
from padic_cells.series import (
    SeparatedSeries, compose, dominant_terms, eval_series, is_regular, parse_series, preregularize,
    regular_degree, w_divide, w_prepare,
)

from weierstrass_gen import random_regular, random_series

C5 = PAdicContext(5)


def S(src, names=None, **kw):
    return parse_series(src, names, **kw)


def test_regularity_examples():
    assert is_regular(S("xi1^2 - t"), d=2)
    f = S("t*xi1^2 + xi1")
    assert not is_regular(f, d=2) and is_regular(f, d=1)
    assert is_regular(S("rho1^2 + t*rho1^3"), d=2)


def test_zero_series_raises():
    zero = SeparatedSeries(1, 0, {})
    with pytest.raises(ZeroSeries):
        is_regular(zero)
    with pytest.raises(ZeroSeries):
        w_prepare(zero)
    with pytest.raises(ZeroSeries):
        w_divide(S("xi1"), zero)


def test_not_regular_raises():
    with pytest.raises(NotRegular):
        w_divide(S("xi1"), S("t*xi1"))


def test_geometric_series_evaluation():
    f = SeparatedSeries(1, 0, {(i,): (0,) * i + (1,) for i in range(7)}, trunc_t=7, exact=False)
    v = eval_series(f, [5], C5)
    assert v.absolute_precision >= 7
    assert vp(v.lift() - Fraction(-1, 24), 5) >= 7


def test_open_variable_outside_domain_is_zero():
    assert eval_series(S("rho1 + 1"), [1], C5).is_zero()


def test_preregularize_examples():
    f = SeparatedSeries(2, 0, {(1, 0): (1,)})
    phi, d = preregularize(f)
    assert d == 1 and regular_degree(compose(f, phi, []), 1) == 1
    g = SeparatedSeries(2, 0, {(1, 1): (1,)})
    phi, d = preregularize(g)
    assert regular_degree(compose(g, phi, []), 1) == d
    h = S("xi1^2 - t")
    phi, d = preregularize(h)
    assert d == 2 and compose(h, phi, []) == h


def test_weierstrass_division_example():
    f = S("xi1^2 - t")
    g = S("xi1^5 + 3*xi1 + t")
    q, r = w_divide(g, f)
    assert (q * f + r - g).is_zero()
    assert all(e[0] < 2 for e in r.coeffs)


def test_dominant_terms_reconstruct():
    F = SeparatedSeries(2, 0, {(0, 0): (0, 1), (1, 0): (1,), (2, 0): (0, 3), (0, 1): (1,)})
    terms = dominant_terms(F, [0])
    total = SeparatedSeries(2, 0, {})
    for dt in terms:
        assert dt.unit.is_unit()
        e = tuple(dt.index[0] if i == 0 else 0 for i in range(2))
        total = total + dt.coefficient * SeparatedSeries(2, 0, {e: (1,)}) * dt.unit
    assert (total - F).is_zero()


@pytest.mark.parametrize("mn", [(1, 0), (2, 0), (1, 1), (0, 1)])
def test_division_round_trip(mn):
    m, n = mn
    rng = random.Random(1000 + 10 * m + n)
    for _ in range(30):
        f, var, d = random_regular(rng, m, n)
        g = random_series(rng, m, n)
        q, r = w_divide(g, f)
        assert (q * f + r - g).is_zero()
        assert all(e[var] < d for e in r.coeffs)
        q2, r2 = w_divide(g, f)
        assert json.dumps(q.to_json()) == json.dumps(q2.to_json())
        assert json.dumps(r.to_json()) == json.dumps(r2.to_json())


@pytest.mark.parametrize("mn", [(1, 0), (2, 0), (1, 1), (0, 1)])
def test_preparation_round_trip_and_idempotence(mn):
    m, n = mn
    rng = random.Random(2000 + 10 * m + n)
    for _ in range(30):
        f, var, d = random_regular(rng, m, n)
        prep = w_prepare(f)
        assert prep.unit.is_unit() and prep.degree == d
        assert (prep.unit * prep.poly - f).is_zero()
        lead = tuple(d if i == var else 0 for i in range(m + n))
        assert prep.poly.coeffs[lead] == (1,)
        if var < m:
            assert max(e[var] for e in prep.poly.coeffs) == d
        again = w_prepare(prep.unit * prep.poly)
        assert (again.poly - prep.poly).is_zero() and (again.unit - prep.unit).is_zero()


@given(st.integers(0, 10**6))
def test_division_property(seed):
    rng = random.Random(seed)
    m, n = rng.choice([(1, 0), (2, 0), (1, 1)])
    f, var, d = random_regular(rng, m, n)
    g = random_series(rng, m, n)
    q, r = w_divide(g, f)
    assert (q * f + r - g).is_zero()
    assert all(e[var] < d for e in r.coeffs)


@given(st.integers(0, 10**6))
def test_unit_inverse_property(seed):
    rng = random.Random(seed)
    m, n = rng.choice([(1, 0), (1, 1), (2, 0)])
    u = random_series(rng, m, n) * SeparatedSeries(m, n, {(0,) * (m + n): (0, 1)}, 6, 4) + 1
    assert ((u * u.unit_inverse()) - 1).is_zero()


def test_inexact_preparation_carries_certificate():
    f = SeparatedSeries(1, 0, {(2,): (1,), (0,): (0, 1)}, trunc_t=4, exact=False)
    prep = w_prepare(f)
    assert prep.certified_order == 4 and not prep.poly.exact
