from fractions import Fraction as F

import pytest

from padic_cells.dplang import parse_polynomial
from padic_cells.integrate import zeta, zeta_series_integrand
from padic_cells.motring import MotElem, format_motelem
from padic_cells.oracle import compare, igusa_series, mu_table, tail_mass
from padic_cells.padic import PAdicContext
from padic_cells.series import SeparatedSeries

SYM = PAdicContext(2, 40, "symbolic-q")
POINTS = [(3, 1), (5, 2), (7, F(1, 2))]


def ctx(p):
    return PAdicContext(p)


def same_counts(X, Y, points=((3, 0), (5, 1), (7, 2))):
    return all(X.count_eval(q, s) == Y.count_eval(q, s) for q, s in points)


def test_zeta_examples():
    assert format_motelem(zeta("y", "1", 1, ctx(5)).motelem) == "(1 - q^-1) / (1 - q^-1 T)"
    assert format_motelem(zeta("y^2", "1", 1, ctx(5)).motelem) == "(1 - q^-1) / (1 - q^-1 T^2)"
    assert format_motelem(zeta("y^2-5", "1", 1, ctx(5)).motelem) == "1 - q^-1 + q^-1 T"
    xy = zeta("x*y", "1", 2, ctx(5)).motelem
    y = (1 - MotElem.L(-1)) * MotElem.geometric(1, -1)
    assert same_counts(xy, y * y)


def test_symbolic_q_examples():
    assert format_motelem(zeta("y^2-t", "1", 1, SYM).motelem) == "1 - q^-1 + q^-1 T"
    assert format_motelem(zeta("y", "1", 1, SYM).motelem) == "(1 - q^-1) / (1 - q^-1 T)"


def test_fubini():
    x = zeta("x", "1", 1, SYM).motelem
    y = zeta("y", "1", 1, SYM).motelem
    assert same_counts(zeta("x*y", "1", 2, SYM).motelem, x * y)


def test_second_integrand_weights():
    # |y| contributes L^-ord y
    res = zeta("y", "y", 1, ctx(5))
    assert format_motelem(res.motelem) == "(1 - q^-1) / (1 - q^-2 T)"


@pytest.mark.parametrize("p", [3, 5, 7])
@pytest.mark.parametrize("src", ["y", "y^2", "y*(y-1)", "y^2-{p}", "y^3-y", "y^2+1"])
def test_coefficients_match_oracle(src, p):
    src = src.format(p=p)
    res = zeta(src, "1", 1, ctx(p))
    assert res.complete
    f, _ = parse_polynomial(src, ["y"])
    assert compare(res.motelem, f, p, 6, 1).ok


@pytest.mark.parametrize("src", ["y", "y^2-5", "y*(y-1)"])
def test_specialization_consistency(src):
    p, J = 5, 6
    f, _ = parse_polynomial(src, ["y"])
    X = zeta(src, "1", 1, ctx(p)).motelem
    mus = mu_table(f, p, J, 1)
    tail = tail_mass(f, p, J, 1)
    for s in (1, 2, 3):
        T = F(1, p**s)
        partial = sum(m * T**j for j, m in enumerate(igusa_series(mus)))
        value = X.count_eval(p, s)
        assert partial <= value <= partial + tail * T ** (J + 1)


def test_mass_identity():
    for src, n in (("y", 1), ("x*y", 2), ("x^2-y", 2), ("y^3-y", 1)):
        for c in (ctx(3), ctx(5), SYM):
            res = zeta(src, "1", n, c)
            for q in (3, 5, 7):
                assert (res.mass + res.unresolved_measure).count_eval(q, 0) == 1


def test_partial_result_keeps_mass():
    res = zeta("y^2-x^3", "1", 2, ctx(5), max_nodes=200)
    total = res.mass + res.unresolved_measure
    for q in (3, 5, 7):
        assert total.count_eval(q, 0) == 1
    if not res.complete:
        assert res.unresolved


def test_variable_order_agrees():
    a = zeta("x^2-y", "1", 2, ctx(3), names=["x", "y"]).motelem
    b = zeta("x^2-y", "1", 2, ctx(3), names=["y", "x"]).motelem
    assert same_counts(a, b, [(3, 0), (3, 1), (3, 2)])


def test_series_integrand_unit_times_x():
    geo = {(i,): (0,) * i + (1,) for i in range(6)}
    unit = SeparatedSeries(1, 0, geo, trunc_t=6, exact=False)
    f = unit * SeparatedSeries(1, 0, {(1,): (1,)}, trunc_t=6)
    res = zeta_series_integrand(f, ctx(5))
    assert format_motelem(res.motelem) == "(1 - q^-1) / (1 - q^-1 T)"


def test_series_integrand_matches_polynomial():
    f = SeparatedSeries(1, 0, {(2,): (1,), (0,): (0, -1)})
    res = zeta_series_integrand(f, ctx(5))
    assert format_motelem(res.motelem) == "1 - q^-1 + q^-1 T"


def test_unit_series_integrates_to_one():
    u = SeparatedSeries(1, 0, {(0,): (1,), (1,): (0, 3), (2,): (0, 0, 1)}, trunc_t=4, exact=False)
    res = zeta_series_integrand(u, ctx(5))
    assert res.motelem.count_eval(5, 1) == 1


def test_result_json_is_deterministic():
    a = zeta("x^2-y", "1", 2, ctx(3)).to_json_str()
    b = zeta("x^2-y", "1", 2, ctx(3)).to_json_str()
    assert a == b
