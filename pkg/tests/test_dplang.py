import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from padic_cells.dplang import (
    Term, eval_formula, eval_term, parse_formula, parse_polynomial, parse_term, pretty_formula, pretty_term,
    to_json_str, to_normal_form,
)
from padic_cells.errors import DPSyntaxError, SortError
from padic_cells.padic import PAdicContext, PAdicNumber

CORPUS = [
    "ord(x^2 - 1) >= 2",
    "ac_1(y - c) = 3",
    "x^2 - 2 = 0",
    "ord(x) >= 1 and not ac_1(x) = 2 or ord(x - 1) < 3",
    "ord(x*y) = ord(x) + ord(y)",
    "ord(x - y) >= 2 and ac_2(x + 1) = 4",
    "res_1(x) = 3 or ord(y) >= 1",
    "ord(x) = 0 mod 2",
    "exists r: Res_1. ac_1(x) = r*r",
    "not (ord(x^3 - y) < 2 or x = y)",
    "ord(t0 * x) > 1",
]

NF_FIXTURES = [
    "x^2 - 2 = 0 and ord(x) >= 0 or res_1(x) = 3",
    "ord(x) >= 1 and not ac_1(x) = 2 or ord(x - 1) < 3",
    "not (ord(x^2 - y) >= 2) or ac_1(y) = 1",
    "x*y != 0 and ord(x) = 0 mod 2",
    "res_1(x + y) = 1 and ord(y) <= 1",
]


def test_parse_examples():
    f = parse_formula("ord(x^2 - 1) >= 2")
    assert f.op == "cmp" and f.args[0].sort == "Ord"
    g = parse_formula("ac_1(y - c) = 3")
    assert g.args[0].sort == "Res_1"
    h = parse_term("h_{2,0}(a0, a1, a2, xi)", {"xi": "Res_1"})
    assert h.sort == "Val" and len(h.args) == 4


def test_parse_errors():
    with pytest.raises(SortError):
        parse_term("h_{2,0}(a0, a1, xi)", {"xi": "Res_1"})
    with pytest.raises(DPSyntaxError):
        parse_formula("ord(x >= 2")
    with pytest.raises(SortError):
        parse_formula("ord(x) = ac_1(x)")


def test_eval_examples():
    c7, c5 = PAdicContext(7), PAdicContext(5)
    assert eval_term(parse_term("t0"), {}, c7) == c7(7)
    assert eval_term(parse_term("ord(h_{2,0}(-1,0,1,6))"), {}, c7) == 0
    assert eval_term(parse_term("ac_2(75)"), {}, c5) == 3


def test_inverse_of_zero_is_zero():
    c5 = PAdicContext(5)
    assert eval_term(parse_term("x^-1"), {"x": 0}, c5).is_zero()


@pytest.mark.parametrize("src", CORPUS)
def test_pretty_print_round_trip(src):
    f = parse_formula(src, {"c": "Val"})
    printed = pretty_formula(f)
    assert parse_formula(printed) == f
    assert pretty_formula(parse_formula(printed)) == printed


def test_json_is_deterministic():
    f = parse_formula(CORPUS[3])
    assert to_json_str(f) == to_json_str(parse_formula(CORPUS[3]))


def test_equation_normal_form():
    nf = to_normal_form(parse_formula("x^2 - 1 = 0"))
    assert pretty_formula(nf.as_formula()) == "ac_1(x^2 - 1) = 0"


def test_res_quantifier_is_retained():
    nf = to_normal_form(parse_formula("exists r: Res_1. ac_1(x) = r*r"))
    assert "exists" in str(nf)


def _random_point(rng, p):
    def val():
        k = rng.choice([0, 0, 1, 2, 3])
        return Fraction(rng.randint(-p**4, p**4) * p**k, rng.choice([1, 1, p]))
    return {"x": val(), "y": val()}


@pytest.mark.parametrize("p", [3, 5, 7])
@pytest.mark.parametrize("src", NF_FIXTURES)
def test_normal_form_preserves_truth(src, p):
    ctx = PAdicContext(p)
    phi = parse_formula(src)
    nf = to_normal_form(phi)
    rng = random.Random(p * 7919 + len(src))
    for _ in range(1000):
        env = _random_point(rng, p)
        assert nf.holds(env, ctx) == eval_formula(phi, env, ctx)


_names = st.sampled_from(["x", "y", "z"])


@st.composite
def val_terms(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        return draw(st.one_of(_names, st.integers(0, 30).map(str)))
    op = draw(st.sampled_from(["+", "-", "*"]))
    return f"({draw(val_terms(depth - 1))} {op} {draw(val_terms(depth - 1))})"


@given(val_terms(), st.integers(1, 3), st.integers(-50, 50), st.integers(-50, 50), st.integers(-50, 50))
def test_eval_is_sort_sound(src, k, x, y, z):
    ctx = PAdicContext(5)
    env = {"x": x, "y": y, "z": z}
    v = eval_term(parse_term(src), env, ctx, want="Val")
    assert isinstance(v, PAdicNumber)
    o = eval_term(parse_term(f"ord({src})"), env, ctx)
    assert isinstance(o, (int, float))
    a = eval_term(parse_term(f"ac_{k}({src})"), env, ctx)
    assert isinstance(a, int) and 0 <= a < 5**k


@given(val_terms())
def test_term_round_trip(src):
    t = parse_term(src)
    assert parse_term(pretty_term(t)) == t


def test_parse_polynomial():
    g, names = parse_polynomial("x^2 - 3*x*y + 5", ["x", "y"])
    assert names == ["x", "y"] or tuple(names) == ("x", "y")
    assert g[(2, 0)] == (1,) and g[(1, 1)] == (-3,) and g[(0, 0)] == (5,)
