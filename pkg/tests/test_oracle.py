import random
from fractions import Fraction as F
from itertools import product

import pytest
from hypothesis import given, strategies as st

from padic_cells.dplang import parse_polynomial
from padic_cells.motring import MotElem
from padic_cells.oracle import (
    compare, igusa_series, kernel_available, level_counts, mu, mu_enumerate, mu_equichar_table, mu_table,
    tail_mass, to_csv,
)


def poly(src, names=None):
    g, _ = parse_polynomial(src, names)
    return g


def test_identity_levels():
    for p in (3, 5, 7):
        assert mu_table(poly("y"), p, 5) == [(1 - F(1, p)) * F(1, p) ** j for j in range(6)]


def test_square_levels():
    assert mu_table(poly("y^2"), 5, 5) == [F(4, 5), 0, F(4, 25), 0, F(4, 125), 0]


def test_constant_one():
    assert mu_table(poly("1", ["y"]), 5, 3) == [1, 0, 0, 0]


def test_equichar_examples_mirror():
    assert mu_equichar_table(poly("y"), 5, 3) == mu_table(poly("y"), 5, 3)
    assert mu_equichar_table(poly("y^2"), 5, 5) == [F(4, 5), 0, F(4, 25), 0, F(4, 125), 0]


def test_equichar_differs_where_p_is_not_t():
    # y^2 - p: the uniformizer is t in F_p((t)), and 5 = 0 there
    fixed = mu_table(poly("y^2 - 5"), 5, 3)
    equi = mu_equichar_table(poly("y^2 - 5"), 5, 3)
    assert fixed != equi


@pytest.mark.parametrize("src", ["y", "y^2", "y*(y-1)", "y^2-3", "y^3-y", "y^2+1"])
def test_branch_and_lift_matches_enumeration(src):
    f = poly(src)
    for j in range(4):
        assert mu(f, 3, j) == mu_enumerate(f, 3, j)


@pytest.mark.parametrize("src", ["y^2-5", "x*y", "x^2-y", "x^2+y^2"])
def test_mass_accounting(src):
    f = poly(src)
    n = len(next(iter(f)))
    J = 4
    mus = mu_table(f, 5, J, n)
    assert sum(mus) <= 1
    N = level_counts(f, 5, J + 1, n)[J + 1]
    assert sum(mus) + F(N, 5 ** ((J + 1) * n)) == 1
    assert tail_mass(f, 5, J, n) == 1 - sum(mus)


@pytest.mark.skipif(not kernel_available(), reason="compiled kernel not built")
@pytest.mark.parametrize("src", ["y^3-y", "x*y", "x^2-y", "x^2+y^2-1"])
def test_compiled_kernel_matches_python(src):
    f = poly(src)
    for p in (3, 5):
        assert mu_table(f, p, 4, backend="compiled") == mu_table(f, p, 4, backend="python")


def test_compare_flags_perturbation():
    X = (1 - MotElem.L(-1)) * MotElem.geometric(1, -1)
    good = compare(X, poly("y"), 5, 6)
    assert good.ok
    bad = compare(X + MotElem.monomial(1, -9, 3), poly("y"), 5, 6)
    assert bad.mismatches() == [3]


def test_compare_respects_certificate():
    X = (1 - MotElem.L(-1)) * MotElem.geometric(1, -1) + MotElem.T(5)
    rep = compare(X, poly("y"), 5, 8, certified_upto=4)
    assert rep.ok and len(rep.rows) == 5


def test_igusa_series_examples():
    assert igusa_series([1, 0, 0]) == [1]
    assert igusa_series([F(4, 5) * F(1, 5) ** j for j in range(4)]) == [F(4, 5), F(4, 25), F(4, 125), F(4, 625)]
    assert igusa_series([]) == []
    with pytest.raises(ValueError):
        igusa_series([F(-1)])


def test_csv_format():
    assert to_csv([F(4, 5), 0]) == "j,numerator,denominator\n0,4,5\n1,0,1\n"


@given(st.lists(st.integers(-4, 4), min_size=2, max_size=4).filter(lambda c: any(c[1:])))
def test_oracle_on_oracle(coeffs):
    f = {(i,): c for i, c in enumerate(coeffs) if c}
    for j in range(3):
        assert mu(f, 3, j) == mu_enumerate(f, 3, j)


def _equichar_by_enumeration(f, p, levels, n):
    from padic_cells.oracle import _value_equichar
    from padic_cells.polys import reduce_equichar

    terms = list(reduce_equichar(f, p).items())
    top = max(max(e) for e, _ in terms)
    out = [1]
    for L in range(1, levels + 1):
        hits = 0
        for digits in product(range(p), repeat=n * L):
            x = tuple(digits[i * L:(i + 1) * L] for i in range(n))
            hits += not any(_value_equichar(terms, x, p, L, top))
        out.append(hits)
    return out


def test_equichar_lifting_matches_enumeration():
    from padic_cells.oracle import level_counts_equichar
    from padic_cells.polys import reduce_equichar

    rng = random.Random(11)
    checked = 0
    while checked < 25:
        n, p = rng.choice([1, 2]), rng.choice([2, 3])
        f = {tuple(rng.randint(0, 3) for _ in range(n)): tuple(rng.randint(-2, 2) for _ in range(rng.randint(1, 3)))
             for _ in range(rng.randint(1, 4))}
        if not reduce_equichar(f, p):
            continue
        levels = 4 if n == 1 else 3
        assert level_counts_equichar(f, p, levels, n) == _equichar_by_enumeration(f, p, levels, n)
        checked += 1
