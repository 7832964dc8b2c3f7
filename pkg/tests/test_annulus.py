import json
from fractions import Fraction as Q

import pytest

from padic_cells.annulus import (
    AnnulusFormula, ac1, decompose_D_region, decompose_thin_laurent, factor, factor_laurent, factor_thin,
    poly_eval, sample_points, term_to_pieces, validate,
)
from padic_cells.errors import NotAnAnnulus, UnsupportedSplit
from padic_cells.series import SeparatedSeries

from annulus_fixtures import (
    FIXTURES, formula, factor_failures, ordp, partition_failures, points, unit_disc,
)


def test_validate_examples():
    thin = validate(formula(5, 0, 0, holes=[(0, 0, False)]))
    assert thin.is_thin
    assert validate(formula(5, 0, 0, holes=[(0, 0, False), (1, 0, False)])).is_thin
    with pytest.raises(NotAnAnnulus) as err:
        validate(formula(5, 0, 1, holes=[(0, 0, False)]))
    assert err.value.witness["hole"] == 0


def test_overlapping_holes_are_rejected():
    with pytest.raises(NotAnAnnulus):
        validate(formula(5, 0, 0, holes=[(1, 1, False), (26, 1, False)]))
    assert validate(formula(5, 0, 0, holes=[(1, 2, False), (26, 2, False)]))


def test_nonlinear_polynomials_are_unsupported():
    phi = AnnulusFormula.from_json({"outer": {"poly": "x^2 - 2", "eps": [0, 1]}, "holes": []}, 5)
    with pytest.raises(UnsupportedSplit):
        validate(phi)


def test_json_round_trip():
    phi = FIXTURES[7][0]
    again = AnnulusFormula.from_json(json.loads(phi.to_json_str()), phi.p)
    assert again == phi


def test_decompose_disc_minus_small_disc():
    trace = []
    pieces = decompose_thin_laurent(formula(5, 0, 0, holes=[(0, 1, False)]), trace)
    assert [q.kind for q in pieces] == ["thin", "laurent", "thin"]
    assert [str(q) for q in pieces] == [
        "|x| <= 1 and |x| >= 1", "|x| < 1 and |x| > |p|^1", "|x| <= |p|^1 and |x| >= |p|^1"]


def test_thin_and_laurent_inputs_are_singletons():
    thin = formula(5, 0, 0, holes=[(0, 0, False)])
    assert decompose_thin_laurent(thin) == [thin]
    lau = formula(5, 0, 0, True, holes=[(0, 2, True)])
    assert decompose_thin_laurent(lau) == [lau]


def test_complexity_decreases_along_trace():
    trace = []
    phi = formula(5, 0, 0, holes=[(0, 2, False), (5, 2, False), (30, 3, True)])
    decompose_thin_laurent(phi, trace)
    assert trace and all(child < parent for parent, child in trace)


def test_factor_thin_examples():
    thin = formula(5, 0, 0, holes=[(0, 0, False)])
    unit = factor_thin([3], thin)
    assert unit.num == [3] and unit.den == [1]
    assert factor_thin([0, 1], thin).num == [0, 1]
    fp = factor_thin([10, 1, 0, 5], thin)
    assert fp.num == [0, 1] and fp.certificate["norm_exponent"] >= 1


def test_factor_laurent_examples():
    lau = formula(5, 0, 0, True, holes=[(0, 1, True)])
    (cube,) = factor_laurent([0, 0, 0, 1], lau)
    assert cube.num == [0, 0, 0, 1]
    (lin,) = factor_laurent([5, 1], lau)
    assert lin.num == [0, 1]


def test_competing_dominant_terms_split():
    lau = formula(5, 0, 0, True, holes=[(0, 4, True)])
    pieces = factor_laurent([25, 0, 1], lau)
    assert len(pieces) > 1
    pts = points(lau)
    assert not partition_failures(lau, [q.annulus for q in pieces], pts)
    assert not factor_failures([25, 0, 1], pieces, pts)


@pytest.mark.parametrize("idx", range(len(FIXTURES)))
def test_partition_of_fixture(idx):
    phi, _ = FIXTURES[idx]
    validate(phi)
    assert not partition_failures(phi, decompose_thin_laurent(phi), points(phi))


@pytest.mark.parametrize("idx", range(len(FIXTURES)))
def test_factorization_preserves_ord_and_ac(idx):
    phi, f = FIXTURES[idx]
    pts = points(phi)
    pieces = factor(f, phi)
    assert not partition_failures(phi, [q.annulus for q in pieces], pts)
    assert not factor_failures(f, pieces, pts)


@pytest.mark.parametrize("idx", [0, 1, 5, 7])
def test_strict_factorization(idx):
    phi, f = FIXTURES[idx]
    pts = points(phi, total=400)
    pieces = factor(f, phi, n=3, strict=True)
    assert all(q.annulus.is_closed for q in pieces)
    assert not partition_failures(phi, [q.annulus for q in pieces], pts)
    for x in pts:
        fx = poly_eval([Q(c) for c in f], x)
        for fp in pieces:
            if fp.annulus.contains(x) and not fp.exceptional and fx:
                r = fp.R(x)
                assert ordp(fx / r - 1, phi.p) >= 3


def _check_region(factors, eps, p, strict=False):
    pieces = decompose_D_region(factors, eps, strict, p, include_outside=True)
    poles = {Q(a) for a, k in factors if k < 0}
    for x in sample_points(p, lifts=1000 - p**3):
        if x in poles:
            continue
        hits = [d for d in pieces if d.annulus.contains(x)]
        assert len(hits) == 1, x
        d = hits[0]
        for a, (kind, val) in d.relations.items():
            o = ordp(x - a, p)
            assert o == (val if kind == "const" else val * ordp(x - d.ref, p))
        R = Q(1)
        for a, k in factors:
            R *= (x - a) ** k
        v = ordp(R, p)
        assert d.inside == ((v > eps) if strict else (v >= eps))


def test_region_examples():
    inside = decompose_D_region([(0, 1)], 1, p=5)
    assert [str(d.annulus) for d in inside] == ["|x| <= |p|^1 and |x| >= |p|^1", "|x| < |p|^1"]
    _check_region([(0, 1)], 1, 5)
    _check_region([(0, 1), (1, -1)], Q(1, 2), 5)
    _check_region([(0, 1), (1, 1)], 1, 5)
    _check_region([(0, 2), (1, 1), (26, 1)], 3, 5, strict=True)
    _check_region([(0, 1), (3, -2), (9, 1)], 2, 3)


def test_term_pieces_rational_function():
    tp = term_to_pieces("(x^2 - 5)/(x - 1)", 5)
    assert tp.exceptional_points == [1]
    for x in sample_points(5, lifts=200):
        if x == 1:
            continue
        value = (x * x - 5) / (x - 1)
        hits = [fp for fp in tp.pieces if fp.annulus.contains(x)]
        assert len(hits) == 1
        fp = hits[0]
        if fp.exceptional or value == 0:
            continue
        r = fp.R(x)
        assert ordp(value, 5) == ordp(r, 5) and ac1(value, 5) == ac1(r, 5)


def test_term_pieces_with_series_symbol():
    geo = SeparatedSeries(1, 0, {(i,): (0,) * i + (1,) for i in range(6)}, trunc_t=6, exact=False)
    tp = term_to_pieces('S"g"(x) - 1', 5, series={"g": geo})
    reasons = [fp.certificate.get("reason") for fp in tp.pieces if fp.exceptional]
    assert reasons and set(reasons) == {"below the truncation order"}
    for x in sample_points(5, lifts=200):
        known = sum(Q(5 * x) ** i for i in range(1, 6))  # the value is this plus O(5^6)
        hits = [fp for fp in tp.pieces if fp.annulus.contains(x)]
        assert len(hits) == 1
        if hits[0].exceptional:
            assert ordp(known, 5) >= 5
            continue
        r = hits[0].R(x)
        assert ordp(known, 5) == ordp(r, 5) < 6 and ac1(known, 5) == ac1(r, 5)


def test_polynomial_term_delegates_to_factor():
    tp = term_to_pieces("x^2 - 6", 5)
    direct = factor([-6, 0, 1], unit_disc(5))
    assert [str(fp.annulus) for fp in tp.pieces] == [str(fp.annulus) for fp in direct]
    for a, b in zip(tp.pieces, direct):
        assert a.exceptional == b.exceptional
        if not a.exceptional:
            assert all(a.R(x) == b.R(x) for x in range(25))
