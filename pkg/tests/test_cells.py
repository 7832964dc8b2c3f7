import pytest

from padic_cells.cells import (
    cell_measure, cell_to_json, check_parametric, check_partition, check_prepared, decompose,
    prepare_parametric, prepare_univariate, sample_points,
)
from padic_cells.errors import UnsupportedSplit
from padic_cells.motring import MotElem, format_motelem
from padic_cells.padic import PAdicContext


def univariate(p):
    return ["y", "y^2", "y*(y-1)", f"y^2-{p}", "y^3-y"]


def counts(X, points=((3, 0), (5, 1), (7, 2))):
    return [X.count_eval(q, s) for q, s in points]


def test_identity_cells():
    ctx = PAdicContext(5)
    pairs = prepare_univariate("y", ctx)
    kinds = sorted(c.kind for c, _ in pairs)
    assert kinds.count("0-cell") == 1
    for c, pd in pairs:
        if c.kind == "0-cell":
            assert cell_measure(c).is_zero()


def test_unit_class_measure():
    ctx = PAdicContext(5)
    units = [c for c, _ in prepare_univariate("y", ctx) if c.xi in (1, 2, 3, 4)]
    assert len(units) == 4
    for c in units:
        assert format_motelem(cell_measure(c)) == "q^-1"


def test_measures_sum_to_one():
    for p in (3, 5, 7):
        for f in univariate(p):
            dec = decompose([f], PAdicContext(p))
            total = MotElem.zero()
            for c in dec.cells():
                total = total + cell_measure(c)
            # one cell per unit residue, so the identity holds at q = p
            assert total.count_eval(p, 0) == 1
            resolved, unresolved = dec.mass()
            assert unresolved.is_zero() and resolved.to_json() == MotElem.one().to_json()


def test_y_squared_minus_p_orders():
    ctx = PAdicContext(5)
    dec = decompose(["y^2-5"], ctx)
    pts = sample_points(5, 1, 1000, seed=1)
    assert not check_partition(dec, pts)
    assert not check_prepared(dec, pts, [1])


def test_two_terms_refine_like_product():
    ctx = PAdicContext(5)
    joint = decompose(["y", "y-1"], ctx)
    product = decompose(["y*(y-1)"], ctx)
    for dec in (joint, product):
        zero_cells = [c for c in dec.cells() if c.kind == "0-cell"]
        assert len(zero_cells) == 2
        assert sorted((c.contains((0,)), c.contains((1,))) for c in zero_cells) == [(False, True), (True, False)]
    pts = sample_points(5, 1, 500, seed=2)
    assert not check_partition(joint, pts)


@pytest.mark.parametrize("p", [3, 5, 7])
@pytest.mark.parametrize("k", range(5))
def test_univariate_partition_and_preparation(p, k):
    f = univariate(p)[k]
    dec = decompose([f], PAdicContext(p))
    pts = sample_points(p, 1, 1000, seed=p)
    assert not check_partition(dec, pts)
    assert not check_prepared(dec, pts, [1])


@pytest.mark.parametrize("p", [3, 5])
@pytest.mark.parametrize("f", ["x*y", "x^2-y"])
def test_bivariate_partition_and_preparation(p, f):
    dec = decompose([f], PAdicContext(p))
    pts = sample_points(p, 2, 1000, seed=p)
    assert not check_partition(dec, pts)
    assert not check_prepared(dec, pts, [1])


@pytest.mark.parametrize("f", ["y^2 - x", "y*(x^2 + 1)", "y^2 + y^3*x", "y^2 - x^3"])
def test_parametric_preparation(f):
    prep = prepare_parametric(f, PAdicContext(5))
    assert not check_parametric(prep, sample_points(5, 2, 400, seed=3))


def test_joint_decomposition_weights():
    ctx = PAdicContext(3)
    dec = decompose(["y", "y-1"], ctx)
    pts = sample_points(3, 1, 500, seed=4)
    assert not check_prepared(dec, pts, [1, 2])


def test_deeper_ac_is_refused():
    with pytest.raises(UnsupportedSplit):
        prepare_univariate("y", PAdicContext(5), n=2)


def test_cell_json_is_deterministic():
    ctx = PAdicContext(7)
    a = [cell_to_json(c) for c in decompose(["y^3-y"], ctx).cells()]
    b = [cell_to_json(c) for c in decompose(["y^3-y"], ctx).cells()]
    assert a == b
