import pytest

from padic_cells.motring import format_motelem
from padic_cells.presburger import (
    PresburgerSet, enumerate_points, is_empty, normalize, sum_by_enumeration, sum_exponential,
)

from presburger_fixtures import DEGREE, FIXTURES, box


def S(cons, variables=("z",)):
    return PresburgerSet.from_json({"variables": list(variables), "constraints": cons})


def test_sum_examples():
    assert format_motelem(sum_exponential(S(["z >= 1"]), [1], [-1])) == "q^-1 T / (1 - q^-1 T)"
    assert format_motelem(sum_exponential(S(["z >= 0", "z = 0 mod 2"]), [1], [-1])) == "1 / (1 - q^-2 T^2)"
    two = S(["z1 >= 1", "z2 >= 1"], ("z1", "z2"))
    assert format_motelem(sum_exponential(two, [1, 1], [-1, -1])) == "q^-2 T^2 / (1 - q^-1 T)^2"


def test_product_structure_against_enumeration():
    two = S(["z1 >= 1", "z2 >= 1"], ("z1", "z2"))
    X = sum_exponential(two, [1, 1], [-1, -1])
    assert X.series(5, 40) == sum_by_enumeration(two, [1, 1], [-1, -1], 5, 40, [(0, 41), (0, 41)])


def test_emptiness_examples():
    assert is_empty(S(["z >= 1", "z <= 0"]))
    assert is_empty(S(["z = 1 mod 2", "z = 0 mod 2"]))
    assert not is_empty(S(["z >= 0", "z <= 5", "z = 1 mod 3"]))


def test_enumeration_example():
    assert enumerate_points(S(["z >= 0", "z <= 5", "z = 1 mod 3"]), [(0, 10)]) == [(1,), (4,)]


def test_normalize_keeps_points():
    T = S(["2*z >= 3", "z <= 9", "z = 4 mod 6"])
    N = normalize(T)
    assert enumerate_points(N, [(-20, 20)]) == enumerate_points(T, [(-20, 20)])


def test_divergent_sum_is_rejected():
    with pytest.raises(Exception):
        sum_exponential(S(["z1 >= 0", "z2 >= z1"], ("z1", "z2")), [1, 1], [-1, 0])


def test_json_round_trip():
    T = PresburgerSet.from_json(FIXTURES[8][0])
    assert PresburgerSet.from_json(T.to_json()).to_json() == T.to_json()


@pytest.mark.parametrize("idx", range(len(FIXTURES)))
def test_coefficient_fidelity(idx):
    data, a, b = FIXTURES[idx]
    T = PresburgerSet.from_json(data)
    X = sum_exponential(T, a, b)
    for q in (3, 5, 7):
        assert X.series(q, DEGREE - 1) == sum_by_enumeration(T, a, b, q, DEGREE - 1, box(len(a)))


def test_variable_order_independence():
    data, a, b = FIXTURES[12]
    T = PresburgerSet.from_json(data)
    swapped = PresburgerSet.from_json({"variables": ["z2", "z1"], "constraints": data["constraints"]})
    X, Y = sum_exponential(T, a, b), sum_exponential(swapped, a[::-1], b[::-1])
    for q in (3, 5, 7):
        for s in (0, 1, 2):
            assert X.count_eval(q, s) == Y.count_eval(q, s)
