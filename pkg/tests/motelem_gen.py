"""Random elements of the value ring for the morphism tests."""

from __future__ import annotations

import random
from fractions import Fraction

from padic_cells.motring import MotElem, ResidueFormulaClass

CLASS_SOURCES = [
    ("x^2 = 2", ["x"]),
    ("x^2 + y^2 = 1", ["x", "y"]),
    ("x*y = 1", ["x", "y"]),
    ("x^3 - x = 0", ["x"]),
    ("x^2 - y^3 = 0", ["x", "y"]),
]


def class_pool() -> list[ResidueFormulaClass]:
    return [ResidueFormulaClass.from_text(src, names) for src, names in CLASS_SOURCES]


def random_motelem(rng: random.Random, pool: list[ResidueFormulaClass]) -> MotElem:
    total = MotElem.zero()
    for _ in range(rng.randint(1, 3)):
        c = Fraction(rng.randint(-6, 6), rng.randint(1, 4))
        term = MotElem.monomial(c, rng.randint(-3, 3), rng.randint(0, 3))
        if rng.random() < 0.4:
            term = term * MotElem.klass(rng.choice(pool))
        if rng.random() < 0.5:
            term = term * MotElem.geometric(rng.randint(0, 3), rng.randint(-3, -1))
        total = total + term
    return total
