"""Random regular series for the Weierstrass tests."""

from __future__ import annotations

import random

from padic_cells.series import SeparatedSeries, _default_var

T_ORDER = 6
RHO_DEGREE = 4


def _exp(rng: random.Random, nv: int, top: int) -> list[int]:
    return [rng.randint(0, top) for _ in range(nv)]


def random_regular(rng: random.Random, m: int, n: int, var: int | None = None, d: int | None = None
                   ) -> tuple[SeparatedSeries, int, int]:
    """A series regular of degree d in ``var`` together with (var, d)."""
    nv = m + n
    probe = SeparatedSeries(m, n, {}, T_ORDER, RHO_DEGREE)
    var = _default_var(probe) if var is None else var
    d = rng.randint(1, 3) if d is None else d
    coeffs: dict[tuple, tuple] = {}

    def put(e, c):
        e = tuple(e)
        coeffs[e] = tuple(a + b for a, b in _zip_pad(coeffs.get(e, ()), c))

    lead = [0] * nv
    lead[var] = d
    put(lead, (rng.choice((1, -1)),))
    for _ in range(rng.randint(1, 5)):
        e = _exp(rng, nv, 3)
        c = (0,) + tuple(rng.randint(-9, 9) for _ in range(rng.randint(1, 3)))
        put(e, c)
    for _ in range(rng.randint(0, 4)):
        e = _exp(rng, nv, 2)
        if var < m:
            e[var] = rng.randint(0, d - 1)
            for j in range(m, nv):
                e[j] = 0
        else:
            e[var] = rng.randint(d + 1, d + 2)
        put(e, (rng.randint(-9, 9),))
    if var < m:
        for _ in range(rng.randint(0, 3) if n else 0):
            e = _exp(rng, nv, 2)
            e[rng.randrange(m, nv)] += 1
            put(e, (rng.randint(-9, 9),))
    return SeparatedSeries(m, n, coeffs, T_ORDER, RHO_DEGREE), var, d


def random_series(rng: random.Random, m: int, n: int) -> SeparatedSeries:
    nv = m + n
    coeffs = {}
    for _ in range(rng.randint(0, 6)):
        coeffs[tuple(_exp(rng, nv, 4))] = tuple(rng.randint(-20, 20) for _ in range(rng.randint(1, 4)))
    return SeparatedSeries(m, n, coeffs, T_ORDER, RHO_DEGREE)


def _zip_pad(a, b):
    L = max(len(a), len(b))
    return zip(tuple(a) + (0,) * (L - len(a)), tuple(b) + (0,) * (L - len(b)))
