"""Annulus formulas with integrands, and the membership checks shared by
the unit and acceptance tests."""

from __future__ import annotations

from fractions import Fraction

from padic_cells.annulus import AnnulusFormula, Bound, ac1, poly_eval, sample_points
from padic_cells.padic import vp

INF = float("inf")


def formula(p, center, eps, strict=False, holes=()):
    return AnnulusFormula(Bound.linear(center, eps, strict),
                          tuple(Bound.linear(c, e, s) for c, e, s in holes), p)


def unit_disc(p):
    return formula(p, 0, 0)


# (formula, integrand as coefficient list lowest degree first)
FIXTURES = [
    (unit_disc(5), [10, 1, 0, 5]),
    (unit_disc(5), [0, 26, -27, 1]),
    (unit_disc(5), [-5, 0, 1]),
    (unit_disc(5), [1, 0, 1]),
    (unit_disc(5), [-6, 0, 1]),
    (unit_disc(7), [-8, 12, 0, -5, 1]),
    (formula(5, 0, 0, holes=[(0, 1, False)]), [0, -1, 0, 1]),
    (formula(5, 1, 1, holes=[(1, 3, False), (6, 2, False)]), [31, -7, 1]),
    (formula(5, 0, 0, True, holes=[(0, 3, True)]), [5, 1]),
    (formula(3, 0, 0, holes=[(0, 1, False), (1, 1, False), (2, 1, False)]), [3, -1, 0, 1]),
]


def points(phi: AnnulusFormula, total: int = 1000, seed: int = 0) -> list[Fraction]:
    p = phi.p
    return sample_points(p, phi, lifts=max(100, total - p**3), seed=seed)


def ordp(x: Fraction, p: int):
    return INF if x == 0 else vp(x, p)


def membership(regions, pts) -> list[list[int]]:
    """For each point, the indices of the regions containing it."""
    return [[i for i, q in enumerate(regions) if q.contains(x)] for x in pts]


def partition_failures(phi: AnnulusFormula, regions, pts) -> list[Fraction]:
    """Points of phi not in exactly one region, or outside phi but covered."""
    hits = membership(regions, pts)
    return [x for x, h in zip(pts, hits) if len(h) != (1 if phi.contains(x) else 0)]


def factor_failures(f, pieces, pts) -> list[tuple]:
    """Sample points where ord or ac_1 of f and of R disagree."""
    coeffs = [Fraction(c) for c in f]
    hits = membership([fp.annulus for fp in pieces], pts)
    bad = []
    for x, h in zip(pts, hits):
        fx = poly_eval(coeffs, x)
        for i in h:
            fp = pieces[i]
            r = None if fp.exceptional else fp.R(x)
            if r is None:
                continue
            p = fp.annulus.p
            if ordp(fx, p) != ordp(r, p) or ac1(fx, p) != ac1(r, p):
                bad.append((x, fx, r, str(fp.annulus)))
    return bad
