"""Integrals of |f1|^s |f2| over Z_p^n as elements of the motivic ring.

Both integrands are factored, the distinct factors are refined jointly by
the cell engine, and each family of cells contributes a Presburger sum of
T^{ord f1} L^{-ord f2} against its measure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping, Sequence

import sympy

from .cells import DEFAULT_MAX_DEPTH, DEFAULT_MAX_NODES, Decomposition
from .errors import BudgetExceeded, UnsupportedSplit, ZeroPolynomial
from .motring import MotElem, format_motelem
from .oracle import igusa_series, mu_table
from .padic import PAdicContext
from .polys import const_poly, poly_key, t_trim

__all__ = ["ZetaResult", "zeta", "zeta_series_integrand", "factor_integrand", "igusa_series"]


@dataclass
class ZetaResult:
    """Outcome of a zeta computation.

    ``motelem`` integrates over the resolved part of the domain only;
    ``unresolved_measure`` is the measure of the rest, so that
    ``mass + unresolved_measure == 1``."""

    motelem: MotElem
    mass: MotElem
    unresolved_measure: MotElem
    precision_certificate: dict
    cell_count: int
    unresolved: list = field(default_factory=list)
    factors: list = field(default_factory=list)
    oracle_mu: list | None = None
    domain_measure: MotElem = field(default_factory=MotElem.one)

    @property
    def complete(self) -> bool:
        return self.unresolved_measure.is_zero()

    def to_json(self) -> dict:
        out = {
            "motelem": format_motelem(self.motelem),
            "motelem_terms": self.motelem.to_json(),
            "mass": format_motelem(self.mass),
            "unresolved_measure": format_motelem(self.unresolved_measure),
            "precision_certificate": self.precision_certificate,
            "cell_count": self.cell_count,
            "unresolved": self.unresolved,
            "factors": self.factors,
        }
        out["domain_measure"] = format_motelem(self.domain_measure)
        if self.oracle_mu is not None:
            out["oracle_mu"] = [str(m) for m in self.oracle_mu]
        return out

    def to_json_str(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# -- factoring -------------------------------------------------------------------

def _to_sympy(f: Mapping[tuple, tuple], xs, t) -> Any:
    expr = 0
    for e, c in f.items():
        coeff = sum(int(a) * t**i for i, a in enumerate(c))
        mono = 1
        for x, k in zip(xs, e):
            mono *= x**k
        expr += coeff * mono
    return sympy.expand(expr)


def _from_sympy(expr, xs, t, n: int) -> dict[tuple, tuple]:
    poly = sympy.Poly(expr, *xs, t) if xs else sympy.Poly(expr, t)
    out: dict[tuple, list] = {}
    for m, c in zip(poly.monoms(), poly.coeffs()):
        e, k = tuple(m[:n]), m[n]
        row = out.setdefault(e, [])
        while len(row) <= k:
            row.append(0)
        row[k] += int(c)
    return {e: t_trim(tuple(c)) for e, c in out.items() if t_trim(tuple(c))}


def factor_integrand(f: Mapping[tuple, tuple], n: int, ctx: PAdicContext) -> list[tuple[dict, int]]:
    """Factors of f with multiplicities, in the coefficient model of ctx.

    With a fixed prime, t is specialized to p before factoring; otherwise
    f is factored over Z[t, x].  Integer content is kept as a constant
    factor so that ord and ac stay exact."""
    xs = sympy.symbols(f"x1:{n + 1}") if n else ()
    t = sympy.Symbol("t")
    expr = _to_sympy(f, xs, t)
    if expr == 0:
        raise ZeroPolynomial("the integrand is identically zero")
    fixed = ctx.mode != "symbolic-q" and not ctx.equichar
    if fixed:
        expr = sympy.expand(expr.subs(t, ctx.p))
    gens = list(xs) if fixed else list(xs) + [t]
    if gens:
        content, facs = sympy.factor_list(expr, *gens)
    else:
        content, facs = expr, []
    out: list[tuple[dict, int]] = []
    content = sympy.Integer(content)
    if content != 1:
        out.append((const_poly(n, int(content)) if n else {(): (int(content),)}, 1))
    for h, e in facs:
        out.append((_from_sympy(h, xs, t, n), int(e)))
    if ctx.equichar:
        from .polys import reduce_equichar

        merged: dict[tuple, tuple[dict, int]] = {}
        for g, e in out:
            r = reduce_equichar(g, ctx.p)
            if not r:
                raise ZeroPolynomial(f"the integrand vanishes modulo {ctx.p}")
            key = poly_key(r)
            merged[key] = (r, merged[key][1] + e) if key in merged else (r, e)
        out = list(merged.values())
    return out


def _prepare_factors(f1, f2, n: int, ctx: PAdicContext) -> tuple[list[dict], list[int], list[int]]:
    factors: list[dict] = []
    keys: list[tuple] = []
    e1: list[int] = []
    k2: list[int] = []
    for which, f in ((0, f1), (1, f2)):
        for g, e in factor_integrand(f, n, ctx):
            key = poly_key(g)
            if key not in keys:
                keys.append(key)
                factors.append(g)
                e1.append(0)
                k2.append(0)
            i = keys.index(key)
            if which == 0:
                e1[i] += e
            else:
                k2[i] += e
    return factors, e1, k2


def _as_integrand(f: Any, n: int | None, names: Sequence[str] | None) -> tuple[dict, int, list[str]]:
    if isinstance(f, str):
        from .dplang import parse_polynomial, polynomial_variables

        if names is None:
            names = polynomial_variables(f, n)
        g, names = parse_polynomial(f, names)
    else:
        g = {tuple(e): (tuple(c) if isinstance(c, (tuple, list)) else (int(c),)) for e, c in f.items()}
    if n is None:
        n = len(next(iter(g))) if g else len(names or ())
    names = list(names) if names else [f"x{i + 1}" for i in range(n)]
    return g, n, names


def _variables(f1: Any, f2: Any, n: int | None) -> list[str] | None:
    from .dplang import polynomial_variables

    srcs = [f for f in (f1, f2) if isinstance(f, str)]
    if not srcs:
        return None
    found: set = set()
    for s in srcs:
        found |= set(polynomial_variables(s))
    names = sorted(found)
    k = 1
    while n is not None and len(names) < n:
        if f"x{k}" not in names:
            names.insert(0, f"x{k}")
        k += 1
    return names


# -- the integral -------------------------------------------------------------------

def zeta(f1: Any, f2: Any = "1", n: int | None = None, ctx: PAdicContext | None = None,
         names: Sequence[str] | None = None, max_depth: int = DEFAULT_MAX_DEPTH,
         max_nodes: int = DEFAULT_MAX_NODES, oracle_fallback_j: int = 6, uniform: bool = True) -> ZetaResult:
    """Integral of |f1|^s |f2| |dx| over Z_p^n with T = q^-s.

    Integrands are polynomial strings (t or p names the uniformizer) or
    integrand dictionaries.  When the cell engine cannot split the domain
    the result is partial: the unsplit part is reported in ``unresolved``
    and, for a fixed prime, oracle coefficients are attached.

    With a fixed prime the engine counts residue points as integers.  When
    ``uniform`` is set, the computation is repeated with q symbolic and, if
    that closed form specializes at q = p to exactly the same rational
    function of T, it is reported instead."""
    ctx = ctx or PAdicContext(5)
    if names is None:
        names = _variables(f1, f2, n)
    g1, n1, names = _as_integrand(f1, n, names)
    if isinstance(f2, str) and f2.strip() == "1":
        g2 = const_poly(n1, 1)
    else:
        g2, _, _ = _as_integrand(f2, n1, names)
    n = n1
    factors, e1, k2 = _prepare_factors(g1, g2, n, ctx)
    cert = {
        "mode": ctx.mode if not ctx.equichar else "equichar",
        "p": ctx.p if ctx.mode != "symbolic-q" else None,
        "hensel_precision": ctx.M,
        "max_depth": max_depth,
        "max_nodes": max_nodes,
        "series_truncation": None,
    }
    fdesc = [{"factor": _describe(g, names), "ord_f1_exponent": a, "ord_f2_exponent": b}
             for g, a, b in zip(factors, e1, k2)]
    try:
        dec = Decomposition(factors, n, ctx, names, max_depth, max_nodes)
    except UnsupportedSplit as exc:
        oracle = None
        if ctx.mode != "symbolic-q" and not ctx.equichar:
            try:
                oracle = mu_table(g1, ctx.p, oracle_fallback_j, n)
            except BudgetExceeded:
                oracle = None
        cert["exact"] = False
        return ZetaResult(MotElem.zero(), MotElem.zero(), MotElem.one(), cert, 0,
                          [{"reason": str(exc), "measure": "1"}], fdesc, oracle)
    X = dec.integral(e1, k2)
    mass, unres = dec.mass()
    unresolved = [{"path": _path_text(fam), "depth": str(fam.depth.const), "count": str(fam.count)}
                  for fam in dec.unresolved()]
    cert["exact"] = unres.is_zero()
    cert["uniform_form"] = False
    if uniform and cert["exact"] and ctx.mode != "symbolic-q" and not ctx.equichar:
        Y = _uniform_form(g1, g2, n, ctx, names, X, max_depth, max_nodes)
        if Y is not None:
            X = Y
            cert["uniform_form"] = True
    try:
        count = len(dec.cells())
    except UnsupportedSplit:
        count = len(dec.groups)
    return ZetaResult(X, mass, unres, cert, count, unresolved, fdesc)


def _uniform_form(g1, g2, n: int, ctx: PAdicContext, names, X: MotElem, max_depth: int,
                  max_nodes: int) -> MotElem | None:
    """The symbolic-q closed form, if it agrees with X exactly at q = p."""
    from .errors import PadicCellsError

    sym = PAdicContext(ctx.p, ctx.M, "symbolic-q")
    try:
        res = zeta(g1, g2, n, sym, names, max_depth, max_nodes, uniform=False)
    except PadicCellsError:
        return None
    if not res.complete:
        return None
    if not (res.motelem - X).count_eval(ctx.p).is_zero():
        return None
    return res.motelem


def _describe(g: Mapping[tuple, tuple], names: Sequence[str]) -> str:
    from .polys import format_integrand

    return format_integrand(g, names)


def _path_text(fam) -> str:
    from .cells import _segments_text

    return _segments_text(fam.segments, fam.loop_names()) or "root"


def zeta_series_integrand(f: Any, ctx: PAdicContext | None = None, names: Sequence[str] | None = None,
                          **kw) -> ZetaResult:
    """Integral of |f|^s over the domain of a separated power series f over
    Z[[t]] (closed-disc variables over Z_p, open-disc variables over pZ_p).

    After removing the t-content and, if needed, a measure-preserving
    polynomial change of the closed-disc variables, f is prepared in its
    innermost variable: f = u * P with |u| = 1, so |f| = |P| and the
    polynomial pipeline applies to P.  Open-disc variables are rescaled by
    t, which contributes L^-n.  For a truncated series the certificate
    states the T-degrees that are exact."""
    from .errors import NotRegular, NotRegularAtTruncation
    from .series import SeparatedSeries, compose, divide_t_power, parse_series, preregularize, t_content, w_prepare

    ctx = ctx or PAdicContext(5)
    if isinstance(f, str):
        f = parse_series(f, names)
    if not isinstance(f, SeparatedSeries):
        raise TypeError("expected a SeparatedSeries or a series literal")
    k = t_content(f)
    g = divide_t_power(f, k) if k else f
    phi_used = False
    try:
        prep = w_prepare(g)
    except NotRegular as exc:
        if g.n:
            raise NotRegularAtTruncation(str(exc)) from exc
        try:
            phi, _ = preregularize(g)
        except NotRegular as exc2:
            raise NotRegularAtTruncation(str(exc2)) from exc2
        g = compose(g, phi, [])
        phi_used = True
        prep = w_prepare(g)
    P = prep.polynomial_integrand()
    if k:
        P = {e: t_trim((0,) * k + tuple(c)) for e, c in P.items()}
    res = zeta(P, "1", f.nvars, ctx, list(f.names), **kw)
    if f.n:
        scale = MotElem.L(-f.n)
        res.motelem = (res.motelem * scale).simplify()
    res.precision_certificate["series_truncation"] = {
        "t_order": f.trunc_t,
        "open_disc_degree": f.degree,
        "exact_input": f.exact,
        "certified_below_T_degree": None if f.exact else f.trunc_t,
        "t_content": k,
        "unit_factor": str(prep.unit),
        "weierstrass_polynomial": str(prep.poly),
        "change_of_variables": phi_used,
    }
    if not f.exact:
        res.precision_certificate["exact"] = False
    res.domain_measure = MotElem.L(-f.n) if f.n else MotElem.one()
    return res
