"""One-variable analysis over Q_p: annulus formulas, their decomposition into
thin and Laurent pieces, and factorizations f = R * E with R rational and E a
very strong unit on each piece.

Radii are written as exponents: a bound with exponent e stands for the
radius |p|^e, so ``|x - c| <= |p|^e`` is ``ord(x - c) >= e``.  Exponents are
rationals, matching the divisible value group of an algebraic closure.
Annulus polynomials are linear, ``x - c`` with c a p-adic integer in Q.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

import sympy

from .errors import NotAnAnnulus, PrecisionLoss, UnsupportedSplit, UnsupportedTerm
from .padic import INF, vp

__all__ = [
    "Bound", "AnnulusFormula", "FactoredPiece", "DRegionPiece", "TermPieces",
    "validate", "decompose_thin_laurent", "factor_thin", "factor_laurent", "factor",
    "factor_on_piece", "decompose_D_region", "term_to_pieces", "sample_points",
    "ac1", "poly_eval",
]

Q = Fraction


# -- univariate polynomials over Q (coefficients listed from degree 0) ---------

def _trim(f: Sequence[Fraction]) -> list[Fraction]:
    f = [Q(c) for c in f]
    while f and f[-1] == 0:
        f.pop()
    return f


def poly_eval(f: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Q(0)
    for c in reversed(f):
        acc = acc * x + c
    return acc


def _pmul(f: Sequence[Fraction], g: Sequence[Fraction]) -> list[Fraction]:
    if not f or not g:
        return []
    out = [Q(0)] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a:
            for j, b in enumerate(g):
                out[i + j] += a * b
    return _trim(out)


def _ppow(f: Sequence[Fraction], k: int) -> list[Fraction]:
    out = [Q(1)]
    for _ in range(k):
        out = _pmul(out, f)
    return out


def _taylor(f: Sequence[Fraction], c: Fraction) -> list[Fraction]:
    """Coefficients of f(c + y) in y."""
    out = [Q(0)] * len(f)
    for a in reversed(f):
        # out <- out * (y + c) + a
        nxt = [Q(0)] * len(f)
        for i, b in enumerate(out):
            if b:
                nxt[i] += b * c
                if i + 1 < len(nxt):
                    nxt[i + 1] += b
        nxt[0] += a
        out = nxt
    return _trim(out)


def _compose_linear(g: Sequence[Fraction], c: Fraction, scale: Fraction) -> list[Fraction]:
    """g((x - c) / scale) expanded in x."""
    lin = [-c / scale, 1 / scale]
    out: list[Fraction] = []
    for a in reversed(g):
        out = _pmul(out, lin) or [Q(0)]
        out[0] += a
    return _trim(out)


def _ord(x: Fraction | int, p: int) -> int | float:
    return vp(x, p)


def _int_ord(a: int, p: int) -> int:
    v = 0
    while a % p == 0:
        a //= p
        v += 1
    return v


def ac1(x: Fraction | int, p: int) -> int | None:
    """First angular component: the unit part of x modulo p (None at 0)."""
    x = Q(x)
    if x == 0:
        return None
    u = x / Q(p) ** vp(x, p)
    return u.numerator * pow(u.denominator, -1, p) % p


def _poly_text(f: Sequence[Fraction]) -> str:
    x = sympy.Symbol("x")
    return str(sympy.expand(sum(sympy.Rational(c.numerator, c.denominator) * x**i for i, c in enumerate(f))))


def _is_p_integral(c: Fraction, p: int) -> bool:
    return vp(c, p) >= 0


def _exp_json(e: Fraction | float) -> list | None:
    return None if e == INF else [e.numerator, e.denominator]


# -- annulus formulas ---------------------------------------------------------------

@dataclass(frozen=True)
class Bound:
    """One comparison ``|poly(x)| box |p|^eps``.

    As the outer bound it reads ``|poly| <= eps`` (``<`` when strict); as a
    hole it reads ``|poly| >= eps`` (``>`` when strict), so a non-strict hole
    removes an open disc and a strict hole removes a closed one."""

    poly: tuple[Fraction, ...]
    eps: Fraction
    strict: bool

    @classmethod
    def linear(cls, center: Fraction | int, eps: Fraction | int, strict: bool) -> "Bound":
        return cls((-Q(center), Q(1)), Q(eps), bool(strict))

    @property
    def degree(self) -> int:
        return len(self.poly) - 1

    @property
    def center(self) -> Fraction:
        if self.degree != 1:
            raise UnsupportedSplit("only linear annulus polynomials have a center")
        return -self.poly[0]

    def value(self, x: Fraction) -> Fraction:
        return poly_eval(self.poly, Q(x))

    def ord_at(self, x: Fraction | int, p: int) -> int | float:
        """ord of the bound polynomial at x; integer arithmetic when linear."""
        if len(self.poly) != 2 or self.poly[1] != 1:
            return _ord(self.value(x), p)
        c0 = self.poly[0]
        a = x.numerator * c0.denominator + c0.numerator * x.denominator
        if a == 0:
            return INF
        return _int_ord(a, p) - _int_ord(x.denominator, p) - _int_ord(c0.denominator, p)

    def to_json(self) -> dict:
        return {"poly": _poly_text(self.poly), "coeffs": [str(c) for c in self.poly],
                "eps": _exp_json(self.eps), "strict": self.strict}

    @classmethod
    def from_json(cls, d: Mapping[str, Any]) -> "Bound":
        if "coeffs" in d:
            poly = tuple(Q(c) for c in d["coeffs"])
        else:
            x = sympy.Symbol("x")
            P = sympy.Poly(sympy.sympify(d["poly"]), x)
            poly = tuple(Q(int(c.p), int(c.q)) for c in reversed(P.all_coeffs()))
        num, den = d["eps"]
        return cls(poly, Q(num, den), bool(d.get("strict", False)))


@dataclass(frozen=True)
class AnnulusFormula:
    """``|p0(x)| box0 eps0`` and, for every hole, ``eps_i box_i |p_i(x)|``."""

    outer: Bound
    holes: tuple[Bound, ...] = ()
    p: int = 5

    # membership ---------------------------------------------------------------
    def contains(self, x: Fraction | int) -> bool:
        x = Q(x)
        v = self.outer.ord_at(x, self.p)
        if not (v > self.outer.eps if self.outer.strict else v >= self.outer.eps):
            return False
        for h in self.holes:
            w = h.ord_at(x, self.p)
            if not (w < h.eps if h.strict else w <= h.eps):
                return False
        return True

    # shape ----------------------------------------------------------------------
    @property
    def is_closed(self) -> bool:
        return not self.outer.strict and not any(h.strict for h in self.holes)

    @property
    def is_open(self) -> bool:
        return self.outer.strict and all(h.strict for h in self.holes)

    @property
    def complexity(self) -> int:
        return sum(h.degree for h in self.holes)

    @property
    def is_thin(self) -> bool:
        return (self.is_closed and all(b.degree == 1 for b in self._bounds())
                and all(h.eps == self.outer.eps for h in self.holes))

    @property
    def is_laurent(self) -> bool:
        if not self.is_open or len(self.holes) > 1:
            return False
        return not self.holes or self.holes[0].poly == self.outer.poly

    @property
    def kind(self) -> str:
        if self.is_thin:
            return "thin"
        if self.is_laurent:
            return "laurent"
        return "annulus"

    def _bounds(self) -> list[Bound]:
        return [self.outer, *self.holes]

    def __str__(self) -> str:
        def rad(e: Fraction) -> str:
            return "1" if e == 0 else f"|p|^{e}" if e.denominator == 1 else f"|p|^({e})"

        parts = [f"|{_poly_text(self.outer.poly)}| {'<' if self.outer.strict else '<='} {rad(self.outer.eps)}"]
        for h in self.holes:
            parts.append(f"|{_poly_text(h.poly)}| {'>' if h.strict else '>='} {rad(h.eps)}")
        return " and ".join(parts)

    def to_json(self) -> dict:
        return {"outer": self.outer.to_json(), "holes": [h.to_json() for h in self.holes],
                "p": self.p, "kind": self.kind}

    def to_json_str(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, d: Mapping[str, Any], p: int | None = None) -> "AnnulusFormula":
        return cls(Bound.from_json(d["outer"]), tuple(Bound.from_json(h) for h in d.get("holes", ())),
                   int(p if p is not None else d.get("p", 5)))

    # disc view (linear formulas) ----------------------------------------------
    def outer_disc(self) -> "_Disc":
        return _Disc(self.outer.center, self.outer.eps, not self.outer.strict)

    def hole_discs(self) -> list["_Disc"]:
        return [_Disc(h.center, h.eps, h.strict) for h in self.holes]


@dataclass(frozen=True)
class _Disc:
    """``ord(x - c) >= r`` when closed, ``> r`` when open."""

    c: Fraction
    r: Fraction
    closed: bool

    def holds(self, x: Fraction, p: int) -> bool:
        v = _ord(Q(x) - self.c, p)
        return v >= self.r if self.closed else v > self.r

    def inside(self, other: "_Disc", p: int) -> bool:
        """self is a subset of other."""
        if not other.holds(self.c, p):
            return False
        if self.r > other.r:
            return True
        return self.r == other.r and (other.closed or not self.closed)

    def meets(self, other: "_Disc", p: int) -> bool:
        return self.holds(other.c, p) or other.holds(self.c, p)


def validate(phi: AnnulusFormula) -> AnnulusFormula:
    """Check that phi describes a disc with pairwise disjoint holes inside it.

    Polynomials must be monic and irreducible over Q; linear ones are the
    supported case and are automatically a minimal-degree description."""
    p = phi.p
    for b in phi._bounds():
        if not b.poly or b.poly[-1] != 1:
            raise NotAnAnnulus("annulus polynomials must be monic", witness=b.to_json())
        if b.degree < 1:
            raise NotAnAnnulus("annulus polynomials must be nonconstant", witness=b.to_json())
        if b.degree > 1:
            x = sympy.Symbol("x")
            P = sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in reversed(b.poly)], x)
            if not P.is_irreducible:
                raise NotAnAnnulus("annulus polynomials must be irreducible over Q", witness=b.to_json())
            raise UnsupportedSplit("annulus polynomials of degree above one are not supported")
        if not _is_p_integral(b.center, p):
            raise NotAnAnnulus("centers must be p-adic integers", witness=b.to_json())
    outer = phi.outer_disc()
    holes = phi.hole_discs()
    for i, h in enumerate(holes):
        if not h.inside(outer, p):
            raise NotAnAnnulus(f"hole {i} is not contained in the outer disc",
                               witness={"hole": i, "center": str(h.c), "eps": str(h.r)})
    for i in range(len(holes)):
        for j in range(i + 1, len(holes)):
            if holes[i].meets(holes[j], p):
                pt = holes[j].c if holes[i].holds(holes[j].c, p) else holes[i].c
                raise NotAnAnnulus(f"holes {i} and {j} overlap",
                                   witness={"holes": [i, j], "point": str(pt)})
    return phi


# -- thin / Laurent decomposition ------------------------------------------------------

def _thin(c: Fraction, r: Fraction, centers: Sequence[Fraction], p: int) -> AnnulusFormula:
    return AnnulusFormula(Bound.linear(c, r, False), tuple(Bound.linear(b, r, False) for b in centers), p)


def _laurent(c: Fraction, lo: Fraction, hi: Fraction | float, p: int) -> AnnulusFormula:
    holes = () if hi == INF else (Bound.linear(c, hi, True),)
    return AnnulusFormula(Bound.linear(c, lo, True), holes, p)


def _classes(discs: Sequence[_Disc], r: Fraction, p: int) -> list[list[_Disc]]:
    """Group discs lying in the same open disc of radius exponent r."""
    groups: list[list[_Disc]] = []
    for d in discs:
        for g in groups:
            if _ord(d.c - g[0].c, p) > r:
                g.append(d)
                break
        else:
            groups.append([d])
    return groups


class _Decomposer:
    def __init__(self, p: int):
        self.p = p
        self.pieces: list[AnnulusFormula] = []
        self.trace: list[tuple[int, int]] = []

    def closed(self, c: Fraction, r: Fraction, holes: list[_Disc], parent: int | None) -> None:
        if any(h.closed and h.r == r for h in holes):
            return
        groups = _classes(holes, r, self.p)
        self.pieces.append(_thin(c, r, [g[0].c for g in groups], self.p))
        for g in groups:
            if any(not h.closed and h.r == r for h in g):
                continue
            self.open(g[0].c, r, g, parent)

    def open(self, c: Fraction, r: Fraction, holes: list[_Disc], parent: int | None) -> None:
        if parent is not None:
            self.trace.append((parent, len(holes)))
        if not holes:
            self.pieces.append(_laurent(c, r, INF, self.p))
            return
        if any(not h.closed and h.r == r for h in holes):
            return
        # the smallest closed disc holding every hole
        s = min(h.r for h in holes)
        for i, a in enumerate(holes):
            for b in holes[i + 1:]:
                s = min(s, _ord(a.c - b.c, self.p))
        c1 = holes[0].c
        self.pieces.append(_laurent(c1, r, s, self.p))
        if len(holes) == 1 and holes[0].closed:
            return
        self.closed(c1, s, holes, len(holes))


def decompose_thin_laurent(phi: AnnulusFormula, trace: list | None = None) -> list[AnnulusFormula]:
    """Disjoint thin and Laurent formulas whose union is the set of phi.

    Thin pieces are removed first, leaving open annuli; an open annulus with
    one hole is Laurent, and otherwise the largest Laurent annulus around its
    holes is removed and the remaining closed disc is split again.  When
    ``trace`` is a list it receives (parent, child) complexities of the
    recursive calls."""
    validate(phi)
    dec = _Decomposer(phi.p)
    outer = phi.outer_disc()
    holes = phi.hole_discs()
    if outer.closed:
        dec.closed(outer.c, outer.r, holes, None)
    else:
        dec.open(outer.c, outer.r, holes, None)
    if trace is not None:
        trace.extend(dec.trace)
    return dec.pieces


# -- integrands ------------------------------------------------------------------------

@dataclass
class _Integrand:
    """A polynomial known up to an additive error of sup norm |p|^prec."""

    coeffs: list[Fraction]
    prec: Fraction | float = INF

    @property
    def is_zero(self) -> bool:
        return not self.coeffs


def _as_integrand(f: Any, p: int) -> _Integrand:
    if isinstance(f, _Integrand):
        return f
    if isinstance(f, str):
        from .dplang import parse_polynomial

        g, names = parse_polynomial(f)
        if len(names) > 1:
            raise UnsupportedTerm("annulus factorization handles one variable")
        f = g
    if isinstance(f, Mapping):
        deg = max((e[0] if e else 0) for e in f) if f else 0
        out = [Q(0)] * (deg + 1)
        for e, c in f.items():
            k = e[0] if e else 0
            cs = c if isinstance(c, (tuple, list)) else (c,)
            out[k] += sum(Q(a) * Q(p) ** i for i, a in enumerate(cs))
        return _Integrand(_trim(out))
    from .series import SeparatedSeries

    if isinstance(f, SeparatedSeries):
        if f.m != 1 or f.n != 0:
            raise UnsupportedTerm("annulus factorization handles series in one closed-disc variable")
        deg = max((e[0] for e in f.coeffs), default=0)
        out = [Q(0)] * (deg + 1)
        for e, c in f.coeffs.items():
            out[e[0]] += sum(Q(a) * Q(p) ** i for i, a in enumerate(c))
        return _Integrand(_trim(out), INF if f.exact else Q(f.trunc_t))
    return _Integrand(_trim([Q(c) for c in f]))


def _fp_roots(coeffs: Sequence[int], p: int) -> list[tuple[int, int]]:
    """Roots in F_p with multiplicities."""
    f = [c % p for c in coeffs]
    out = []
    for b in range(p):
        g = list(f)
        k = 0
        while any(g):
            # synthetic division by (u - b)
            acc = 0
            quot = []
            for a in reversed(g):
                acc = (acc * b + a) % p
                quot.append(acc)
            rem = quot.pop()
            if rem:
                break
            g = list(reversed(quot))
            k += 1
        if k:
            out.append((b, k))
    return out


# -- factored pieces -------------------------------------------------------------------

@dataclass
class FactoredPiece:
    """On the points of ``annulus``, f = R * E with |E - 1| < 1.

    R is ``num / den``.  ``certificate`` records how the bound on E - 1 was
    obtained; ``R is None`` marks a piece of the exceptional set where no
    factorization is claimed."""

    annulus: AnnulusFormula
    num: list[Fraction] | None
    den: list[Fraction] = field(default_factory=lambda: [Q(1)])
    certificate: dict = field(default_factory=dict)

    @property
    def exceptional(self) -> bool:
        return self.num is None

    def R(self, x: Fraction | int) -> Fraction | None:
        if self.num is None:
            return None
        d = poly_eval(self.den, Q(x))
        return None if d == 0 else poly_eval(self.num, Q(x)) / d

    def to_json(self) -> dict:
        out: dict[str, Any] = {"annulus": self.annulus.to_json(), "certificate": _jsonable(self.certificate)}
        if self.num is None:
            out["R"] = None
        else:
            out["R"] = {"num": _poly_text(self.num), "den": _poly_text(self.den)}
        return out


def _jsonable(v: Any) -> Any:
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _thin_data(f: _Integrand, phi: AnnulusFormula, n: int = 1):
    """Dominant part of f on a thin formula with integral radius exponent.

    Returns (m, g, G, roots): f(c + p^r u) = p^m g(u) with g primitive, G the
    terms of g whose coefficients have ord < n (so G = g mod p^n), and the
    F_p-roots of g mod p."""
    p = phi.p
    r = phi.outer.eps
    if r.denominator != 1:
        raise UnsupportedSplit("thin pieces of non-integral radius have no rational points to factor on")
    c = phi.outer.center
    a = _taylor(f.coeffs, c)
    b = [ak * Q(p) ** (int(r) * k) for k, ak in enumerate(a)]
    m = min(_ord(x, p) for x in b)
    if m == INF:
        raise PrecisionLoss("the integrand vanishes identically")
    if m >= f.prec:
        raise PrecisionLoss("truncation does not separate the dominant part")
    g = [x / Q(p) ** int(m) for x in b]
    G = [x if _ord(x, p) < n else Q(0) for x in g]
    red = [int(x.numerator * pow(x.denominator, -1, p) % p) for x in g]
    roots = _fp_roots(red, p)
    return m, g, G, roots


def _hole_residues(phi: AnnulusFormula) -> set[int]:
    p = phi.p
    c = phi.outer.center
    r = int(phi.outer.eps)
    out = set()
    for h in phi.holes:
        u = (h.center - c) / Q(p) ** r
        out.add(int(u.numerator * pow(u.denominator, -1, p) % p))
    return out


def factor_thin(f: Any, phi: AnnulusFormula, n: int = 1) -> FactoredPiece:
    """R * E factorization of f on a thin formula whose holes contain the
    residue zeros of f.

    With u = (x - c) / p^r, f = p^m g(u) and R = p^m G(u) where G keeps the
    terms of g that are nonzero modulo p^n; |G(u)| = 1 on the piece, so
    |E - 1| <= |g - G| <= |p|^n."""
    if not phi.is_thin:
        raise NotAnAnnulus("factor_thin needs a thin formula", witness=phi.to_json())
    p = phi.p
    F = _as_integrand(f, p)
    m, g, G, roots = _thin_data(F, phi, n)
    holes = _hole_residues(phi)
    stray = [b for b, _ in roots if b not in holes]
    if stray:
        raise UnsupportedSplit(f"f has residue zeros {stray} inside the thin piece")
    r = int(phi.outer.eps)
    num = [x * Q(p) ** int(m) for x in _compose_linear(G, phi.outer.center, Q(p) ** r)]
    diff = [a - b for a, b in zip(g, G)]
    gap = min((_ord(x, p) for x in diff), default=INF)
    if F.prec != INF:
        gap = min(gap, F.prec - m)
    degree_roots = sum(k for _, k in roots)
    higher = len(_trim([Q(x) for x in G])) - 1 - degree_roots if G else 0
    cert = {
        "method": "thin",
        "dominant_ord": m,
        "norm_exponent": gap,
        "norm_bound": f"|E - 1| <= |p|^{gap}",
        "residue_roots": [[b, k] for b, k in roots],
        "rational_points_only": higher > 0,
        "precision": F.prec,
    }
    return FactoredPiece(phi, num, [Q(1)], cert)


def _envelope(vals: Sequence[Fraction | float], lo: Fraction, hi: Fraction | float):
    """Segments of the lower envelope of w -> vals[k] + k w on (lo, hi).

    Returns (segments, breakpoints): each segment is (a, b, k) with k the
    unique dominant index on the open interval (a, b)."""
    idx = [k for k, v in enumerate(vals) if v != INF]
    if not idx:
        raise PrecisionLoss("the integrand vanishes identically")

    def val(k: int, w: Fraction) -> Fraction:
        return vals[k] + k * w

    def dominant_after(w: Fraction) -> int:
        best = min(val(k, w) for k in idx)
        return min(k for k in idx if val(k, w) == best)

    segs = []
    bps = []
    w = lo
    k = dominant_after(w)
    while True:
        nxt = [Q(vals[j] - vals[k], k - j) for j in idx if j < k]
        nxt = [x for x in nxt if x > w]
        b = min(nxt) if nxt else INF
        if b >= hi:
            segs.append((w, hi, k))
            break
        segs.append((w, b, k))
        bps.append(b)
        w = b
        k = dominant_after(w)
    return segs, bps


def _gap(vals: Sequence, k: int, w: Fraction | float) -> Fraction | float:
    """ord(E - 1) at radius exponent w when term k dominates."""
    if w == INF:
        return INF if all(j >= k or vals[j] == INF for j in range(len(vals))) else -INF
    others = [vals[j] + j * w for j in range(len(vals)) if j != k and vals[j] != INF]
    if not others:
        return INF
    return min(others) - (vals[k] + k * w)


class _Factorer:
    """Refines a formula until f has a single dominant part on every piece."""

    def __init__(self, f: _Integrand, p: int, n: int, max_depth: int, strict: bool):
        self.f = f
        self.p = p
        self.n = n
        self.max_depth = max_depth
        self.strict = strict
        self.pieces: list[FactoredPiece] = []
        self.roots = self._rational_roots()

    def _rational_roots(self) -> list[Fraction]:
        if not self.f.coeffs or self.f.prec != INF:
            return []
        x = sympy.Symbol("x")
        P = sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in reversed(self.f.coeffs)], x)
        out = []
        for r in sympy.roots(P, filter="Q").keys():
            r = Q(int(sympy.fraction(r)[0]), int(sympy.fraction(r)[1]))
            if _is_p_integral(r, self.p):
                out.append(r)
        return sorted(out)

    def _exceptional(self, phi: AnnulusFormula, reason: str) -> None:
        self.pieces.append(FactoredPiece(phi, None, [Q(1)], {"method": "exceptional", "reason": reason}))

    def _center_in(self, c: Fraction, r: Fraction) -> Fraction:
        """A rational zero of f in the open disc, if any, else c."""
        for a in self.roots:
            if _ord(a - c, self.p) > r:
                return a
        return c

    # thin pieces ---------------------------------------------------------------
    def thin(self, phi: AnnulusFormula, depth: int) -> None:
        p = self.p
        if phi.outer.eps.denominator != 1:
            if not self.strict:
                self.circle_no_points(phi)
            return
        try:
            m, g, G, roots = _thin_data(self.f, phi, self.n)
        except PrecisionLoss as exc:
            self._exceptional(phi, str(exc))
            return
        holes = _hole_residues(phi)
        stray = [b for b, _ in roots if b not in holes]
        if not stray:
            self.pieces.append(factor_thin(self.f, phi, self.n))
            return
        c = phi.outer.center
        r = phi.outer.eps
        new = []
        for b in stray:
            cb = self._center_in(c + b * Q(p) ** int(r), r)
            new.append(cb)
        refined = AnnulusFormula(phi.outer, phi.holes + tuple(Bound.linear(cb, r, False) for cb in new), p)
        self.pieces.append(factor_thin(self.f, refined, self.n))
        for cb in new:
            self.laurent(cb, r, INF, depth + 1)

    def circle_no_points(self, phi: AnnulusFormula) -> None:
        """A circle of non-integral radius: it has no points over Q_p."""
        c = phi.outer.center
        w = phi.outer.eps
        a = _taylor(self.f.coeffs, c)
        vals = [_ord(x, self.p) for x in a]
        best = min(v + k * w for k, v in enumerate(vals) if v != INF)
        tied = [x if vals[k] != INF and vals[k] + k * w == best else Q(0) for k, x in enumerate(a)]
        num = _compose_linear(tied, c, Q(1))
        self.pieces.append(FactoredPiece(phi, num, [Q(1)], {
            "method": "tied-part", "dominant_ord": best, "rational_points_only": True,
            "no_rational_points": True}))

    # Laurent pieces --------------------------------------------------------------
    def laurent(self, c: Fraction, lo: Fraction, hi: Fraction | float, depth: int) -> None:
        p = self.p
        if depth > self.max_depth:
            self._exceptional(_laurent(c, lo, hi, p), "refinement depth exhausted near a zero")
            return
        a = _taylor(self.f.coeffs, c)
        vals = [_ord(x, p) for x in a]
        segs, bps = _envelope(vals, lo, hi)
        T = self.f.prec
        for (wa, wb, k) in segs:
            self.segment(c, wa, wb, k, a, vals, T, depth)
        for w in bps:
            if T != INF and min(v + j * w for j, v in enumerate(vals) if v != INF) >= T:
                self._exceptional(_thin(c, w, [c], p), "below the truncation order")
                continue
            self.thin(_thin(c, w, [c], p), depth)

    def segment(self, c, wa, wb, k, a, vals, T, depth) -> None:
        p = self.p
        if T != INF and k > 0:
            cut = Q(T - vals[k], k)
            if cut <= wa:
                self._exceptional(_laurent(c, wa, wb, p), "below the truncation order")
                return
            if cut < wb:
                self.segment(c, wa, cut, k, a, vals, INF, depth)
                self._exceptional(_thin(c, cut, [c], p), "below the truncation order")
                self._exceptional(_laurent(c, cut, wb, p), "below the truncation order")
                return
        if T != INF and k == 0 and vals[0] >= T:
            self._exceptional(_laurent(c, wa, wb, p), "below the truncation order")
            return
        if self.strict:
            self.strict_segment(c, wa, wb, k, a, vals, depth)
            return
        mono = [Q(0)] * k + [a[k]]
        num = _compose_linear(mono, c, Q(1))
        gap_lo = _gap(vals, k, wa)
        gap_hi = _gap(vals, k, wb)
        cert = {
            "method": "dominant-term",
            "dominant_index": k,
            "center": str(c),
            "norm_exponent": min(gap_lo, gap_hi),
            "pointwise": "|E - 1| < 1 at every point; the supremum is approached only at tie radii",
            "attained": min(gap_lo, gap_hi) > 0,
            "precision": T,
        }
        self.pieces.append(FactoredPiece(_laurent(c, wa, wb, p), num, [Q(1)], cert))

    def strict_segment(self, c, wa, wb, k, a, vals, depth) -> None:
        """Closed pieces with E = 1 mod p^n: circles where the margin is small,
        one closed annulus in between."""
        p = self.p
        w = Q(math.floor(wa) + 1)
        top = Q(math.ceil(wb) - 1) if wb != INF else INF
        while w <= top and _gap(vals, k, w) < self.n:
            self.thin(_thin(c, w, [c], p), depth)
            w += 1
        last = top
        tail = []
        while last != INF and last >= w and _gap(vals, k, last) < self.n:
            tail.append(last)
            last -= 1
        if last == INF or last >= w:
            mono = [Q(0)] * k + [a[k]]
            num = _compose_linear(mono, c, Q(1))
            holes = () if last == INF else (Bound.linear(c, last, False),)
            phi = AnnulusFormula(Bound.linear(c, w, False), holes, p)
            if last != INF and last == w:
                phi = _thin(c, w, [c], p)
            self.pieces.append(FactoredPiece(phi, num, [Q(1)], {
                "method": "dominant-term", "dominant_index": k, "center": str(c),
                "norm_exponent": min(_gap(vals, k, w), _gap(vals, k, last)), "attained": True,
                "congruence": f"E = 1 mod p^{self.n}"}))
        for t in reversed(tail):
            self.thin(_thin(c, t, [c], p), depth)


def factor_laurent(f: Any, phi: AnnulusFormula, n: int = 1, max_depth: int = 8) -> list[FactoredPiece]:
    """Refine a Laurent formula until one term of the expansion of f around
    the center dominates on each open piece; tie radii become thin circles."""
    validate(phi)
    if not phi.is_laurent:
        raise NotAnAnnulus("factor_laurent needs a Laurent formula", witness=phi.to_json())
    F = _as_integrand(f, phi.p)
    fac = _Factorer(F, phi.p, n, max_depth, False)
    c = phi.holes[0].center if phi.holes else phi.outer.center
    hi = phi.holes[0].eps if phi.holes else INF
    if not phi.holes:
        c = fac._center_in(c, phi.outer.eps)
    fac.laurent(c, phi.outer.eps, hi, 0)
    return fac.pieces


def factor(f: Any, phi: AnnulusFormula, n: int = 1, max_depth: int = 8, strict: bool = False) -> list[FactoredPiece]:
    """Pieces covering phi with an R * E factorization of f on each.

    Pieces where refinement stops (deep clusters of irrational zeros, or a
    truncated series below its precision) are returned with ``R = None``."""
    validate(phi)
    F = _as_integrand(f, phi.p)
    fac = _Factorer(F, phi.p, n, max_depth, strict)
    for piece in decompose_thin_laurent(phi):
        if piece.is_thin:
            fac.thin(piece, 0)
        else:
            c = piece.holes[0].center if piece.holes else fac._center_in(piece.outer.center, piece.outer.eps)
            hi = piece.holes[0].eps if piece.holes else INF
            fac.laurent(c, piece.outer.eps, hi, 0)
    if strict:
        for fp in fac.pieces:
            if fp.annulus.is_closed:
                continue
            closed = _closed_form(fp.annulus)
            if closed is None:
                if fp.num is not None:
                    raise UnsupportedSplit("non-integral radii prevent a closed refinement")
                continue
            fp.annulus = closed
    return fac.pieces


def _closed_form(phi: AnnulusFormula) -> AnnulusFormula | None:
    """The same set written with non-strict bounds; ord is an integer on
    Q_p, so ord > e reads ord >= e + 1 when e is an integer."""
    bounds = [phi.outer, *phi.holes]
    if any(b.eps.denominator != 1 for b in bounds if b.strict):
        return None
    outer = phi.outer
    if outer.strict:
        outer = Bound(outer.poly, outer.eps + 1, False)
    holes = tuple(Bound(h.poly, h.eps - 1, False) if h.strict else h for h in phi.holes)
    return AnnulusFormula(outer, holes, phi.p)


def factor_on_piece(f: Any, phi: AnnulusFormula, n: int = 1) -> FactoredPiece:
    """Factorization of f on a piece produced for a multiple of f."""
    p = phi.p
    F = _as_integrand(f, p)
    if phi.is_thin:
        if phi.outer.eps.denominator != 1:
            fac = _Factorer(F, p, n, 0, False)
            fac.circle_no_points(phi)
            return fac.pieces[0]
        return factor_thin(F, phi, n)
    if phi.is_laurent or phi.is_closed:
        c = phi.holes[0].center if phi.holes else phi.outer.center
        lo = phi.outer.eps
        hi = phi.holes[0].eps if phi.holes else INF
        a = _taylor(F.coeffs, c)
        vals = [_ord(x, p) for x in a]
        if phi.is_closed:
            lo = lo - Q(1, 2)
            hi = hi + Q(1, 2) if hi != INF else INF
        segs, _ = _envelope(vals, lo, hi)
        if len(segs) != 1:
            raise UnsupportedSplit("the integrand has several dominant terms on this piece")
        k = segs[0][2]
        num = _compose_linear([Q(0)] * k + [a[k]], c, Q(1))
        return FactoredPiece(phi, num, [Q(1)], {"method": "dominant-term", "dominant_index": k,
                                                "center": str(c)})
    raise NotAnAnnulus("not a piece shape produced by the factorization", witness=phi.to_json())


# -- regions cut out by a rational function --------------------------------------------

@dataclass
class DRegionPiece:
    """A piece on which R = E * constant * prod (x - a)^k over ``monomial``.

    ``relations`` gives, for each factor center, either ("const", ord value)
    or ("power", d): ord(x - a) = d * ord(x - ref)."""

    annulus: AnnulusFormula
    inside: bool
    constant: Fraction
    monomial: dict
    ref: Fraction | None
    relations: dict

    def to_json(self) -> dict:
        return {
            "annulus": self.annulus.to_json(),
            "inside": self.inside,
            "constant": str(self.constant),
            "monomial": {str(k): v for k, v in self.monomial.items()},
            "ref": None if self.ref is None else str(self.ref),
            "relations": {str(k): [v[0], _jsonable(v[1])] for k, v in self.relations.items()},
        }


class _RegionSplitter:
    def __init__(self, factors: Sequence[tuple[Fraction, int]], const: Fraction, eps: Fraction,
                 strict: bool, p: int):
        self.factors = [(Q(a), int(k)) for a, k in factors]
        self.const = Q(const)
        self.eps = Q(eps)
        self.strict = strict
        self.p = p
        self.out: list[DRegionPiece] = []

    def holds(self, v: Fraction | float) -> bool:
        return v > self.eps if self.strict else v >= self.eps

    def thin(self, c: Fraction, r: Fraction, pts: list[Fraction]) -> None:
        p = self.p
        groups = _classes([_Disc(a, r, False) for a in pts], r, p)
        phi = _thin(c, r, [g[0].c for g in groups], p)
        inner = {a for a in pts}
        C = self.const
        v = _ord(self.const, p)
        rel = {}
        mono = {}
        for a, k in self.factors:
            if a in inner:
                v += k * r
                mono[a] = mono.get(a, 0) + k
                rel[a] = ("const", r)
            else:
                d = _ord(c - a, p)
                v += k * d
                C *= (c - a) ** k
                rel[a] = ("const", d)
        self.out.append(DRegionPiece(phi, self.holds(v), C, mono, None, rel))
        for g in groups:
            cl = [a for a in pts if _ord(a - g[0].c, p) > r]
            self.open(g[0].c, r, cl)

    def open(self, c: Fraction, r: Fraction, pts: list[Fraction]) -> None:
        p = self.p
        ref = pts[0]
        if len(pts) == 1:
            s: Fraction | float = INF
        else:
            s = min(_ord(a - b, p) for i, a in enumerate(pts) for b in pts[i + 1:])
        cluster = set(pts)
        K = _ord(self.const, p)
        C = self.const
        N = 0
        rel = {}
        for a, k in self.factors:
            if a in cluster:
                N += k
                rel[a] = ("power", Q(1))
            else:
                d = _ord(ref - a, p)
                K += k * d
                C *= (ref - a) ** k
                rel[a] = ("const", d)
        mono = {ref: N} if N else {}

        def emit(phi: AnnulusFormula, w: Fraction) -> None:
            self.out.append(DRegionPiece(phi, self.holds(K + N * w), C, dict(mono), ref, dict(rel)))

        cut = Q(self.eps - K, N) if N else None
        if cut is not None and r < cut < s:
            emit(_laurent(ref, r, cut, p), (r + cut) / 2)
            emit(_thin(ref, cut, [ref], p), cut)
            emit(_laurent(ref, cut, s, p), cut + 1 if s == INF else (cut + s) / 2)
        else:
            emit(_laurent(ref, r, s, p), r + 1 if s == INF else (r + s) / 2)
        if s != INF:
            self.thin(ref, s, pts)


def decompose_D_region(factors: Sequence[tuple[Fraction | int, int]], eps: Fraction | int, strict: bool = False,
                       p: int = 5, const: Fraction | int = 1, include_outside: bool = False) -> list[DRegionPiece]:
    """Cover {x in Z_p : |R(x)| <= |p|^eps} (``<`` when strict) by annuli on
    which R = const * prod (x - a)^k is a unit times a monomial.

    Around each cluster of zeros and poles the factors at the cluster are
    comparable, ord(x - a) = ord(x - ref), while the others have constant
    order; thresholds where ord R crosses eps split the annuli further."""
    facs = [(Q(a), int(k)) for a, k in factors if int(k) != 0]
    pts = sorted({a for a, _ in facs if _is_p_integral(a, p)})
    sp = _RegionSplitter(facs, const, eps, strict, p)
    if pts:
        sp.thin(Q(0), Q(0), pts)
    else:
        C = Q(const)
        v = _ord(C, p)
        rel = {}
        for a, k in facs:
            d = _ord(a, p)
            v += k * d
            C *= (-a) ** k
            rel[a] = ("const", d)
        sp.out.append(DRegionPiece(_thin(Q(0), Q(0), [], p), sp.holds(v), C, {}, None, rel))
    return sp.out if include_outside else [d for d in sp.out if d.inside]


# -- terms -------------------------------------------------------------------------------

@dataclass
class TermPieces:
    """Factorization of a one-variable term over the unit disc.

    ``pieces`` cover Z_p; on each non-exceptional piece the term equals R * E
    away from the finite set ``exceptional_points`` where a divisor vanishes."""

    pieces: list[FactoredPiece]
    exceptional_points: list[Fraction]

    def to_json(self) -> dict:
        return {"pieces": [fp.to_json() for fp in self.pieces],
                "exceptional_points": [str(x) for x in self.exceptional_points]}


def _term_rational(t, var: str, p: int, series: Mapping[str, Any]) -> tuple[_Integrand, _Integrand]:
    """(numerator, denominator) of a term built from +, -, *, /, powers and
    series applied to the variable."""
    op = t.op

    def mul(a: _Integrand, b: _Integrand) -> _Integrand:
        prec = min(_shift(a.prec, _min_ord(b.coeffs, p)), _shift(b.prec, _min_ord(a.coeffs, p)),
                   a.prec + b.prec if a.prec != INF and b.prec != INF else INF)
        return _Integrand(_pmul(a.coeffs, b.coeffs), prec)

    def add(a: _Integrand, b: _Integrand, sign: int = 1) -> _Integrand:
        n = max(len(a.coeffs), len(b.coeffs))
        ca = a.coeffs + [Q(0)] * (n - len(a.coeffs))
        cb = b.coeffs + [Q(0)] * (n - len(b.coeffs))
        return _Integrand(_trim([x + sign * y for x, y in zip(ca, cb)]), min(a.prec, b.prec))

    one = _Integrand([Q(1)])
    if op == "num":
        return _Integrand(_trim([Q(t.value)])), one
    if op == "t0":
        return _Integrand([Q(p)]), one
    if op == "var":
        if t.value != var:
            raise UnsupportedTerm(f"unexpected variable {t.value}")
        return _Integrand([Q(0), Q(1)]), one
    if op in ("add", "sub"):
        an, ad = _term_rational(t.args[0], var, p, series)
        bn, bd = _term_rational(t.args[1], var, p, series)
        return add(mul(an, bd), mul(bn, ad), 1 if op == "add" else -1), mul(ad, bd)
    if op == "mul":
        an, ad = _term_rational(t.args[0], var, p, series)
        bn, bd = _term_rational(t.args[1], var, p, series)
        return mul(an, bn), mul(ad, bd)
    if op == "div":
        an, ad = _term_rational(t.args[0], var, p, series)
        bn, bd = _term_rational(t.args[1], var, p, series)
        return mul(an, bd), mul(ad, bn)
    if op == "neg":
        an, ad = _term_rational(t.args[0], var, p, series)
        return _Integrand([-c for c in an.coeffs], an.prec), ad
    if op == "pow":
        an, ad = _term_rational(t.args[0], var, p, series)
        k = int(t.value)
        if k < 0:
            an, ad, k = ad, an, -k
        rn, rd = one, one
        for _ in range(k):
            rn, rd = mul(rn, an), mul(rd, ad)
        return rn, rd
    if op == "series":
        if t.value not in series:
            raise UnsupportedTerm(f"unbound series symbol {t.value}")
        if len(t.args) != 1 or t.args[0].op != "var" or t.args[0].value != var:
            raise UnsupportedTerm("series symbols must be applied to the variable itself")
        return _as_integrand(series[t.value], p), one
    raise UnsupportedTerm(f"the operation {op} is outside the supported term grammar")


def _min_ord(f: Sequence[Fraction], p: int) -> Fraction | float:
    return min((_ord(c, p) for c in f), default=INF)


def _shift(a: Fraction | float, b: Fraction | float) -> Fraction | float:
    return INF if a == INF or b == INF else a + b


def term_to_pieces(tau: Any, p: int, series: Mapping[str, Any] | None = None, var: str = "x",
                   n: int = 1, strict: bool = False, max_depth: int = 8) -> TermPieces:
    """Factor a one-variable term on a cover of the unit disc by annuli.

    The cover is adapted to numerator times denominator, so both factor on
    every piece and R is the quotient of their dominant parts.  Points where
    the denominator vanishes (the term is 0 there by convention) form the
    exceptional set.  With ``strict`` all pieces are closed and E = 1 mod p^n."""
    from .dplang import parse_term

    if isinstance(tau, str):
        tau = parse_term(tau, {var: "Val"})
    num, den = _term_rational(tau, var, p, series or {})
    if num.is_zero:
        raise UnsupportedTerm("the term is identically zero")
    if den.is_zero:
        raise UnsupportedTerm("the term divides by zero")
    prod = _Integrand(_pmul(num.coeffs, den.coeffs), min(_shift(num.prec, _min_ord(den.coeffs, p)),
                                                          _shift(den.prec, _min_ord(num.coeffs, p))))
    unit = AnnulusFormula(Bound.linear(0, 0, False), (), p)
    pieces = factor(prod, unit, n, max_depth, strict)
    out = []
    for fp in pieces:
        if fp.num is None:
            out.append(fp)
            continue
        if fp.certificate.get("no_rational_points"):
            out.append(fp)
            continue
        fn = factor_on_piece(num, fp.annulus, n) if num.coeffs else None
        fd = factor_on_piece(den, fp.annulus, n)
        cert = {"method": "quotient", "numerator": fn.certificate, "denominator": fd.certificate}
        out.append(FactoredPiece(fp.annulus, fn.num, fd.num, cert))
    zeros: list[Fraction] = []
    if den.prec == INF:
        x = sympy.Symbol("x")
        P = sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in reversed(den.coeffs)], x)
        for r in sympy.roots(P, filter="Q"):
            a, b = sympy.fraction(r)
            r = Q(int(a), int(b))
            if _is_p_integral(r, p):
                zeros.append(r)
    return TermPieces(out, sorted(zeros))


# -- sampling -----------------------------------------------------------------------------

def sample_points(p: int, within: AnnulusFormula | None = None, lifts: int = 100, seed: int = 0,
                  base_digits: int = 3, digits: int = 6) -> list[Fraction]:
    """All residues mod p^3 and random lifts mod p^6, placed in the outer
    disc of ``within`` (the unit disc by default)."""
    rng = random.Random(seed)
    base = list(range(p**base_digits))
    extra = [rng.randrange(p**digits) for _ in range(lifts)]
    if within is None:
        return [Q(x) for x in base + extra]
    c = within.outer.center
    r = within.outer.eps
    k = math.floor(r) + 1 if within.outer.strict else math.ceil(r)
    return [c + Q(p) ** k * x for x in base + extra]
