"""Truncated p-adic numbers with tracked precision, angular components,
Newton polygons and Hensel lifting.

A nonzero number is stored as ``p**valuation * unit`` where the unit is
known modulo ``p**prec``.  Exact zero has valuation ``math.inf``.  A
quantity that is known to vanish modulo ``p**k`` but nothing more (for
instance the difference of two numbers that agree on every trusted digit)
is kept as an *indeterminate zero*: ``valuation = k``, ``unit = 0``,
``prec = 0``.  Asking for its order or angular component raises
``InsufficientPrecision``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import sympy
from sympy.polys.domains import ZZ
from sympy.polys import galoistools as gt

from .errors import (
    CommonRoot,
    InsufficientPrecision,
    NotIntegral,
    NotSquarefree,
    PrecisionLoss,
    ZeroPolynomial,
)

INF = math.inf

Rational = Union[int, Fraction]

MODES = ("fixed-prime", "symbolic-q")


def vp(n: Rational, p: int) -> int | float:
    """Valuation of a rational number; ``INF`` for zero."""
    if n == 0:
        return INF
    n = Fraction(n)
    v = 0
    a, b = n.numerator, n.denominator
    while a % p == 0:
        a //= p
        v += 1
    while b % p == 0:
        b //= p
        v -= 1
    return v


def unit_part(n: Rational, p: int) -> Fraction:
    n = Fraction(n)
    v = vp(n, p)
    return n / Fraction(p) ** v


def round_padic(c: Rational, p: int, N: int) -> Fraction:
    """Reduce ``c`` to a representative modulo ``p**N`` (absolute precision).

    The result is ``p**v * u`` with ``0 < u < p**(N-v)`` an integer, or 0."""
    if c == 0:
        return Fraction(0)
    v = vp(c, p)
    if v >= N:
        return Fraction(0)
    u = unit_part(c, p)
    mod = p ** (N - v)
    r = (u.numerator * pow(u.denominator, -1, mod)) % mod
    return Fraction(p) ** v * r


@dataclass(frozen=True)
class PAdicContext:
    p: int
    M: int = 40
    mode: str = "fixed-prime"
    equichar: bool = False

    def __post_init__(self) -> None:
        if not sympy.isprime(self.p):
            raise ValueError(f"p = {self.p} is not prime")
        if self.M < 1:
            raise ValueError("precision M must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    def __call__(self, x: Rational | "PAdicNumber") -> "PAdicNumber":
        if isinstance(x, PAdicNumber):
            return x
        return PAdicNumber.from_rational(x, self.p, self.M)

    @property
    def uniformizer(self) -> "PAdicNumber":
        return self(self.p)

    def zero(self) -> "PAdicNumber":
        return PAdicNumber(self.p, INF, 0, 0)


@dataclass(frozen=True)
class PAdicNumber:
    p: int
    valuation: int | float
    unit: int
    prec: int

    @staticmethod
    def from_rational(x: Rational, p: int, M: int) -> "PAdicNumber":
        if x == 0:
            return PAdicNumber(p, INF, 0, 0)
        v = vp(x, p)
        u = unit_part(x, p)
        mod = p**M
        return PAdicNumber(p, v, (u.numerator * pow(u.denominator, -1, mod)) % mod, M)

    @staticmethod
    def indeterminate_zero(p: int, k: int | float) -> "PAdicNumber":
        if k == INF:
            return PAdicNumber(p, INF, 0, 0)
        return PAdicNumber(p, k, 0, 0)

    # -- predicates -------------------------------------------------------
    def is_zero(self) -> bool:
        return self.valuation == INF

    def is_known(self) -> bool:
        """True unless this is an indeterminate zero."""
        return self.valuation == INF or self.prec > 0

    @property
    def absolute_precision(self) -> int | float:
        return self.valuation if self.valuation == INF else self.valuation + self.prec

    def lift(self) -> Fraction:
        """A rational representative (exact for exact zero)."""
        if self.valuation == INF or self.prec == 0:
            return Fraction(0)
        return Fraction(self.p) ** self.valuation * self.unit

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other: object) -> "PAdicNumber":
        if isinstance(other, PAdicNumber):
            if other.p != self.p:
                raise ValueError("mixing different primes")
            return other
        if isinstance(other, (int, Fraction)):
            M = self.prec if self.prec > 0 else 40
            return PAdicNumber.from_rational(other, self.p, max(M, 1))
        return NotImplemented

    def __neg__(self) -> "PAdicNumber":
        if self.valuation == INF or self.prec == 0:
            return self
        mod = self.p**self.prec
        return PAdicNumber(self.p, self.valuation, (-self.unit) % mod, self.prec)

    def __add__(self, other: object) -> "PAdicNumber":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        p = self.p
        if self.valuation == INF:
            return o
        if o.valuation == INF:
            return self
        A = min(self.absolute_precision, o.absolute_precision)
        v = min(self.valuation, o.valuation)
        if A <= v:
            return PAdicNumber.indeterminate_zero(p, A)
        s = self.unit * p ** (self.valuation - v) + o.unit * p ** (o.valuation - v)
        s %= p ** (A - v)
        if s == 0:
            return PAdicNumber.indeterminate_zero(p, A)
        w = vp(s, p)
        nv = v + w
        return PAdicNumber(p, nv, (s // p**w) % p ** (A - nv), A - nv)

    __radd__ = __add__

    def __sub__(self, other: object) -> "PAdicNumber":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other: object) -> "PAdicNumber":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other: object) -> "PAdicNumber":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        p = self.p
        if self.valuation == INF or o.valuation == INF:
            return PAdicNumber(p, INF, 0, 0)
        if self.prec == 0 or o.prec == 0:
            return PAdicNumber.indeterminate_zero(p, self.valuation + o.valuation)
        prec = min(self.prec, o.prec)
        return PAdicNumber(p, self.valuation + o.valuation, (self.unit * o.unit) % p**prec, prec)

    __rmul__ = __mul__

    def inverse(self) -> "PAdicNumber":
        if self.valuation == INF:
            raise ZeroDivisionError("p-adic division by exact zero")
        if self.prec == 0:
            raise InsufficientPrecision("division by a number with no trusted digits")
        mod = self.p**self.prec
        return PAdicNumber(self.p, -self.valuation, pow(self.unit, -1, mod), self.prec)

    def __truediv__(self, other: object) -> "PAdicNumber":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other: object) -> "PAdicNumber":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, k: int) -> "PAdicNumber":
        if k < 0:
            return self.inverse() ** (-k)
        r = PAdicNumber.from_rational(1, self.p, max(self.prec, 1))
        base = self
        while k:
            if k & 1:
                r = r * base
            base = base * base
            k >>= 1
        return r

    def agrees_with(self, other: "PAdicNumber") -> bool:
        """Equality on the digits trusted by both operands."""
        d = self - other
        return d.valuation == INF or d.prec == 0

    def __str__(self) -> str:
        if self.valuation == INF:
            return "0"
        if self.prec == 0:
            return f"O({self.p}^{self.valuation})"
        return f"{self.p}^{self.valuation} * {self.unit} (mod {self.p}^{self.valuation + self.prec})"


def _as_padic(x: PAdicNumber | Rational, p: int, M: int) -> PAdicNumber:
    if isinstance(x, PAdicNumber):
        return x
    return PAdicNumber.from_rational(x, p, M)


def ord(x: PAdicNumber) -> int | float:
    if x.valuation != INF and x.prec == 0:
        raise InsufficientPrecision("order of an indeterminate zero")
    return x.valuation


def ac(x: PAdicNumber, m: int) -> int:
    if m < 1:
        raise ValueError("ac depth must be positive")
    if x.valuation == INF:
        return 0
    if m > x.prec:
        raise InsufficientPrecision(f"ac_{m} needs {m} digits, only {x.prec} trusted")
    return x.unit % x.p**m


def res(x: PAdicNumber, m: int) -> int:
    if x.valuation == INF:
        return 0
    if x.valuation < 0:
        raise NotIntegral(f"res_{m} of an element of order {x.valuation}")
    if m > x.valuation + x.prec:
        raise InsufficientPrecision(f"res_{m} needs absolute precision {m}")
    return (x.unit * x.p**x.valuation) % x.p**m


def mth_root(x: PAdicNumber, xi: int, z: int, m: int, e: int) -> PAdicNumber:
    """The unique y with y^m = x, ord y = z and ac_{e+1}(y) = xi, else 0."""
    p = x.p
    zero = PAdicNumber(p, INF, 0, 0)
    if m < 1 or e < 0:
        raise ValueError("need m >= 1 and e >= 0")
    if x.valuation == INF or m * z != ord(x):
        return zero
    if m % p ** (e + 1) == 0:
        return zero
    if x.prec < 2 * e + 1:
        raise InsufficientPrecision("x has too few digits to test the root condition")
    mod = p ** (2 * e + 1)
    if (pow(xi, m, mod) - x.unit) % mod != 0:
        return zero
    em = vp(m, p)
    out_prec = x.prec - em
    if out_prec < 1:
        raise InsufficientPrecision("root would carry no trusted digit")
    work = p ** (x.prec + em)
    u = x.unit
    w = xi % work
    mp = m // p**em
    for _ in range(4 * (x.prec + 2).bit_length() + 8):
        F = (pow(w, m, work) - u) % work
        if F % p ** x.prec == 0:
            break
        D = mp * pow(w, m - 1, work)
        w = (w - (F // p**em) * pow(D, -1, work)) % work
    else:
        raise InsufficientPrecision("root iteration did not converge")
    return PAdicNumber(p, z, w % p**out_prec, out_prec)


def hensel_root(a: Sequence[PAdicNumber | Rational], xi: int, e: int, p: int | None = None, M: int = 40) -> PAdicNumber:
    """The unique unit root y of sum a_i y^i with ac_{e+1}(y) = xi, else 0."""
    if p is None:
        for c in a:
            if isinstance(c, PAdicNumber):
                p = c.p
                break
        else:
            raise ValueError("prime needed when no coefficient is a PAdicNumber")
    coeffs = [_as_padic(c, p, M) for c in a]
    zero = PAdicNumber(p, INF, 0, 0)
    if xi % p == 0:
        return zero
    for c in coeffs:
        if c.valuation != INF and c.prec == 0:
            raise InsufficientPrecision("coefficient with no trusted digits")
        if c.valuation < 0:
            return zero
    k = 2 * e + 1
    N = min((c.absolute_precision for c in coeffs if c.valuation != INF), default=M)
    if N < k:
        raise InsufficientPrecision("coefficients too imprecise for the root test")
    ints = [0 if c.valuation == INF else (c.unit * p**c.valuation) % p**N for c in coeffs]
    modk = p**k

    def f(y: int, mod: int) -> int:
        return sum(c * pow(y, i, mod) for i, c in enumerate(ints)) % mod

    def df(y: int, mod: int) -> int:
        return sum(i * c * pow(y, i - 1, mod) for i, c in enumerate(ints) if i) % mod

    if f(xi, modk) != 0:
        return zero
    if df(xi, modk) % p ** (e + 1) == 0:
        return zero
    work = p ** (N + e + 1)
    y = xi % work
    ed = vp(df(xi, modk), p)
    for _ in range(4 * (N + 2).bit_length() + 8):
        F = f(y, work)
        if F % p**N == 0:
            break
        D = df(y, work)
        dv = vp(D, p)
        y = (y - (F // p**dv) * pow(D // p**dv, -1, work)) % work
    else:
        raise InsufficientPrecision("Hensel iteration did not converge")
    out_prec = N - ed
    if out_prec < 1:
        raise InsufficientPrecision("root would carry no trusted digit")
    return PAdicNumber(p, 0, y % p**out_prec, out_prec)


# -- Newton polygons --------------------------------------------------------


@dataclass(frozen=True)
class NewtonPolygon:
    points: tuple[tuple[int, int], ...]
    segments: tuple[tuple[Fraction, int], ...]
    zero_roots: int = 0

    def root_valuations(self) -> list[tuple[Fraction, int]]:
        """(valuation, multiplicity) of the nonzero roots, largest first."""
        return [(-s, n) for s, n in self.segments]

    @property
    def degree(self) -> int:
        return sum(n for _, n in self.segments)


def _coeff_valuation(c: PAdicNumber | Rational, p: int) -> int | float:
    if isinstance(c, PAdicNumber):
        return ord(c)
    return vp(c, p)


def newton_polygon(f: Sequence[PAdicNumber | Rational], p: int | None = None) -> NewtonPolygon:
    """Lower convex hull of (i, ord c_i); coefficients are listed from degree 0 up."""
    if p is None:
        p = next(c.p for c in f if isinstance(c, PAdicNumber))
    pts = []
    for i, c in enumerate(f):
        v = _coeff_valuation(c, p)
        if v != INF:
            pts.append((i, int(v)))
    if not pts:
        raise ZeroPolynomial("Newton polygon of the zero polynomial")
    hull: list[tuple[int, int]] = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop the middle point unless it lies strictly below the chord
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    segs = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        segs.append((Fraction(y2 - y1, x2 - x1), x2 - x1))
    return NewtonPolygon(tuple(pts), tuple(segs), pts[0][0])


# -- polynomial helpers over Q with p-adic rounding --------------------------

Poly1 = list  # coefficients, degree 0 first


def _trim(f: list) -> list:
    while f and f[-1] == 0:
        f.pop()
    return f


def _pmul(f: Sequence[Fraction], g: Sequence[Fraction]) -> list[Fraction]:
    if not f or not g:
        return []
    out = [Fraction(0)] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a:
            for j, b in enumerate(g):
                out[i + j] += a * b
    return _trim(out)


def _pdivmod_monic(f: Sequence[Fraction], g: Sequence[Fraction]) -> tuple[list[Fraction], list[Fraction]]:
    r = list(f)
    dg = len(g) - 1
    if len(r) - 1 < dg:
        return [], _trim(r)
    q = [Fraction(0)] * (len(r) - dg)
    for k in range(len(r) - 1, dg - 1, -1):
        c = r[k]
        if c:
            q[k - dg] = c
            for j in range(dg + 1):
                r[k - dg + j] -= c * g[j]
    return _trim(q), _trim(r[:dg])


def _round_poly(f: Iterable[Rational], p: int, N: int) -> list[Fraction]:
    return _trim([round_padic(c, p, N) for c in f])


def _min_val(f: Sequence[Rational], p: int) -> int | float:
    return min((vp(c, p) for c in f if c), default=INF)


@dataclass(frozen=True)
class SlopeFactor:
    coeffs: tuple[Fraction, ...]
    slope: Fraction | float
    residue_factor: tuple[int, ...] | None = None
    p: int = 0

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def root_residue(self) -> int | None:
        """Residue of the root of a linear factor scaled to a unit."""
        if self.degree != 1 or self.residue_factor is None:
            return None
        return (-self.residue_factor[0]) % self.p

    def padic(self, ctx: PAdicContext) -> list[PAdicNumber]:
        return [ctx(c) for c in self.coeffs]


class SlopeFactorization(list):
    """List of monic ``SlopeFactor`` values with ``leading`` and ``precision``."""

    leading: Fraction
    precision: int | float


def _split_at(f: list[Fraction], d: int, sigma: Fraction, gap: Fraction, p: int, N: int) -> tuple[list[Fraction], list[Fraction]]:
    """Split monic f = g*h with g monic of degree d carrying the roots of
    valuation > sigma.  Linear convergence at rate ``gap`` per step."""
    cd = f[d]
    spread = max((abs(vp(c, p)) for c in f if c), default=0)
    W = N + 2 * spread + 4
    g = _round_poly([c / cd for c in f[: d + 1]], p, W)
    steps = int((W + 2 * spread + 4) / gap) + 20
    for _ in range(steps):
        h, r = _pdivmod_monic(f, g)
        r = _round_poly(r, p, W)
        if _min_val(r, p) >= N:
            return g, _round_poly(h, p, W)
        h0 = h[0]
        g = _round_poly([gi + (r[i] / h0 if i < len(r) else 0) for i, gi in enumerate(g)], p, W)
    raise PrecisionLoss("slope splitting did not stabilise within the digit budget")


def _fp(f: Sequence[Fraction], p: int) -> list[int]:
    """Integral polynomial (degree 0 first) to a galoistools list (high first)."""
    out = []
    for c in reversed(f):
        c = Fraction(c)
        out.append((c.numerator * pow(c.denominator, -1, p)) % p)
    return gt.gf_strip(out)


def _from_fp(f: Sequence[int]) -> list[Fraction]:
    return [Fraction(int(c)) for c in reversed(f)]


def _hensel_split(G: list[Fraction], parts: list[list[int]], p: int, N: int) -> list[list[Fraction]]:
    """Lift a coprime factorisation of monic G mod p to precision p^N."""
    if len(parts) == 1:
        return [G]
    A_bar = parts[0]
    B_bar = gt.gf_strip([1])
    for P in parts[1:]:
        B_bar = gt.gf_mul(B_bar, P, p, ZZ)
    s_bar, t_bar, g = gt.gf_gcdex(A_bar, B_bar, p, ZZ)
    if g != [1]:
        raise PrecisionLoss("residue factors are not coprime")
    A = _from_fp(A_bar)
    B = _from_fp(B_bar)
    for k in range(1, N):
        E = [c for c in _pmul(A, B)]
        diff = [Fraction(G[i] if i < len(G) else 0) - (E[i] if i < len(E) else 0) for i in range(max(len(G), len(E)))]
        diff = _trim(diff)
        if not diff or _min_val(diff, p) >= N:
            break
        pk = Fraction(p) ** k
        if _min_val(diff, p) < k:
            raise PrecisionLoss("Hensel lifting lost track of the factorisation")
        e_bar = _fp([c / pk for c in diff], p)
        te = gt.gf_mul(t_bar, e_bar, p, ZZ)
        q, r = gt.gf_div(te, A_bar, p, ZZ)
        se = gt.gf_add(gt.gf_mul(s_bar, e_bar, p, ZZ), gt.gf_mul(q, B_bar, p, ZZ), p, ZZ)
        rA = _from_fp(r)
        rB = _from_fp(se)
        A = _round_poly([A[i] + (pk * rA[i] if i < len(rA) else 0) for i in range(len(A))], p, N)
        B = _round_poly([B[i] + (pk * rB[i] if i < len(rB) else 0) for i in range(max(len(B), len(rB)))], p, N)
    return [A] + _hensel_split(B, parts[1:], p, N)


def slope_factor(f: Sequence[PAdicNumber | Rational], ctx: PAdicContext | int, check_squarefree: bool = True) -> SlopeFactorization:
    """Factor f over Q_p into monic factors whose roots share one valuation;
    factors of integral slope are further split along their distinct
    irreducible residue factors."""
    if isinstance(ctx, int):
        ctx = PAdicContext(ctx)
    p, M = ctx.p, ctx.M
    exact = all(not isinstance(c, PAdicNumber) for c in f)
    in_prec = INF
    coeffs: list[Fraction] = []
    for c in f:
        if isinstance(c, PAdicNumber):
            if c.valuation != INF:
                in_prec = min(in_prec, c.absolute_precision)
            coeffs.append(c.lift())
        else:
            coeffs.append(Fraction(c))
    coeffs = _trim(coeffs)
    if not coeffs:
        raise ZeroPolynomial("slope_factor of the zero polynomial")
    if exact and len(coeffs) > 2 and check_squarefree:
        x = sympy.Symbol("x")
        P = sympy.Poly(list(reversed(coeffs)), x, domain="QQ")
        if sympy.gcd(P, P.diff(x)).degree() > 0:
            raise NotSquarefree("input has a repeated factor over Q")
    lead = coeffs[-1]
    monic = [c / lead for c in coeffs]
    out = SlopeFactorization()
    out.leading = lead
    k = 0
    while monic[k] == 0:
        k += 1
    if k > 1 and check_squarefree:
        raise NotSquarefree("repeated root at zero")
    for _ in range(k):
        out.append(SlopeFactor((Fraction(0), Fraction(1)), INF, (0, 1), p))
    rest = monic[k:]
    if len(rest) == 1:
        out.precision = in_prec if in_prec != INF else M
        return out
    spread = max(abs(vp(c, p)) for c in rest if c)
    N = M + 2 * spread + 2
    pieces: list[tuple[list[Fraction], Fraction]] = []
    while len(rest) > 1:
        npg = newton_polygon(rest, p)
        vals = npg.root_valuations()
        if len(vals) == 1:
            pieces.append((rest, vals[0][0]))
            break
        s1, d = vals[0]
        s2 = vals[1][0]
        sigma = (s1 + s2) / 2
        g, h = _split_at(rest, d, sigma, (s1 - s2) / 2, p, N)
        pieces.append((g, s1))
        rest = h
    for g, s in pieces:
        out.extend(_residue_split(g, s, p, N))
    prod = [Fraction(lead)]
    for fac in out:
        prod = _pmul(prod, list(fac.coeffs))
    diff = _trim([Fraction(coeffs[i] if i < len(coeffs) else 0) - (prod[i] if i < len(prod) else 0)
                  for i in range(max(len(coeffs), len(prod)))])
    cert = _min_val(diff, p)
    cert = min(cert, M + vp(lead, p))
    out.precision = min(cert, in_prec)
    if out.precision - vp(lead, p) < 1:
        raise PrecisionLoss("factorisation has no trusted digit")
    return out


def _residue_split(g: list[Fraction], s: Fraction, p: int, N: int) -> list[SlopeFactor]:
    if s.denominator != 1:
        return [SlopeFactor(tuple(g), s, None, p)]
    si = int(s)
    d = len(g) - 1
    G = [c / Fraction(p) ** (si * (d - i)) for i, c in enumerate(g)]
    Gbar = _fp(G, p)
    _, facs = gt.gf_factor(Gbar, p, ZZ)
    facs = sorted(facs, key=lambda t: (len(t[0]), list(t[0])))
    parts = [gt.gf_pow(P, e, p, ZZ) for P, e in facs]
    lifted = _hensel_split(_round_poly(G, p, N), parts, p, N) if len(parts) > 1 else [G]
    out = []
    for Gk, (P, _) in zip(lifted, facs):
        dk = len(Gk) - 1
        gk = _round_poly([c * Fraction(p) ** (si * (dk - i)) for i, c in enumerate(Gk)], p, N + si * dk)
        rf = tuple(int(c) for c in reversed(P))
        out.append(SlopeFactor(tuple(gk), s, rf, p))
    return out


def linear_root(fac: SlopeFactor) -> Fraction:
    if fac.degree != 1:
        raise ValueError("not a linear factor")
    return -fac.coeffs[0]


def root_distance_vals(f: Sequence[Rational], g: Sequence[Rational], p: int) -> list[Fraction]:
    """Multiset of ord(a - b) over roots a of f and b of g (ascending)."""
    x, y = sympy.symbols("x y")
    F = sum(sympy.Rational(c.numerator, c.denominator) * y**i for i, c in enumerate(map(Fraction, f)))
    G = sum(sympy.Rational(c.numerator, c.denominator) * (x + y) ** i for i, c in enumerate(map(Fraction, g)))
    R = sympy.Poly(sympy.resultant(F, G, y), x)
    coeffs = [Fraction(int(c.p), int(c.q)) for c in reversed(R.all_coeffs())]
    if not coeffs or coeffs[0] == 0:
        raise CommonRoot("f and g share a root")
    npg = newton_polygon(coeffs, p)
    out = []
    for v, mult in npg.root_valuations():
        out.extend([v] * mult)
    return sorted(out)
