"""Truncated separated power series over Z[[t]].

A series in closed-disc variables xi_1..xi_m and open-disc variables
rho_1..rho_n is stored as a map from exponent tuples to Z[t] coefficients,
reduced modulo the ideal (t^M) + (rho_j^(D+1)).  Closed-disc degrees are
kept exactly (products raise them); open-disc degrees are truncated at D.
The ``exact`` flag records whether anything was ever discarded.

Specialization sends t to p (fixed prime) and evaluates at p-adic points.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Any, Iterable, Mapping, Sequence

from .errors import CompositionDomain, InsufficientPrecision, NotRegular, TruncationTooSmall, ZeroSeries
from .padic import INF, PAdicContext, PAdicNumber
from .polys import format_integrand, t_add, t_neg, t_trim, t_val

DEFAULT_T_ORDER = 12
DEFAULT_DEGREE = 16

__all__ = [
    "SeparatedSeries", "Preparation", "DominantTerm", "eval_series", "compose", "is_regular",
    "regular_degree", "w_divide", "w_prepare", "dominant_terms", "preregularize", "parse_series",
    "DEFAULT_T_ORDER", "DEFAULT_DEGREE",
]


def _pack(c: Sequence[int], B: int) -> int:
    return sum(x << (B * i) for i, x in enumerate(c))


def _unpack(k: int, B: int, count: int) -> list[int]:
    """Inverse of _pack for signed digits of absolute value below 2^(B-1)."""
    out = []
    mask, half = (1 << B) - 1, 1 << (B - 1)
    for _ in range(count):
        d = k & mask
        if d >= half:
            d -= 1 << B
        out.append(d)
        k = (k - d) >> B
    return out


class SeparatedSeries:
    """An element of Z[[t]]<xi>[[rho]] known modulo (t^M) + (rho^(D+1))."""

    __slots__ = ("m", "n", "coeffs", "trunc_t", "degree", "exact", "names")

    def __init__(self, m: int, n: int, coeffs: Mapping[tuple, Sequence[int]],
                 trunc_t: int = DEFAULT_T_ORDER, degree: int = DEFAULT_DEGREE, exact: bool = True,
                 names: Sequence[str] | None = None):
        if trunc_t < 1:
            raise ValueError("the t-adic truncation order must be at least 1")
        checked: dict[tuple, tuple] = {}
        for e, c in coeffs.items():
            e = tuple(int(x) for x in e)
            if len(e) != m + n:
                raise ValueError(f"exponent {e} does not have {m + n} entries")
            checked[e] = tuple(int(x) for x in c)
        self._store(m, n, checked, trunc_t, degree, exact, names)

    @classmethod
    def _trusted(cls, m: int, n: int, coeffs: Mapping[tuple, Sequence[int]], trunc_t: int, degree: int,
                 exact: bool, names: Sequence[str] | None) -> "SeparatedSeries":
        """Constructor for internal results whose keys and values are already ints."""
        obj = object.__new__(cls)
        obj._store(m, n, coeffs, trunc_t, degree, exact, names)
        return obj

    def _store(self, m, n, coeffs, trunc_t, degree, exact, names) -> None:
        clean: dict[tuple, tuple] = {}
        for e, c in coeffs.items():
            if not (c and c[-1]):
                c = t_trim(c)
                if not c:
                    continue
            if m < len(e) and any(x > degree for x in e[m:]):
                exact = False
                continue
            if len(c) > trunc_t:
                exact = False
                c = t_trim(c[:trunc_t])
                if not c:
                    continue
            clean[e] = tuple(c)
        self.m = m
        self.n = n
        self.coeffs = dict(sorted(clean.items()))
        self.trunc_t = trunc_t
        self.degree = degree
        self.exact = exact
        self.names = tuple(names) if names else tuple(
            [f"xi{i + 1}" for i in range(m)] + [f"rho{j + 1}" for j in range(n)])

    # construction -------------------------------------------------------
    def _like(self, coeffs: Mapping[tuple, Sequence[int]], exact: bool | None = None) -> "SeparatedSeries":
        return SeparatedSeries._trusted(self.m, self.n, coeffs, self.trunc_t, self.degree,
                                        self.exact if exact is None else exact, self.names)

    @classmethod
    def constant(cls, c: Sequence[int] | int, m: int, n: int, **kw) -> "SeparatedSeries":
        c = (c,) if isinstance(c, int) else tuple(c)
        return cls(m, n, {(0,) * (m + n): c}, **kw)

    @classmethod
    def variable(cls, i: int, m: int, n: int, **kw) -> "SeparatedSeries":
        e = [0] * (m + n)
        e[i] = 1
        return cls(m, n, {tuple(e): (1,)}, **kw)

    @property
    def nvars(self) -> int:
        return self.m + self.n

    def is_zero(self) -> bool:
        return not self.coeffs

    def _check(self, other: "SeparatedSeries") -> None:
        if (self.m, self.n) != (other.m, other.n):
            raise ValueError("series in different variable sets")

    def _meet(self, other: "SeparatedSeries") -> dict:
        return {"trunc_t": min(self.trunc_t, other.trunc_t), "degree": min(self.degree, other.degree),
                "exact": self.exact and other.exact}

    # ring operations ----------------------------------------------------
    def __add__(self, other: "SeparatedSeries | int") -> "SeparatedSeries":
        if isinstance(other, int):
            other = SeparatedSeries.constant(other, self.m, self.n, trunc_t=self.trunc_t, degree=self.degree)
        self._check(other)
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = t_add(out.get(e, ()), c)
        return SeparatedSeries._trusted(self.m, self.n, out, names=self.names, **self._meet(other))

    __radd__ = __add__

    def __neg__(self) -> "SeparatedSeries":
        return self._like({e: t_neg(c) for e, c in self.coeffs.items()})

    def __sub__(self, other: "SeparatedSeries | int") -> "SeparatedSeries":
        return self + (-other if isinstance(other, SeparatedSeries) else -other)

    def __rsub__(self, other: int) -> "SeparatedSeries":
        return (-self) + other

    def __mul__(self, other: "SeparatedSeries | int") -> "SeparatedSeries":
        if isinstance(other, int):
            return self._like({e: tuple(other * x for x in c) for e, c in self.coeffs.items()})
        self._check(other)
        meet = self._meet(other)
        cap = meet["trunc_t"]
        D = meet["degree"]
        m = self.m
        if not self.coeffs or not other.coeffs:
            return SeparatedSeries(self.m, self.n, {}, names=self.names, **meet)
        # Kronecker substitution: t -> 2^B turns each coefficient product into
        # one integer product; B leaves room for every signed sum below.
        big = max(abs(x) for c in self.coeffs.values() for x in c)
        big *= max(abs(x) for c in other.coeffs.values() for x in c)
        B = (big * cap * len(self.coeffs) * len(other.coeffs)).bit_length() + 2
        # exponents are encoded base W, wide enough that sums never carry
        W = max(max(e, default=0) for e in self.coeffs) + max(max(e, default=0) for e in other.coeffs) + 1
        nv = m + self.n

        def encode(e):
            return sum(x * W**i for i, x in enumerate(e))

        left = [(encode(e), e[m:], _pack(c[:cap], B)) for e, c in self.coeffs.items()]
        right = [(encode(e), e[m:], _pack(c[:cap], B)) for e, c in other.coeffs.items()]
        acc: dict[int, int] = {}
        for e1, r1, k1 in left:
            for e2, r2, k2 in right:
                if r1 and any(a + b > D for a, b in zip(r1, r2)):
                    continue
                e = e1 + e2
                acc[e] = acc.get(e, 0) + k1 * k2

        def decode(e):
            out = []
            for _ in range(nv):
                e, x = divmod(e, W)
                out.append(x)
            return tuple(out)

        return SeparatedSeries._trusted(self.m, self.n, {decode(e): _unpack(k, B, cap) for e, k in acc.items()},
                                        names=self.names, **meet)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "SeparatedSeries":
        if k < 0:
            raise ValueError("negative powers need unit_inverse")
        r = SeparatedSeries.constant(1, self.m, self.n, trunc_t=self.trunc_t, degree=self.degree, names=self.names)
        base = self
        while k:
            if k & 1:
                r = r * base
            base = base * base
            k >>= 1
        return r

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SeparatedSeries):
            return NotImplemented
        return (self.m, self.n, self.coeffs) == (other.m, other.n, other.coeffs)

    def __hash__(self) -> int:
        return hash((self.m, self.n, tuple(self.coeffs.items())))

    def equal_at_truncation(self, other: "SeparatedSeries") -> bool:
        return (self - other).is_zero()

    # filtrations ----------------------------------------------------------
    def order(self) -> int | float:
        """(t, rho)-adic order: least t-degree plus rho-degree of a term."""
        m = self.m
        return min((t_val(c) + sum(e[m:]) for e, c in self.coeffs.items()), default=INF)

    def reduction(self, keep_rho: Iterable[int] = ()) -> dict[tuple, int]:
        """The image modulo t and the rho variables not in ``keep_rho``."""
        keep = set(keep_rho)
        out = {}
        for e, c in self.coeffs.items():
            if c[0] and all(e[self.m + j] == 0 for j in range(self.n) if j not in keep):
                out[e] = c[0]
        return out

    def is_unit(self) -> bool:
        red = self.reduction()
        return list(red) == [(0,) * self.nvars] and abs(red[(0,) * self.nvars]) == 1

    def unit_inverse(self) -> "SeparatedSeries":
        """Inverse of a unit c(1 + e), e in (t, rho), by the geometric series."""
        if not self.is_unit():
            raise NotRegular("not a unit: its reduction is not a constant +-1")
        c = self.reduction()[(0,) * self.nvars]
        e = self * c - 1
        one = SeparatedSeries.constant(1, self.m, self.n, trunc_t=self.trunc_t, degree=self.degree, names=self.names)
        total = one
        term = one
        bound = self.trunc_t + self.n * (self.degree + 1) + 1
        for _ in range(bound):
            term = term * (-e)
            if term.is_zero():
                break
            total = total + term
        else:
            if not term.is_zero():
                raise TruncationTooSmall("unit inverse did not stabilize")
        total = total * c
        total.exact = self.exact
        return total

    # presentation ------------------------------------------------------------
    def integrand(self) -> dict[tuple, tuple]:
        return dict(self.coeffs)

    def __str__(self) -> str:
        s = format_integrand(self.coeffs, self.names) if self.coeffs else "0"
        return s if self.exact else f"{s} + O(t^{self.trunc_t})"

    def __repr__(self) -> str:
        return f"SeparatedSeries({self})"

    def to_json(self) -> dict:
        return {
            "m": self.m, "n": self.n, "names": list(self.names), "t_order": self.trunc_t,
            "degree": self.degree, "exact": self.exact,
            "terms": [{"exponents": list(e), "coefficient": list(c)} for e, c in self.coeffs.items()],
        }

    def eval(self, point: Sequence[PAdicNumber | int | Fraction], ctx: PAdicContext) -> PAdicNumber:
        return eval_series(self, point, ctx)


def parse_series(src: str, names: Sequence[str] | None = None, trunc_t: int = DEFAULT_T_ORDER,
                 degree: int = DEFAULT_DEGREE) -> SeparatedSeries:
    """Series literal; see dplang.parse_series_literal for the syntax."""
    from .dplang import parse_series_literal

    g, closed, opened, order = parse_series_literal(src, names)
    exact = order is None
    M = trunc_t if order is None else order
    return SeparatedSeries(len(closed), len(opened), g, M, degree, exact, closed + opened)


# -- evaluation ----------------------------------------------------------------------

def _cap(x: PAdicNumber, N: int | float) -> PAdicNumber:
    """x known only modulo p^N."""
    if N == INF or (x.valuation != INF and x.absolute_precision <= N):
        return x
    if x.valuation == INF or x.valuation >= N:
        return PAdicNumber.indeterminate_zero(x.p, N)
    k = N - x.valuation
    return PAdicNumber(x.p, x.valuation, x.unit % x.p**k, k)


def eval_series(f: SeparatedSeries, point: Sequence[PAdicNumber | int | Fraction], ctx: PAdicContext) -> PAdicNumber:
    """Value of f at a point, with t specialized to p.

    Points outside the domain (ord < 0 in a closed-disc slot, ord <= 0 in
    an open-disc slot) give exact 0.  The precision of the value accounts
    for the discarded tail of an inexact series."""
    p = ctx.p
    if len(point) != f.nvars:
        raise ValueError("point has the wrong dimension")
    pts = [ctx(x) for x in point]
    for i, x in enumerate(pts):
        if not x.is_known():
            raise InsufficientPrecision("coordinate with no trusted digits")
        v = x.valuation
        if (i < f.m and v < 0) or (i >= f.m and v <= 0):
            return ctx.zero()
    total = ctx.zero()
    for e, c in f.coeffs.items():
        coeff = sum(a * p**k for k, a in enumerate(c))
        term = ctx(coeff)
        for x, k in zip(pts, e):
            if k:
                term = term * x**k
        total = total + term
    if f.exact:
        return total
    bound = f.trunc_t
    if f.n:
        rho_ord = min(pts[f.m + j].valuation for j in range(f.n))
        bound = min(bound, (f.degree + 1) * rho_ord)
    return _cap(total, bound)


# -- composition ------------------------------------------------------------------------

def compose(f: SeparatedSeries, alphas: Sequence[SeparatedSeries], betas: Sequence[SeparatedSeries]) -> SeparatedSeries:
    """f(alpha, beta): the closed-disc slots of f receive ``alphas`` and the
    open-disc slots receive ``betas``.  Each beta must lie in the ideal
    generated by t and the open-disc variables."""
    if len(alphas) != f.m or len(betas) != f.n:
        raise ValueError("wrong number of substitutions")
    subs = list(alphas) + list(betas)
    if not subs:
        return f
    ref = subs[0]
    for s in subs:
        ref._check(s)
    for j, b in enumerate(betas):
        if b.order() < 1:
            raise CompositionDomain(f"substitution {j} for an open-disc variable has a unit part")
        if any(e[: b.m] != (0,) * b.m and t_val(c) == 0 and sum(e[b.m:]) == 0 for e, c in b.coeffs.items()):
            raise CompositionDomain(f"substitution {j} for an open-disc variable has a closed-disc term")
    kw = {"trunc_t": min([f.trunc_t] + [s.trunc_t for s in subs]),
          "degree": min([f.degree] + [s.degree for s in subs]), "names": ref.names}
    one = SeparatedSeries.constant(1, ref.m, ref.n, **kw)
    total = SeparatedSeries(ref.m, ref.n, {}, **kw)
    powers: list[dict[int, SeparatedSeries]] = [{0: one} for _ in subs]

    def pw(i: int, k: int) -> SeparatedSeries:
        if k not in powers[i]:
            powers[i][k] = pw(i, k - 1) * subs[i]
        return powers[i][k]

    for e, c in f.coeffs.items():
        term = SeparatedSeries.constant(c, ref.m, ref.n, **kw)
        for i, k in enumerate(e):
            if k:
                term = term * pw(i, k)
        total = total + term
    total.exact = f.exact and all(s.exact for s in subs) and total.exact
    return total


# -- regularity ----------------------------------------------------------------------------

def _default_var(f: SeparatedSeries) -> int:
    return f.m - 1 if f.m else f.m + f.n - 1


def _check_var(f: SeparatedSeries, var: int) -> None:
    if var not in (f.m - 1, f.m + f.n - 1) or var < 0:
        raise ValueError("regularity is taken in the last closed-disc or the last open-disc variable")


def regular_degree(f: SeparatedSeries, var: int | None = None) -> int | None:
    """The d for which f is regular in ``var``, or None."""
    var = _default_var(f) if var is None else var
    _check_var(f, var)
    if var < f.m:
        red = f.reduction()
        if not red:
            return None
        d = max(e[var] for e in red)
        top = {e: c for e, c in red.items() if e[var] == d}
        unit_top = list(top) == [tuple(d if i == var else 0 for i in range(f.nvars))]
        return d if unit_top and abs(next(iter(top.values()))) == 1 else None
    j = var - f.m
    red = f.reduction(keep_rho=[j])
    if not red:
        return None
    d = min(e[var] for e in red)
    low = {e: c for e, c in red.items() if e[var] == d}
    base = tuple(d if i == var else 0 for i in range(f.nvars))
    return d if list(low) == [base] and abs(low[base]) == 1 else None


def is_regular(f: SeparatedSeries, var: int | None = None, d: int | None = None) -> bool:
    """Regular of degree d in ``var``: monic of degree d modulo t and the
    open-disc variables (closed-disc case), or rho^d times a unit modulo t
    and the other open-disc variables (open-disc case)."""
    if f.is_zero():
        raise ZeroSeries("the zero series is not regular")
    r = regular_degree(f, var)
    return r is not None and (d is None or r == d)


# -- Weierstrass division ----------------------------------------------------------------------

def _split_by_degree(f: SeparatedSeries, var: int, d: int) -> tuple[dict, dict]:
    hi, lo = {}, {}
    for e, c in f.coeffs.items():
        (hi if e[var] >= d else lo)[e] = c
    return hi, lo


def _euclid(g: SeparatedSeries, mono: dict[tuple, int], var: int, d: int) -> tuple[dict, dict]:
    """Euclidean division of g by a polynomial with leading term +-var^d and
    integer coefficients (no t, no rho)."""
    lead_e = tuple(d if i == var else 0 for i in range(g.nvars))
    lead = mono[lead_e]
    rest = {e: c for e, c in mono.items() if e != lead_e}
    work = dict(g.coeffs)
    q: dict[tuple, tuple] = {}
    while True:
        tops = [e for e in work if e[var] >= d]
        if not tops:
            break
        e = max(tops, key=lambda x: (x[var], x))
        c = work.pop(e)
        qe = tuple(x - d if i == var else x for i, x in enumerate(e))
        qc = tuple(lead * x for x in c)  # lead = +-1 is its own inverse
        q[qe] = t_add(q.get(qe, ()), qc)
        for re_, rc in rest.items():
            ne = tuple(a + b for a, b in zip(qe, re_))
            work[ne] = t_add(work.get(ne, ()), tuple(-rc * x for x in qc))
            if not work[ne]:
                del work[ne]
    return q, work


def w_divide(g: SeparatedSeries, f: SeparatedSeries, var: int | None = None, d: int | None = None
             ) -> tuple[SeparatedSeries, SeparatedSeries]:
    """(q, r) with g = q*f + r at the truncation and deg_var r < d."""
    if f.is_zero():
        raise ZeroSeries("division by the zero series")
    var = _default_var(f) if var is None else var
    rd = regular_degree(f, var)
    if rd is None or (d is not None and rd != d):
        raise NotRegular(f"not regular of degree {d} in variable {var}")
    d = rd
    g._check(f)
    kw = {"trunc_t": min(g.trunc_t, f.trunc_t), "degree": min(g.degree, f.degree), "names": f.names}
    q = SeparatedSeries(f.m, f.n, {}, **kw)
    r = SeparatedSeries(f.m, f.n, {}, **kw)
    bound = kw["trunc_t"] + f.n * (kw["degree"] + 1) + 2
    work = SeparatedSeries(g.m, g.n, g.coeffs, **kw)
    if var < f.m:
        lead = {e: c[0] for e, c in f.coeffs.items() if c[0] and sum(e[f.m:]) == 0}
        h = f - f._like({e: (c,) for e, c in lead.items()})
        for _ in range(bound):
            if work.is_zero():
                break
            qk, rk = _euclid(work, lead, var, d)
            qs = work._like(qk)
            q = q + qs
            r = r + work._like(rk)
            work = -(qs * h)
        else:
            if not work.is_zero():
                raise TruncationTooSmall("division did not stabilize within the truncation")
    else:
        hi, lo = _split_by_degree(f, var, d)
        G = f._like({tuple(x - d if i == var else x for i, x in enumerate(e)): c for e, c in hi.items()})
        Ginv = G.unit_inverse()
        F_low = f._like(lo)
        for _ in range(bound):
            if work.is_zero():
                break
            hi_g, lo_g = _split_by_degree(work, var, d)
            A = work._like({tuple(x - d if i == var else x for i, x in enumerate(e)): c for e, c in hi_g.items()})
            qk = A * Ginv
            q = q + qk
            r = r + work._like(lo_g)
            work = -(qk * F_low)
        else:
            if not work.is_zero():
                raise TruncationTooSmall("division did not stabilize within the truncation")
    exact = g.exact and f.exact
    q.exact = exact and q.exact
    r.exact = exact and r.exact
    return q, r


@dataclass
class Preparation:
    """f = u * P with u a unit and P monic of degree d in ``var``."""

    unit: SeparatedSeries
    poly: SeparatedSeries
    var: int
    degree: int
    certified_order: int | None  # T-degrees below this are certified (inexact input)

    def polynomial_integrand(self) -> dict[tuple, tuple]:
        """P as an integrand over Z_p^(m+n): open-disc variables are
        rescaled rho = t * rho' (the caller accounts for the factor q^-n)."""
        P = self.poly
        out: dict[tuple, tuple] = {}
        for e, c in P.coeffs.items():
            shift = sum(e[P.m:])
            out[e] = t_trim((0,) * shift + tuple(c))
        return out


def w_prepare(f: SeparatedSeries, var: int | None = None) -> Preparation:
    """Weierstrass preparation f = u * P."""
    if f.is_zero():
        raise ZeroSeries("the zero series has no preparation")
    var = _default_var(f) if var is None else var
    d = regular_degree(f, var)
    if d is None:
        raise NotRegular(f"not regular in variable {var}")
    e = tuple(d if i == var else 0 for i in range(f.nvars))
    target = f._like({e: (1,)}, exact=True)
    q, r = w_divide(target, f, var, d)
    P = target - r
    u = q.unit_inverse()
    P.exact = f.exact
    u.exact = f.exact
    return Preparation(u, P, var, d, None if f.exact else f.trunc_t)


# -- dominant terms --------------------------------------------------------------------

@dataclass
class DominantTerm:
    index: tuple  # exponents of the extracted variables
    coefficient: SeparatedSeries  # in the kept variables (as a series in all variables)
    unit: SeparatedSeries


def _monomial_divide(F: SeparatedSeries, c: SeparatedSeries) -> SeparatedSeries | None:
    """F / c when c is a single term +-t^a x^b dividing every term of F."""
    if len(c.coeffs) != 1:
        return None
    (ce, cc), = c.coeffs.items()
    a = t_val(cc)
    if cc[a] not in (1, -1) or len(cc) != a + 1:
        return None
    out = {}
    for e, v in F.coeffs.items():
        if any(x < y for x, y in zip(e, ce)) or t_val(v) < a:
            return None
        out[tuple(x - y for x, y in zip(e, ce))] = tuple(cc[a] * x for x in v[a:])
    return F._like(out)


def dominant_terms(F: SeparatedSeries, extracted: Sequence[int]) -> list[DominantTerm]:
    """F = sum f_k z^k G_k over finitely many indices k of the extracted
    variables z, with units G_k.  A coefficient is absorbed into an earlier
    index when the quotient times the monomial ratio is small (lies in the
    ideal of t and the open-disc variables)."""
    if F.is_zero():
        raise ZeroSeries("the zero series has no dominant terms")
    ext = list(extracted)
    keep = [i for i in range(F.nvars) if i not in ext]
    parts: dict[tuple, dict] = {}
    for e, c in F.coeffs.items():
        k = tuple(e[i] for i in ext)
        rest = tuple(0 if i in ext else x for i, x in enumerate(e))
        parts.setdefault(k, {})[rest] = c
    order = sorted(parts, key=lambda k: (sum(k), k))
    chosen: list[tuple] = []
    coeff: dict[tuple, SeparatedSeries] = {}
    units: dict[tuple, SeparatedSeries] = {}
    one = F._like({(0,) * F.nvars: (1,)}, exact=True)

    def mono(k: tuple) -> SeparatedSeries:
        e = [0] * F.nvars
        for i, x in zip(ext, k):
            e[i] = x
        return F._like({tuple(e): (1,)}, exact=True)

    for k in order:
        Fk = F._like(parts[k])
        absorbed = False
        for kk in chosen:
            if any(a < b for a, b in zip(k, kk)):
                continue
            base = coeff[kk]
            Q = base.unit_inverse() * Fk if base.is_unit() else _monomial_divide(Fk, base)
            if Q is None:
                continue
            delta = tuple(a - b for a, b in zip(k, kk))
            term = Q * mono(delta)
            if term.order() >= 1 or any(delta[j] for j, i in enumerate(ext) if i >= F.m):
                units[kk] = units[kk] + term
                absorbed = True
                break
        if not absorbed:
            chosen.append(k)
            coeff[k] = Fk
            units[k] = one
    out = []
    for k in chosen:
        if not units[k].is_unit():
            raise ZeroSeries(f"index {k} did not produce a unit")
        out.append(DominantTerm(k, coeff[k], units[k]))
    return out


# -- preregularization --------------------------------------------------------------------

def preregularize(f: SeparatedSeries, max_c: int = 64) -> tuple[list[SeparatedSeries], int]:
    """A change of variables xi_i -> xi_i + xi_m^(c^(m-i)) (i < m) making f
    regular in the last closed-disc variable; returns the substitution list
    and the degree.  The smallest working c is used."""
    if f.is_zero():
        raise ZeroSeries("the zero series cannot be regularized")
    if f.n:
        raise ValueError("preregularization acts on closed-disc variables only")
    m = f.m
    ident = [SeparatedSeries.variable(i, m, 0, trunc_t=f.trunc_t, degree=f.degree, names=f.names) for i in range(m)]
    d = regular_degree(f, m - 1)
    if d is not None:
        return ident, d
    if not f.reduction():
        raise NotRegular("every coefficient is divisible by t; divide out the t-content first")
    for c in range(1, max_c + 1):
        phi = []
        for i in range(m):
            if i == m - 1:
                phi.append(ident[i])
            else:
                e = [0] * m
                e[m - 1] = c ** (m - 1 - i)
                phi.append(ident[i] + SeparatedSeries(m, 0, {tuple(e): (1,)}, f.trunc_t, f.degree, True, f.names))
        g = compose(f, phi, [])
        d = regular_degree(g, m - 1)
        if d is not None:
            return phi, d
    raise NotRegular("no polynomial change of variables found; the leading coefficient is not a unit")


def t_content(f: SeparatedSeries) -> int:
    """Largest k with t^k dividing every coefficient."""
    return min((t_val(c) for c in f.coeffs.values()), default=0)


def divide_t_power(f: SeparatedSeries, k: int) -> SeparatedSeries:
    out = {e: tuple(c[k:]) for e, c in f.coeffs.items()}
    return SeparatedSeries(f.m, f.n, out, max(1, f.trunc_t - k), f.degree, f.exact, f.names)
