"""Sparse multivariate polynomials whose coefficients lie in Z[t].

An integrand is a dict mapping exponent tuples to coefficient tuples
``(c0, c1, ...)`` meaning ``c0 + c1 t + ...``; ``t`` stands for the
uniformizer.  In the fixed-prime model ``t`` is specialised to ``p``; in
the equal-characteristic model coefficients are reduced modulo ``p``.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product
from math import comb
from typing import Callable, Iterable, Mapping, Sequence

TPoly = tuple  # coefficients in t, lowest degree first, trimmed
MPoly = dict  # exponent tuple -> coefficient


# -- univariate Z[t] / F_p[t] coefficient arithmetic ------------------------

def t_trim(c: Sequence[int], mod: int | None = None) -> TPoly:
    lst = [x % mod for x in c] if mod else list(c)
    while lst and lst[-1] == 0:
        lst.pop()
    return tuple(lst)


def t_add(a: TPoly, b: TPoly, mod: int | None = None) -> TPoly:
    n = max(len(a), len(b))
    return t_trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)], mod)


def t_neg(a: TPoly, mod: int | None = None) -> TPoly:
    return t_trim([-x for x in a], mod)


def t_mul(a: TPoly, b: TPoly, mod: int | None = None, cap: int | None = None) -> TPoly:
    if not a or not b:
        return ()
    n = len(a) + len(b) - 1
    if cap is not None:
        n = min(n, cap)
    out = [0] * n
    for i, x in enumerate(a):
        if x and i < n:
            for j, y in enumerate(b):
                if i + j >= n:
                    break
                out[i + j] += x * y
    return t_trim(out, mod)


def t_scale(a: TPoly, k: int, mod: int | None = None) -> TPoly:
    return t_trim([k * x for x in a], mod)


def t_val(a: TPoly) -> int | float:
    for i, x in enumerate(a):
        if x:
            return i
    return float("inf")


def t_shift(a: TPoly, k: int) -> TPoly:
    """Multiply by t^k (k may be negative when the low terms vanish)."""
    if k >= 0:
        return (0,) * k + tuple(a) if a else ()
    assert all(x == 0 for x in a[:-k])
    return tuple(a[-k:])


def t_eval(a: TPoly, x: int) -> int:
    r = 0
    for c in reversed(a):
        r = r * x + c
    return r


# -- multivariate helpers --------------------------------------------------

def nvars(f: Mapping) -> int:
    for e in f:
        return len(e)
    return 0


def specialize(f: Mapping[tuple, TPoly], p: int) -> dict[tuple, int]:
    """Integer polynomial obtained by t -> p."""
    out: dict[tuple, int] = {}
    for e, c in f.items():
        v = t_eval(c, p)
        if v:
            out[e] = v
    return out


def reduce_equichar(f: Mapping[tuple, TPoly], p: int) -> dict[tuple, TPoly]:
    out = {}
    for e, c in f.items():
        r = t_trim(c, p)
        if r:
            out[e] = r
    return out


def const_poly(n: int, c: int = 1) -> dict[tuple, TPoly]:
    return {(0,) * n: (c,)} if c else {}


def degree(f: Mapping) -> int:
    return max((sum(e) for e in f), default=0)


def eval_int(f: Mapping[tuple, int], x: Sequence[int]) -> int:
    total = 0
    for e, c in f.items():
        term = c
        for xi, k in zip(x, e):
            if k:
                term *= xi**k
        total += term
    return total


def eval_mod(f: Mapping[tuple, int], x: Sequence[int], m: int) -> int:
    total = 0
    for e, c in f.items():
        term = c
        for xi, k in zip(x, e):
            if k:
                term = term * pow(xi, k, m) % m
        total += term
    return total % m


def eval_frac(f: Mapping[tuple, int], x: Sequence[Fraction]) -> Fraction:
    total = Fraction(0)
    for e, c in f.items():
        term = Fraction(c)
        for xi, k in zip(x, e):
            if k:
                term *= Fraction(xi) ** k
        total += term
    return total


def partial(f: Mapping[tuple, int], i: int) -> dict[tuple, int]:
    out = {}
    for e, c in f.items():
        if e[i]:
            ne = list(e)
            ne[i] -= 1
            out[tuple(ne)] = out.get(tuple(ne), 0) + c * e[i]
    return {e: c for e, c in out.items() if c}


def mul_int(f: Mapping[tuple, int], g: Mapping[tuple, int]) -> dict[tuple, int]:
    out: dict[tuple, int] = {}
    for e1, c1 in f.items():
        for e2, c2 in g.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0) + c1 * c2
    return {e: c for e, c in out.items() if c}


def poly_key(f: Mapping) -> tuple:
    return tuple(sorted(f.items()))


def format_int_poly(f: Mapping[tuple, int], names: Sequence[str]) -> str:
    if not f:
        return "0"
    parts = []
    for e in sorted(f, key=lambda e: (-sum(e), tuple(-x for x in e))):
        c = f[e]
        mono = "*".join(n if k == 1 else f"{n}^{k}" for n, k in zip(names, e) if k)
        if not mono:
            s = str(abs(c))
        elif abs(c) == 1:
            s = mono
        else:
            s = f"{abs(c)}*{mono}"
        parts.append(("- " if c < 0 else "+ ") + s)
    out = " ".join(parts)
    return out[2:] if out.startswith("+ ") else "-" + out[2:]


def _signed_join(parts: Sequence[tuple[int, str]]) -> str:
    """Join (sign, text) pairs as 'a - b + c'."""
    if not parts:
        return "0"
    out = ("-" if parts[0][0] < 0 else "") + parts[0][1]
    for sign, txt in parts[1:]:
        out += (" - " if sign < 0 else " + ") + txt
    return out


def _tpoly_terms(c: TPoly, tname: str) -> list[tuple[int, str]]:
    terms = []
    for i, x in enumerate(c):
        if x:
            mono = "" if i == 0 else (tname if i == 1 else f"{tname}^{i}")
            a = abs(x)
            terms.append((x, mono if mono and a == 1 else (f"{a}*{mono}" if mono else str(a))))
    return terms


def format_tpoly(c: TPoly, tname: str = "t") -> str:
    return _signed_join(_tpoly_terms(c, tname))


def format_integrand(f: Mapping[tuple, TPoly], names: Sequence[str], tname: str = "t") -> str:
    if not f:
        return "0"
    parts = []
    for e in sorted(f, key=lambda e: (-sum(e), tuple(-x for x in e))):
        c = f[e]
        mono = "*".join(n if k == 1 else f"{n}^{k}" for n, k in zip(names, e) if k)
        terms = _tpoly_terms(c, tname)
        if len(terms) > 1:
            cs = f"({_signed_join(terms)})"
            parts.append((1, f"{cs}*{mono}" if mono else cs))
            continue
        sign, cs = terms[0]
        if not mono:
            parts.append((sign, cs))
        elif cs == "1":
            parts.append((sign, mono))
        else:
            parts.append((sign, f"{cs}*{mono}"))
    return _signed_join(parts)
