"""The ring generated by residue-formula classes, L = [A^1], L^-1, T^(+-1)
and the inverses 1/(1 - L^b T^a) with a >= 0, b < 0; plus the counting
morphisms that send T to q^-s, L to q and a formula to its number of
F_q-points.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping, Sequence, Union

import sympy

from .errors import NotInRing, TooManyVariables
from .polys import eval_mod, format_int_poly

MAX_FORMULA_VARS = 4


# -- residue formulas -------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    poly: tuple  # sorted ((exps), coeff) pairs, integer coefficients
    op: str  # "=" or "!="

    def holds(self, x: Sequence[int], q: int) -> bool:
        v = eval_mod(dict(self.poly), x, q)
        return (v == 0) if self.op == "=" else (v != 0)


@dataclass(frozen=True)
class Conn:
    op: str  # "and", "or", "not", "true", "false"
    args: tuple = ()

    def holds(self, x: Sequence[int], q: int) -> bool:
        if self.op == "true":
            return True
        if self.op == "false":
            return False
        if self.op == "not":
            return not self.args[0].holds(x, q)
        if self.op == "and":
            return all(a.holds(x, q) for a in self.args)
        return any(a.holds(x, q) for a in self.args)


Formula = Union[Atom, Conn]


def atom(poly: Mapping[tuple, int], op: str = "=") -> Formula:
    """Atom poly = 0 or poly != 0; constants 0 and +-1 fold to true/false."""
    terms = tuple(sorted((e, c) for e, c in poly.items() if c))
    if all(sum(e) == 0 for e, _ in terms):
        c = sum(c for _, c in terms)
        if c == 0 or abs(c) == 1:
            return Conn("true") if (c == 0) == (op == "=") else Conn("false")
    return Atom(terms, op)


def conj(*args: Formula) -> Formula:
    flat: list[Formula] = []
    for a in args:
        if isinstance(a, Conn) and a.op == "and":
            flat.extend(a.args)
        elif isinstance(a, Conn) and a.op == "true":
            continue
        elif isinstance(a, Conn) and a.op == "false":
            return a
        else:
            flat.append(a)
    if not flat:
        return Conn("true")
    if len(flat) == 1:
        return flat[0]
    uniq = sorted(set(flat), key=_formula_str_plain)
    return Conn("and", tuple(uniq))


def disj(*args: Formula) -> Formula:
    flat = []
    for a in args:
        if isinstance(a, Conn) and a.op == "or":
            flat.extend(a.args)
        elif isinstance(a, Conn) and a.op == "false":
            continue
        elif isinstance(a, Conn) and a.op == "true":
            return a
        else:
            flat.append(a)
    if not flat:
        return Conn("false")
    if len(flat) == 1:
        return flat[0]
    return Conn("or", tuple(sorted(set(flat), key=_formula_str_plain)))


def neg(a: Formula) -> Formula:
    if isinstance(a, Atom):
        return Atom(a.poly, "!=" if a.op == "=" else "=")
    if a.op in ("true", "false"):
        return Conn("false" if a.op == "true" else "true")
    if a.op == "not":
        return a.args[0]
    return Conn("not", (a,))


def _formula_str_plain(f: Formula, names: Sequence[str] | None = None) -> str:
    if isinstance(f, Atom):
        n = len(f.poly[0][0]) if f.poly else 0
        nm = names or [f"x{i + 1}" for i in range(n)]
        return f"{format_int_poly(dict(f.poly), nm)} {f.op} 0"
    if f.op in ("true", "false"):
        return f.op
    if f.op == "not":
        return f"not ({_formula_str_plain(f.args[0], names)})"
    sep = f" {f.op} "
    return sep.join(f"({_formula_str_plain(a, names)})" if isinstance(a, Conn) else _formula_str_plain(a, names) for a in f.args)


class ResidueFormulaClass:
    """Class of a ring-language formula in ``nvars`` free variables.

    Two classes are identified only when their normalised text agrees."""

    def __init__(self, formula: Formula, nvars: int, names: Sequence[str] | None = None):
        if nvars > MAX_FORMULA_VARS:
            raise TooManyVariables(f"{nvars} free variables; at most {MAX_FORMULA_VARS} are counted")
        self.formula = formula
        self.nvars = nvars
        self.names = tuple(names) if names else tuple(f"x{i + 1}" for i in range(nvars))
        self._counts: dict[int, int] = {}

    @classmethod
    def affine_space(cls, n: int) -> "ResidueFormulaClass":
        return cls(Conn("true"), n)

    @classmethod
    def from_text(cls, src: str, variables: Sequence[str]) -> "ResidueFormulaClass":
        from .dplang import parse_ring_formula

        return cls(parse_ring_formula(src, variables), len(variables), variables)

    @property
    def key(self) -> str:
        return f"{self.nvars}|{_formula_str_plain(self.formula)}"

    def is_affine_space(self) -> bool:
        return isinstance(self.formula, Conn) and self.formula.op == "true"

    def count(self, q: int) -> int:
        if q not in self._counts:
            if not sympy.isprime(q):
                raise ValueError("counting is implemented over prime fields only")
            if self.is_affine_space():
                self._counts[q] = q**self.nvars
            else:
                self._counts[q] = sum(1 for x in product(range(q), repeat=self.nvars) if self.formula.holds(x, q))
        return self._counts[q]

    def __str__(self) -> str:
        return "[" + _formula_str_plain(self.formula, self.names) + "]"

    def __repr__(self) -> str:
        return f"ResidueFormulaClass({self})"

    def to_json(self) -> dict:
        return {"nvars": self.nvars, "formula": _formula_str_plain(self.formula, self.names)}


# -- ring elements ----------------------------------------------------------

TermKey = tuple  # (class-key tuple, eL, eT)


def _in_j(a: int, b: int) -> bool:
    return a >= 0 and b < 0


def _check_den(a: int, b: int) -> None:
    if not (a >= 0 and b < 0):
        raise NotInRing(f"denominator 1 - L^{b} T^{a} outside a >= 0, b < 0", (a, b))


class MotElem:
    """sum_k c_k [phi_k] L^eL T^eT / prod (1 - L^b T^a)^m.

    Stored with one common denominator; ``simplify`` cancels every
    denominator factor that divides the numerator exactly."""

    __slots__ = ("num", "den", "classes")

    def __init__(self, num: Mapping[TermKey, Fraction] | None = None,
                 den: Mapping[tuple[int, int], int] | None = None,
                 classes: Mapping[str, ResidueFormulaClass] | None = None):
        self.num: dict[TermKey, Fraction] = {}
        for k, c in (num or {}).items():
            if c:
                self.num[k] = self.num.get(k, Fraction(0)) + Fraction(c)
        self.num = {k: c for k, c in self.num.items() if c}
        self.den: Counter = Counter({k: v for k, v in (den or {}).items() if v})
        self.classes: dict[str, ResidueFormulaClass] = dict(classes or {})

    # constructors
    @classmethod
    def const(cls, c: Fraction | int) -> "MotElem":
        return cls({((), 0, 0): Fraction(c)})

    @classmethod
    def zero(cls) -> "MotElem":
        return cls()

    @classmethod
    def one(cls) -> "MotElem":
        return cls.const(1)

    @classmethod
    def monomial(cls, c: Fraction | int = 1, eL: int = 0, eT: int = 0) -> "MotElem":
        return cls({((), eL, eT): Fraction(c)})

    @classmethod
    def L(cls, k: int = 1) -> "MotElem":
        return cls.monomial(1, k, 0)

    @classmethod
    def T(cls, k: int = 1) -> "MotElem":
        return cls.monomial(1, 0, k)

    @classmethod
    def klass(cls, phi: ResidueFormulaClass, c: Fraction | int = 1) -> "MotElem":
        if phi.is_affine_space():
            return cls.monomial(c, phi.nvars, 0)
        if isinstance(phi.formula, Conn) and phi.formula.op == "false":
            return cls.zero()
        return cls({((phi.key,), 0, 0): Fraction(c)}, classes={phi.key: phi})

    @classmethod
    def geometric(cls, a: int, b: int) -> "MotElem":
        """1 / (1 - L^b T^a)."""
        _check_den(a, b)
        return cls({((), 0, 0): Fraction(1)}, {(a, b): 1})

    @classmethod
    def raw_geometric(cls, a: int, b: int) -> "MotElem":
        """1 / (1 - y) for y = L^b T^a with any (a, b) != (0, 0).

        The factor is stored in a fixed orientation: the admissible one when
        y or 1/y is admissible, otherwise with a > 0.  Intermediate results
        of summations may carry such factors; ``ensure_ring`` checks that
        none survive."""
        if (a, b) == (0, 0):
            raise ZeroDivisionError("1 / (1 - 1)")
        if _in_j(a, b) or (not _in_j(-a, -b) and a > 0):
            return cls({((), 0, 0): Fraction(1)}, {(a, b): 1})
        return cls({((), -b, -a): Fraction(-1)}, {(-a, -b): 1})

    def in_ring(self) -> bool:
        return all(_in_j(a, b) for (a, b) in self.den)

    def ensure_ring(self) -> "MotElem":
        s = self.simplify()
        for (a, b) in s.den:
            _check_den(a, b)
        return s

    # ring operations
    def copy(self) -> "MotElem":
        return MotElem(self.num, self.den, self.classes)

    def _num_times_factor(self, a: int, b: int, k: int) -> dict[TermKey, Fraction]:
        num = dict(self.num)
        for _ in range(k):
            new: dict[TermKey, Fraction] = {}
            for (cl, eL, eT), c in num.items():
                new[(cl, eL, eT)] = new.get((cl, eL, eT), 0) + c
                key = (cl, eL + b, eT + a)
                new[key] = new.get(key, 0) - c
            num = {kk: v for kk, v in new.items() if v}
        return num

    def _lift_to(self, den: Counter) -> dict[TermKey, Fraction]:
        num = dict(self.num)
        tmp = MotElem(num, self.den, self.classes)
        for (a, b), k in den.items():
            extra = k - self.den.get((a, b), 0)
            if extra > 0:
                tmp = MotElem(tmp._num_times_factor(a, b, extra), {}, self.classes)
        return tmp.num

    def __add__(self, other: object) -> "MotElem":
        o = _coerce(other)
        if o is NotImplemented:
            return NotImplemented
        den = self.den | o.den
        n1 = self._lift_to(den)
        n2 = o._lift_to(den)
        for k, c in n2.items():
            n1[k] = n1.get(k, 0) + c
        cl = {**self.classes, **o.classes}
        return MotElem(n1, den, cl)

    __radd__ = __add__

    def __neg__(self) -> "MotElem":
        return MotElem({k: -c for k, c in self.num.items()}, self.den, self.classes)

    def __sub__(self, other: object) -> "MotElem":
        o = _coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other: object) -> "MotElem":
        o = _coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other: object) -> "MotElem":
        o = _coerce(other)
        if o is NotImplemented:
            return NotImplemented
        num: dict[TermKey, Fraction] = {}
        for (c1, l1, t1), a in self.num.items():
            for (c2, l2, t2), b in o.num.items():
                key = (tuple(sorted(c1 + c2)), l1 + l2, t1 + t2)
                num[key] = num.get(key, 0) + a * b
        return MotElem(num, self.den + o.den, {**self.classes, **o.classes})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "MotElem":
        if k < 0:
            raise ValueError("negative powers are not ring operations")
        r = MotElem.one()
        for _ in range(k):
            r = r * self
        return r

    def is_zero(self) -> bool:
        return not self.num

    # normal form
    def simplify(self) -> "MotElem":
        num = dict(self.num)
        den = Counter(self.den)
        changed = True
        while changed:
            changed = False
            for (a, b) in sorted(den):
                if den[(a, b)] == 0:
                    continue
                q = _divide_by_factor(num, a, b)
                if q is not None:
                    num = q
                    den[(a, b)] -= 1
                    if den[(a, b)] == 0:
                        del den[(a, b)]
                    changed = True
                    break
            if changed:
                continue
            # 1 - y^k = (1 - y)(1 + ... + y^(k-1)): cancel the second factor
            for (a, b) in sorted(den):
                for k in range(2, math.gcd(a, b) + 1):
                    if a % k or b % k:
                        continue
                    shifted = dict(num)
                    for (cl, eL, eT), c in num.items():
                        key = (cl, eL + b // k, eT + a // k)
                        shifted[key] = shifted.get(key, 0) - c
                    shifted = {key: c for key, c in shifted.items() if c}
                    q = _divide_by_factor(shifted, a, b)
                    if q is None:
                        continue
                    num = q
                    den[(a, b)] -= 1
                    if den[(a, b)] == 0:
                        del den[(a, b)]
                    den[(a // k, b // k)] += 1
                    changed = True
                    break
                if changed:
                    break
        used = {k for (cl, _, _) in num for k in cl}
        return MotElem(num, den, {k: v for k, v in self.classes.items() if k in used})

    def structural_key(self) -> tuple:
        s = self.simplify()
        return (tuple(sorted(s.num.items())), tuple(sorted(s.den.items())))

    def __eq__(self, other: object) -> bool:
        o = _coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return (self - o).simplify().is_zero()

    def __hash__(self) -> int:
        return hash(self.structural_key())

    # counting
    def _class_count(self, cl: tuple, q: int) -> int:
        v = 1
        for k in cl:
            v *= self.classes[k].count(q)
        return v

    def count_eval(self, q: int, s_value: Fraction | int | None = None):
        """Count_q: a ``RationalFunctionT`` when s is formal, else a Fraction."""
        num: dict[int, Fraction] = {}
        for (cl, eL, eT), c in self.num.items():
            num[eT] = num.get(eT, 0) + c * self._class_count(cl, q) * Fraction(q) ** eL
        rf = RationalFunctionT.from_parts(num, {(a, Fraction(q) ** b): k for (a, b), k in self.den.items()})
        if s_value is None:
            return rf
        return rf(_t_of_s(q, s_value))

    def series(self, q: int, J: int) -> list[Fraction]:
        """T-expansion coefficients 0..J at L = q."""
        return self.count_eval(q).series(J)

    # output
    def to_json(self) -> dict:
        s = self
        terms = []
        for (cl, eL, eT), c in sorted(s.num.items(), key=lambda kv: (kv[0][2], kv[0][1], kv[0][0])):
            terms.append({
                "coeff": [c.numerator, c.denominator],
                "classes": [str(s.classes[k]) for k in cl],
                "L": eL,
                "T": eT,
            })
        return {
            "numerator": terms,
            "denominator": [{"a": a, "b": b, "power": k} for (a, b), k in sorted(s.den.items())],
        }

    def to_json_str(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def __str__(self) -> str:
        return format_motelem(self)

    def __repr__(self) -> str:
        return f"MotElem({self})"


def _coerce(x: object) -> MotElem:
    if isinstance(x, MotElem):
        return x
    if isinstance(x, (int, Fraction)):
        return MotElem.const(x)
    return NotImplemented


def _t_of_s(q: int, s: Fraction | int) -> Fraction:
    s = Fraction(s)
    if s.denominator == 1:
        return Fraction(q) ** (-int(s))
    root = sympy.integer_nthroot(q ** abs(s.numerator), s.denominator)
    if not root[1]:
        raise ValueError("q^-s is irrational for this s")
    val = Fraction(int(root[0]))
    return 1 / val if s > 0 else val


def _divide_by_factor(num: Mapping[TermKey, Fraction], a: int, b: int) -> dict[TermKey, Fraction] | None:
    """num / (1 - L^b T^a) when exact, else None.

    Along each chain m * y^k (y = L^b T^a) the quotient's coefficients are
    the prefix sums of num's, so division is exact iff every chain sums to 0."""
    chains: dict[tuple, dict[int, Fraction]] = {}
    for (cl, eL, eT), c in num.items():
        if b != 0:
            r = eL % abs(b)
            k = (eL - r) // b
            base = (cl, r, eT - k * a)
        else:
            r = eT % abs(a)
            k = (eT - r) // a
            base = (cl, eL, r)
        chains.setdefault(base, {})[k] = c
    out: dict[TermKey, Fraction] = {}
    for (cl, l0, t0), coeffs in chains.items():
        if sum(coeffs.values()) != 0:
            return None
        ks = sorted(coeffs)
        acc = Fraction(0)
        for k in range(ks[0], ks[-1]):
            acc += coeffs.get(k, 0)
            if acc:
                out[(cl, l0 + k * b, t0 + k * a)] = acc
    return out


# -- rational functions in T with rational coefficients --------------------

@dataclass
class RationalFunctionT:
    """T^shift * N(T) / D(T) with N, D polynomials (degree 0 first)."""

    num: list[Fraction]
    den: list[Fraction]
    shift: int = 0

    @classmethod
    def from_parts(cls, num_terms: Mapping[int, Fraction], den_factors: Mapping[tuple[int, Fraction], int]) -> "RationalFunctionT":
        if not num_terms or all(v == 0 for v in num_terms.values()):
            return cls([], [Fraction(1)], 0)
        lo = min(k for k, v in num_terms.items() if v)
        hi = max(num_terms)
        num = [Fraction(num_terms.get(lo + i, 0)) for i in range(hi - lo + 1)]
        den = [Fraction(1)]
        for (a, c), k in den_factors.items():
            fac = [Fraction(0)] * (a + 1)
            fac[0] += 1
            fac[a] -= c
            for _ in range(k):
                den = _poly_mul(den, fac)
        return cls(num, den, lo)

    def is_zero(self) -> bool:
        return not any(self.num)

    def __call__(self, T: Fraction) -> Fraction:
        n = sum(c * T**i for i, c in enumerate(self.num))
        d = sum(c * T**i for i, c in enumerate(self.den))
        if d == 0:
            raise ZeroDivisionError("pole of the rational function")
        return Fraction(T) ** self.shift * n / d

    def series(self, J: int) -> list[Fraction]:
        """Coefficients of T^0..T^J; negative powers must vanish."""
        total = J + 1 - self.shift
        out = [Fraction(0)] * (J + 1)
        if total <= 0 or not self.num:
            return out
        d0 = self.den[0]
        if d0 == 0:
            raise ValueError("denominator vanishes at T = 0")
        inv = [Fraction(0)] * max(total, 1)
        inv[0] = 1 / d0
        for k in range(1, len(inv)):
            acc = Fraction(0)
            for i in range(1, min(k, len(self.den) - 1) + 1):
                acc += self.den[i] * inv[k - i]
            inv[k] = -acc / d0
        prod = [Fraction(0)] * max(total, 1)
        for i, c in enumerate(self.num):
            if c and i < len(prod):
                for j in range(len(prod) - i):
                    prod[i + j] += c * inv[j]
        for i, c in enumerate(prod):
            e = i + self.shift
            if e < 0:
                if c != 0:
                    raise ValueError("series has negative powers of T")
                continue
            if e <= J:
                out[e] = c
        return out

    def __str__(self) -> str:
        def fmt(p: list[Fraction]) -> str:
            terms = [f"{c}*T^{i}" if i else f"{c}" for i, c in enumerate(p) if c]
            return " + ".join(terms) or "0"
        pre = f"T^{self.shift} * " if self.shift else ""
        return f"{pre}({fmt(self.num)}) / ({fmt(self.den)})"


def _poly_mul(f: Sequence[Fraction], g: Sequence[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a:
            for j, b in enumerate(g):
                out[i + j] += a * b
    return out


# -- pretty printing ---------------------------------------------------------

def _mono(eL: int, eT: int) -> str:
    parts = []
    if eL:
        parts.append("q" if eL == 1 else f"q^{eL}")
    if eT:
        parts.append("T" if eT == 1 else f"T^{eT}")
    return " ".join(parts)


def _num_str(X: MotElem) -> tuple[str, int]:
    items = sorted(X.num.items(), key=lambda kv: (kv[0][2], -kv[0][1], kv[0][0]))
    pieces = []
    for (cl, eL, eT), c in items:
        mono = " ".join([str(X.classes[k]) for k in cl] + ([_mono(eL, eT)] if (eL or eT) else []))
        mag = abs(c)
        if mono:
            body = mono if mag == 1 else f"{mag} {mono}"
        else:
            body = str(mag)
        pieces.append(("-" if c < 0 else "+", body))
    if not pieces:
        return "0", 0
    s = ("-" if pieces[0][0] == "-" else "") + pieces[0][1]
    for sign, body in pieces[1:]:
        s += f" {sign} {body}"
    return s, len(pieces)


def format_motelem(X: MotElem) -> str:
    num, nterms = _num_str(X)
    if not X.den:
        return num
    dens = []
    for (a, b), k in sorted(X.den.items()):
        f = f"(1 - {_mono(b, a)})"
        dens.append(f if k == 1 else f"{f}^{k}")
    top = f"({num})" if nterms > 1 else num
    return f"{top} / {' '.join(dens) if len(dens) == 1 else '(' + ' '.join(dens) + ')'}"
