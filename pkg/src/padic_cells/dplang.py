"""Three-sorted valued-field language: parser, sort checker, evaluator,
pretty-printer and the quantifier-free normal form.

Sorts are ``Val`` (the field), ``Ord`` (the value group) and ``Res_k``
(residue rings mod p^k).  Integer literals carry the placeholder sort
``Int`` and take the sort of whatever they are combined with.

Concrete syntax::

    formula := disj
    disj    := conj ("or" conj)*
    conj    := unary ("and" unary)*
    unary   := "not" unary | ("exists" | "forall") NAME ":" SORT "." formula
             | "true" | "false" | "(" formula ")" | atom
    atom    := term REL term ["mod" INT]
    term    := prod (("+" | "-") prod)*
    prod    := neg (("*" | "/") neg)*
    neg     := "-" neg | power
    power   := primary ("^" ["-"] INT)?
    primary := INT | NAME | "t0" | "(" term ")" | FUNC "(" args ")"
             | S"name" "(" args ")"

with FUNC one of ``ord``, ``ac_k``, ``res_k``, ``root_{m,e}``,
``h_{m,e}``.  ``E``/``A`` are accepted for ``exists``/``forall``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any, Mapping, Sequence

from . import padic
from .errors import DPSyntaxError, SortError, UnsupportedFragment
from .padic import INF, PAdicContext, PAdicNumber
from .polys import t_add, t_mul, t_neg, t_trim

# -- AST --------------------------------------------------------------------


@dataclass(frozen=True)
class Term:
    op: str  # num var t0 add sub mul div neg pow ord ac res root hensel series
    args: tuple = ()
    sort: str = "Val"
    value: Any = None

    def __str__(self) -> str:
        return pretty_term(self)


@dataclass(frozen=True)
class Formula:
    op: str  # true false cmp cong and or not exists forall
    args: tuple = ()
    value: Any = None  # relation, modulus, or (variable, sort)

    def __str__(self) -> str:
        return pretty_formula(self)


# -- lexer ------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<series>S"[^"]*")
  | (?P<func>(?:ac|res)_\{?\d+\}?|(?:root|h)_\{\d+,\d+\})
  | (?P<int>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\*\*|<=|>=|!=|==|≠|≤|≥|≡|[-+*/^()=<>,.:])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"and", "or", "not", "true", "false", "mod", "exists", "forall", "E", "A"}


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _lex(src: str) -> list[_Tok]:
    out = []
    i = 0
    while i < len(src):
        m = _TOKEN.match(src, i)
        if not m:
            raise DPSyntaxError(f"unexpected character {src[i]!r}", i)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            if kind == "name" and text in _KEYWORDS:
                kind = "kw"
            elif kind == "op":
                text = {"**": "^", "==": "=", "≠": "!=", "≤": "<=", "≥": ">="}.get(text, text)
            out.append(_Tok(kind, text, i))
        i = m.end()
    out.append(_Tok("eof", "", len(src)))
    return out


def _parse_sort(text: str, pos: int) -> str:
    if text in ("Val", "Ord"):
        return text
    m = re.fullmatch(r"Res_?(\d*)", text)
    if m:
        k = int(m.group(1) or 1)
        if k < 1:
            raise SortError("residue sort needs k >= 1", pos)
        return f"Res_{k}"
    raise SortError(f"unknown sort {text!r}", pos)


def _res_level(sort: str) -> int:
    return int(sort.split("_")[1])


def _unify(a: str, b: str, pos: int, what: str) -> str:
    if a == "Int":
        return b
    if b == "Int" or a == b:
        return a
    raise SortError(f"{what}: sorts {a} and {b} do not match", pos)


# -- parser -----------------------------------------------------------------

class _Parser:
    def __init__(self, src: str, sorts: Mapping[str, str] | None, aliases: Sequence[str]):
        self.src = src
        self.toks = _lex(src)
        self.i = 0
        self.scopes: list[dict[str, str]] = [dict(sorts or {})]
        self.aliases = set(aliases)

    # token helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind in ("op", "kw"):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> _Tok:
        if not self.accept(text):
            raise DPSyntaxError(f"expected {text!r}, found {self.tok.text or 'end of input'!r}", self.tok.pos)
        return self.toks[self.i - 1]

    def sort_of(self, name: str) -> str:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return "Val"

    def end(self) -> None:
        if self.tok.kind != "eof":
            raise DPSyntaxError(f"unexpected {self.tok.text!r}", self.tok.pos)

    # formulas
    def formula(self) -> Formula:
        left = self.conj()
        args = [left]
        while self.accept("or"):
            args.append(self.conj())
        return args[0] if len(args) == 1 else Formula("or", tuple(args))

    def conj(self) -> Formula:
        args = [self.unary()]
        while self.accept("and"):
            args.append(self.unary())
        return args[0] if len(args) == 1 else Formula("and", tuple(args))

    def unary(self) -> Formula:
        t = self.tok
        if self.accept("not"):
            return Formula("not", (self.unary(),))
        if t.kind == "kw" and t.text in ("exists", "forall", "E", "A"):
            self.i += 1
            q = "exists" if t.text in ("exists", "E") else "forall"
            name = self.tok
            if name.kind != "name":
                raise DPSyntaxError("expected a variable after quantifier", name.pos)
            self.i += 1
            self.expect(":")
            st = self.tok
            self.i += 1
            sort = _parse_sort(st.text, st.pos)
            self.expect(".")
            self.scopes.append({name.text: sort})
            body = self.formula()
            self.scopes.pop()
            return Formula(q, (body,), (name.text, sort))
        if self.accept("true"):
            return Formula("true")
        if self.accept("false"):
            return Formula("false")
        if t.text == "(" and t.kind == "op":
            # a parenthesised formula or the start of a term
            save = self.i
            self.i += 1
            try:
                inner = self.formula()
                self.expect(")")
                if self.tok.kind == "op" and self.tok.text in ("=", "!=", "<", "<=", ">", ">=", "≡", "+", "-", "*", "/", "^"):
                    raise DPSyntaxError("term", self.tok.pos)
                return inner
            except (DPSyntaxError, SortError):
                self.i = save
        return self.atom()

    def atom(self) -> Formula:
        lhs = self.term()
        t = self.tok
        if t.kind != "op" or t.text not in ("=", "!=", "<", "<=", ">", ">=", "≡"):
            raise DPSyntaxError(f"expected a relation, found {t.text or 'end of input'!r}", t.pos)
        self.i += 1
        rhs = self.term()
        rel = "=" if t.text == "≡" else t.text
        sort = _unify(lhs.sort, rhs.sort, t.pos, "comparison")
        if self.accept("mod"):
            n = self.tok
            if n.kind != "int" or int(n.text) < 1:
                raise DPSyntaxError("modulus must be a positive integer", n.pos)
            self.i += 1
            if rel != "=" or sort not in ("Ord", "Int"):
                raise SortError("congruences compare Ord terms with '='", t.pos)
            return Formula("cong", (lhs, rhs), int(n.text))
        if rel in ("<", "<=", ">", ">=") and sort not in ("Ord", "Int"):
            raise SortError(f"order relation on sort {sort}", t.pos)
        return Formula("cmp", (lhs, rhs), rel)

    # terms
    def term(self) -> Term:
        left = self.prod()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            t = self.tok
            self.i += 1
            right = self.prod()
            sort = _unify(left.sort, right.sort, t.pos, "addition")
            left = Term("add" if t.text == "+" else "sub", (left, right), sort)
        return left

    def prod(self) -> Term:
        left = self.neg()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            t = self.tok
            self.i += 1
            right = self.neg()
            if t.text == "*":
                sort = _unify(left.sort, right.sort, t.pos, "product")
                if sort == "Ord" and left.sort != "Int" and right.sort != "Int":
                    raise SortError("Ord terms can only be scaled by integers", t.pos)
                left = Term("mul", (left, right), sort)
            else:
                sort = _unify(left.sort, right.sort, t.pos, "division")
                if sort not in ("Val", "Int"):
                    raise SortError(f"division on sort {sort}", t.pos)
                left = Term("div", (left, right), "Val")
        return left

    def neg(self) -> Term:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.i += 1
            inner = self.neg()
            return Term("neg", (inner,), inner.sort)
        return self.power()

    def power(self) -> Term:
        base = self.primary()
        if self.tok.kind == "op" and self.tok.text == "^":
            t = self.tok
            self.i += 1
            sign = -1 if self.accept("-") else 1
            n = self.tok
            if n.kind != "int":
                raise DPSyntaxError("exponent must be an integer literal", n.pos)
            self.i += 1
            k = sign * int(n.text)
            if base.sort == "Ord":
                raise SortError("powers of Ord terms", t.pos)
            sort = base.sort
            if k < 0:
                if sort not in ("Val", "Int"):
                    raise SortError("negative powers need sort Val", t.pos)
                sort = "Val"
            return Term("pow", (base,), sort, k)
        return base

    def args(self) -> list[Term]:
        self.expect("(")
        out = [self.term()]
        while self.accept(","):
            out.append(self.term())
        self.expect(")")
        return out

    def primary(self) -> Term:
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return Term("num", (), "Int", int(t.text))
        if t.kind == "op" and t.text == "(":
            self.i += 1
            inner = self.term()
            self.expect(")")
            return inner
        if t.kind == "series":
            self.i += 1
            args = self.args()
            for a in args:
                _unify("Val", a.sort, t.pos, "series argument")
            return Term("series", tuple(args), "Val", t.text[2:-1])
        if t.kind == "func":
            self.i += 1
            nums = [int(x) for x in re.findall(r"\d+", t.text)]
            name = t.text.split("_")[0]
            args = self.args()
            if name in ("ac", "res"):
                if len(args) != 1:
                    raise SortError(f"{name}_k takes one argument", t.pos)
                _unify("Val", args[0].sort, t.pos, name)
                if nums[0] < 1:
                    raise SortError("depth must be >= 1", t.pos)
                return Term(name, tuple(args), f"Res_{nums[0]}", nums[0])
            m, e = nums
            if m < 1:
                raise SortError("root and Hensel symbols need m >= 1", t.pos)
            res_sort = f"Res_{2 * e + 1}"
            if name == "root":
                if len(args) != 3:
                    raise SortError("root_{m,e}(x, xi, z) takes three arguments", t.pos)
                _unify("Val", args[0].sort, t.pos, "root value")
                _unify(res_sort, args[1].sort, t.pos, "root residue")
                _unify("Ord", args[2].sort, t.pos, "root order")
                return Term("root", tuple(args), "Val", (m, e))
            if len(args) != m + 2:
                raise SortError(f"h_{{{m},{e}}} takes {m + 2} arguments", t.pos)
            for a in args[:-1]:
                _unify("Val", a.sort, t.pos, "Hensel coefficient")
            _unify(res_sort, args[-1].sort, t.pos, "Hensel residue")
            return Term("hensel", tuple(args), "Val", (m, e))
        if t.kind == "name":
            self.i += 1
            if t.text == "ord":
                args = self.args()
                if len(args) != 1:
                    raise SortError("ord takes one argument", t.pos)
                _unify("Val", args[0].sort, t.pos, "ord")
                return Term("ord", tuple(args), "Ord")
            if t.text == "t0" or t.text in self.aliases:
                return Term("t0", (), "Val")
            return Term("var", (), self.sort_of(t.text), t.text)
        raise DPSyntaxError(f"unexpected {t.text or 'end of input'!r}", t.pos)


def parse_term(src: str, sorts: Mapping[str, str] | None = None, aliases: Sequence[str] = ()) -> Term:
    """Parse a term; variables not listed in ``sorts`` have sort Val."""
    p = _Parser(src, _normalize_sorts(sorts), aliases)
    t = p.term()
    p.end()
    return t


def parse_formula(src: str, sorts: Mapping[str, str] | None = None, aliases: Sequence[str] = ()) -> Formula:
    p = _Parser(src, _normalize_sorts(sorts), aliases)
    f = p.formula()
    p.end()
    return f


def _normalize_sorts(sorts: Mapping[str, str] | None) -> dict[str, str]:
    return {k: _parse_sort(v, 0) for k, v in (sorts or {}).items()}


# -- pretty-printing ---------------------------------------------------------

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def _tprec(t: Term) -> int:
    return _PREC.get(t.op, 5)


def pretty_term(t: Term) -> str:
    op = t.op
    if op == "num":
        return str(t.value)
    if op == "var":
        return t.value
    if op == "t0":
        return "t0"
    if op in ("add", "sub", "mul", "div"):
        sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[op]
        pr = _PREC[op]
        a, b = t.args
        ls = pretty_term(a)
        if _tprec(a) < pr:
            ls = f"({ls})"
        rs = pretty_term(b)
        if _tprec(b) <= pr:
            rs = f"({rs})"
        return f"{ls} {sym} {rs}" if pr == 1 else f"{ls}*{rs}" if op == "mul" else f"{ls}/{rs}"
    if op == "neg":
        s = pretty_term(t.args[0])
        return f"-({s})" if _tprec(t.args[0]) < 3 else f"-{s}"
    if op == "pow":
        s = pretty_term(t.args[0])
        if _tprec(t.args[0]) < 5:
            s = f"({s})"
        return f"{s}^{t.value}"
    inner = ", ".join(pretty_term(a) for a in t.args)
    if op == "ord":
        return f"ord({inner})"
    if op in ("ac", "res"):
        return f"{op}_{t.value}({inner})"
    if op == "root":
        return f"root_{{{t.value[0]},{t.value[1]}}}({inner})"
    if op == "hensel":
        return f"h_{{{t.value[0]},{t.value[1]}}}({inner})"
    if op == "series":
        return f'S"{t.value}"({inner})'
    raise ValueError(op)


_FPREC = {"or": 1, "and": 2, "not": 3}


def pretty_formula(f: Formula) -> str:
    op = f.op
    if op in ("true", "false"):
        return op
    if op == "cmp":
        return f"{pretty_term(f.args[0])} {f.value} {pretty_term(f.args[1])}"
    if op == "cong":
        return f"{pretty_term(f.args[0])} = {pretty_term(f.args[1])} mod {f.value}"
    if op in ("exists", "forall"):
        name, sort = f.value
        return f"{op} {name}:{sort}. {pretty_formula(f.args[0])}"
    if op == "not":
        a = f.args[0]
        s = pretty_formula(a)
        return f"not ({s})" if a.op in ("and", "or", "exists", "forall") else f"not {s}"
    parts = []
    for a in f.args:
        s = pretty_formula(a)
        if a.op in ("exists", "forall") or _FPREC.get(a.op, 4) <= _FPREC[op]:
            s = f"({s})"
        parts.append(s)
    return f" {op} ".join(parts)


def to_json(node: Term | Formula) -> dict:
    if isinstance(node, Term):
        out: dict = {"term": node.op, "sort": node.sort}
    else:
        out = {"formula": node.op}
    if node.value is not None:
        out["value"] = list(node.value) if isinstance(node.value, tuple) else node.value
    if node.args:
        out["args"] = [to_json(a) for a in node.args]
    return out


def to_json_str(node: Term | Formula) -> str:
    return json.dumps(to_json(node), sort_keys=True)


# -- evaluation --------------------------------------------------------------

def _coerce(value: Any, sort: str, ctx: PAdicContext) -> Any:
    if sort == "Val":
        if isinstance(value, PAdicNumber):
            return value
        return ctx(value)
    if sort.startswith("Res_"):
        return int(value) % ctx.p ** _res_level(sort)
    return value


_FIELD_OPS = {"num", "var", "t0", "add", "sub", "mul", "div", "neg", "pow"}


def _exact_value(t: Term, env: Mapping[str, Any], p: int) -> Fraction | None:
    """The value of a field-arithmetic term with rational leaves, else None."""
    op = t.op
    if op not in _FIELD_OPS:
        return None
    if op == "num":
        return Fraction(t.value)
    if op == "t0":
        return Fraction(p)
    if op == "var":
        v = env.get(t.value)
        return Fraction(v) if isinstance(v, (int, Fraction)) else None
    vals = [_exact_value(a, env, p) for a in t.args]
    if any(v is None for v in vals):
        return None
    if op == "neg":
        return -vals[0]
    if op == "pow":
        a = vals[0]
        if t.value < 0 and a == 0:
            return Fraction(0)
        return a ** t.value
    a, b = vals
    if op == "div":
        return a / b if b else Fraction(0)
    return a + b if op == "add" else a - b if op == "sub" else a * b


def eval_term(t: Term, env: Mapping[str, Any], ctx: PAdicContext, series: Mapping[str, Any] | None = None,
              want: str | None = None) -> Any:
    """Value of ``t``: PAdicNumber for Val, int or inf for Ord, int mod p^k
    for Res_k.  Series symbols are looked up in ``series``.  Field terms
    whose leaves are rational are computed exactly, so cancellation never
    costs precision."""
    sort = t.sort if t.sort != "Int" else (want or "Int")
    op = t.op
    p = ctx.p
    if sort == "Val" and op in _FIELD_OPS and op != "num":
        exact = _exact_value(t, env, p)
        if exact is not None:
            return ctx(exact)
    if op == "num":
        return _coerce(t.value, sort, ctx) if sort != "Ord" else t.value
    if op == "var":
        if t.value not in env:
            raise KeyError(f"unbound variable {t.value}")
        return _coerce(env[t.value], sort, ctx)
    if op == "t0":
        return ctx.uniformizer
    if op in ("add", "sub", "mul"):
        a = eval_term(t.args[0], env, ctx, series, sort)
        b = eval_term(t.args[1], env, ctx, series, sort)
        if sort == "Ord":
            if op == "mul":
                if a == 0 or b == 0:
                    return 0
                return a * b
            if op == "sub":
                return INF if a == INF else a - b
            return a + b
        if op == "add":
            r = a + b
        elif op == "sub":
            r = a - b
        else:
            r = a * b
        return _coerce(r, sort, ctx) if sort.startswith("Res_") else r
    if op == "div":
        a = eval_term(t.args[0], env, ctx, series, "Val")
        b = eval_term(t.args[1], env, ctx, series, "Val")
        if b.is_zero():
            return ctx.zero()
        return a / b
    if op == "neg":
        a = eval_term(t.args[0], env, ctx, series, sort)
        if sort == "Ord":
            return -a
        return _coerce(-a, sort, ctx) if sort.startswith("Res_") else -a
    if op == "pow":
        a = eval_term(t.args[0], env, ctx, series, sort)
        k = t.value
        if sort.startswith("Res_"):
            return pow(a, k, p ** _res_level(sort))
        if k < 0 and a.is_zero():
            return ctx.zero()
        return a**k
    if op == "ord":
        return padic.ord(eval_term(t.args[0], env, ctx, series, "Val"))
    if op == "ac":
        return padic.ac(eval_term(t.args[0], env, ctx, series, "Val"), t.value)
    if op == "res":
        x = eval_term(t.args[0], env, ctx, series, "Val")
        if not x.is_zero() and padic.ord(x) < 0:
            return 0
        return padic.res(x, t.value)
    m, e = t.value if op in ("root", "hensel") else (0, 0)
    if op == "root":
        x = eval_term(t.args[0], env, ctx, series, "Val")
        xi = eval_term(t.args[1], env, ctx, series, f"Res_{2 * e + 1}")
        z = eval_term(t.args[2], env, ctx, series, "Ord")
        if z == INF:
            return ctx.zero()
        return padic.mth_root(x, xi, z, m, e)
    if op == "hensel":
        coeffs = [eval_term(a, env, ctx, series, "Val") for a in t.args[:-1]]
        xi = eval_term(t.args[-1], env, ctx, series, f"Res_{2 * e + 1}")
        return padic.hensel_root(coeffs, xi, e, p=p, M=ctx.M)
    if op == "series":
        if not series or t.value not in series:
            raise KeyError(f"unbound series symbol {t.value}")
        pts = [eval_term(a, env, ctx, series, "Val") for a in t.args]
        return series[t.value].eval(pts, ctx)
    raise ValueError(op)


def _domain(sort: str, p: int) -> range:
    if sort.startswith("Res_"):
        return range(p ** _res_level(sort))
    raise UnsupportedFragment(f"cannot evaluate a quantifier over sort {sort}")


def eval_formula(f: Formula, env: Mapping[str, Any], ctx: PAdicContext, series: Mapping[str, Any] | None = None) -> bool:
    op = f.op
    if op == "true":
        return True
    if op == "false":
        return False
    if op == "and":
        return all(eval_formula(a, env, ctx, series) for a in f.args)
    if op == "or":
        return any(eval_formula(a, env, ctx, series) for a in f.args)
    if op == "not":
        return not eval_formula(f.args[0], env, ctx, series)
    if op in ("exists", "forall"):
        name, sort = f.value
        vals = (eval_formula(f.args[0], {**env, name: v}, ctx, series) for v in _domain(sort, ctx.p))
        return any(vals) if op == "exists" else all(vals)
    lhs, rhs = f.args
    sort = lhs.sort if lhs.sort != "Int" else rhs.sort
    if sort == "Int":
        sort = "Ord"
    a = eval_term(lhs, env, ctx, series, sort)
    b = eval_term(rhs, env, ctx, series, sort)
    if op == "cong":
        if a == INF or b == INF:
            return False
        return (a - b) % f.value == 0
    if sort == "Val":
        d = a - b
        zero = d.is_zero() if d.is_known() else False
        return zero if f.value == "=" else not zero
    return {"=": a == b, "!=": a != b, "<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[f.value]


# -- normal form -------------------------------------------------------------

@dataclass
class NormalFormDisjunct:
    psi: Formula  # residue conditions on ac_k of the listed terms
    theta: Formula  # Presburger conditions on ord of the listed terms

    def __str__(self) -> str:
        return f"({pretty_formula(self.psi)}) and ({pretty_formula(self.theta)})"


@dataclass
class NormalFormFormula:
    disjuncts: list[NormalFormDisjunct]
    terms: list[Term] = field(default_factory=list)

    def holds(self, env: Mapping[str, Any], ctx: PAdicContext, series: Mapping[str, Any] | None = None) -> bool:
        return any(eval_formula(d.psi, env, ctx, series) and eval_formula(d.theta, env, ctx, series)
                   for d in self.disjuncts)

    def as_formula(self) -> Formula:
        parts = [_and(d.psi, d.theta) for d in self.disjuncts]
        if not parts:
            return Formula("false")
        return parts[0] if len(parts) == 1 else Formula("or", tuple(parts))

    def __str__(self) -> str:
        return pretty_formula(self.as_formula())


def _and(*fs: Formula) -> Formula:
    args = []
    for f in fs:
        if f.op == "true":
            continue
        if f.op == "false":
            return Formula("false")
        args.extend(f.args if f.op == "and" else (f,))
    if not args:
        return Formula("true")
    return args[0] if len(args) == 1 else Formula("and", tuple(args))


def _kind(node: Term | Formula) -> set[str]:
    """Sorts of the variables occurring free in a node."""
    out: set[str] = set()
    if isinstance(node, Term):
        if node.op == "var":
            out.add(node.sort.split("_")[0])
        for a in node.args:
            out |= _kind(a)
        return out
    for a in node.args:
        out |= _kind(a)
    return out


def _has_val_outside(t: Term) -> bool:
    """Does a Val variable occur outside ord/ac?"""
    if t.op == "var":
        return t.sort == "Val"
    if t.op in ("ord", "ac"):
        return False
    return any(_has_val_outside(a) for a in t.args)


def _collect_terms(node: Term | Formula, acc: list[Term]) -> None:
    if isinstance(node, Term):
        if node.op in ("ord", "ac") and node.args[0] not in acc:
            acc.append(node.args[0])
        for a in node.args:
            _collect_terms(a, acc)
        return
    for a in node.args:
        _collect_terms(a, acc)


def _rewrite_atom(f: Formula) -> Formula:
    """Rewrite an atom so Val variables occur only under ord and ac_k."""
    if f.op == "cmp" and f.args[0].sort in ("Val",) or (f.op == "cmp" and f.args[0].sort == "Int" and f.args[1].sort == "Val"):
        lhs, rhs = f.args
        if f.value not in ("=", "!="):
            raise SortError("Val atoms are equalities", 0)
        diff = lhs if rhs == Term("num", (), "Int", 0) else Term("sub", (lhs, rhs), "Val")
        return Formula("cmp", (Term("ac", (diff,), "Res_1", 1), Term("num", (), "Int", 0)), f.value)
    return _rewrite_res(f)


def _rewrite_res(f: Formula) -> Formula:
    """res_1(x) = ac_1(x) when ord x = 0 and 0 otherwise."""
    found: list[Term] = []

    def find(t: Term) -> None:
        if t.op == "res":
            found.append(t)
        for a in t.args:
            find(a)

    for a in f.args:
        find(a)
    if not found:
        for a in f.args:
            if _has_val_outside(a):
                raise UnsupportedFragment(f"Val variable outside ord/ac in {pretty_formula(f)}")
        return f
    r = found[0]
    if r.value != 1:
        raise UnsupportedFragment("res_k with k > 1 in the normal form")
    x = r.args[0]
    unit = Formula("cmp", (Term("ord", (x,), "Ord"), Term("num", (), "Int", 0)), "=")
    nonunit = Formula("not", (unit,))

    def subst(t: Term, by: Term) -> Term:
        if t == r:
            return by
        return Term(t.op, tuple(subst(a, by) for a in t.args), t.sort, t.value)

    a1 = Formula(f.op, tuple(subst(a, Term("ac", (x,), "Res_1", 1)) for a in f.args), f.value)
    a0 = Formula(f.op, tuple(subst(a, Term("num", (), r.sort, 0)) for a in f.args), f.value)
    return Formula("or", (_and(unit, _rewrite_res(a1)), _and(nonunit, _rewrite_res(a0))))


def _is_theta(f: Formula) -> bool:
    if f.op in ("cmp", "cong"):
        s = {a.sort for a in f.args} - {"Int"}
        return s <= {"Ord"} and bool(s)
    return all(_is_theta(a) for a in f.args) if f.args else False


def _nnf(f: Formula, negate: bool = False) -> Formula:
    op = f.op
    if op == "not":
        return _nnf(f.args[0], not negate)
    if op in ("and", "or"):
        new = {"and": "or", "or": "and"}[op] if negate else op
        return Formula(new, tuple(_nnf(a, negate) for a in f.args))
    if op in ("true", "false"):
        return Formula({"true": "false", "false": "true"}[op] if negate else op)
    if op in ("exists", "forall"):
        name, sort = f.value
        if sort == "Val":
            raise UnsupportedFragment("quantifier over the valued field")
        if _has_val_var(f.args[0]) and sort == "Ord":
            raise UnsupportedFragment("Ord quantifier over Val data")
        return Formula("not", (f,)) if negate else f
    if op == "cmp" or op == "cong":
        folded = _fold(f)
        if folded is not None:
            return Formula("true" if folded != negate else "false")
        rew = _rewrite_atom(f)
        if rew is not f:
            if rew.op != "cmp" and rew.op != "cong":
                return _nnf(rew, negate)
            f = rew
        return Formula("not", (f,)) if negate else f
    raise ValueError(op)


def _fold(f: Formula) -> bool | None:
    """Truth value of an atom between integer constants, else None."""
    def const(t: Term) -> int | None:
        if t.op == "num":
            return t.value
        if t.op == "neg":
            v = const(t.args[0])
            return None if v is None else -v
        if t.op in ("add", "sub", "mul"):
            a, b = const(t.args[0]), const(t.args[1])
            if a is None or b is None:
                return None
            return a + b if t.op == "add" else a - b if t.op == "sub" else a * b
        return None

    if any(t.sort.startswith("Res_") for t in f.args):
        return None  # residue literals compare modulo p^k and p is not known here
    a, b = const(f.args[0]), const(f.args[1])
    if a is None or b is None:
        return None
    if f.op == "cong":
        return (a - b) % f.value == 0
    return {"=": a == b, "!=": a != b, "<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[f.value]


def _has_val_var(f: Formula | Term) -> bool:
    if isinstance(f, Term):
        return (f.op == "var" and f.sort == "Val") or any(_has_val_var(a) for a in f.args)
    return any(_has_val_var(a) for a in f.args)


def _dnf(f: Formula) -> list[list[Formula]]:
    if f.op == "or":
        out = []
        for a in f.args:
            out.extend(_dnf(a))
        return out
    if f.op == "and":
        acc: list[list[Formula]] = [[]]
        for a in f.args:
            acc = [x + y for x in acc for y in _dnf(a)]
        return acc
    if f.op == "true":
        return [[]]
    if f.op == "false":
        return []
    return [[f]]


def to_normal_form(phi: Formula) -> NormalFormFormula:
    """Disjunction of (residue condition) and (order condition) in which
    every Val variable occurs only inside ord(f_i) or ac_k(f_i)."""
    nnf = _nnf(phi)
    disjuncts = []
    seen = set()
    for lits in _dnf(nnf):
        psi = [l for l in lits if not _is_theta(l.args[0] if l.op == "not" else l)]
        theta = [l for l in lits if _is_theta(l.args[0] if l.op == "not" else l)]
        d = NormalFormDisjunct(_and(*psi), _and(*theta))
        key = str(d)
        if key not in seen:
            seen.add(key)
            disjuncts.append(d)
    terms: list[Term] = []
    for d in disjuncts:
        _collect_terms(d.psi, terms)
        _collect_terms(d.theta, terms)
    return NormalFormFormula(disjuncts, terms)


# -- conversions to polynomial data -------------------------------------------

UNIFORMIZER_NAMES = ("t", "t0", "p")


def _poly_of(t: Term, names: Sequence[str]) -> dict[tuple, tuple]:
    n = len(names)
    zero = (0,) * n
    op = t.op
    if op == "num":
        return {zero: (t.value,)} if t.value else {}
    if op == "t0":
        return {zero: (0, 1)}
    if op == "var":
        if t.value not in names:
            raise UnsupportedFragment(f"unknown variable {t.value}")
        e = [0] * n
        e[names.index(t.value)] = 1
        return {tuple(e): (1,)}
    if op == "neg":
        return {e: t_neg(c) for e, c in _poly_of(t.args[0], names).items()}
    if op in ("add", "sub"):
        a = _poly_of(t.args[0], names)
        b = _poly_of(t.args[1], names)
        out = dict(a)
        for e, c in b.items():
            out[e] = t_add(out.get(e, ()), c if op == "add" else t_neg(c))
        return {e: c for e, c in out.items() if c}
    if op == "mul":
        return _pmul(_poly_of(t.args[0], names), _poly_of(t.args[1], names))
    if op == "pow":
        if t.value < 0:
            raise UnsupportedFragment("negative powers in a polynomial")
        base = _poly_of(t.args[0], names)
        out = {zero: (1,)}
        for _ in range(t.value):
            out = _pmul(out, base)
        return out
    raise UnsupportedFragment(f"{op} is not a polynomial operation")


def _pmul(a: Mapping[tuple, tuple], b: Mapping[tuple, tuple]) -> dict[tuple, tuple]:
    out: dict[tuple, tuple] = {}
    for e1, c1 in a.items():
        for e2, c2 in b.items():
            e = tuple(x + y for x, y in zip(e1, e2))
            out[e] = t_add(out.get(e, ()), t_mul(c1, c2))
    return {e: c for e, c in out.items() if c}


def _free_names(t: Term, acc: list[str]) -> None:
    if t.op == "var" and t.value not in acc:
        acc.append(t.value)
    for a in t.args:
        _free_names(a, acc)


def polynomial_variables(src: str, n: int | None = None) -> list[str]:
    """Variable names of a polynomial string, alphabetically; padded with
    fresh names on the left when ``n`` asks for more."""
    found: list[str] = []
    _free_names(parse_term(src, aliases=UNIFORMIZER_NAMES), found)
    names = sorted(found)
    if n is not None:
        if len(names) > n:
            raise UnsupportedFragment(f"{len(names)} variables in {src!r} but only {n} declared")
        k = 1
        while len(names) < n:
            cand = f"x{k}"
            if cand not in names:
                names.insert(0, cand)
            k += 1
    return names


def parse_polynomial(src: str, variables: Sequence[str] | None = None) -> tuple[dict[tuple, tuple], list[str]]:
    """Integrand dict (exponents -> Z[t] coefficients) of a polynomial string.
    ``t``, ``t0`` and ``p`` all denote the uniformizer."""
    t = parse_term(src, aliases=UNIFORMIZER_NAMES)
    names = list(variables) if variables is not None else polynomial_variables(src)
    return _poly_of(t, names), names


_BIG_O = re.compile(r"\+\s*O\(\s*t\s*\^\s*(\d+)\s*\)\s*$")


def parse_series_literal(src: str, variables: Sequence[str] | None = None
                         ) -> tuple[dict[tuple, tuple], list[str], list[str], int | None]:
    """A series literal: a sum of terms ``c(t) * xi1^a * rho1^b``,
    optionally ending in ``+ O(t^k)`` to mark a truncation.

    Returns (integrand, closed-disc names, open-disc names, k).  Names
    starting with ``rho`` range over the open disc, all others over the
    closed disc; each group is sorted."""
    m = _BIG_O.search(src)
    order = None
    if m:
        order = int(m.group(1))
        src = src[: m.start()]
    if variables is None:
        found = polynomial_variables(src)
        closed = sorted(v for v in found if not v.startswith("rho"))
        opened = sorted(v for v in found if v.startswith("rho"))
    else:
        closed = [v for v in variables if not v.startswith("rho")]
        opened = [v for v in variables if v.startswith("rho")]
    g, _ = parse_polynomial(src, closed + opened)
    return g, closed, opened, order


def parse_ring_formula(src: str, variables: Sequence[str]):
    """Residue-field formula in the ring language, as a counting formula."""
    from .motring import Conn, atom, conj, disj, neg

    f = parse_formula(src, {v: "Res_1" for v in variables})

    def conv(g: Formula):
        if g.op == "true":
            return Conn("true")
        if g.op == "false":
            return neg(Conn("true"))
        if g.op == "and":
            return conj(*(conv(a) for a in g.args))
        if g.op == "or":
            return disj(*(conv(a) for a in g.args))
        if g.op == "not":
            return neg(conv(g.args[0]))
        if g.op == "cmp" and g.value in ("=", "!="):
            poly = _poly_of(Term("sub", g.args, "Res_1"), list(variables))
            ints = {}
            for e, c in poly.items():
                if len(c) > 1:
                    raise UnsupportedFragment("the uniformizer does not belong to the residue language")
                ints[e] = c[0]
            return atom(ints, g.value)
        raise UnsupportedFragment(f"{g.op} in a residue formula")

    return conv(f)
