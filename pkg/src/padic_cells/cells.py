"""Cell decomposition by recursive residue-polydisc refinement.

A node holds polynomials G_i(w) with g_i(x) = pi^{V_i} mu_i G_i(w) on the
polydisc x = R + pi^D w.  For each residue point a of w:

* no G_i vanishes at a: every g_i has constant ord and ac on the disc
  (a *const* family);
* exactly one G_i vanishes and it is smooth at a: after a Hensel change of
  the distinguished coordinate z, G_i = (z - c) * unit and the disc is a
  union of 1-cells around the Hensel center c (a *hensel* family);
* otherwise the child node G_i(a + pi w) / pi^v is refined further.

When a child equals a unit multiple of an ancestor the path from the
ancestor repeats forever; a loop parameter d >= 0 counts the repetitions
and the loop's limit point is a 0-cell.  Families therefore carry affine
data in the loop parameters, and their integrals are Presburger sums.

Three coefficient models share the engine: integers with pi = p (fixed
prime), F_p[t] with pi = t (equal characteristic) and Q[t] with pi = t
(symbolic q, where residue points are replaced by counted residue-formula
classes and finitely many rational singular points).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import comb
from typing import Any, Callable, Iterable, Mapping, Sequence

import sympy

from . import padic
from .errors import InsufficientPrecision, UnsupportedSplit, ZeroPolynomial
from .motring import MotElem, ResidueFormulaClass, atom, conj, disj
from .padic import INF, PAdicContext, vp
from .polys import format_int_poly, t_add, t_mul, t_neg, t_shift, t_trim, t_val
from .presburger import Ineq, PresburgerSet, is_empty, sum_exponential

DEFAULT_MAX_DEPTH = 24
DEFAULT_MAX_NODES = 4000


# -- coefficient models ------------------------------------------------------

class IntModel:
    """Integers, uniformizer p."""

    symbolic = False

    def __init__(self, p: int):
        self.p = p

    def coeff(self, c: tuple) -> int:
        v = 0
        for x in reversed(c):
            v = v * self.p + x
        return v

    def from_rational(self, a: Fraction | int) -> int:
        a = Fraction(a)
        if a.denominator != 1:
            raise ValueError("non-integral point in the integer model")
        return int(a)

    def add(self, a: int, b: int) -> int:
        return a + b

    def mul(self, a: int, b: int) -> int:
        return a * b

    def is_zero(self, a: int) -> bool:
        return a == 0

    def val(self, a: int) -> int | float:
        return vp(a, self.p)

    def pi_pow(self, k: int) -> int:
        return self.p**k

    def div_pi(self, a: int, v: int) -> int:
        return a // self.p**v

    def residue(self, a: int) -> int:
        return a % self.p

    def ratio(self, a: int, b: int) -> Fraction:
        return Fraction(a, b)

    def ratio_residue(self, lam: Fraction) -> int | None:
        if vp(lam.numerator, self.p) or vp(lam.denominator, self.p):
            return None
        return lam.numerator * pow(lam.denominator, -1, self.p) % self.p


class FpTModel:
    """F_p[t], uniformizer t."""

    symbolic = False

    def __init__(self, p: int):
        self.p = p

    def coeff(self, c: tuple) -> tuple:
        return t_trim(c, self.p)

    def from_rational(self, a: Fraction | int) -> tuple:
        a = Fraction(a)
        return t_trim((a.numerator * pow(a.denominator, -1, self.p),), self.p)

    def add(self, a, b):
        return t_add(a, b, self.p)

    def mul(self, a, b):
        return t_mul(a, b, self.p)

    def is_zero(self, a) -> bool:
        return not a

    def val(self, a):
        return t_val(a)

    def pi_pow(self, k: int):
        return (0,) * k + (1,)

    def div_pi(self, a, v: int):
        return t_shift(a, -v)

    def residue(self, a) -> int:
        return a[0] % self.p if a else 0

    def ratio(self, a, b):
        # constant ratio only: a = lam * b with lam in F_p^*
        i = t_val(b)
        if t_val(a) != i:
            return None
        lam = a[i] * pow(b[i], -1, self.p) % self.p
        return lam if t_trim([lam * x for x in b], self.p) == a else None

    def ratio_residue(self, lam) -> int | None:
        return lam


class QTModel:
    """Q[t], uniformizer t; residues are rationals (generic residue field)."""

    symbolic = True

    def __init__(self):
        self.p = None

    def coeff(self, c: tuple) -> tuple:
        return t_trim(tuple(Fraction(x) for x in c))

    def from_rational(self, a: Fraction | int) -> tuple:
        return t_trim((Fraction(a),))

    def add(self, a, b):
        return t_add(a, b)

    def mul(self, a, b):
        return t_mul(a, b)

    def is_zero(self, a) -> bool:
        return not a

    def val(self, a):
        return t_val(a)

    def pi_pow(self, k: int):
        return (Fraction(0),) * k + (Fraction(1),)

    def div_pi(self, a, v: int):
        return t_shift(a, -v)

    def residue(self, a) -> Fraction:
        return Fraction(a[0]) if a else Fraction(0)

    def ratio(self, a, b):
        i = t_val(b)
        if t_val(a) != i:
            return None
        lam = Fraction(a[i]) / Fraction(b[i])
        return lam if t_trim(tuple(lam * x for x in b)) == a else None

    def ratio_residue(self, lam) -> Fraction | None:
        return lam if lam else None


def model_for(ctx: PAdicContext):
    if ctx.mode == "symbolic-q":
        return QTModel()
    if ctx.equichar:
        return FpTModel(ctx.p)
    return IntModel(ctx.p)


# -- polynomial helpers over a model -------------------------------------------

def _subst(G: Mapping[tuple, Any], a: Sequence, M) -> dict[tuple, Any]:
    """G(a + pi w)."""
    out: dict[tuple, Any] = {}
    n = len(a)
    for e, c in G.items():
        ranges = [range(k + 1) for k in e]
        for ks in product(*ranges):
            num = Fraction(1)
            for i in range(n):
                num *= comb(e[i], ks[i]) * Fraction(a[i]) ** (e[i] - ks[i])
            if num == 0:
                continue
            term = M.mul(M.mul(c, M.from_rational(num)), M.pi_pow(sum(ks)))
            if not M.is_zero(term):
                out[ks] = M.add(out[ks], term) if ks in out else term
    return {e: c for e, c in out.items() if not M.is_zero(c)}


def _content(G: Mapping[tuple, Any], M) -> int:
    return min(M.val(c) for c in G.values())


def _div_content(G: Mapping[tuple, Any], v: int, M) -> dict[tuple, Any]:
    return {e: M.div_pi(c, v) for e, c in G.items()}


def _residue_poly(G: Mapping[tuple, Any], M) -> dict[tuple, Any]:
    out = {}
    for e, c in G.items():
        r = M.residue(c)
        if r:
            out[e] = r
    return out


def _eval_res(rp: Mapping[tuple, Any], a: Sequence, p: int | None) -> Any:
    total = 0 if p else Fraction(0)
    for e, c in rp.items():
        term = c
        for x, k in zip(a, e):
            if k:
                term = term * (pow(x, k, p) if p else Fraction(x) ** k)
        total += term
    return total % p if p else total


def _partial(rp: Mapping[tuple, Any], i: int, p: int | None) -> dict[tuple, Any]:
    out = {}
    for e, c in rp.items():
        if e[i]:
            ne = list(e)
            ne[i] -= 1
            v = c * e[i]
            if p:
                v %= p
            if v:
                out[tuple(ne)] = out.get(tuple(ne), 0) + v
    return {e: c for e, c in out.items() if c}


def _proportional(G: Mapping, H: Mapping, M) -> Any:
    """lam with G = lam * H (lam a unit constant), else None."""
    if set(G) != set(H):
        return None
    lam = None
    for e in G:
        r = M.ratio(G[e], H[e])
        if r is None:
            return None
        if lam is None:
            lam = r
        elif r != lam:
            return None
    if lam is None:
        return None
    return M.ratio_residue(lam)


# -- affine data in the loop parameters ----------------------------------------

@dataclass(frozen=True)
class Affine:
    const: int = 0
    coeffs: tuple = ()  # sorted (loop id, coefficient)

    def __add__(self, other: "Affine | int") -> "Affine":
        if isinstance(other, int):
            return Affine(self.const + other, self.coeffs)
        d = dict(self.coeffs)
        for k, v in other.coeffs:
            d[k] = d.get(k, 0) + v
        return Affine(self.const + other.const, tuple(sorted((k, v) for k, v in d.items() if v)))

    def __mul__(self, k: int) -> "Affine":
        return Affine(self.const * k, tuple((i, v * k) for i, v in self.coeffs if v * k))

    __rmul__ = __mul__

    def __sub__(self, other: "Affine | int") -> "Affine":
        return self + (other * -1 if isinstance(other, Affine) else -other)

    def coef(self, loop: int) -> int:
        return dict(self.coeffs).get(loop, 0)

    def at(self, d: Mapping[int, int]) -> int:
        return self.const + sum(v * d[k] for k, v in self.coeffs)

    def text(self, names: Mapping[int, str]) -> str:
        parts = [str(self.const)] if self.const or not self.coeffs else []
        for k, v in self.coeffs:
            nm = names.get(k, f"d{k}")
            parts.append(nm if v == 1 else f"{v}*{nm}")
        return " + ".join(parts).replace("+ -", "- ")


def _loop(k: int, coef: int = 1) -> Affine:
    return Affine(0, ((k, coef),))


@dataclass(frozen=True)
class UnitData:
    """A residue r times prod lam_l^{d_l}."""

    res: Any
    lams: tuple = ()  # (loop id, lam residue)

    def times(self, r: Any, p: int | None) -> "UnitData":
        v = self.res * r
        return UnitData(v % p if p else v, self.lams)

    def with_loop(self, loop: int, lam: Any) -> "UnitData":
        return UnitData(self.res, self.lams + ((loop, lam),))

    def at(self, d: Mapping[int, int], p: int | None) -> Any:
        v = self.res
        for k, lam in self.lams:
            v = v * (pow(lam, d[k], p) if p else Fraction(lam) ** d[k])
        return v % p if p else v


# -- the refinement tree ---------------------------------------------------------

@dataclass
class Child:
    kind: str  # const hensel node back unresolved
    point: tuple | None
    count: MotElem | int = 1
    data: dict = field(default_factory=dict)


@dataclass
class TNode:
    ident: int
    depth: int
    fids: tuple  # factor ids present
    polys: tuple  # model polynomials, aligned with fids
    V: dict  # factor id -> valuation pulled out since the root
    children: list = field(default_factory=list)
    back_from: list = field(default_factory=list)  # (loop digits, increments, lams)


class Engine:
    """Refinement tree for a tuple of factors g_1..g_r in n variables."""

    def __init__(self, factors: Sequence[Mapping[tuple, tuple]], n: int, ctx: PAdicContext,
                 max_depth: int = DEFAULT_MAX_DEPTH, max_nodes: int = DEFAULT_MAX_NODES):
        self.n = n
        self.ctx = ctx
        self.M = model_for(ctx)
        self.p = self.M.p
        self.max_depth = max_depth
        self.max_nodes = max_nodes
        self.factors = [dict(f) for f in factors]
        self.nodes: list[TNode] = []
        polys = []
        V = {}
        self.root_units: dict[int, Any] = {}
        for i, f in enumerate(self.factors):
            G = {e: self.M.coeff(c) for e, c in f.items()}
            G = {e: c for e, c in G.items() if not self.M.is_zero(c)}
            if not G:
                raise ZeroPolynomial(f"factor {i} vanishes in this model")
            v = _content(G, self.M)
            polys.append(_div_content(G, v, self.M))
            V[i] = v
        self.root = self._new_node(0, tuple(range(len(polys))), tuple(polys), V)
        self._build(self.root, [])

    def _new_node(self, depth: int, fids: tuple, polys: tuple, V: dict) -> TNode:
        node = TNode(len(self.nodes), depth, fids, polys, dict(V))
        self.nodes.append(node)
        return node

    # residue points and their classification
    def _points(self) -> Iterable[tuple]:
        return product(range(self.p), repeat=self.n)

    def _classify(self, node: TNode, respolys: list, a: tuple) -> tuple[str, dict]:
        p = self.p
        vals = [_eval_res(rp, a, p) for rp in respolys]
        vanish = [k for k, v in enumerate(vals) if v == 0]
        if not vanish:
            return "const", {"res": {node.fids[k]: vals[k] for k in range(len(vals))}}
        if len(vanish) == 1:
            k = vanish[0]
            for j in reversed(range(self.n)):
                dv = _eval_res(_partial(respolys[k], j, p), a, p)
                if dv:
                    res = {node.fids[m]: vals[m] for m in range(len(vals)) if m != k}
                    return "hensel", {"fid": node.fids[k], "var": j, "slope": dv, "res": res}
        return "split", {"vanish": vanish, "res": {node.fids[m]: vals[m] for m in range(len(vals)) if m not in vanish}}

    def _child_node(self, node: TNode, a: tuple, vanish: list, stack: list) -> Child:
        polys, fids, V = [], [], dict(node.V)
        incs = {}
        for k in vanish:
            G = _subst(node.polys[k], a, self.M)
            v = _content(G, self.M)
            polys.append(_div_content(G, v, self.M))
            fids.append(node.fids[k])
            V[node.fids[k]] = node.V[node.fids[k]] + v
            incs[node.fids[k]] = v
        fids_t, polys_t = tuple(fids), tuple(polys)
        # back edge to an ancestor (or to the node itself)
        path = stack + [(node, a)]
        for idx, (anc, _) in enumerate(path):
            if anc.fids != fids_t:
                continue
            lams = []
            for G, H in zip(polys_t, anc.polys):
                lam = _proportional(G, H, self.M)
                if lam is None:
                    break
                lams.append(lam)
            else:
                digits = [pt for (_, pt) in path[idx:]]
                inc = {f: V[f] - anc.V[f] for f in fids_t}
                anc.back_from.append((digits, inc, dict(zip(fids_t, lams))))
                return Child("back", a, 1, {"target": anc.ident})
        if node.depth + 1 > self.max_depth or len(self.nodes) >= self.max_nodes:
            return Child("unresolved", a, 1, {"fids": fids_t, "polys": polys_t})
        child = self._new_node(node.depth + 1, fids_t, polys_t, V)
        self._build(child, path)
        return Child("node", a, 1, {"node": child.ident, "incs": incs})

    def _build(self, node: TNode, stack: list) -> None:
        respolys = [_residue_poly(G, self.M) for G in node.polys]
        if self.M.symbolic:
            self._build_symbolic(node, respolys, stack)
            return
        for a in self._points():
            kind, data = self._classify(node, respolys, a)
            if kind == "split":
                ch = self._child_node(node, a, data["vanish"], stack)
                ch.data["res"] = data["res"]
                node.children.append(ch)
            else:
                node.children.append(Child(kind, a, 1, data))

    # symbolic residue field
    def _build_symbolic(self, node: TNode, respolys: list, stack: list) -> None:
        n = self.n
        xs = sympy.symbols(f"w1:{n + 1}")
        exprs = [_to_sympy(rp, xs) for rp in respolys]
        sing = _singular_points(exprs, xs)
        hensel = []
        for k, g in enumerate(exprs):
            if not g.free_symbols:
                continue
            others = [h for m, h in enumerate(exprs) if m != k]
            if sing is None:
                ints = [_int_poly(rp) for rp in respolys]
                parts = [atom(ints[k], "=")]
                parts.append(disj(*[atom(_int_poly(_partial(respolys[k], j, None)), "!=")
                                    for j in range(n) if _partial(respolys[k], j, None)]))
                parts.extend(atom(h, "!=") for m, h in enumerate(ints) if m != k)
                cls = MotElem.klass(ResidueFormulaClass(conj(*parts), n, [f"x{i + 1}" for i in range(n)]))
            else:
                cls = _smooth_class(g, others, sing, xs)
            hensel.append((k, cls))
        if sing is None:
            ints = [_int_poly(rp) for rp in respolys]
            const_cls = _count_class([], [_to_sympy(h, xs) for h in ints], xs)
            count = MotElem.L(n) - const_cls
            for _, cls in hensel:
                count = count - cls
            node.children.append(Child("const", None, const_cls, {"res": {}}))
            node.children.append(Child("unresolved", None, count.simplify(),
                                       {"reason": "singular locus is not a finite set of rational points"}))
        else:
            count = MotElem.L(n) - len(sing)
            for _, cls in hensel:
                count = count - cls
            node.children.append(Child("const", None, count.simplify(), {"res": {}}))
            for a in sing:
                vals = [_eval_res(rp, a, None) for rp in respolys]
                vanish = [k for k, v in enumerate(vals) if v == 0]
                ch = self._child_node(node, a, vanish, stack)
                ch.data["res"] = {node.fids[m]: vals[m] for m in range(len(vals)) if m not in vanish}
                node.children.append(ch)
        for k, cls in hensel:
            if not cls.is_zero():
                node.children.append(Child("hensel", None, cls, {"fid": node.fids[k], "var": None, "res": {}}))


def _smooth_class(g, others: list, sing: list, xs) -> MotElem:
    """Class of the points where g vanishes, is smooth, and no other
    residue polynomial vanishes (generic residue characteristic)."""
    _, facs = sympy.factor_list(g, *xs)
    total = MotElem.zero()
    comps = [h for h, mult in facs if mult == 1 and h.free_symbols]
    for h in comps:
        rest = [r for r in comps if r is not h] + [o for o in others if o.free_symbols]
        cls = _count_class([h], rest, xs)
        bad = 0
        for a in sing:
            sub = dict(zip(xs, [sympy.Rational(x.numerator, x.denominator) for x in a]))
            if h.subs(sub) == 0 and all(r.subs(sub) != 0 for r in rest):
                bad += 1
        total = total + cls - bad
    for o in others:
        if not o.free_symbols and o == 0:
            return MotElem.zero()
    return total.simplify()


def _count_class(eqs: list, nes: list, xs) -> MotElem:
    """Class of {eqs = 0, nes != 0} in the affine space on xs.

    Equations solvable for a variable with constant coefficient are
    eliminated; remaining conditions that are coordinate hyperplanes give
    powers of (L - 1); anything else stays a formula class."""
    xs = list(xs)
    eqs = [sympy.expand(e) for e in eqs]
    nes = [sympy.expand(e) for e in nes]
    changed = True
    while changed:
        changed = False
        for i, e in enumerate(eqs):
            if not e.free_symbols:
                if e != 0:
                    return MotElem.zero()
                eqs.pop(i)
                changed = True
                break
            for v in reversed(xs):
                if v not in e.free_symbols:
                    continue
                pe = sympy.Poly(e, v)
                if pe.degree() == 1 and not pe.coeffs()[0].free_symbols:
                    val = sympy.solve(e, v)[0]
                    eqs = [sympy.expand(x.subs(v, val)) for j, x in enumerate(eqs) if j != i]
                    nes = [sympy.expand(x.subs(v, val)) for x in nes]
                    xs.remove(v)
                    changed = True
                    break
            if changed:
                break
    factors: list = []
    for e in nes:
        if not e.free_symbols:
            if e == 0:
                return MotElem.zero()
            continue
        _, facs = sympy.factor_list(e, *xs)
        for h, _ in facs:
            if h.free_symbols and not any(sympy.simplify(h / f).is_number for f in factors):
                factors.append(h)
    used = set()
    hyper = []
    general = []
    for h in factors:
        syms = h.free_symbols
        if len(syms) == 1 and sympy.Poly(h, *syms).is_monomial:
            hyper.append(h)
            used |= syms
        else:
            general.append(h)
    coord_vars = {next(iter(h.free_symbols)) for h in hyper}
    if not eqs and not general:
        return (MotElem.L() - 1) ** len(coord_vars) * MotElem.L(len(xs) - len(coord_vars))
    involved = sorted(set().union(*[e.free_symbols for e in eqs + general + hyper]), key=lambda s: xs.index(s))
    free = len(xs) - len(involved)
    parts = [atom(_sympy_to_int(e, involved), "=") for e in eqs]
    parts += [atom(_sympy_to_int(h, involved), "!=") for h in general + hyper]
    phi = ResidueFormulaClass(conj(*parts), len(involved), [f"x{i + 1}" for i in range(len(involved))])
    return MotElem.klass(phi) * MotElem.L(free)


def _sympy_to_int(e, xs) -> dict[tuple, int]:
    poly = sympy.Poly(e, *xs)
    den = 1
    for c in poly.coeffs():
        den = sympy.ilcm(den, sympy.Rational(c).q)
    return {tuple(m): int(c * den) for m, c in zip(poly.monoms(), poly.coeffs())}


def _to_sympy(rp: Mapping[tuple, Any], xs) -> Any:
    expr = 0
    for e, c in rp.items():
        term = sympy.Rational(Fraction(c).numerator, Fraction(c).denominator)
        for x, k in zip(xs, e):
            term *= x**k
        expr += term
    return sympy.expand(expr)


def _int_poly(rp: Mapping[tuple, Any]) -> dict[tuple, int]:
    den = 1
    for c in rp.values():
        den = den * Fraction(c).denominator // __import__("math").gcd(den, Fraction(c).denominator)
    return {e: int(Fraction(c) * den) for e, c in rp.items() if c}


def _singular_points(exprs: list, xs) -> list[tuple] | None:
    """Rational points where two residue polynomials vanish or one is
    singular; None when that set is not finite and rational."""
    systems = []
    for i, g in enumerate(exprs):
        if g.free_symbols:
            systems.append([g] + [sympy.diff(g, x) for x in xs])
        for h in exprs[i + 1:]:
            if g.free_symbols and h.free_symbols:
                systems.append([g, h])
    pts: set = set()
    for eqs in systems:
        eqs = [e for e in eqs if e != 0]
        try:
            sols = sympy.solve(eqs, xs, dict=True)
        except NotImplementedError:
            return None
        for s in sols:
            if len(s) < len(xs):
                return None
            vals = []
            for x in xs:
                v = s[x]
                if not v.is_Rational:
                    return None
                vals.append(Fraction(int(v.p), int(v.q)))
            pts.add(tuple(vals))
    return sorted(pts)


# -- families ------------------------------------------------------------------------

@dataclass
class Family:
    """A family of residue polydiscs sharing one refinement path."""

    kind: str  # const hensel unresolved limit
    segments: list  # ("fixed", point) or ("loop", [points], loop id)
    loops: tuple  # active loop ids, outermost first
    depth: Affine  # depth D of the node; digits 0..D are fixed
    V: dict  # factor id -> Affine
    units: dict  # factor id -> UnitData (ac of the unit part at the leaf)
    count: Any = 1
    node: TNode | None = None
    point: tuple | None = None
    fid: int | None = None  # vanishing factor of a hensel family
    var: int | None = None  # distinguished coordinate
    slope: Any = None  # residue of dG/dz at the point (hensel)

    def loop_names(self) -> dict[int, str]:
        return {k: f"d{i + 1}" for i, k in enumerate(self.loops)}


class Decomposition:
    """The refinement tree of a factor tuple, its families and its cells."""

    def __init__(self, factors: Sequence[Mapping[tuple, tuple]], n: int, ctx: PAdicContext,
                 names: Sequence[str] | None = None, max_depth: int = DEFAULT_MAX_DEPTH,
                 max_nodes: int = DEFAULT_MAX_NODES):
        self.engine = Engine(factors, n, ctx, max_depth, max_nodes)
        self.n = n
        self.ctx = ctx
        self.p = self.engine.p
        self.names = list(names) if names else [f"x{i + 1}" for i in range(n)]
        self.factors = self.engine.factors
        self.loop_len: dict[int, int] = {}
        self.loop_digits: dict[int, list] = {}
        self.groups: list[Family] = []
        self.families: list[Family] = []
        self._walk()

    # walking the tree with loop parameters
    def _walk(self) -> None:
        eng = self.engine
        V0 = {f: Affine(v) for f, v in eng.root.V.items()}
        U0 = {f: UnitData(1 if self.p else Fraction(1)) for f in eng.root.V}
        self._visit(eng.root, [], (), Affine(0), V0, U0, [])

    def _visit(self, node: TNode, segments: list, loops: tuple, depth: Affine, V: dict, units: dict,
               open_loops: list) -> None:
        p = self.p
        if len(node.back_from) > 1:
            raise UnsupportedSplit("several loops return to the same node", {"node": node.ident})
        if node.back_from:
            digits, inc, lams = node.back_from[0]
            lid = len(self.loop_len)
            self.loop_len[lid] = len(digits)
            self.loop_digits[lid] = digits
            limit = Family("limit", segments + [("loop", digits, lid)], loops, depth, dict(V), dict(units),
                           node=node)
            self.families.append(limit)
            loops = loops + (lid,)
            depth = depth + _loop(lid, len(digits))
            V = {f: (V[f] + _loop(lid, inc[f]) if f in inc else V[f]) for f in V}
            units = {f: (units[f].with_loop(lid, lams[f]) if f in lams else units[f]) for f in units}
            segments = segments + [("loop", digits, lid)]
            open_loops = open_loops + [(node.ident, lid)]
        nonconst = 0
        hens_counts: dict[int, Any] = {}
        unres = 0
        for ch in node.children:
            a = ch.point
            if ch.kind == "const":
                fam_units = dict(units)
                for f, r in ch.data["res"].items():
                    fam_units[f] = units[f].times(r, p)
                fam = Family("const", segments + [("fixed", a)], loops, depth, dict(V), fam_units,
                             count=ch.count, node=node, point=a)
                if self.engine.M.symbolic:
                    self.groups.append(fam)
                else:
                    self.families.append(fam)
                continue
            nonconst += 1 if not self.engine.M.symbolic else 0
            if ch.kind == "hensel":
                fam_units = dict(units)
                for f, r in ch.data["res"].items():
                    fam_units[f] = units[f].times(r, p)
                fam = Family("hensel", segments + [("fixed", a)], loops, depth, dict(V), fam_units,
                             count=ch.count, node=node, point=a, fid=ch.data["fid"], var=ch.data["var"],
                             slope=ch.data.get("slope"))
                if self.engine.M.symbolic:
                    self.groups.append(fam)
                else:
                    self.families.append(fam)
                    hens_counts[fam.fid] = hens_counts.get(fam.fid, 0) + 1
            elif ch.kind == "unresolved":
                fam = Family("unresolved", segments + [("fixed", a)], loops, depth, dict(V), dict(units),
                             count=ch.count, node=node, point=a)
                if self.engine.M.symbolic:
                    self.groups.append(fam)
                else:
                    self.families.append(fam)
                    unres += 1
            elif ch.kind == "back":
                if not open_loops or open_loops[-1][0] != ch.data["target"]:
                    raise UnsupportedSplit("a loop crosses another loop", {"node": node.ident})
            elif ch.kind == "node":
                child = self.engine.nodes[ch.data["node"]]
                cV = {f: V[f] + ch.data["incs"][f] for f in child.fids}
                cV.update({f: V[f] for f in V if f not in child.fids})
                cunits = dict(units)
                for f, r in ch.data.get("res", {}).items():
                    cunits[f] = units[f].times(r, p)
                self._visit(child, segments + [("fixed", a)], loops, depth + 1, cV, cunits, open_loops)
        if not self.engine.M.symbolic:
            # aggregated groups for summation: const count written as L^n - (others)
            base = dict(V)
            self.groups.append(Family("const", segments, loops, depth, base, dict(units),
                                      count=MotElem.L(self.n) - nonconst, node=node))
            for f, k in sorted(hens_counts.items()):
                self.groups.append(Family("hensel", segments, loops, depth, base, dict(units), count=k,
                                          node=node, fid=f))
            if unres:
                self.groups.append(Family("unresolved", segments, loops, depth, base, dict(units),
                                          count=unres, node=node))

    # -- summation ---------------------------------------------------------------
    def family_sum(self, fam: Family, e1: Sequence[int], k2: Sequence[int], with_weights: bool = True) -> MotElem:
        """Integral of T^{ord f1} L^{-ord f2} (or just the measure) over a
        group family, as a Presburger sum over its loop parameters (and the
        order alpha of the Hensel coordinate)."""
        n = self.n
        loops = list(fam.loops)
        nv = len(loops) + (1 if fam.kind == "hensel" else 0)
        names = [f"d{i + 1}" for i in range(len(loops))] + (["alpha"] if fam.kind == "hensel" else [])
        a = [0] * nv
        b = [0] * nv
        a0 = 0
        b0 = 0

        def add_L(aff: Affine, k: int) -> None:
            nonlocal b0
            b0 += k * aff.const
            for i, lid in enumerate(loops):
                b[i] += k * aff.coef(lid)

        def add_T(aff: Affine, k: int) -> None:
            nonlocal a0
            a0 += k * aff.const
            for i, lid in enumerate(loops):
                a[i] += k * aff.coef(lid)

        cons = []
        for i in range(len(loops)):
            e = [0] * nv
            e[i] = 1
            cons.append(Ineq(tuple(e), 0))
        if fam.kind in ("const", "unresolved"):
            add_L(fam.depth + 1, -n)
        else:
            # alpha >= D + 1, measure (L - 1) L^{-alpha-1} L^{-(n-1)(D+1)}
            ai = nv - 1
            e = [0] * nv
            e[ai] = 1
            for i, lid in enumerate(loops):
                e[i] = -fam.depth.coef(lid)
            cons.append(Ineq(tuple(e), -fam.depth.const - 1))
            b[ai] -= 1
            b0 -= 1
            add_L(fam.depth + 1, -(n - 1))
        if with_weights:
            for f, aff in fam.V.items():
                add_T(aff, e1[f])
                add_L(aff, -k2[f])
            if fam.kind == "hensel":
                ai = nv - 1
                # ord g_f = V_f + alpha - D
                a[ai] += e1[fam.fid]
                b[ai] -= k2[fam.fid]
                add_T(fam.depth, -e1[fam.fid])
                add_L(fam.depth, k2[fam.fid])
        S = PresburgerSet(tuple(names), (tuple(cons),))
        total = sum_exponential(S, a, b) if nv else MotElem.one()
        coeff = fam.count if isinstance(fam.count, MotElem) else MotElem.const(fam.count)
        if fam.kind == "hensel":
            coeff = coeff * (MotElem.L() - 1)
        return coeff * MotElem.monomial(1, b0, a0) * total

    def mass(self) -> tuple[MotElem, MotElem]:
        """(measure of the resolved families, measure of the unresolved ones)."""
        res = MotElem.zero()
        unres = MotElem.zero()
        zeros = [0] * len(self.factors)
        for fam in self.groups:
            m = self.family_sum(fam, zeros, zeros, with_weights=False)
            if fam.kind == "unresolved":
                unres = unres + m
            else:
                res = res + m
        return res.simplify(), unres.simplify()

    def integral(self, e1: Sequence[int], k2: Sequence[int]) -> MotElem:
        total = MotElem.zero()
        for fam in self.groups:
            if fam.kind != "unresolved":
                total = total + self.family_sum(fam, e1, k2)
        return total.simplify()

    def unresolved(self) -> list[Family]:
        return [f for f in self.groups if f.kind == "unresolved"]

    # -- cells -------------------------------------------------------------------
    def cells(self) -> list["Cell"]:
        if self.engine.M.symbolic or isinstance(self.engine.M, FpTModel):
            raise UnsupportedSplit("explicit cells are produced in the fixed-prime model", None)
        out = []
        for fam in self.families:
            out.extend(_family_cells(self, fam))
        return out


# -- digits of a family -----------------------------------------------------------

def _digit_match(segments: list, digits: Sequence[Sequence[int]], K: int, pos: int = 0,
                 d: dict | None = None) -> Iterable[tuple[dict, int]]:
    """All loop assignments under which the family path matches the
    p-adic digits of a point (known to K digits).  Yields (d, length)."""
    d = dict(d or {})
    if not segments:
        yield d, pos
        return
    seg = segments[0]
    rest = segments[1:]
    if seg[0] == "fixed":
        if pos >= K:
            return
        if all(digits[i][pos] == seg[1][i] for i in range(len(seg[1]))):
            yield from _digit_match(rest, digits, K, pos + 1, d)
        return
    pts, lid = seg[1], seg[2]
    k = 0
    cur = pos
    while True:
        d[lid] = k
        yield from _digit_match(rest, digits, K, cur, d)
        if cur + len(pts) > K:
            return
        ok = all(digits[i][cur + j] == pts[j][i] for j in range(len(pts)) for i in range(len(pts[0])))
        if not ok:
            return
        cur += len(pts)
        k += 1


def _digits(x: Sequence[int], p: int, K: int) -> list[list[int]]:
    out = []
    for xi in x:
        xi = int(xi) % p**K
        row = []
        for _ in range(K):
            row.append(xi % p)
            xi //= p
        out.append(row)
    return out


def _path_value(segments: list, d: Mapping[int, int], coord: int, p: int, drop_last: bool = False) -> tuple[Fraction, int]:
    """Value of the digit string of a coordinate and its length."""
    val = Fraction(0)
    pos = 0
    segs = segments[:-1] if drop_last else segments
    for seg in segs:
        if seg[0] == "fixed":
            val += Fraction(seg[1][coord]) * Fraction(p) ** pos
            pos += 1
        else:
            for _ in range(d[seg[2]]):
                for pt in seg[1]:
                    val += Fraction(pt[coord]) * Fraction(p) ** pos
                    pos += 1
    return val, pos


def _limit_value(segments: list, d: Mapping[int, int], coord: int, p: int) -> Fraction:
    """Value of the prefix followed by the last loop repeated forever."""
    head, pos = _path_value(segments[:-1], d, coord, p)
    pts = segments[-1][1]
    block = sum(Fraction(pt[coord]) * Fraction(p) ** j for j, pt in enumerate(pts))
    return head + Fraction(p) ** pos * block / (1 - Fraction(p) ** len(pts))


def _segments_text(segments: list, names: Mapping[int, str]) -> str:
    parts = []
    for seg in segments:
        if seg[0] == "fixed":
            parts.append("(*)" if seg[1] is None else str(tuple(seg[1])))
        else:
            parts.append("[" + " ".join(str(tuple(pt)) for pt in seg[1]) + f"]^{names.get(seg[2], 'inf')}")
    return " ".join(parts)


# -- cells ---------------------------------------------------------------------------

@dataclass
class PreparedData:
    """ord and ac_1 of every factor on a cell as functions of (d, alpha, xi)."""

    i0: int | None
    ord_expr: str
    ac_expr: str
    ell: int = 0

    def to_json(self) -> dict:
        return {"i0": self.i0, "ord_expr": self.ord_expr, "ac_expr": self.ac_expr, "ell": self.ell}


@dataclass
class Cell:
    """{ord(z - c) = alpha, ac_1(z - c) = xi} over a base of the other
    coordinates (1-cell), or {z = c} (0-cell)."""

    kind: str  # "1-cell" or "0-cell"
    family: Family
    decomposition: Decomposition
    var: int
    alpha: str  # description of the admissible alpha
    xi: int | None  # fixed angular component, or None for every unit
    center: str
    prepared: PreparedData | None
    k: int = 1

    # membership ----------------------------------------------------------
    def locate(self, x: Sequence[int], K: int = 60) -> dict | None:
        """Cell parameters {d, alpha, xi} of a point, or None if outside.

        Points are integers read to K digits; a point within p^-(D+K) of an
        inexact Hensel center is placed on the 0-cell."""
        dec = self.decomposition
        p = dec.p
        fam = self.family
        n = dec.n
        z = self.var
        digits = _digits(x, p, K)
        if fam.kind == "limit":
            for d, _ in _digit_match(fam.segments[:-1], digits, K):
                if all(Fraction(x[i]) == _limit_value(fam.segments, d, i, p) for i in range(n)):
                    return {"d": d, "alpha": INF, "xi": 0}
            return None
        for d, _ in _digit_match(fam.segments, digits, K):
            D = fam.depth.at(d)
            if fam.kind == "hensel":
                c, prec = _hensel_center(dec, fam, x, d, K)
            else:
                c, _ = _path_value(fam.segments, d, z, p, drop_last=True)
                prec = INF
            diff = Fraction(x[z]) - c
            o = _frac_ord(diff, p)
            on_center = o == INF or o >= prec
            if self.kind == "0-cell":
                return {"d": d, "alpha": INF, "xi": 0} if on_center else None
            if on_center:
                return None
            xi = _frac_ac(diff, p)
            if self.xi is not None and (o != D or xi != self.xi):
                return None
            if self.xi is None and o < D + 1:
                return None
            return {"d": d, "alpha": o, "xi": xi}
        return None

    def contains(self, x: Sequence[int]) -> bool:
        return self.locate(x) is not None

    def vanishing(self) -> set:
        """Factors that vanish identically on a 0-cell."""
        fam = self.family
        if self.kind != "0-cell":
            return set()
        if fam.kind == "limit":
            return set(fam.node.fids)
        if fam.kind == "hensel":
            return {fam.fid}
        return set()

    # prepared data -------------------------------------------------------
    def predicted(self, params: Mapping[str, Any], exps: Sequence[int]) -> tuple[Any, int]:
        """(ord, ac_1) of prod g_f^{e_f} from the cell data alone."""
        dec = self.decomposition
        p = dec.p
        fam = self.family
        d = params["d"]
        if any(exps[f] for f in self.vanishing()):
            return INF, 0
        D = fam.depth.at(d)
        o = 0
        ac = 1
        for f, e in enumerate(exps):
            if not e:
                continue
            o += e * fam.V[f].at(d)
            u = fam.units[f].at(d, p)
            if fam.kind == "hensel" and f == fam.fid:
                o += e * (params["alpha"] - D)
                u = u * fam.slope * params["xi"] % p
            ac = ac * pow(u, e, p) % p
        return o, ac


def _frac_ord(x: Fraction, p: int) -> int | float:
    if x == 0:
        return INF
    return vp(x.numerator, p) - vp(x.denominator, p)


def _frac_ac(x: Fraction, p: int) -> int:
    o = _frac_ord(x, p)
    u = x / Fraction(p) ** o
    return u.numerator * pow(u.denominator, -1, p) % p


def _lift_root(coeffs: Sequence[int], r0: int, p: int, K: int) -> tuple[int, int | float]:
    """Root of an integer polynomial lifting a simple root r0 mod p, as
    (integer, precision).  Precision is INF when the integer is an exact root."""
    mod = p**K

    def f(y: int, m: int | None = None) -> int:
        v = sum(c * y**i for i, c in enumerate(coeffs))
        return v % m if m else v

    def df(y: int, m: int) -> int:
        return sum(i * c * pow(y, i - 1, m) for i, c in enumerate(coeffs) if i) % m

    r = r0 % p
    for _ in range(K.bit_length() + 2):
        fr = f(r, mod)
        if fr == 0:
            break
        r = (r - fr * pow(df(r, mod), -1, mod)) % mod
    for cand in (r, r - mod):
        if f(cand) == 0:
            return cand, INF
    return r, K


def _hensel_center(dec: Decomposition, fam: Family, x: Sequence[int], d: Mapping[int, int],
                   K: int) -> tuple[Fraction, int | float]:
    """Hensel root of the vanishing factor in the distinguished coordinate,
    in the original coordinates, with its absolute precision."""
    p = dec.p
    n = dec.n
    z = fam.var
    D = fam.depth.at(d)
    w = []
    for i in range(n):
        base, _ = _path_value(fam.segments, d, i, p, drop_last=True)
        w.append((Fraction(x[i]) - base) / Fraction(p) ** D)
    G = fam.node.polys[fam.node.fids.index(fam.fid)]
    deg = max(e[z] for e in G)
    coeffs = [Fraction(0)] * (deg + 1)
    for e, c in G.items():
        term = Fraction(c)
        for i in range(n):
            if i != z and e[i]:
                term *= w[i] ** e[i]
        coeffs[e[z]] += term
    ints = [int(c) for c in coeffs]
    root, prec = _lift_root(ints, fam.point[z], p, K)
    base, _ = _path_value(fam.segments, d, z, p, drop_last=True)
    return base + Fraction(p) ** D * root, D + prec


def _center_text(dec: Decomposition, fam: Family, z: int) -> str:
    segs = fam.segments[:-1]
    names = fam.loop_names()
    if all(seg[0] == "fixed" for seg in segs):
        return str(_path_value(segs, {}, z, dec.p)[0])
    return f"{dec.names[z]}-digits of {_segments_text(segs, names)}"


def _family_cells(dec: Decomposition, fam: Family) -> list[Cell]:
    n = dec.n
    names = fam.loop_names()
    D = fam.depth.text(names)
    cells = []
    path = _segments_text(fam.segments, names)
    if fam.kind == "limit":
        zero = set(fam.node.fids)
        if all(seg[0] == "fixed" for seg in fam.segments[:-1]):
            center = str(_limit_value(fam.segments, {}, n - 1, dec.p))
        else:
            center = f"limit of {path}"
        return [Cell("0-cell", fam, dec, n - 1, "inf", None, center, _prepared(dec, fam, zero), 1)]
    if fam.kind == "hensel":
        z = fam.var
        G = fam.node.polys[fam.node.fids.index(fam.fid)]
        center = f"{_center_text(dec, fam, z)} + {dec.p}^({D})*h_{{1,0}}({_hensel_args(dec, G, z)})"
        cells.append(Cell("1-cell", fam, dec, z, f"alpha >= {D} + 1", None, center, _prepared(dec, fam, set())))
        cells.append(Cell("0-cell", fam, dec, z, "inf", None, center, _prepared(dec, fam, {fam.fid})))
        return cells
    z = n - 1
    center = _center_text(dec, fam, z)
    prep = _prepared(dec, fam, set()) if fam.kind == "const" else None
    if fam.point[z] != 0:
        cells.append(Cell("1-cell", fam, dec, z, f"alpha = {D}", fam.point[z], center, prep))
    else:
        cells.append(Cell("1-cell", fam, dec, z, f"alpha >= {D} + 1", None, center, prep))
        cells.append(Cell("0-cell", fam, dec, z, "inf", None, center, prep))
    return cells


def _hensel_args(dec: Decomposition, G: Mapping[tuple, Any], z: int) -> str:
    """Coefficients of G in the distinguished coordinate, as polynomials in
    the rescaled other coordinates."""
    deg = max(e[z] for e in G)
    others = [f"w_{dec.names[i]}" for i in range(dec.n) if i != z]
    parts = []
    for k in range(deg + 1):
        sub = {tuple(x for i, x in enumerate(e) if i != z): c for e, c in G.items() if e[z] == k}
        parts.append(format_int_poly(sub, others) if sub and others else str(sum(sub.values())))
    return ", ".join(parts)


def _prepared(dec: Decomposition, fam: Family, zero: set) -> PreparedData:
    names = fam.loop_names()
    ords = []
    acs = []
    for f in range(len(dec.factors)):
        if f in zero:
            ords.append("inf")
            acs.append("0")
            continue
        o = fam.V[f].text(names)
        u = fam.units[f]
        lam = "".join(f"*{l}^{names[k]}" for k, l in u.lams)
        a = f"{u.res}{lam}"
        if fam.kind == "hensel" and f == fam.fid:
            o = f"{o} + alpha - ({fam.depth.text(names)})"
            a = f"{a}*{fam.slope}*xi"
        ords.append(o)
        acs.append(a)
    return PreparedData(1 if fam.kind == "hensel" else 0, "; ".join(ords), "; ".join(acs), 0)


def cell_to_json(c: Cell) -> dict:
    fam = c.family
    names = fam.loop_names()
    dec = c.decomposition
    base_coords = [dec.names[i] for i in range(dec.n) if i != c.var]
    return {
        "kind": c.kind,
        "var": dec.names[c.var],
        "base": {
            "presburger": " and ".join([f"{names[k]} >= 0" for k in fam.loops] + ([c.alpha] if c.alpha != "inf" else [])) or "true",
            "residue_formula": (f"digits of ({', '.join(base_coords)}) follow {_segments_text(fam.segments, names)}"
                                if base_coords else "true"),
        },
        "center": c.center,
        "alpha": c.alpha,
        "xi": c.xi if c.xi is not None else "unit",
        "k": c.k,
        "prepared": c.prepared.to_json() if c.prepared else None,
    }


def cell_measure(c: Cell) -> MotElem:
    """Haar measure of a cell: L^{-alpha-1} per (alpha, xi) fibre over a base
    of measure L^{-(n-1)(D+1)}, summed over the cell's parameters."""
    if c.kind == "0-cell":
        return MotElem.zero()
    fam = c.family
    dec = c.decomposition
    n = dec.n
    loops = list(fam.loops)
    nv = len(loops) + 1
    cons = []
    for i in range(len(loops)):
        e = [0] * nv
        e[i] = 1
        cons.append(Ineq(tuple(e), 0))
    e = [0] * nv
    e[-1] = 1
    for i, lid in enumerate(loops):
        e[i] = -fam.depth.coef(lid)
    if c.xi is not None:
        cons.append(Ineq(tuple(e), -fam.depth.const))
        cons.append(Ineq(tuple(-v for v in e), fam.depth.const))
    else:
        cons.append(Ineq(tuple(e), -fam.depth.const - 1))
    b = [0] * nv
    b[-1] = -1
    for i, lid in enumerate(loops):
        b[i] -= (n - 1) * fam.depth.coef(lid)
    b0 = -1 - (n - 1) * (fam.depth.const + 1)
    S = PresburgerSet(tuple([f"d{i + 1}" for i in range(len(loops))] + ["alpha"]), (tuple(cons),))
    total = sum_exponential(S, [0] * nv, b)
    coeff = MotElem.one() if c.xi is not None else MotElem.L() - 1
    return (coeff * MotElem.L(b0) * total).simplify()


# -- public entry points -------------------------------------------------------------

def _as_integrand(f: Any, names: Sequence[str] | None = None) -> tuple[dict, list[str]]:
    if isinstance(f, str):
        from .dplang import parse_polynomial

        return parse_polynomial(f, names)
    g = {tuple(e): (tuple(c) if isinstance(c, tuple) else (int(c),)) for e, c in f.items()}
    n = len(next(iter(g))) if g else 0
    return g, list(names) if names else [f"x{i + 1}" for i in range(n)]


def decompose(terms: Sequence[Any], ctx: PAdicContext, names: Sequence[str] | None = None,
              n: int | None = None, max_depth: int = DEFAULT_MAX_DEPTH) -> Decomposition:
    """Common refinement on which every listed term has explicit ord and ac."""
    if names is None and all(isinstance(t, str) for t in terms):
        from .dplang import polynomial_variables

        found: set = set()
        for t in terms:
            found |= set(polynomial_variables(t))
        names = sorted(found)
        if n is not None:
            k = 1
            while len(names) < n:
                if f"x{k}" not in names:
                    names.insert(0, f"x{k}")
                k += 1
    polys = []
    for t in terms:
        g, names = _as_integrand(t, names)
        polys.append(g)
    if not polys:
        raise ValueError("nothing to decompose")
    dims = {len(e) for g in polys for e in g}
    nn = dims.pop() if dims else (n or 1)
    # drop duplicated terms
    uniq = []
    for g in polys:
        if g not in uniq:
            uniq.append(g)
    return Decomposition(uniq, nn, ctx, names, max_depth)


def prepare_univariate(f: Any, ctx: PAdicContext, n: int = 1) -> list[tuple[Cell, PreparedData]]:
    """Cells of Z_p on which ord f and ac_1 f are explicit."""
    if n != 1:
        raise UnsupportedSplit("only ac depth 1 is prepared", {"depth": n})
    dec = decompose([f], ctx)
    if dec.n != 1:
        raise ValueError("prepare_univariate expects one variable")
    return [(c, c.prepared) for c in dec.cells()]


def sample_points(p: int, n: int, count: int = 1000, digits: int = 6, seed: int = 0) -> list[tuple[int, ...]]:
    rng = random.Random(seed)
    m = p**digits
    return [tuple(rng.randrange(m) for _ in range(n)) for _ in range(count)]


def check_partition(dec: Decomposition, points: Sequence[Sequence[int]]) -> list[tuple]:
    """Points not lying in exactly one cell (empty when the cells partition)."""
    cells = dec.cells()
    bad = []
    for x in points:
        hits = [c for c in cells if c.contains(x)]
        if len(hits) != 1:
            bad.append((tuple(x), len(hits)))
    return bad


def check_prepared(dec: Decomposition, points: Sequence[Sequence[int]], exps: Sequence[int]) -> list[tuple]:
    """Points where the prepared ord/ac of prod g_f^{e_f} disagrees with
    direct evaluation."""
    from .polys import eval_int, specialize

    cells = dec.cells()
    p = dec.p
    f_int = {}
    bad = []
    g_ints = [specialize(g, p) for g in dec.factors]
    for x in points:
        for c in cells:
            params = c.locate(x)
            if params is None:
                continue
            o_pred, a_pred = c.predicted(params, exps)
            val = 1
            for g, e in zip(g_ints, exps):
                if e:
                    val *= eval_int(g, x) ** e
            o = vp(val, p) if val else INF
            a = 0 if val == 0 else (val // p ** o) % p
            if (o, a) != (o_pred, a_pred):
                bad.append((tuple(x), (o, a), (o_pred, a_pred)))
            break
    return bad


# -- parametric preparation ----------------------------------------------------------

@dataclass
class ParamCell:
    """A cell of (x, y) over a base cell of x.

    On a base 1-cell the orders o_i + i*alpha of the terms a_i(x) y^i are
    compared (alpha = ord y); ``tied`` is the set of minimal indices.  Kinds:

    * "dominant": tied terms have nonzero residue sum S(xi); ord f = m;
    * "hensel": S(xi) = 0 at a simple root, cell ord(y - c) = alpha' > alpha
      around the root c of f(x, .) with ac_1 c = xi;
    * "hensel-0": y = c;
    * "zero": y = 0;
    * "fibre": the base is a 0-cell x = c, prepared by the univariate
      decomposition of f(c, y)."""

    base: Cell
    base_xi: int | None
    kind: str
    tied: tuple = ()
    xi: int | None = None
    theta: str = "true"

    def to_json(self, prep: "ParametricPreparation") -> dict:
        bj = cell_to_json(self.base)
        m = " = ".join(f"o{i} + {i}*alpha" for i in self.tied) or "none"
        S = " + ".join(f"ac(a{i})*xi^{i}" for i in self.tied)
        if self.kind == "dominant":
            res, center, alpha, ordx, acx = f"{S} != 0", "0", "alpha", m.split(" = ")[0], S
        elif self.kind == "hensel":
            res = f"{S} = 0"
            center = f"t0^alpha*h_{{1,0}}(f(x, t0^alpha*Y)/t0^({m.split(' = ')[0]}))"
            alpha, ordx, acx = "alpha' >= alpha + 1", f"{m.split(' = ')[0]} - alpha + alpha'", f"d/dxi({S})*xi'"
        elif self.kind == "hensel-0":
            res, center, alpha, ordx, acx = f"{S} = 0", "root of f(x, .) with ac xi", "inf", "inf", "0"
        elif self.kind == "zero":
            res, center, alpha, ordx, acx = "true", "0", "inf", "o0" if 0 in prep.idx else "inf", "ac(a0)" if 0 in prep.idx else "0"
        else:
            res, center, alpha, ordx, acx = "true", "fibre decomposition", "per fibre cell", "per fibre cell", "per fibre cell"
        kind = "0-cell" if self.kind in ("zero", "hensel-0") else "1-cell"
        return {
            "kind": kind,
            "var": prep.names[1],
            "base": {"presburger": f"{bj['base']['presburger']}; {bj['alpha']}; {self.theta}",
                     "residue_formula": f"base xi = {self.base_xi if self.base_xi is not None else bj['xi']}; {res}"},
            "center": center,
            "alpha": alpha,
            "xi": self.xi if self.xi is not None else "unit",
            "k": 1,
            "prepared": {"i0": min(self.tied) if self.tied else None, "ord_expr": ordx, "ac_expr": acx, "ell": 0},
        }


class ParametricPreparation:
    """Preparation of f(x, y) = sum_i a_i(x) y^i in y over cells of x."""

    def __init__(self, f: Any, ctx: PAdicContext, names: Sequence[str] = ("x", "y")):
        from .polys import specialize

        g, names = _as_integrand(f, list(names))
        if len(names) != 2:
            raise ValueError("parametric preparation expects variables (x, y)")
        self.ctx = ctx
        self.p = ctx.p
        self.names = names
        self.f = specialize(g, self.p)
        coeffs: dict[int, dict[tuple, int]] = {}
        for (ex, ey), c in self.f.items():
            coeffs.setdefault(ey, {})[(ex,)] = c
        self.idx = sorted(coeffs)
        self.coeffs = coeffs
        self.base = Decomposition([{e: (c,) for e, c in coeffs[i].items()} for i in self.idx], 1, ctx, [names[0]])
        self.base_cells = self.base.cells()
        self._fibres: dict[Fraction, Decomposition | None] = {}
        self.cells: list[ParamCell] = []
        for bc in self.base_cells:
            if bc.kind == "0-cell":
                self.cells.append(ParamCell(bc, None, "fibre"))
                continue
            for eta in ([bc.xi] if bc.xi is not None else range(1, self.p)):
                for tied, theta in self._branches(bc):
                    for xi in range(1, self.p):
                        self.cells.append(ParamCell(bc, eta, "dominant", tied, xi, theta))
                        if len(tied) > 1:
                            self.cells.append(ParamCell(bc, eta, "hensel", tied, xi, theta))
                            self.cells.append(ParamCell(bc, eta, "hensel-0", tied, xi, theta))
                self.cells.append(ParamCell(bc, eta, "zero"))

    # order of a_i on a base 1-cell as an affine form in (d..., beta)
    def _ord_form(self, bc: Cell, k: int) -> tuple[list[int], int]:
        fam = bc.family
        loops = list(fam.loops)
        v = fam.V[k]
        coeffs = [v.coef(l) for l in loops] + [0]
        const = v.const
        if fam.kind == "hensel" and k == fam.fid:
            coeffs[-1] += 1
            for i, l in enumerate(loops):
                coeffs[i] -= fam.depth.coef(l)
            const -= fam.depth.const
        return coeffs, const

    def _branches(self, bc: Cell) -> list[tuple[tuple, str]]:
        """Nonempty argmin sets of o_i + i*alpha over the base, in the order
        of the index tuples."""
        fam = bc.family
        loops = list(fam.loops)
        nv = len(loops) + 2
        names = [f"d{i + 1}" for i in range(len(loops))] + ["beta", "alpha"]
        base = []
        for i in range(len(loops)):
            e = [0] * nv
            e[i] = 1
            base.append(Ineq(tuple(e), 0))
        e = [0] * nv
        e[-1] = 1
        base.append(Ineq(tuple(e), 0))
        e = [0] * nv
        e[-2] = 1
        for i, l in enumerate(loops):
            e[i] = -fam.depth.coef(l)
        if bc.xi is not None:
            base.append(Ineq(tuple(e), -fam.depth.const))
            base.append(Ineq(tuple(-x for x in e), fam.depth.const))
        else:
            base.append(Ineq(tuple(e), -fam.depth.const - 1))
        forms = []
        for k, i in enumerate(self.idx):
            c, k0 = self._ord_form(bc, k)
            forms.append((c + [i], k0))
        out = []
        r = len(self.idx)
        for size in range(1, r + 1):
            from itertools import combinations

            for tied in combinations(range(r), size):
                cons = list(base)
                for a, b in zip(tied, tied[1:]):
                    diff = [x - y for x, y in zip(forms[a][0], forms[b][0])]
                    k0 = forms[a][1] - forms[b][1]
                    cons.append(Ineq(tuple(diff), k0))
                    cons.append(Ineq(tuple(-x for x in diff), -k0))
                for o in range(r):
                    if o in tied:
                        continue
                    a = tied[0]
                    diff = [x - y for x, y in zip(forms[o][0], forms[a][0])]
                    cons.append(Ineq(tuple(diff), forms[o][1] - forms[a][1] - 1))
                S = PresburgerSet(tuple(names), (tuple(cons),))
                if not is_empty(S):
                    txt = " and ".join(str(c) for c in _ineq_texts(cons[len(base):], names)) or "true"
                    out.append((tuple(self.idx[t] for t in tied), txt))
        return out

    # membership and prepared data -------------------------------------------
    def _coeff_data(self, bc: Cell, bp: Mapping[str, Any]) -> dict[int, tuple[int, int]]:
        r = len(self.idx)
        return {i: bc.predicted(bp, [1 if j == k else 0 for j in range(r)]) for k, i in enumerate(self.idx)}

    def locate(self, pt: Sequence[int]) -> list[tuple[ParamCell, tuple[Any, int]]]:
        """Cells containing (x, y) with the prepared (ord f, ac_1 f) there."""
        p = self.p
        x, y = int(pt[0]), int(pt[1])
        hits = []
        for c in self.cells:
            bp = c.base.locate([x])
            if bp is None or (c.base_xi is not None and bp["xi"] != c.base_xi):
                continue
            if c.kind == "fibre":
                hits.append((c, self._fibre_value(c.base, x, y)))
                continue
            data = self._coeff_data(c.base, bp)
            if c.kind == "zero":
                if y == 0:
                    hits.append((c, data.get(0, (INF, 0))))
                continue
            if y == 0:
                continue
            alpha = vp(y, p)
            xi = (y // p**alpha) % p
            if xi != c.xi:
                continue
            ords = {i: o + i * alpha for i, (o, _) in data.items()}
            m = min(ords.values())
            tied = tuple(i for i in self.idx if ords[i] == m)
            if tied != c.tied:
                continue
            S = sum(data[i][1] * pow(xi, i, p) for i in tied) % p
            if c.kind == "dominant":
                if S:
                    hits.append((c, (m, S)))
                continue
            if S:
                continue
            dS = sum(i * data[i][1] * pow(xi, i - 1, p) for i in tied if i) % p
            if not dS:
                raise UnsupportedSplit("multiple root of the residue polynomial",
                                       {"x": x, "alpha": alpha, "xi": xi, "tied": tied})
            root, prec = self._root(x, alpha, m, xi)
            diff = Fraction(y) - root
            o2 = _frac_ord(diff, p)
            on_center = o2 == INF or o2 >= prec
            if c.kind == "hensel-0" and on_center:
                hits.append((c, (INF, 0)))
            elif c.kind == "hensel" and not on_center:
                hits.append((c, (m - alpha + o2, dS * _frac_ac(diff, p) % p)))
        return hits

    def _root(self, x: int, alpha: int, m: int, xi: int) -> tuple[Fraction, int | float]:
        """Root c = p^alpha u of f(x, .) with u = xi mod p."""
        p = self.p
        deg = max(self.idx)
        g = [0] * (deg + 1)
        for (ex, ey), c in self.f.items():
            g[ey] += c * x**ex * p ** (alpha * ey)
        g = [c // p**m for c in g]
        u, prec = _lift_root(g, xi, p, 60)
        return Fraction(p**alpha * u), alpha + prec

    def _fibre_value(self, bc: Cell, x: int, y: int) -> tuple[Any, int]:
        fam = bc.family
        p = self.p
        if fam.kind == "limit":
            c = _limit_value(fam.segments, bc.locate([x])["d"], 0, p)
        elif fam.kind == "hensel":
            c, prec = _hensel_center(bc.decomposition, fam, [x], bc.locate([x])["d"], 60)
            if prec != INF:
                raise UnsupportedSplit("fibre over an irrational center", {"x": x})
        else:
            c, _ = _path_value(fam.segments, bc.locate([x])["d"], 0, p, drop_last=True)
        if c not in self._fibres:
            poly = {}
            for (ex, ey), k in self.f.items():
                poly[ey] = poly.get(ey, Fraction(0)) + k * c**ex
            den = 1
            for v in poly.values():
                den = den * v.denominator // __import__("math").gcd(den, v.denominator)
            ints = {(e,): (int(v * den),) for e, v in poly.items() if v}
            self._fibres[c] = (Decomposition([ints], 1, self.ctx, [self.names[1]]) if ints else None, den)
        dec, den = self._fibres[c]
        if dec is None:
            return INF, 0
        for cell in dec.cells():
            params = cell.locate([y])
            if params is not None:
                o, a = cell.predicted(params, [1])
                if o == INF:
                    return INF, 0
                return o, a * pow(den, -1, p) % p
        raise AssertionError("fibre decomposition does not cover the point")

    def to_json(self) -> list[dict]:
        return [c.to_json(self) for c in self.cells]


def _ineq_texts(cons: Sequence[Ineq], names: Sequence[str]) -> list[str]:
    out = []
    for c in cons:
        terms = [f"{k}*{n}" if k != 1 else n for k, n in zip(c.coeffs, names) if k]
        out.append(f"{' + '.join(terms) or '0'} + {c.const} >= 0".replace("+ -", "- "))
    return out


def prepare_parametric(f: Any, ctx: PAdicContext, names: Sequence[str] = ("x", "y")) -> ParametricPreparation:
    """Preparation of f(x, y) in y over cells of the coefficients a_i(x).

    Orders i*alpha + ord a_i(x) are compared on each base cell (center 0
    for y); ties are resolved by the residue polynomial S(xi) of the tied
    terms.  A simple root of S gives a Hensel center; a multiple root raises
    UnsupportedSplit."""
    return ParametricPreparation(f, ctx, names)


def check_parametric(prep: ParametricPreparation, points: Sequence[Sequence[int]]) -> list[tuple]:
    """Points not in exactly one cell or whose prepared data disagree with
    direct evaluation."""
    from .polys import eval_int

    p = prep.p
    bad = []
    for pt in points:
        hits = prep.locate(pt)
        if len(hits) != 1:
            bad.append((tuple(pt), "cells", len(hits)))
            continue
        v = eval_int(prep.f, pt)
        o = vp(v, p) if v else INF
        a = (v // p**o) % p if v else 0
        if hits[0][1] != (o, a):
            bad.append((tuple(pt), (o, a), hits[0][1]))
    return bad
