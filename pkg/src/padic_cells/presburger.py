"""Presburger sets and exact sums of L^(b.z) T^(a.z) over them.

Sets are finite unions of conjunctions of affine inequalities
``c.z + k >= 0`` and congruences ``c.z + k = 0 mod m``.  Summation
eliminates the last variable at a time: after substituting z' = M w + rho
for the variables that share a constraint with z, every bound on z becomes
an integral affine function and the congruences on z collapse to one
progression z = N v + z0.  Splitting according to which lower and which
upper bound is active leaves a polynomial-weighted geometric sum in v with
affine limits, which has a closed form.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from itertools import product
from math import comb, gcd
from typing import Iterable, Mapping, Sequence

from .errors import Divergent
from .motring import MotElem


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


# -- constraints -----------------------------------------------------------

@dataclass(frozen=True)
class Ineq:
    """sum coeffs[i] z_i + const >= 0"""

    coeffs: tuple[int, ...]
    const: int

    def holds(self, z: Sequence[int]) -> bool:
        return sum(c * x for c, x in zip(self.coeffs, z)) + self.const >= 0

    def normalized(self) -> "Ineq":
        g = reduce(gcd, (abs(c) for c in self.coeffs), 0)
        if g > 1:
            return Ineq(tuple(c // g for c in self.coeffs), self.const // g)
        return self


@dataclass(frozen=True)
class Cong:
    """sum coeffs[i] z_i + const = 0 mod modulus"""

    coeffs: tuple[int, ...]
    const: int
    modulus: int

    def __post_init__(self) -> None:
        if self.modulus <= 0:
            raise ValueError("congruence modulus must be positive")

    def holds(self, z: Sequence[int]) -> bool:
        return (sum(c * x for c, x in zip(self.coeffs, z)) + self.const) % self.modulus == 0

    def normalized(self) -> "Cong":
        m = self.modulus
        return Cong(tuple(c % m for c in self.coeffs), self.const % m, m)


Constraint = Ineq | Cong


def _is_const(c: Constraint) -> bool:
    return all(x == 0 for x in c.coeffs)


def _const_truth(c: Constraint) -> bool:
    return c.holds([0] * len(c.coeffs))


@dataclass(frozen=True)
class PresburgerSet:
    variables: tuple[str, ...]
    clauses: tuple[tuple[Constraint, ...], ...]

    def contains(self, z: Sequence[int]) -> bool:
        return any(all(c.holds(z) for c in cl) for cl in self.clauses)

    def enumerate(self, box) -> list[tuple[int, ...]]:
        return enumerate_points(self, box)

    @classmethod
    def box(cls, variables: Sequence[str], lows: Sequence[int | None], highs: Sequence[int | None] | None = None) -> "PresburgerSet":
        n = len(variables)
        cons = []
        highs = highs or [None] * n
        for i, (lo, hi) in enumerate(zip(lows, highs)):
            e = [0] * n
            if lo is not None:
                e[i] = 1
                cons.append(Ineq(tuple(e), -lo))
            if hi is not None:
                e = [0] * n
                e[i] = -1
                cons.append(Ineq(tuple(e), hi))
        return cls(tuple(variables), (tuple(cons),))

    @classmethod
    def from_json(cls, data: Mapping | str) -> "PresburgerSet":
        if isinstance(data, str):
            data = json.loads(data)
        variables = tuple(data.get("variables") or data.get("vars") or ())
        if "clauses" in data:
            raw_clauses = data["clauses"]
        else:
            raw_clauses = [data.get("constraints", [])]
        clauses = []
        for cl in raw_clauses:
            cons: list[Constraint] = []
            for c in cl:
                cons.extend(_parse_constraint(c, variables))
            clauses.append(tuple(cons))
        return cls(variables, tuple(clauses))

    def to_json(self) -> dict:
        out = []
        for cl in self.clauses:
            row = []
            for c in cl:
                if isinstance(c, Ineq):
                    row.append({"type": "ge", "coeffs": list(c.coeffs), "const": c.const})
                else:
                    row.append({"type": "cong", "coeffs": list(c.coeffs), "const": c.const, "mod": c.modulus})
            out.append(row)
        return {"variables": list(self.variables), "clauses": out}

    def __str__(self) -> str:
        def aff(c: Constraint) -> str:
            terms = []
            for k, v in zip(c.coeffs, self.variables):
                if k:
                    terms.append(f"{'' if k == 1 else '-' if k == -1 else k}{'' if abs(k) == 1 else '*'}{v}" if k not in (1, -1) else ("-" if k == -1 else "") + v)
            s = " + ".join(terms).replace("+ -", "- ") or "0"
            if c.const:
                s += f" + {c.const}" if c.const > 0 else f" - {-c.const}"
            return s
        parts = []
        for cl in self.clauses:
            atoms = []
            for c in cl:
                if isinstance(c, Ineq):
                    atoms.append(f"{aff(c)} >= 0")
                else:
                    atoms.append(f"{aff(c)} = 0 mod {c.modulus}")
            parts.append(" and ".join(atoms) or "true")
        return " or ".join(f"({p})" for p in parts) if len(parts) > 1 else (parts[0] if parts else "false")


_TERM = re.compile(r"\s*([+-]?)\s*(\d*)\s*\*?\s*([A-Za-z_][A-Za-z_0-9]*)?")


def _parse_affine(src: str, variables: Sequence[str]) -> tuple[list[int], int]:
    coeffs = [0] * len(variables)
    const = 0
    s = src.replace(" ", "")
    if not s:
        raise ValueError("empty affine expression")
    if s[0] not in "+-":
        s = "+" + s
    for m in re.finditer(r"([+-])(\d*)\*?([A-Za-z_][A-Za-z_0-9]*)?", s):
        sign = -1 if m.group(1) == "-" else 1
        num = m.group(2)
        var = m.group(3)
        if not num and not var:
            raise ValueError(f"cannot parse affine expression {src!r}")
        k = sign * (int(num) if num else 1)
        if var:
            if var not in variables:
                raise ValueError(f"unknown variable {var!r}")
            coeffs[variables.index(var)] += k
        else:
            const += k
    if re.sub(r"([+-])(\d*)\*?([A-Za-z_][A-Za-z_0-9]*)?", "", s):
        raise ValueError(f"cannot parse affine expression {src!r}")
    return coeffs, const


def _parse_constraint(c: Mapping | str, variables: Sequence[str]) -> list[Constraint]:
    if isinstance(c, Mapping):
        kind = c.get("type", "ge")
        coeffs = tuple(int(x) for x in c["coeffs"])
        const = int(c.get("const", 0))
        if kind == "ge":
            return [Ineq(coeffs, const)]
        if kind == "le":
            return [Ineq(tuple(-x for x in coeffs), -const)]
        if kind == "eq":
            return [Ineq(coeffs, const), Ineq(tuple(-x for x in coeffs), -const)]
        if kind == "cong":
            return [Cong(coeffs, const, int(c["mod"]))]
        raise ValueError(f"unknown constraint type {kind!r}")
    src = c.strip()
    m = re.fullmatch(r"(.+?)(==|=|≡)(.+?)mod\s*(\d+)", src)
    if m:
        lhs, _, rhs, mod = m.groups()
        a, ka = _parse_affine(lhs, variables)
        b, kb = _parse_affine(rhs, variables)
        return [Cong(tuple(x - y for x, y in zip(a, b)), ka - kb, int(mod))]
    m = re.fullmatch(r"(.+?)(>=|<=|==|=|>|<)(.+)", src)
    if not m:
        raise ValueError(f"cannot parse constraint {src!r}")
    lhs, op, rhs = m.groups()
    a, ka = _parse_affine(lhs, variables)
    b, kb = _parse_affine(rhs, variables)
    d = tuple(x - y for x, y in zip(a, b))
    k = ka - kb
    nd = tuple(-x for x in d)
    if op == ">=":
        return [Ineq(d, k)]
    if op == ">":
        return [Ineq(d, k - 1)]
    if op == "<=":
        return [Ineq(nd, -k)]
    if op == "<":
        return [Ineq(nd, -k - 1)]
    return [Ineq(d, k), Ineq(nd, -k)]


# -- normalisation and satisfiability ---------------------------------------

def _normalize_conj(cons: Iterable[Constraint]) -> tuple[Constraint, ...] | None:
    out = set()
    for c in cons:
        c = c.normalized()
        if _is_const(c):
            if not _const_truth(c):
                return None
            continue
        out.add(c)
    return tuple(sorted(out, key=lambda c: (isinstance(c, Cong), c.coeffs, c.const, getattr(c, "modulus", 0))))


def normalize(S: PresburgerSet) -> PresburgerSet:
    clauses = []
    seen = set()
    for cl in S.clauses:
        nc = _normalize_conj(cl)
        if nc is None or nc in seen:
            continue
        if _conj_empty(len(S.variables), nc):
            continue
        seen.add(nc)
        clauses.append(nc)
    return PresburgerSet(S.variables, tuple(sorted(clauses, key=repr)))


def is_empty(S: PresburgerSet) -> bool:
    n = len(S.variables)
    for cl in S.clauses:
        nc = _normalize_conj(cl)
        if nc is not None and not _conj_empty(n, nc):
            return False
    return True


def enumerate_points(S: PresburgerSet, box: Sequence[tuple[int, int]] | int) -> list[tuple[int, ...]]:
    n = len(S.variables)
    if isinstance(box, int):
        box = [(-box, box)] * n
    elif len(box) == 2 and all(isinstance(x, int) for x in box):
        box = [tuple(box)] * n
    return [z for z in product(*(range(lo, hi + 1) for lo, hi in box)) if S.contains(z)]


# -- one-variable elimination ------------------------------------------------

@dataclass
class _Piece:
    """A region on the remaining variables, the substitution applied to the
    variables sharing constraints with z, and the progression z = N v + z0
    with v between the chosen lower and upper bound (affine, integral)."""

    cons: list[Constraint]
    scale: int
    shift: tuple[int, ...]
    N: int
    z0: int
    lower: tuple[tuple[int, ...], int] | None
    upper: tuple[tuple[int, ...], int] | None


def _solve_cong(a: int, b: int, m: int) -> tuple[int, int] | None:
    """Solutions of a z = b mod m as z = r mod n, or None."""
    g = gcd(a % m, m)
    if b % g:
        return None
    n = m // g
    if n == 1:
        return 0, 1
    r = (b // g) * pow((a // g) % n, -1, n) % n
    return r, n


def _crt(r1: int, n1: int, r2: int, n2: int) -> tuple[int, int] | None:
    g = gcd(n1, n2)
    if (r2 - r1) % g:
        return None
    l = n1 // g * n2
    k = ((r2 - r1) // g) * pow(n1 // g, -1, n2 // g) % (n2 // g) if n2 // g > 1 else 0
    return (r1 + n1 * k) % l, l


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _eliminate(n: int, cons: Sequence[Constraint]) -> list[_Piece]:
    """Eliminate variable n-1 from a conjunction over n variables."""
    z = n - 1
    with_z = [c for c in cons if c.coeffs[z] != 0]
    without = [c for c in cons if c.coeffs[z] == 0]
    linked = sorted({i for c in with_z for i in range(z) if c.coeffs[i] != 0})
    M = 1
    for c in with_z:
        M = _lcm(M, abs(c.coeffs[z]))
        if isinstance(c, Cong):
            M = _lcm(M, c.modulus)
    if not linked:
        M = 1
    pieces: list[_Piece] = []
    for rho_linked in product(range(M), repeat=len(linked)):
        rho = [0] * z
        for i, r in zip(linked, rho_linked):
            rho[i] = r
        scale_vec = [M if i in linked else 1 for i in range(z)]

        def subst(c: Constraint) -> Constraint:
            co = tuple(c.coeffs[i] * scale_vec[i] for i in range(z)) + (c.coeffs[z],)
            k = c.const + sum(c.coeffs[i] * rho[i] for i in range(z))
            return Ineq(co, k) if isinstance(c, Ineq) else Cong(co, k, c.modulus)

        base = []
        ok = True
        for c in without:
            s = subst(c)
            s2 = s.normalized() if isinstance(s, Cong) else s
            if _is_const(s2):
                if not _const_truth(s2):
                    ok = False
                    break
                continue
            base.append(s2)
        if not ok:
            continue
        lowers, uppers = [], []
        r0, N = 0, 1
        for c in with_z:
            s = subst(c)
            a = s.coeffs[z]
            rest = s.coeffs[:z]
            if isinstance(s, Cong):
                # rest coefficients are multiples of the modulus now
                sol = _solve_cong(a, -s.const, s.modulus)
                if sol is None:
                    ok = False
                    break
                comb_ = _crt(r0, N, sol[0], sol[1])
                if comb_ is None:
                    ok = False
                    break
                r0, N = comb_
            elif a > 0:
                lowers.append((tuple(-x // a for x in rest), _ceil_div(-s.const, a)))
            else:
                b = -a
                uppers.append((tuple(x // b for x in rest), s.const // b))
        if not ok:
            continue
        # v >= ceil((l - r0) / N), v <= floor((u - r0) / N)
        lo_v = [(tuple(x // N for x in co), _ceil_div(k - r0, N)) for co, k in lowers]
        up_v = [(tuple(x // N for x in co), (k - r0) // N) for co, k in uppers]
        for i_l in range(max(1, len(lo_v))):
            for i_u in range(max(1, len(up_v))):
                region = list(base)
                lo = lo_v[i_l] if lo_v else None
                up = up_v[i_u] if up_v else None
                for j, other in enumerate(lo_v):
                    if j == i_l:
                        continue
                    diff = tuple(x - y for x, y in zip(lo[0], other[0]))
                    region.append(Ineq(diff + (0,), lo[1] - other[1] - (0 if j > i_l else 1)))
                for j, other in enumerate(up_v):
                    if j == i_u:
                        continue
                    diff = tuple(y - x for x, y in zip(up[0], other[0]))
                    region.append(Ineq(diff + (0,), other[1] - up[1] - (0 if j > i_u else 1)))
                if lo is not None and up is not None:
                    diff = tuple(y - x for x, y in zip(lo[0], up[0]))
                    region.append(Ineq(diff + (0,), up[1] - lo[1]))
                region = [Ineq(c.coeffs[:z], c.const) if isinstance(c, Ineq) else Cong(c.coeffs[:z], c.const, c.modulus) for c in region]
                nr = _normalize_conj(region)
                if nr is None:
                    continue
                pieces.append(_Piece(list(nr), M, tuple(rho), N, r0, lo, up))
    return pieces


def _conj_empty(n: int, cons: Sequence[Constraint]) -> bool:
    if n == 0:
        return not all(_const_truth(c) for c in cons)
    for piece in _eliminate(n, cons):
        if not _conj_empty(n - 1, piece.cons):
            return False
    return True


# -- closed forms ------------------------------------------------------------

Poly = dict  # exponent tuple -> MotElem


def _padd(P: Poly, Q: Poly) -> Poly:
    out = dict(P)
    for e, c in Q.items():
        out[e] = out[e] + c if e in out else c
    return {e: c for e, c in out.items() if not c.is_zero()}


def _pmul_frac(P: Poly, Q: Mapping[tuple, Fraction]) -> Poly:
    out: Poly = {}
    for e1, c1 in P.items():
        for e2, c2 in Q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            term = c1 * MotElem.const(c2)
            out[e] = out[e] + term if e in out else term
    return {e: c for e, c in out.items() if not c.is_zero()}


def _affine_power(coeffs: Sequence[int], const: int, k: int, nv: int) -> dict[tuple, Fraction]:
    """(coeffs . w + const)^k as a polynomial over nv variables."""
    res: dict[tuple, Fraction] = {(0,) * nv: Fraction(1)}
    lin: dict[tuple, Fraction] = {}
    if const:
        lin[(0,) * nv] = Fraction(const)
    for i, c in enumerate(coeffs):
        if c:
            e = [0] * nv
            e[i] = 1
            lin[tuple(e)] = Fraction(c)
    for _ in range(k):
        new: dict[tuple, Fraction] = {}
        for e1, c1 in res.items():
            for e2, c2 in lin.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                new[e] = new.get(e, 0) + c1 * c2
        res = {e: c for e, c in new.items() if c}
    return res


@lru_cache(maxsize=None)
def _eulerian(j: int) -> tuple[int, ...]:
    """Numerator P_j of sum_{u>=0} u^j y^u = P_j(y) / (1-y)^(j+1)."""
    P = [1]
    for k in range(1, j + 1):
        # E_k = y d/dy (P/(1-y)^k) = y (P'(1-y) + k P) / (1-y)^(k+1)
        dP = [i * c for i, c in enumerate(P)][1:] or [0]
        t1 = [0] * (max(len(dP) + 1, len(P)))
        for i, c in enumerate(dP):
            t1[i] += c
            t1[i + 1] -= c
        for i, c in enumerate(P):
            t1[i] += k * c
        P = [0] + t1
        while len(P) > 1 and P[-1] == 0:
            P.pop()
    return tuple(P)


def _E(j: int, a: int, b: int) -> MotElem:
    """sum_{u>=0} u^j y^u with y = L^b T^a, as a ring element."""
    P = _eulerian(j)
    num = MotElem({((), b * i, a * i): Fraction(c) for i, c in enumerate(P) if c})
    g = MotElem.raw_geometric(a, b)
    out = num
    for _ in range(j + 1):
        out = out * g
    return out


@lru_cache(maxsize=None)
def _faulhaber(k: int) -> tuple[Fraction, ...]:
    """Coefficients of S_k(x) = sum_{v=1}^x v^k (polynomial extension)."""
    pts = list(range(k + 2))
    vals = []
    acc = Fraction(0)
    for x in pts:
        if x > 0:
            acc += Fraction(x) ** k
        vals.append(acc)
    coeffs = [Fraction(0)] * (k + 2)
    for i, xi in enumerate(pts):
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j, xj in enumerate(pts):
            if j != i:
                basis = [Fraction(0)] + basis
                for t in range(len(basis) - 1):
                    basis[t] -= xj * basis[t + 1]
                denom *= xi - xj
        for t, c in enumerate(basis):
            coeffs[t] += vals[i] * c / denom
    return tuple(coeffs)


@dataclass
class _Summand:
    poly: Poly  # over the current variables
    A: tuple[int, ...]
    A0: int
    B: tuple[int, ...]
    B0: int
    cons: list[Constraint]


def _mono_elem(A0: int, B0: int) -> MotElem:
    return MotElem.monomial(1, B0, A0)


def sum_exponential(S: PresburgerSet, a: Sequence[int], b: Sequence[int],
                    weight: Mapping[tuple, Fraction] | None = None, strict: bool = True) -> MotElem:
    """sum over z in S of weight(z) L^(b.z) T^(a.z), in closed form.

    ``weight`` is an optional polynomial with rational coefficients.  With
    ``strict`` the result must lie in the ring (admissible denominators
    only); otherwise intermediate denominators are allowed to survive."""
    n = len(S.variables)
    if len(a) != n or len(b) != n:
        raise ValueError("covector length does not match the number of variables")
    total = MotElem.zero()
    seen: list[tuple[Constraint, ...]] = []
    for cl in S.clauses:
        nc = _normalize_conj(cl)
        if nc is None:
            continue
        # make the clauses disjoint: this clause minus the earlier ones
        for part in _subtract(n, nc, seen):
            total = total + _sum_conj(n, part, a, b, weight, S.variables)
        seen.append(nc)
    total = total.simplify()
    return total.ensure_ring() if strict else total


def _negations(c: Constraint) -> list[Constraint]:
    if isinstance(c, Ineq):
        return [Ineq(tuple(-x for x in c.coeffs), -c.const - 1)]
    return [Cong(c.coeffs, c.const - r, c.modulus) for r in range(1, c.modulus)]


def _subtract(n: int, cl: tuple[Constraint, ...], earlier: list[tuple[Constraint, ...]]) -> list[tuple[Constraint, ...]]:
    parts = [cl]
    for prev in earlier:
        new_parts = []
        for part in parts:
            prefix: list[Constraint] = []
            for c in prev:
                for nc in _negations(c):
                    cand = _normalize_conj(list(part) + prefix + [nc])
                    if cand is not None and not _conj_empty(n, cand):
                        new_parts.append(cand)
                prefix.append(c)
        parts = new_parts
    return parts


def _sum_conj(n: int, cons: Sequence[Constraint], a: Sequence[int], b: Sequence[int],
              weight: Mapping[tuple, Fraction] | None, names: Sequence[str]) -> MotElem:
    poly: Poly = {}
    if weight:
        for e, c in weight.items():
            if c:
                poly[tuple(e)] = MotElem.const(c)
    else:
        poly[(0,) * n] = MotElem.one()
    work = [_Summand(poly, tuple(a), 0, tuple(b), 0, list(cons))]
    for k in range(n, 0, -1):
        nxt: list[_Summand] = []
        for s in work:
            nxt.extend(_sum_last(k, s, names))
        work = nxt
    total = MotElem.zero()
    for s in work:
        if all(_const_truth(c) for c in s.cons):
            c = s.poly.get((), MotElem.zero())
            total = total + c * _mono_elem(s.A0, s.B0)
    return total


def _subst_poly(P: Poly, k: int, scale_vec: Sequence[int], rho: Sequence[int]) -> Poly:
    """Substitute z_i -> scale_i w_i + rho_i for i < k-1 (z_{k-1} kept)."""
    out: Poly = {}
    for e, c in P.items():
        part: dict[tuple, Fraction] = {(0,) * k: Fraction(1)}
        for i in range(k - 1):
            if e[i]:
                co = [0] * k
                co[i] = scale_vec[i]
                part = _mul_frac_polys(part, _affine_power(co, rho[i], e[i], k))
        if e[k - 1]:
            ez = [0] * k
            ez[k - 1] = e[k - 1]
            part = _mul_frac_polys(part, {tuple(ez): Fraction(1)})
        for e2, c2 in part.items():
            term = c * MotElem.const(c2)
            out[e2] = out[e2] + term if e2 in out else term
    return {e: c for e, c in out.items() if not c.is_zero()}


def _mul_frac_polys(P: Mapping[tuple, Fraction], Q: Mapping[tuple, Fraction]) -> dict[tuple, Fraction]:
    out: dict[tuple, Fraction] = {}
    for e1, c1 in P.items():
        for e2, c2 in Q.items():
            e = tuple(x + y for x, y in zip(e1, e2))
            out[e] = out.get(e, 0) + c1 * c2
    return {e: c for e, c in out.items() if c}


def _sum_last(k: int, s: _Summand, names: Sequence[str]) -> list[_Summand]:
    """Sum the summand over its last variable (index k-1)."""
    z = k - 1
    out: list[_Summand] = []
    for piece in _eliminate(k, s.cons):
        scale_vec = _scale_vector(k, s.cons, piece.scale)
        rho = piece.shift
        P = _subst_poly(s.poly, k, scale_vec, rho)
        A = tuple(s.A[i] * scale_vec[i] for i in range(z))
        B = tuple(s.B[i] * scale_vec[i] for i in range(z))
        A0 = s.A0 + sum(s.A[i] * rho[i] for i in range(z))
        B0 = s.B0 + sum(s.B[i] * rho[i] for i in range(z))
        az, bz = s.A[z], s.B[z]
        # z = N v + z0
        N, z0 = piece.N, piece.z0
        A0 += az * z0
        B0 += bz * z0
        ya, yb = az * N, bz * N
        # rewrite P as sum_j Q_j(w) v^j
        Pv: dict[int, Poly] = {}
        for e, c in P.items():
            ez = e[z]
            for t, cf in _affine_power([N], z0, ez, 1).items():
                j = t[0]
                key = e[:z]
                Pv.setdefault(j, {})
                term = c * MotElem.const(cf)
                Pv[j][key] = Pv[j][key] + term if key in Pv[j] else term
        region = piece.cons
        lo, up = piece.lower, piece.upper
        if lo is None or up is None:
            if _conj_empty(z, region):
                continue
            ray = [0] * len(names)
            if lo is None and up is None:
                ray[z] = 1
                raise Divergent(f"variable {names[z]} is unbounded in both directions", tuple(ray))
            if lo is not None and not (ya > 0 or (ya == 0 and yb < 0)):
                ray[z] = 1
                raise Divergent(f"sum diverges along +{names[z]}", tuple(ray))
            if up is not None and not (ya < 0 or (ya == 0 and yb > 0)):
                ray[z] = -1
                raise Divergent(f"sum diverges along -{names[z]}", tuple(ray))
        if ya == 0 and yb == 0:
            # plain polynomial sum: S_j(u) - S_j(l - 1)
            new_poly: Poly = {}
            for j, Q in Pv.items():
                Sj = _faulhaber(j)
                for bound, sign, off in ((up, 1, 0), (lo, -1, -1)):
                    co, k0 = bound
                    for deg, c in enumerate(Sj):
                        if c:
                            pw = _affine_power(co, k0 + off, deg, z)
                            new_poly = _padd(new_poly, _pmul_frac(Q, {e: sign * c * v for e, v in pw.items()}))
            out.append(_Summand(new_poly, A, A0, B, B0, list(region)))
            continue
        parts = []
        if lo is not None:
            parts.append((lo, 0, 1, 1))
        if up is not None:
            if lo is not None:
                parts.append((up, 1, -1, 1))
            else:
                parts.append((up, 0, 1, -1))
        for (co, k0), off, sign, orient in parts:
            # orient = 1: F_j(m) = sum_{v>=m} v^j y^v with m = bound + off
            # orient = -1: sum_{v<=u} v^j y^v = (-1)^j sum_{v'>=-u} v'^j (1/y)^v'
            mco = tuple(co) if orient == 1 else tuple(-x for x in co)
            mk = (k0 + off) if orient == 1 else -k0
            ea, eb = (ya, yb) if orient == 1 else (-ya, -yb)
            new_poly = {}
            for j, Q in Pv.items():
                sj = sign * (1 if orient == 1 or j % 2 == 0 else -1)
                for i in range(j + 1):
                    coef = _E(i, ea, eb) * MotElem.const(sj * comb(j, i))
                    pw = _affine_power(mco, mk, j - i, z)
                    Qc = {e: c * coef for e, c in Q.items()}
                    new_poly = _padd(new_poly, _pmul_frac(Qc, pw))
            # monomial (L^eb T^ea)^m with m = mco.w + mk
            nA = tuple(A[i] + ea * mco[i] for i in range(z))
            nB = tuple(B[i] + eb * mco[i] for i in range(z))
            out.append(_Summand(new_poly, nA, A0 + ea * mk, nB, B0 + eb * mk, list(region)))
    return out


def _scale_vector(k: int, cons: Sequence[Constraint], M: int) -> list[int]:
    z = k - 1
    linked = {i for c in cons if c.coeffs[z] != 0 for i in range(z) if c.coeffs[i] != 0}
    return [M if i in linked else 1 for i in range(z)]


def sum_by_enumeration(S: PresburgerSet, a: Sequence[int], b: Sequence[int], q: int, J: int,
                       box: Sequence[tuple[int, int]] | int) -> list[Fraction]:
    """T-coefficients 0..J of the sum at L = q by direct enumeration in a box."""
    out = [Fraction(0)] * (J + 1)
    for z in enumerate_points(S, box):
        ta = sum(x * y for x, y in zip(a, z))
        if 0 <= ta <= J:
            out[ta] += Fraction(q) ** sum(x * y for x, y in zip(b, z))
    return out
