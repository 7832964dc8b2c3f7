"""Brute-force ground truth: exact measures of the level sets of ord f.

For an integer polynomial f in n variables, ord f(x) = j depends only on
x mod p^(j+1).  We count the residues r mod p^l with f(r) = 0 mod p^l by
lifting: every such residue at level l+1 reduces to one at level l, so
only the p^n lifts r + p^l d of surviving residues are tested.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Mapping, Sequence

from . import _lift_py
from .errors import BudgetExceeded
from .polys import reduce_equichar, specialize, t_trim

try:  # compiled kernel, optional
    from . import _lift_kernel
    import numpy as _np
except ImportError:  # pragma: no cover - exercised when the build is absent
    _lift_kernel = None
    _np = None

DEFAULT_BUDGET = 10**7
KERNEL_LIMIT = 2**31


def kernel_available() -> bool:
    return _lift_kernel is not None


def _backend(requested: str | None) -> str:
    choice = requested or os.environ.get("PADIC_CELLS_KERNEL", "auto")
    if choice == "python" or not kernel_available():
        return "python"
    return "compiled"


def _as_int_poly(f: Mapping, p: int) -> dict[tuple, int]:
    if any(isinstance(c, tuple) for c in f.values()):
        return specialize(f, p)
    return {e: int(c) for e, c in f.items() if c}


def level_counts(f: Mapping, p: int, levels: int, n: int | None = None,
                 budget: int = DEFAULT_BUDGET, backend: str | None = None) -> list[int]:
    """[N_0, ..., N_levels] with N_l = #{r mod p^l : f(r) = 0 mod p^l}."""
    g = _as_int_poly(f, p)
    if n is None:
        n = len(next(iter(f))) if f else 0
    if not g:
        return [p ** (l * n) for l in range(levels + 1)]
    exps = list(g.keys())
    coeffs = [g[e] for e in exps]
    mode = _backend(backend)
    counts = [1]
    pts_py: list = [(0,) * n]
    pts_np = None
    spent = 0
    for l in range(levels):
        size = len(pts_py) if pts_np is None else pts_np.shape[0]
        if size == 0:
            counts.append(0)
            continue
        spent += size * p**n
        if spent > budget:
            raise BudgetExceeded(f"more than {budget} lift expansions")
        pl, mod = p**l, p ** (l + 1)
        if mode == "compiled" and mod < KERNEL_LIMIT and n <= 8 and max(max(e) for e in exps) <= 64:
            if pts_np is None:
                pts_np = _np.array(pts_py, dtype=_np.int64).reshape(-1, n)
            pts_np = _lift_kernel.expand_level(
                pts_np, p, pl, mod,
                _np.array(exps, dtype=_np.int64).reshape(-1, n),
                _np.array([c % mod for c in coeffs], dtype=_np.int64),
            )
            pts_py = None
            counts.append(int(pts_np.shape[0]))
        else:
            if pts_np is not None:
                pts_py = [tuple(int(v) for v in row) for row in pts_np]
                pts_np = None
            pts_py = _lift_py.expand_level(pts_py, p, pl, mod, exps, coeffs)
            counts.append(len(pts_py))
    return counts


def _mu_from_counts(counts: Sequence[int], p: int, n: int, J: int) -> list[Fraction]:
    return [Fraction(counts[j], p ** (j * n)) - Fraction(counts[j + 1], p ** ((j + 1) * n)) for j in range(J + 1)]


def mu_table(f: Mapping, p: int, J: int, n: int | None = None, budget: int = DEFAULT_BUDGET,
             backend: str | None = None) -> list[Fraction]:
    """[mu_0, ..., mu_J] for the ℚ_p model."""
    if n is None:
        n = len(next(iter(f))) if f else 0
    counts = level_counts(f, p, J + 1, n, budget, backend)
    return _mu_from_counts(counts, p, n, J)


def mu(f: Mapping, p: int, j: int, n: int | None = None, budget: int = DEFAULT_BUDGET) -> Fraction:
    return mu_table(f, p, j, n, budget)[j]


def tail_mass(f: Mapping, p: int, J: int, n: int | None = None, budget: int = DEFAULT_BUDGET) -> Fraction:
    """Measure of {ord f >= J+1}."""
    if n is None:
        n = len(next(iter(f))) if f else 0
    counts = level_counts(f, p, J + 1, n, budget)
    return Fraction(counts[J + 1], p ** ((J + 1) * n))


def mu_enumerate(f: Mapping, p: int, j: int, n: int | None = None) -> Fraction:
    """Full enumeration of residues mod p^(j+1); only for tiny cases."""
    g = _as_int_poly(f, p)
    if n is None:
        n = len(next(iter(f))) if f else 0
    mod = p ** (j + 1)
    hits = 0
    for x in product(range(mod), repeat=n):
        v = 0
        for e, c in g.items():
            term = c
            for xi, k in zip(x, e):
                term *= xi**k
            v += term
        v %= mod
        if v != 0 and v % p**j == 0:
            hits += 1
    return Fraction(hits, mod**n)


# -- equal characteristic: F_p[t] ------------------------------------------

def _ser_mul(a: Sequence[int], b: Sequence[int], p: int, L: int) -> list[int]:
    out = [0] * L
    for i, x in enumerate(a):
        if x:
            for j in range(L - i):
                y = b[j]
                if y:
                    out[i + j] += x * y
    return [v % p for v in out]


def _value_equichar(terms, x: Sequence[Sequence[int]], p: int, L: int, maxdeg: int) -> list[int]:
    """f(x) mod t^L as a coefficient list over F_p."""
    pw = []
    for xi in x:
        row = [[1] + [0] * (L - 1)]
        for _ in range(maxdeg):
            row.append(_ser_mul(row[-1], xi, p, L))
        pw.append(row)
    acc = [0] * L
    for e, c in terms:
        term = list(c[:L]) + [0] * (L - len(c[:L]))
        for i, k in enumerate(e):
            if k:
                term = _ser_mul(term, pw[i][k], p, L)
        for i in range(L):
            acc[i] += term[i]
    return [v % p for v in acc]


def _gradient_mod_t(terms, x0: Sequence[int], p: int) -> list[int]:
    """The partial derivatives of f at x, reduced modulo t."""
    grad = [0] * len(x0)
    for e, c in terms:
        if not c or c[0] % p == 0:
            continue
        for i, k in enumerate(e):
            if k:
                v = c[0] * k * pow(x0[i], k - 1, p)
                for j, m in enumerate(e):
                    if j != i and m:
                        v *= pow(x0[j], m, p)
                grad[i] += v
    return [v % p for v in grad]


def level_counts_equichar(f: Mapping, p: int, levels: int, n: int | None = None,
                          budget: int = DEFAULT_BUDGET) -> list[int]:
    """[N_0, ..., N_levels] for f over F_p[t], N_l counting residues mod t^l.

    From level 1 on, a residue r with f(r) = 0 mod t^l is handled without
    testing its p^n lifts.  If the gradient of f vanishes at r mod t, the
    t^l coefficient of f(r + t^l d) does not depend on d, so all lifts
    survive or none does.  Otherwise Hensel lifting gives exactly
    p^(n-1) surviving lifts per point at every later level, and r is
    counted in closed form.
    """
    if n is None:
        n = len(next(iter(f))) if f else 0
    if any(not isinstance(c, tuple) for c in f.values()):
        f = {e: t_trim((c,)) for e, c in f.items()}
    g = reduce_equichar(f, p)
    if not g:
        return [p ** (l * n) for l in range(levels + 1)]
    terms = list(g.items())
    maxdeg = max(max(e) for e in g)
    counts = [1]
    smooth = [0] * (levels + 1)  # smooth[l]: residues found smooth at level l
    pts: list[tuple[tuple[int, ...], ...]] = [tuple(() for _ in range(n))]
    spent = 0
    for l in range(levels):
        spent += len(pts) * (p**n if l == 0 else 1)
        if spent > budget:
            raise BudgetExceeded(f"more than {budget} lift expansions")
        L = l + 1
        new = []
        for r in pts:
            if l == 0:
                for d in product(range(p), repeat=n):
                    x = tuple((d[i],) for i in range(n))
                    if _value_equichar(terms, x, p, 1, maxdeg)[0] == 0:
                        new.append(x)
                continue
            if any(_gradient_mod_t(terms, [ri[0] for ri in r], p)):
                smooth[l] += 1
                continue
            x = tuple(tuple(ri) + (0,) for ri in r)
            if _value_equichar(terms, x, p, L, maxdeg)[l] == 0:
                new.extend(tuple(tuple(ri) + (d[i],) for i, ri in enumerate(r))
                           for d in product(range(p), repeat=n))
        pts = new
        counts.append(len(pts) + sum(smooth[k] * p ** ((L - k) * (n - 1)) for k in range(1, L)))
    return counts


def mu_equichar_table(f: Mapping, p: int, J: int, n: int | None = None,
                      budget: int = DEFAULT_BUDGET) -> list[Fraction]:
    """[mu_0, ..., mu_J] in F_p((t)), the coefficients read modulo p."""
    if n is None:
        n = len(next(iter(f))) if f else 0
    counts = level_counts_equichar(f, p, J + 1, n, budget)
    return _mu_from_counts(counts, p, n, J)


def mu_equichar(f: Mapping, p: int, j: int, n: int | None = None) -> Fraction:
    return mu_equichar_table(f, p, j, n)[j]


# -- comparison ------------------------------------------------------------

@dataclass
class CoefficientCheck:
    j: int
    symbolic: Fraction
    oracle: Fraction

    @property
    def match(self) -> bool:
        return self.symbolic == self.oracle


@dataclass
class CompareReport:
    p: int
    J: int
    rows: list[CoefficientCheck] = field(default_factory=list)
    certified_upto: int | None = None

    @property
    def ok(self) -> bool:
        return all(r.match for r in self.rows)

    def mismatches(self) -> list[int]:
        return [r.j for r in self.rows if not r.match]

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "J": self.J,
            "certified_upto": self.certified_upto,
            "all_match": self.ok,
            "rows": [
                {"j": r.j, "symbolic": str(r.symbolic), "oracle": str(r.oracle), "match": r.match}
                for r in self.rows
            ],
        }


def compare(X, f: Mapping, p: int, J: int, n: int | None = None, certified_upto: int | None = None,
            equichar: bool = False, budget: int = DEFAULT_BUDGET) -> CompareReport:
    """Expand X at q = p and check its T-coefficients against the oracle."""
    top = J if certified_upto is None else min(J, certified_upto)
    series = X.series(p, top)
    if equichar:
        mus = mu_equichar_table(f, p, top, n, budget)
    else:
        mus = mu_table(f, p, top, n, budget)
    rep = CompareReport(p, J, certified_upto=certified_upto)
    for j in range(top + 1):
        rep.rows.append(CoefficientCheck(j, series[j], mus[j]))
    return rep


def igusa_series(mu_values: Sequence[Fraction]) -> list[Fraction]:
    """Coefficients of sum mu_j T^j (degree 0 first)."""
    for m in mu_values:
        if m < 0:
            raise ValueError("measures are nonnegative")
    out = [Fraction(m) for m in mu_values]
    while out and out[-1] == 0:
        out.pop()
    return out


def to_csv(mu_values: Sequence[Fraction]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "numerator", "denominator"])
    for j, m in enumerate(mu_values):
        m = Fraction(m)
        w.writerow([j, m.numerator, m.denominator])
    return buf.getvalue()
