"""Pure-Python branch-and-lift step, used when the compiled kernel is
unavailable or the modulus is too large for 64-bit products."""

from __future__ import annotations

from itertools import product
from typing import Sequence


def expand_level(pts: Sequence[Sequence[int]], p: int, pl: int, mod: int,
                 exps: Sequence[Sequence[int]], coeffs: Sequence[int]) -> list[tuple[int, ...]]:
    n = len(exps[0]) if exps else 0
    terms = [(c % mod, e) for c, e in zip(coeffs, exps)]
    maxdeg = max((max(e) for e in exps if e), default=0)
    out = []
    digits = list(product(range(p), repeat=n))
    for r in pts:
        for d in digits:
            x = [ri + pl * di for ri, di in zip(r, d)]
            pw = []
            for xi in x:
                row = [1]
                for _ in range(maxdeg):
                    row.append(row[-1] * xi % mod)
                pw.append(row)
            val = 0
            for c, e in terms:
                term = c
                for i, k in enumerate(e):
                    if k:
                        term = term * pw[i][k] % mod
                val += term
            if val % mod == 0:
                out.append(tuple(x))
    return out
