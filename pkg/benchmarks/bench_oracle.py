"""Compiled vs pure-Python branch-and-lift kernel.

    python3 benchmarks/bench_oracle.py [--repeat N]

Both backends must return identical level measures; the script exits 1
if they disagree or if the compiled kernel is not built.
"""

from __future__ import annotations

import argparse
import sys
import time

from padic_cells.dplang import parse_polynomial
from padic_cells.oracle import kernel_available, mu_table

WORKLOADS = [
    ("y^3-y", ["y"], 7, 8),
    ("y^2-x^3", ["x", "y"], 5, 5),
    ("x*y", ["x", "y"], 5, 5),
    ("x^2-y", ["x", "y"], 7, 5),
    ("x*y*z", ["x", "y", "z"], 3, 4),
]


def best_time(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not kernel_available():
        print("compiled kernel not built; run `pip install -e . --no-build-isolation`", file=sys.stderr)
        return 1
    print(f"{'integrand':<10} {'p':>2} {'J':>2} {'python s':>9} {'compiled s':>10} {'speedup':>8}")
    status = 0
    for src, names, p, J in WORKLOADS:
        f, _ = parse_polynomial(src, names)
        t_py, mu_py = best_time(lambda: mu_table(f, p, J, len(names), backend="python"), args.repeat)
        t_c, mu_c = best_time(lambda: mu_table(f, p, J, len(names), backend="compiled"), args.repeat)
        same = mu_py == mu_c
        status |= not same
        print(f"{src:<10} {p:>2} {J:>2} {t_py:>9.4f} {t_c:>10.4f} {t_py / max(t_c, 1e-9):>7.1f}x"
              + ("" if same else "  MISMATCH"))
    return status


if __name__ == "__main__":
    sys.exit(main())
