"""Command-line interface: ``padic-cells <command> [options]``.

Exit codes: 0 success or match, 1 usage error, 2 computation error,
3 oracle mismatch.  JSON output uses sorted keys so runs are byte-stable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Sequence

from .errors import PadicCellsError

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_MISMATCH = 0, 1, 2, 3
PRECISION_ENV = "PADIC_CELLS_PRECISION"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits with 2 by default
        raise UsageError(message)


def _dump(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def _precision() -> int:
    raw = os.environ.get(PRECISION_ENV)
    if raw is None:
        return 40
    try:
        M = int(raw)
    except ValueError as exc:
        raise UsageError(f"{PRECISION_ENV} must be an integer, got {raw!r}") from exc
    if M < 1:
        raise UsageError(f"{PRECISION_ENV} must be positive")
    return M


def _context(args):
    from .padic import PAdicContext

    if getattr(args, "symbolic_q", False):
        if args.p is not None:
            raise UsageError("--p and --symbolic-q are mutually exclusive")
        if getattr(args, "equichar", False):
            raise UsageError("--equichar needs a prime")
        return PAdicContext(2, _precision(), "symbolic-q")
    if args.p is None:
        raise UsageError("one of --p or --symbolic-q is required")
    try:
        return PAdicContext(args.p, _precision(), "fixed-prime", bool(getattr(args, "equichar", False)))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _names(fs: Sequence[str], n: int | None, order: str | None) -> list[str]:
    from .integrate import _variables

    names = _variables(fs[0], fs[1] if len(fs) > 1 else "1", n) or []
    if n is not None and len(names) > n:
        raise UsageError(f"the integrand uses {len(names)} variables but --vars is {n}")
    if order:
        perm = [s.strip() for s in order.split(",") if s.strip()]
        if perm and all(s.isdigit() for s in perm):
            idx = [int(s) for s in perm]
            if sorted(idx) != list(range(len(names))):
                raise UsageError("--order must be a permutation of the variable indices")
            names = [names[i] for i in idx]
        else:
            if sorted(perm) != sorted(names):
                raise UsageError(f"--order must list the variables {', '.join(names)}")
            names = perm
    return names


def _parse_poly(src: str, names: Sequence[str]):
    from .dplang import parse_polynomial

    g, _ = parse_polynomial(src, names)
    return g


# -- commands -----------------------------------------------------------------------

def cmd_zeta(args) -> int:
    from .integrate import zeta

    ctx = _context(args)
    names = _names([args.f1, args.f2], args.vars, args.order)
    res = zeta(args.f1, args.f2, len(names) if names else args.vars, ctx, names)
    if args.json:
        print(_dump(res.to_json()))
    else:
        from .motring import format_motelem

        print(format_motelem(res.motelem))
        if not res.complete:
            print(f"unresolved measure: {format_motelem(res.unresolved_measure)}")
    return EXIT_OK


def _mu(args, f, n: int):
    from .oracle import mu_equichar_table, mu_table

    if args.equichar:
        return mu_equichar_table(f, args.p, args.jmax, n)
    return mu_table(f, args.p, args.jmax, n)


def cmd_oracle(args) -> int:
    if args.p is None:
        raise UsageError("--p is required")
    names = _names([args.f], args.vars, None)
    f = _parse_poly(args.f, names)
    mus = _mu(args, f, len(names))
    if args.json:
        print(_dump({"p": args.p, "jmax": args.jmax, "variables": names,
                     "mu": [str(m) for m in mus]}))
    else:
        from .oracle import to_csv

        sys.stdout.write(to_csv(mus))
    return EXIT_OK


def cmd_compare(args) -> int:
    from .integrate import zeta
    from .oracle import compare

    ctx = _context(args)
    names = _names([args.f], args.vars, None)
    n = len(names)
    f = _parse_poly(args.f, names)

    def run_zeta():
        return zeta(args.f, "1", n, ctx, names)

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        fut = pool.submit(run_zeta)
        res = fut.result()
    report = compare(res.motelem, f, args.p, args.jmax, n, equichar=args.equichar)
    ok = report.ok and res.complete
    out = report.to_dict()
    out["complete"] = res.complete
    out["variables"] = names
    if args.json:
        print(_dump(out))
    else:
        from .motring import format_motelem

        print(f"Z = {format_motelem(res.motelem)}")
        for r in report.rows:
            mark = "ok" if r.match else "MISMATCH"
            print(f"j={r.j}: symbolic={r.symbolic} oracle={r.oracle} {mark}")
        print("match" if ok else "mismatch")
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_cells(args) -> int:
    from .cells import Decomposition, cell_to_json
    from .integrate import _prepare_factors

    ctx = _context(args)
    if ctx.mode != "fixed-prime" or ctx.equichar:
        raise UsageError("cells needs a fixed prime")
    names = _names([args.f], args.vars, None)
    n = len(names)
    f = _parse_poly(args.f, names)
    factors, _, _ = _prepare_factors(f, {(0,) * n: (1,)}, n, ctx)
    dec = Decomposition(factors, n, ctx, names)
    cells = [cell_to_json(c) for c in dec.cells()]
    print(_dump({"p": args.p, "variables": names, "cells": cells, "cell_count": len(cells)}))
    return EXIT_OK


def cmd_annulus(args) -> int:
    from .annulus import AnnulusFormula, decompose_thin_laurent, factor

    try:
        data = json.loads(args.formula)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--formula is not valid JSON: {exc}") from exc
    try:
        phi = AnnulusFormula.from_json(data, args.p)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed annulus formula: {exc}") from exc
    if args.factor is not None:
        pieces = factor(args.factor, phi, n=args.strict or 1, strict=bool(args.strict))
        print(_dump({"formula": phi.to_json(), "pieces": [fp.to_json() for fp in pieces]}))
    else:
        trace: list = []
        pieces = decompose_thin_laurent(phi, trace)
        print(_dump({"formula": phi.to_json(), "pieces": [q.to_json() for q in pieces],
                     "trace": [list(t) for t in trace]}))
    return EXIT_OK


def _covector(src: str) -> list[int]:
    src = src.strip()
    try:
        if src.startswith("["):
            return [int(v) for v in json.loads(src)]
        return [int(v) for v in src.split(",") if v.strip()]
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad covector {src!r}") from exc


def cmd_psum(args) -> int:
    from .motring import format_motelem
    from .presburger import PresburgerSet, sum_exponential

    try:
        S = PresburgerSet.from_json(args.set)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed set: {exc}") from exc
    a, b = _covector(args.a), _covector(args.b)
    X = sum_exponential(S, a, b)
    if args.json:
        print(_dump({"sum": format_motelem(X), "terms": X.to_json()}))
    else:
        print(format_motelem(X))
    return EXIT_OK


# -- parser ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="padic-cells", description="Exact p-adic integrals by cell decomposition.")
    ap.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    def prime_opts(p, symbolic: bool = True):
        p.add_argument("--p", type=int, default=None)
        if symbolic:
            p.add_argument("--symbolic-q", action="store_true")
        p.add_argument("--equichar", action="store_true")

    z = sub.add_parser("zeta", help="integral of |f1|^s |f2| over Z_p^n")
    z.add_argument("--f1", required=True)
    z.add_argument("--f2", default="1")
    z.add_argument("--vars", type=int, default=None)
    prime_opts(z)
    z.add_argument("--order", default=None, help="variable order, names or indices, comma separated")
    z.add_argument("--json", action="store_true")
    z.set_defaults(func=cmd_zeta)

    o = sub.add_parser("oracle", help="measures of the level sets by branch-and-lift")
    o.add_argument("--f", required=True)
    o.add_argument("--jmax", type=int, required=True)
    o.add_argument("--vars", type=int, default=None)
    prime_opts(o, symbolic=False)
    o.add_argument("--json", action="store_true")
    o.set_defaults(func=cmd_oracle)

    c = sub.add_parser("compare", help="check the closed form against the oracle")
    c.add_argument("--f", required=True)
    c.add_argument("--jmax", type=int, required=True)
    c.add_argument("--vars", type=int, default=None)
    prime_opts(c, symbolic=False)
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_compare)

    k = sub.add_parser("cells", help="cell list as JSON")
    k.add_argument("--f", required=True)
    k.add_argument("--vars", type=int, default=None)
    prime_opts(k, symbolic=False)
    k.set_defaults(func=cmd_cells)

    a = sub.add_parser("annulus", help="decompose or factor on an annulus formula")
    a.add_argument("--formula", required=True)
    a.add_argument("--p", type=int, default=None)
    g = a.add_mutually_exclusive_group()
    g.add_argument("--decompose", action="store_true")
    g.add_argument("--factor", default=None, metavar="POLY")
    a.add_argument("--strict", type=int, default=0, metavar="N",
                   help="closed pieces with E = 1 mod p^N")
    a.set_defaults(func=cmd_annulus)

    s = sub.add_parser("psum", help="closed form of a Presburger exponential sum")
    s.add_argument("--set", required=True)
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_psum)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        if args.threads < 1:
            raise UsageError("--threads must be positive")
        for name in ("jmax", "vars"):
            v = getattr(args, name, None)
            if v is not None and v < 0:
                raise UsageError(f"--{name} must be nonnegative")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PadicCellsError, ValueError, ZeroDivisionError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
