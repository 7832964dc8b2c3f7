"""End-to-end acceptance checks.  Each test records one pass/fail line with
its timing, and the run ends with a summary of all of them."""

from __future__ import annotations

import json
import random
import time

from padic_cells.annulus import decompose_thin_laurent, factor
from padic_cells.cells import check_partition, check_prepared, decompose, sample_points
from padic_cells.cli import EXIT_OK, main
from padic_cells.integrate import _as_integrand, zeta
from padic_cells.oracle import compare
from padic_cells.padic import PAdicContext
from padic_cells.presburger import PresburgerSet, sum_by_enumeration, sum_exponential
from padic_cells.series import w_divide, w_prepare

from annulus_fixtures import FIXTURES as ANNULI, factor_failures, partition_failures, points
from motelem_gen import class_pool, random_motelem
from presburger_fixtures import DEGREE, FIXTURES as PRESBURGER, box
from weierstrass_gen import random_regular, random_series

UNIVARIATE = ["y", "y^2", "y*(y-1)", "y^2-p", "y^3-y"]
BIVARIATE = ["x*y", "x^2-y"]


def univariate_cases():
    for p in (3, 5, 7):
        for src in UNIVARIATE:
            yield src.replace("p", str(p)), p, 8


def bivariate_cases():
    for p in (3, 5):
        for src in BIVARIATE:
            yield src, p, 5


def run_compare(cases):
    failed = []
    for src, p, J in cases:
        code = main(["compare", "--f", src, "--p", str(p), "--jmax", str(J), "--json"])
        if code != EXIT_OK:
            failed.append(f"{src}@{p}")
    return failed


def test_criterion_1_univariate_compare(record_criterion, capsys):
    start = time.perf_counter()
    failed = run_compare(univariate_cases())
    elapsed = time.perf_counter() - start
    capsys.readouterr()
    ok = not failed and elapsed < 10
    record_criterion(1, ok, f"15 runs, failures={failed}, {elapsed:.2f}s (limit 10s)")
    assert ok


def test_criterion_2_bivariate_compare(record_criterion, capsys):
    start = time.perf_counter()
    failed = run_compare(bivariate_cases())
    elapsed = time.perf_counter() - start
    capsys.readouterr()
    ok = not failed and elapsed < 60
    record_criterion(2, ok, f"4 runs, failures={failed}, {elapsed:.2f}s (limit 60s)")
    assert ok


TESTED_PRIMES = (2, 3, 5, 7, 11, 13)


def agreement_threshold(src: str, n: int, J: int) -> int:
    """Largest tested prime at which the fixed-prime closed form and the
    F_p[[t]] oracle disagree, 0 when they agree at every tested prime."""
    f, _, _ = _as_integrand(src, n, None)
    worst = 0
    for p in TESTED_PRIMES:
        X = zeta(src, "1", n, PAdicContext(p)).motelem
        if not compare(X, f, p, J, n, equichar=True).ok:
            worst = p
    return worst


def test_criterion_3_uniformity_threshold(record_criterion):
    start = time.perf_counter()
    # t is the uniformizer: p at a fixed prime, the variable t in F_p[[t]]
    cases = [(s.replace("p", "t"), 1, 8) for s in UNIVARIATE] + [(s, 2, 4) for s in BIVARIATE]
    report = {src: agreement_threshold(src, n, J) for src, n, J in cases}
    elapsed = time.perf_counter() - start
    ok = all(v <= 7 for v in report.values())
    record_criterion(3, ok, f"empirical thresholds over p in {TESTED_PRIMES}: {report}, {elapsed:.2f}s")
    assert ok


def test_criterion_4_weierstrass(record_criterion):
    start = time.perf_counter()
    bad = 0
    for m, n in ((1, 0), (2, 0), (1, 1)):
        rng = random.Random(4000 + 10 * m + n)
        for _ in range(100):
            f, var, d = random_regular(rng, m, n)
            g = random_series(rng, m, n)
            q, r = w_divide(g, f)
            q2, r2 = w_divide(g, f)
            prep = w_prepare(f)
            good = (
                (q * f + r - g).is_zero()
                and all(e[var] < d for e in r.coeffs)
                and json.dumps(q.to_json()) == json.dumps(q2.to_json())
                and json.dumps(r.to_json()) == json.dumps(r2.to_json())
                and (prep.unit * prep.poly - f).is_zero()
                and prep.degree == d
            )
            bad += not good
    elapsed = time.perf_counter() - start
    ok = bad == 0 and elapsed < 10
    record_criterion(4, ok, f"300 pairs, {bad} failures, {elapsed:.2f}s (limit 10s)")
    assert ok


def test_criterion_5_cell_membership(record_criterion):
    start = time.perf_counter()
    cases = [(s, 1, p) for s, p, _ in univariate_cases()] + [(s, 2, p) for s, p, _ in bivariate_cases()]
    bad = {}
    for i, (src, n, p) in enumerate(cases):
        dec = decompose([src], PAdicContext(p))
        pts = sample_points(p, n, 1000, seed=500 + i)
        fails = len(check_partition(dec, pts)) + len(check_prepared(dec, pts, [1]))
        if fails:
            bad[f"{src}@{p}"] = fails
    elapsed = time.perf_counter() - start
    ok = not bad
    record_criterion(5, ok, f"{len(cases)} fixtures x 1000 points, failures={bad}, {elapsed:.2f}s")
    assert ok


def test_criterion_6_presburger(record_criterion):
    start = time.perf_counter()
    bad = []
    for i, (data, a, b) in enumerate(PRESBURGER):
        T = PresburgerSet.from_json(data)
        X = sum_exponential(T, a, b)
        for q in (3, 5, 7):
            if X.series(q, DEGREE - 1) != sum_by_enumeration(T, a, b, q, DEGREE - 1, box(len(a))):
                bad.append((i, q))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 5
    record_criterion(6, ok, f"{len(PRESBURGER)} sets to degree {DEGREE - 1}, failures={bad}, "
                            f"{elapsed:.2f}s (limit 5s)")
    assert ok


def test_criterion_7_annulus(record_criterion):
    start = time.perf_counter()
    bad = []
    for i, (phi, f) in enumerate(ANNULI):
        pts = points(phi)
        pieces = factor(f, phi)
        if (partition_failures(phi, decompose_thin_laurent(phi), pts)
                or partition_failures(phi, [q.annulus for q in pieces], pts)
                or factor_failures(f, pieces, pts)):
            bad.append(i)
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 10
    record_criterion(7, ok, f"{len(ANNULI)} formulas, failures={bad}, {elapsed:.2f}s (limit 10s)")
    assert ok


def test_criterion_8_count_eval_homomorphism(record_criterion):
    start = time.perf_counter()
    rng = random.Random(8)
    pool = class_pool()
    bad = 0
    for _ in range(200):
        X, Y = random_motelem(rng, pool), random_motelem(rng, pool)
        for q in (3, 5, 7):
            for s in (0, 1, 2):
                x, y = X.count_eval(q, s), Y.count_eval(q, s)
                bad += (X + Y).count_eval(q, s) != x + y
                bad += (X * Y).count_eval(q, s) != x * y
    elapsed = time.perf_counter() - start
    ok = bad == 0
    record_criterion(8, ok, f"200 pairs x 9 points, {bad} failures, {elapsed:.2f}s")
    assert ok


def test_criterion_9_mass_accounting(record_criterion):
    start = time.perf_counter()
    runs = [(s, 1, PAdicContext(p)) for s, p, _ in univariate_cases()]
    runs += [(s, 2, PAdicContext(p)) for s, p, _ in bivariate_cases()]
    sym = PAdicContext(2, 40, "symbolic-q")
    runs += [(s.replace("p", "t"), 1, sym) for s in UNIVARIATE] + [(s, 2, sym) for s in BIVARIATE]
    # a run left partially unresolved must account for the mass too
    runs.append(("y^2-x^3", 2, PAdicContext(5), 200))
    bad = []
    for src, n, ctx, *budget in runs:
        res = zeta(src, "1", n, ctx, max_nodes=budget[0]) if budget else zeta(src, "1", n, ctx)
        total = res.mass + res.unresolved_measure
        if any(total.count_eval(q, 0) != 1 for q in (3, 5, 7)):
            bad.append(src)
    elapsed = time.perf_counter() - start
    ok = not bad
    record_criterion(9, ok, f"{len(runs)} zeta runs, failures={bad}, {elapsed:.2f}s")
    assert ok
