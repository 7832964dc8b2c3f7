import json
import shutil
import subprocess
import sys

import pytest

from padic_cells.cli import EXIT_COMPUTE, EXIT_MISMATCH, EXIT_OK, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_zeta_text(capsys):
    code, out, _ = run(capsys, "zeta", "--f1", "y", "--p", "5")
    assert code == EXIT_OK and out.strip() == "(1 - q^-1) / (1 - q^-1 T)"


def test_zeta_json_is_sorted_and_stable(capsys):
    _, a, _ = run(capsys, "zeta", "--f1", "x^2-y", "--p", "3", "--json")
    _, b, _ = run(capsys, "--threads", "4", "zeta", "--f1", "x^2-y", "--p", "3", "--json")
    assert a == b
    data = json.loads(a)
    assert list(data) == sorted(data)


def test_zeta_symbolic(capsys):
    code, out, _ = run(capsys, "zeta", "--f1", "y^2-t", "--symbolic-q")
    assert code == EXIT_OK and out.strip() == "1 - q^-1 + q^-1 T"


def test_zeta_order_flag(capsys):
    code, out, _ = run(capsys, "zeta", "--f1", "x*y^2", "--p", "3", "--order", "y,x")
    assert code == EXIT_OK and "T" in out


def test_oracle_csv(capsys):
    code, out, _ = run(capsys, "oracle", "--f", "y^2", "--p", "5", "--jmax", "2")
    assert code == EXIT_OK
    assert out == "j,numerator,denominator\n0,4,5\n1,0,1\n2,4,25\n"


def test_oracle_json(capsys):
    code, out, _ = run(capsys, "oracle", "--f", "y", "--p", "3", "--jmax", "1", "--json")
    assert json.loads(out)["mu"] == ["2/3", "2/9"]


def test_compare_match(capsys):
    code, out, _ = run(capsys, "compare", "--f", "y^3-y", "--p", "7", "--jmax", "8")
    assert code == EXIT_OK and out.strip().endswith("match")


def test_compare_equichar(capsys):
    code, _, _ = run(capsys, "compare", "--f", "y*(y-1)", "--p", "5", "--jmax", "5", "--equichar")
    assert code == EXIT_OK


def test_compare_mismatch_exit_code(capsys, monkeypatch):
    import padic_cells.integrate as integrate

    real = integrate.zeta

    def wrong(f1, *args, **kw):
        # answer for y^2 while the oracle is asked about y
        return real("y^2", *args, **kw)

    monkeypatch.setattr(integrate, "zeta", wrong)
    code, out, _ = run(capsys, "compare", "--f", "y", "--p", "5", "--jmax", "3")
    assert code == EXIT_MISMATCH and "MISMATCH" in out


def test_cells_json(capsys):
    code, out, _ = run(capsys, "cells", "--f", "y*(y-1)", "--p", "5")
    data = json.loads(out)
    assert code == EXIT_OK and data["cell_count"] == len(data["cells"])


def test_annulus_decompose(capsys):
    phi = {"outer": {"poly": "x", "eps": [0, 1]}, "holes": [{"poly": "x", "eps": [1, 1]}]}
    code, out, _ = run(capsys, "annulus", "--formula", json.dumps(phi), "--p", "5", "--decompose")
    assert code == EXIT_OK
    assert [q["kind"] for q in json.loads(out)["pieces"]] == ["thin", "laurent", "thin"]


def test_annulus_factor(capsys):
    phi = {"outer": {"poly": "x", "eps": [0, 1]}, "holes": []}
    code, out, _ = run(capsys, "annulus", "--formula", json.dumps(phi), "--p", "5", "--factor", "x^2-5")
    assert code == EXIT_OK and json.loads(out)["pieces"]


def test_psum(capsys):
    S = json.dumps({"variables": ["z"], "constraints": ["z >= 1"]})
    code, out, _ = run(capsys, "psum", "--set", S, "--a", "1", "--b", "-1")
    assert code == EXIT_OK and out.strip() == "q^-1 T / (1 - q^-1 T)"


@pytest.mark.parametrize("argv", [
    [],
    ["zeta", "--f1", "y"],
    ["zeta", "--f1", "y", "--p", "5", "--symbolic-q"],
    ["zeta", "--f1", "y", "--p", "6"],
    ["oracle", "--f", "y", "--p", "5", "--jmax", "-1"],
    ["--threads", "0", "zeta", "--f1", "y", "--p", "5"],
    ["annulus", "--formula", "{not json", "--p", "5"],
    ["bogus"],
])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_USAGE and err.startswith("usage error")


def test_computation_error(capsys):
    phi = {"outer": {"poly": "x", "eps": [1, 1]}, "holes": [{"poly": "x", "eps": [0, 1]}]}
    code, _, err = run(capsys, "annulus", "--formula", json.dumps(phi), "--p", "5")
    assert code == EXIT_COMPUTE and "NotAnAnnulus" in err


def test_precision_environment(capsys, monkeypatch):
    monkeypatch.setenv("PADIC_CELLS_PRECISION", "zero")
    code, _, _ = run(capsys, "zeta", "--f1", "y", "--p", "5")
    assert code == EXIT_USAGE


def test_console_script():
    exe = shutil.which("padic-cells")
    cmd = [exe] if exe else [sys.executable, "-m", "padic_cells.cli"]
    proc = subprocess.run(cmd + ["compare", "--f", "y", "--p", "3", "--jmax", "8"], capture_output=True, text=True)
    assert proc.returncode == 0 and "match" in proc.stdout
