"""Acceptance criteria 1-11: one printed PASS/FAIL line per criterion."""

import json
import subprocess
import sys
import time

import pytest

from qsugawara.cli import strip_runtime, validate_report
from qsugawara.verify.core import Settings, run_check, select

FIRST_ORDER = (1.7, 2.3)
SECOND_ORDER = (3.5, 4.5)


def _run(patterns, settings=Settings(), variant="rederived"):
    ids = [s.id for s in select(patterns)]
    assert ids, patterns
    return [run_check(cid, variant, settings) for cid in ids]


def _report(capsys, number, title, results, elapsed, budget, extra=""):
    ok = all(r.passed for r in results) and elapsed < budget
    worst = max(results, key=lambda r: r.max_error / r.tolerance if r.tolerance else r.max_error)
    line = (f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title}: {len(results)} checks, worst "
            f"{worst.id} err={worst.max_error:.2e} (tol {worst.tolerance:.0e}), {elapsed:.1f}s < {budget}s")
    with capsys.disabled():
        print("\n" + line + (f"\n    {extra}" if extra else ""))
    failed = [f"{r.id}: {r.max_error:.3e} > {r.tolerance:.0e} ({r.notes})" for r in results if not r.passed]
    assert not failed, failed
    assert elapsed < budget, f"{elapsed:.1f}s over the {budget}s budget"


def _orders(results):
    return {r.id: r.params.get("observed_order") for r in results if "observed_order" in r.params}


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_criterion_01_oscillators(capsys):
    def body():
        out = []
        for eps in (0.1, 0.15, 0.3):
            for r in _run(["umosc", "2osc", "4osc"], Settings(epsilon=eps)):
                assert r.params["D"] == 10
                out.append(r)
        return out

    results, t = _timed(body)
    assert all(r.tolerance == 1e-12 for r in results)
    _report(capsys, 1, "oscillator algebras at D=10, eps in {0.1, 0.15, 0.3}", results, t, 5)


def test_criterion_02_free_two_point(capsys):
    results, t = _timed(lambda: _run(["umope", "umfermiope"], Settings(ratio=0.5, K=40)))
    assert all(r.tolerance <= 1e-8 for r in results)
    _report(capsys, 2, "HH and psi psi vacuum/first-excited elements", results, t, 5)


def test_criterion_03_baker(capsys):
    results, t = _timed(lambda: _run(["2baker"]))
    assert results[0].params["D"] == 6 and results[0].params["M"] == 2 and results[0].tolerance <= 1e-8
    _report(capsys, 3, "full-matrix E+E- = D/((z - wq)(z - w/q))", results, t, 30)


def test_criterion_04_residue_strings(capsys):
    results, t = _timed(lambda: _run(["appositiva", "apnegativa", "dezao"]))
    assert all(r.tolerance <= 1e-10 for r in results)
    ks = {k for r in results for k in (d.get("k") for d in r.diagnostics) if k is not None}
    assert {0, 1, 2, 3} <= ks
    _report(capsys, 4, "residue/string identities, k = 0..3", results, t, 30)


def test_criterion_05_exchange(capsys):
    results, t = _timed(lambda: _run(["exchange:*", "ee", "4operelations:*"], Settings(samples=5)))
    assert all(r.tolerance <= 1e-8 for r in results)
    su2 = sum(r.id.startswith(("exchange:", "ee")) for r in results)
    su3 = sum(r.id.startswith("4operelations:") for r in results)
    _report(capsys, 5, f"exchange relations ({su2} su(2), {su3} su(3) lines, 5 samples)", results, t, 60)


def test_criterion_06_n1_family(capsys):
    ids = ["umviraboson", "umsuperesuper", "umvirafermi", "umbosonesuper", "umfermiesuper"]
    results, t = _timed(lambda: _run(ids))
    assert all(r.tolerance <= 1e-6 for r in results)
    _report(capsys, 6, "N=1 family, rederived, alpha, beta grid", results, t, 120)


def test_criterion_07_n2_family(capsys):
    def body():
        return _run(["gg", "3superesuper2", "3superalgebra:*", "3azaoalgebra", "pole_cancellation"])

    results, t = _timed(body)
    ratios = []
    for r in results:
        if r.id in ("gg", "3superesuper2"):
            assert r.params["eps"] == [0.1, 0.05]
            for d in r.diagnostics:
                if "ratio" in d:
                    ratio = d["ratio"]
                    ratios.append(ratio)
                    assert (FIRST_ORDER[0] <= ratio <= FIRST_ORDER[1]
                            or SECOND_ORDER[0] <= ratio <= SECOND_ORDER[1]), (r.id, d)
    lines = sum(r.id.startswith("3superalgebra:") for r in results)
    assert lines == 10  # AA, AB, BA, BB, AG+-, BG+-, LG+-: the six displays with both signs
    az = next(r for r in results if r.id == "3azaoalgebra")
    assert az.params["n_m"] == [[1, 2], [1, 2]]
    first = sum(FIRST_ORDER[0] <= x <= FIRST_ORDER[1] for x in ratios)
    extra = (f"remainder ratios eps=0.1/0.05: {first} first-order, {len(ratios) - first} second-order; "
             f"orders {_orders(results)}")
    _report(capsys, 7, "N=2 residues, remainders, superalgebra, azao, pole cancellation", results, t, 180, extra)


def test_criterion_08_regular_part(capsys):
    results, t = _timed(lambda: _run(["regular_first_order", "regular_parity", "regpart"]))
    _report(capsys, 8, "first-order regular display against the exact oracle", results, t, 60,
            f"orders {_orders(results)}")


def test_criterion_09_classical_limits(capsys):
    ids = ["n1_classical", "n2_classical", "T_limit", "L_limit", "4classenermom"]
    results, t = _timed(lambda: _run(ids))
    orders = _orders(results)
    for cid in ("n2_classical", "4classenermom"):
        flat = orders[cid].values() if isinstance(orders[cid], dict) else [orders[cid]]
        assert set(flat) == {1}, (cid, orders[cid])
    _report(capsys, 9, "classical limits at eps = 1e-3", results, t, 120, f"orders {orders}")


def test_criterion_10_qcalculus(capsys):
    results, t = _timed(lambda: _run(["apqtaylor1", "apqtaylor2", "apnqderivada", "apqbinomio"]))
    tol = {r.id: r.tolerance for r in results}
    assert tol == {"apqtaylor1": 1e-10, "apqtaylor2": 1e-10, "apnqderivada": 1e-12, "apqbinomio": 1e-12}
    _report(capsys, 10, "q-Taylor, n-th q-derivative, q-binomial", results, t, 5)


@pytest.mark.slow
def test_criterion_11_cli_default_suite(tmp_path, capsys):
    reports, elapsed = [], []
    for k in range(2):
        out = tmp_path / f"run{k}.json"
        t0 = time.perf_counter()
        proc = subprocess.run([sys.executable, "-m", "qsugawara.cli", "--seed", "7", "--out", str(out)],
                              capture_output=True, text=True)
        elapsed.append(time.perf_counter() - t0)
        assert proc.returncode == 0, proc.stderr + out.read_text()[-2000:]
        reports.append(json.loads(out.read_text()))
    problems = validate_report(reports[0])
    same = json.dumps(strip_runtime(reports[0]), sort_keys=True) == json.dumps(strip_runtime(reports[1]),
                                                                                sort_keys=True)
    run = reports[0]["run"]
    ok = not problems and same and run["failed"] == [] and max(elapsed) < 600
    with capsys.disabled():
        print(f"\ncriterion 11 {'PASS' if ok else 'FAIL'}: CLI default suite: exit 0, {run['passed']}/{run['total']} "
              f"passed, schema {'valid' if not problems else problems}, deterministic={same}, "
              f"{max(elapsed):.0f}s < 600s")
    assert not problems and same and max(elapsed) < 600
