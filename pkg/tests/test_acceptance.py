"""Acceptance criteria, one test each.

Every test records a PASS or FAIL line; the lines are printed in the
pytest terminal summary, and running this file as a script prints them
directly.  A criterion that does not hold fails its test.
"""

from __future__ import annotations

import io
import json
import time
from contextlib import redirect_stderr, redirect_stdout
from typing import Callable, Dict, List, Tuple

from helpers import annotate_trivially, brute_global, brute_linear, random_global_case, random_linear_case
from test_properties import check_differential, check_machine_invariants, differential_entries
from weaklin import corpus
from weaklin.analysis import classify
from weaklin.cli import main
from weaklin.emit import emit_program, normalize_layout
from weaklin.errors import GlobalTypeError
from weaklin.globalize import GlobSeed, glob_expr, glob_program
from weaklin.globaltypes import check_expr_global, check_program_global
from weaklin.linear import check_program
from weaklin.linearize import li_cost, lin_expr, lin_program, rank
from weaklin.parser import parse_expression
from weaklin.syntax import LO, Stor

RESULTS: Dict[int, Tuple[bool, str]] = {}


def _cli(argv: List[str]) -> Tuple[int, dict]:
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(argv + ["--json"])
    return code, json.loads(out.getvalue() or "{}")


def _record(number: int, check: Callable[[], Tuple[bool, str]]) -> None:
    try:
        ok, detail = check()
    except Exception as exc:  # a crash is a failure of the criterion
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    RESULTS[number] = (ok, detail)
    assert ok, detail


def summary_lines() -> List[str]:
    return [
        f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        for k, (ok, detail) in sorted(RESULTS.items())
    ]


# ------------------------------------------------------------------ criteria


def _cost_formulas():
    start = time.perf_counter()
    bad = []
    for n in (0, 5, 10, 20):
        _, un = _cli(["eval", "fib1", "--mode", "un", "--param", f"n={n}"])
        _, li = _cli(["eval", "fib1", "--mode", "li", "--param", f"n={n}"])
        if un["cost"] != 2 * n + 3 or li["cost"] != n + 3:
            bad.append((n, un["cost"], li["cost"]))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 1.0
    return ok, f"un = 2n+3 and li = n+3 at n in 0,5,10,20 in {elapsed:.2f}s" + (f"; wrong: {bad}" if bad else "")


def test_criterion_01_cost_formulas():
    _record(1, _cost_formulas)


def _ratios():
    got = {}
    for name, key in (("fib1", "linear_ratio"), ("fact1", "linear_ratio"), ("fact2", "linear_ratio"), ("fib4", "global_ratio")):
        e = corpus.load(name)
        c = classify(e.program, e.qlin, e.qglo, (8, 16, 32))
        got[name] = str(getattr(c, key))
    want = {"fib1": "1/2", "fact1": "1/2", "fact2": "1/2", "fib4": "1/4"}
    return got == want, f"ratios {got}"


def test_criterion_02_ratios():
    _record(2, _ratios)


def _classification():
    table = corpus.expected_table()
    names = ["fib1", "fib2", "fib3", "fib4", "fib5", "fact1", "fact2", "fact3", "map1", "insl1", "mapl1"]
    wrong = []
    for name in names:
        e = corpus.load(name)
        c = classify(e.program, e.qlin, e.qglo, (8, 16, 32), e.list_adjust)
        if c.flags() != table[name]["flags"]:
            wrong.append(name)
    return not wrong, f"{len(names) - len(wrong)}/{len(names)} programs match their labels" + (
        f"; wrong: {wrong}" if wrong else ""
    )


def test_criterion_03_classification_table():
    _record(3, _classification)


def _protection_failures():
    notes = []
    ok = True
    for name, entry in (("fib2", "id"), ("insl1", "cons"), ("mapl1", "cons")):
        code, out = _cli(["protect", name])
        at = [f["position"] for f in out.get("failing", []) if f["global"].startswith(entry + " ")]
        ok &= code == 1 and bool(at)
        notes.append(f"{name}: exit {code}, {entry} at {at}")
    return ok, "; ".join(notes)


def test_criterion_04_protection_failures_localize():
    _record(4, _protection_failures)


def _negative_typing():
    e = corpus.load("case")
    check_program(e.program, e.qlin)
    try:
        check_program_global(e.program, e.qglo)
        rule = None
    except GlobalTypeError as exc:
        rule = exc.rule
    ctx = (("x", Stor(LO, "int")), ("y", Stor(LO, "int")))
    sum_let = annotate_trivially(dict(ctx), parse_expression("add(x, let z = y in z)"), LO)
    rejected = not check_expr_global(ctx, sum_let, Stor(LO, "int"))
    return rule == "cas" and rejected, f"case: linear ok, global fails at rule {rule}; sum with let rejected: {rejected}"


def test_criterion_05_negative_typing():
    _record(5, _negative_typing)


def _differential():
    start = time.perf_counter()
    names = differential_entries()
    for name in names:
        check_differential(name)
    elapsed = time.perf_counter() - start
    return elapsed < 10.0, f"li = gl = glcmd for n in 0..8 on {names} in {elapsed:.2f}s"


def test_criterion_06_differential_protection():
    _record(6, _differential)


def _search():
    notes = []
    ok = True
    for name in ("fib1", "fact3"):
        e = corpus.load(name)
        cands = lin_program(e.program, cap=None).candidates
        found = any(q.entries == e.qlin.entries and q.ctx == e.qlin.ctx for q in cands)
        best = rank(cands, e.program)[0][0]
        minimal = best == li_cost(e.program, e.qlin, 6)
        ok &= found and minimal
        notes.append(f"lin {name}: found {found}, minimal {minimal}")
    for name in ("fib1", "fib5", "fact3"):
        e = corpus.load(name)
        found = e.qglo.entries in [q.entries for q in glob_program(e.program, seed=GlobSeed(env=e.seed)).candidates]
        ok &= found
        notes.append(f"glob {name}: found {found}")
    count = lin_program(corpus.load("insl1").program, count_only=True).count
    ok &= count > 8192
    notes.append(f"insl1 count {count} (needs > 8192)")
    return ok, "; ".join(notes)


def test_criterion_07_search_reproduces_tables():
    _record(7, _search)


def _oracles():
    start = time.perf_counter()
    lin_bad = []
    for s in range(200):
        ctx, e = random_linear_case(s)
        if set(lin_expr(ctx, e)) != brute_linear(ctx, e):
            lin_bad.append(s)
    glob_bad = []
    for s in range(200):
        ctx, e, t = random_global_case(s)
        if set(glob_expr(ctx, e, t, mode="complete")) != brute_global(ctx, e, t):
            glob_bad.append(s)
    elapsed = time.perf_counter() - start
    ok = not lin_bad and not glob_bad and elapsed < 60.0
    return ok, f"200 linear and 200 global cases, mismatches {lin_bad + glob_bad}, {elapsed:.1f}s"


def test_criterion_08_oracle_equivalence():
    _record(8, _oracles)


def _machine():
    start = time.perf_counter()
    for seed in range(500):
        check_machine_invariants(seed)
    elapsed = time.perf_counter() - start
    return elapsed < 60.0, f"500 random programs: aligned traces, cost(li) = cost(un) - dealloc, {elapsed:.1f}s"


def test_criterion_09_machine_invariants():
    _record(9, _machine)


def _goldens():
    names = ["fib1", "fib2", "fib4", "fib5", "fact1", "fact2", "fact3", "map1", "insl1", "fact3g", "fib5g"]
    wrong = []
    for name in names:
        e = corpus.load(name)
        if normalize_layout(emit_program(e.program, e.qglo).text()) != normalize_layout(e.golden):
            wrong.append(name)
    return not wrong, f"{len(names) - len(wrong)}/{len(names)} emissions match" + (f"; wrong: {wrong}" if wrong else "")


def test_criterion_10_golden_emissions():
    _record(10, _goldens)


if __name__ == "__main__":
    for number, fn in sorted(
        (int(k.split("_")[2]), v) for k, v in dict(globals()).items() if k.startswith("test_criterion_")
    ):
        try:
            fn()
        except AssertionError:
            pass
    print("\n".join(summary_lines()))
