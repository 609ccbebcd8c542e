from __future__ import annotations

import json
import subprocess
import sys

import pytest

from weaklin import corpus
from weaklin.cli import main


def _json(capsys, argv, code=0):
    assert main(argv + ["--json"]) == code
    return json.loads(capsys.readouterr().out)


@pytest.mark.parametrize("n", [0, 5, 10, 20])
def test_eval_cost_formulas(capsys, n):
    un = _json(capsys, ["eval", "fib1", "--mode", "un", "--param", f"n={n}"])
    li = _json(capsys, ["eval", "fib1", "--mode", "li", "--param", f"n={n}"])
    assert un["cost"] == 2 * n + 3
    assert li["cost"] == n + 3
    assert un["result"] == li["result"]


def test_eval_with_explicit_files(capsys):
    out = _json(capsys, ["eval", "fib5.l1", "--quals", "fib5.qglo", "--mode", "glcmd", "--param", "n=4"])
    assert out["dealloc_units"] == 0


def test_eval_trace(capsys):
    out = _json(capsys, ["eval", "fib1", "--param", "n=1", "--trace"])
    assert len(out["trace"]) == out["steps"]


def test_eval_usage_errors(capsys):
    assert main(["eval", "fib1"]) == 2
    assert main(["eval", "fib1", "--param", "n=x"]) == 2
    assert main(["eval", "fib1", "--mode", "li", "--quals", "fib1.qglo", "--param", "n=1"]) == 2
    assert main(["eval", "no-such-program"]) == 2
    capsys.readouterr()


def test_eval_fuel_exhaustion(capsys):
    out = _json(capsys, ["eval", "fib1", "--param", "n=50", "--fuel", "10"], code=1)
    assert out["kind"] == "fuel"


def test_check_linear(capsys):
    assert _json(capsys, ["check-linear", "case"])["ok"]


def test_check_global_rejects_case(capsys):
    out = _json(capsys, ["check-global", "case"], code=1)
    assert out["rule"] == "cas"


def test_check_global_accepts_fib2(capsys):
    assert _json(capsys, ["check-global", "fib2.l1", "fib2.qglo"])["ok"]


def test_protect_fib1(capsys):
    out = _json(capsys, ["protect", "fib1"])
    assert out["protected"] and out["failing"] == []


@pytest.mark.parametrize("name, entry", [("fib2", "id"), ("insl1", "cons"), ("mapl1", "cons")])
def test_protect_reports_failing_positions(capsys, name, entry):
    out = _json(capsys, ["protect", f"{name}.qlin", f"{name}.qglo"], code=1)
    assert not out["protected"]
    assert any(f["global"].startswith(entry + " ") for f in out["failing"])
    assert out["first_failing"] == out["failing"][0]["position"]


def test_protect_misaligned_lists(capsys):
    assert main(["protect", "fib1.qlin", "fact1.qglo"]) == 1
    assert "weaklin:" in capsys.readouterr().err


def test_classify(capsys):
    out = _json(capsys, ["classify", "fib4", "--samples", "8,16,32"])
    assert out["global_ratio"] == "1/4"
    assert out["protected"] and out["full_linear"] and not out["li_match"]


def test_classify_applies_recorded_list_adjustment(capsys):
    out = _json(capsys, ["classify", "insl1"])
    assert out["list_adjusted"] and out["full_linear"]
    out = _json(capsys, ["classify", "insl1", "--no-list-adjust"])
    assert not out["list_adjusted"]


def test_classify_rejects_bad_samples(capsys):
    assert main(["classify", "fib1", "--samples", "1,2"]) == 2
    capsys.readouterr()


def test_linearize(capsys):
    out = _json(capsys, ["linearize", "fib1", "--cap", "0"])
    assert out["count"] == len(out["candidates"]) and out["candidates"][0]["cost"] == 9


def test_linearize_count_only(capsys):
    out = _json(capsys, ["linearize", "insl1", "--count-only"])
    assert out["count"] > 0 and "candidates" not in out


def test_linearize_constraints(capsys, tmp_path):
    cons = tmp_path / "c.json"
    cons.write_text(json.dumps({"fixed": [4], "ctx": {"f": "li int -> <li int, un int, un int>"}}))
    out = _json(capsys, ["linearize", "fib1", "--constraints", str(cons)])
    assert out["count"] >= 1
    assert all("add : (un int, un int) -> un int" in c["quals"] for c in out["candidates"])


def test_linearize_bad_constraints(capsys, tmp_path):
    cons = tmp_path / "c.json"
    cons.write_text("{")
    assert main(["linearize", "fib1", "--constraints", str(cons)]) == 2
    capsys.readouterr()


def test_globalize_with_seed(capsys):
    out = _json(capsys, ["globalize", "fact3", "--env", "fact3.seed"])
    text = corpus.read_text("fact3.qglo").splitlines()
    assert any(set(text[1:]) <= set(c.splitlines()) for c in out["candidates"])


def test_globalize_with_target(capsys):
    out = _json(capsys, ["globalize", "fib1", "--target", "<lo int, lo int, lo int>", "--search", "forced"])
    assert out["count"] >= 1


def test_globalize_case_has_no_candidates(capsys):
    assert _json(capsys, ["globalize", "case"], code=1)["count"] == 0


def test_emit_golden(capsys):
    out = _json(capsys, ["emit", "fib1", "--golden"])
    assert out["golden_match"] and "x := sub1(x)" in out["text"]


def test_emit_golden_mismatch(capsys, tmp_path):
    other = tmp_path / "other.imp"
    other.write_text("l1 v1\nmain\n  1\n")
    assert main(["emit", "fib1", "--golden", str(other)]) == 1
    capsys.readouterr()


def test_emit_type_error(capsys):
    assert main(["emit", "case"]) == 1
    assert "type error" in capsys.readouterr().out


def test_corpus_listing(capsys):
    out = _json(capsys, ["corpus"])
    assert "fib1" in out["entries"]


def test_parse_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.l1"
    bad.write_text("l1 v1\nmain\n  add(1,\n")
    assert main(["eval", str(bad)]) == 2
    assert "4:1" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "weaklin", "eval", "fib1", "--param", "n=3"],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0 and "cost: 9" in res.stdout
