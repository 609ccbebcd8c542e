from __future__ import annotations

import pytest

from helpers import annotate_trivially
from weaklin import corpus
from weaklin.errors import GlobalTypeError
from weaklin.globaltypes import (
    check_expr_global,
    check_program_global,
    ctx_globalize,
    globals_at,
    globals_of,
    pat_dot,
    pat_leq,
    pat_restrict,
    pinfo,
    rho,
    seq_ctx,
    subst_pat_in_type,
)
from weaklin.parser import parse_expression, parse_quals, type_from_text
from weaklin.skeleton import trivialize
from weaklin.syntax import LO, PTup, PVar, Stor

T = type_from_text
LO_INT = Stor(LO, "int")


def test_rho():
    assert rho(Stor("x", "int")) == "x"
    assert rho(T("Pi x : lo int . x int")) == LO
    assert rho(T("<x int, lo int>")) == ("x", LO)


def test_pat_order():
    assert pat_leq(("x", ("z", LO)), ("x", ("z", "w")))
    assert pat_leq(LO, "x")
    assert not pat_leq("x", "y")


def test_sequential_context():
    ctx = (("x", LO_INT),)
    assert seq_ctx(ctx, []) == ctx
    assert seq_ctx(ctx, [("x", Stor("x", "int"))]) == (("x", Stor("x", "int")),)
    dropped = seq_ctx((("x", Stor("x", "int")),), [("x", LO_INT)])
    assert dropped[0][0] == "x" and not isinstance(dropped[0][1], Stor)


def test_pat_dot():
    assert pat_dot("a", Stor(LO, "array")) == Stor("a", "array")
    assert pat_dot(LO, T("<x int, lo int>")) == T("<x int, lo int>")
    assert pat_dot(("w", LO), T("<lo int, lo int>")) == T("<w int, lo int>")


def test_pat_restrict():
    p = PTup((PVar("x"), PVar("w")))
    assert pat_restrict(p, {"w"}) == (LO, "w")
    assert pat_restrict(p, set()) == (LO, LO)
    assert pat_restrict(PVar("x"), {"x"}) == "x"


def test_substitution_in_types():
    assert subst_pat_in_type(PVar("x"), LO, Stor("x", "int")) == LO_INT
    assert subst_pat_in_type(PVar("x"), "n", T("<x int, lo int>")) == T("<n int, lo int>")


def test_globals():
    fact1 = (("w", Stor("w", "int")), ("f", T("Pi <> : <> . w int")))
    assert globals_of(fact1) == {"w"}
    assert globals_of((("x", LO_INT),)) == set()
    assert globals_at((("w", Stor("w", "int")), ("a", Stor("a", "array"))), "int") == {"w"}


def test_ctx_globalize():
    assert ctx_globalize((("x", LO_INT),), {"x"}) == (("x", Stor("x", "int")),)


def test_let_carries_store_information():
    ctx = (("x", LO_INT), ("y", LO_INT))
    assert pinfo(ctx, parse_expression("let z = y in z")) == "y"


def test_lo_sum_with_let_argument_is_rejected():
    ctx = (("x", LO_INT), ("y", LO_INT))
    e = annotate_trivially(dict(ctx), parse_expression("add(x, let z = y in z)"), LO)
    assert not check_expr_global(ctx, e, LO_INT)


def test_lo_sum_without_let_is_accepted():
    ctx = (("x", LO_INT), ("y", LO_INT))
    e = annotate_trivially(dict(ctx), parse_expression("add(x, y)"), LO)
    assert check_expr_global(ctx, e, LO_INT)


@pytest.mark.parametrize("name", corpus.CLASSIFIED)
def test_corpus_global_signature_checks(name):
    e = corpus.load(name)
    check_program_global(e.program, e.qglo)


def test_case_program_fails_at_the_case_phrase():
    e = corpus.load("case")
    with pytest.raises(GlobalTypeError) as info:
        check_program_global(e.program, e.qglo)
    assert info.value.rule == corpus.expected_table()["case"]["global_rule"]


@pytest.mark.parametrize("name", corpus.NAMES)
def test_trivial_global_signature_checks(name):
    prog = corpus.load(name).program
    check_program_global(prog, trivialize(prog, "global"))


def test_claimed_pi_with_foreign_domain_is_rejected():
    e = corpus.load("fib1")
    text = (
        "l1 v1 global\neqz : x int -> lo bool\n1 : lo int\n1 : lo int\n"
        "sub1 : x int -> x int\nadd : (lo int, lo int) -> lo int\n@n : lo int\n"
        "ctx f : Pi x : z int . <x int, lo int, lo int>\n"
    )
    with pytest.raises(GlobalTypeError):
        check_program_global(e.program, parse_quals(text))
