from __future__ import annotations

import pytest

from helpers import annotate_trivially
from weaklin import corpus
from weaklin.errors import LinearTypeError
from weaklin.linear import check_expr, check_program, ctx_un, pspl, spl, un_pred
from weaklin.parser import parse_expression, parse_program, parse_quals, type_from_text
from weaklin.skeleton import trivialize
from weaklin.syntax import HI, LI, UN, Arrow, Stor

LI_INT = Stor(LI, "int")
UN_INT = Stor(UN, "int")
HI_INT = Stor(HI, "int")


def test_un_predicate():
    assert not un_pred(LI_INT)
    assert un_pred(Arrow(LI_INT, LI_INT))
    assert un_pred(HI_INT)
    assert un_pred(UN_INT)


def test_ctx_un_keeps_only_unrestricted_entries():
    f = Arrow(LI_INT, LI_INT)
    assert ctx_un((("x", LI_INT), ("f", f))) == (("f", f),)
    assert ctx_un(()) == ()
    assert ctx_un((("x", UN_INT),)) == (("x", UN_INT),)


def test_split_duplicates_unrestricted_variables():
    assert spl(2, [{"x"}, {"x"}], (("x", UN_INT),)) == [(("x", UN_INT),), (("x", UN_INT),)]


def test_split_sends_linear_variable_to_last_user():
    assert spl(2, [{"x"}, {"x"}], (("x", LI_INT),)) == [(), (("x", LI_INT),)]


def test_split_sends_unused_linear_variable_to_first_part():
    assert spl(2, [set(), set()], (("x", LI_INT),)) == [(("x", LI_INT),), ()]


def test_pseudosplit_deposits_hidden_copies():
    assert pspl(2, [{"x"}, {"x"}], (("x", LI_INT),)) == [(("x", HI_INT),), (("x", LI_INT),)]
    assert pspl(3, [{"x"}] * 3, (("x", LI_INT),)) == [
        (("x", HI_INT),),
        (("x", HI_INT),),
        (("x", LI_INT),),
    ]
    assert pspl(2, [{"x"}, {"x"}], (("x", UN_INT),)) == [(("x", UN_INT),), (("x", UN_INT),)]


def test_variable_rule():
    assert check_expr((("x", UN_INT),), parse_expression("x")) == UN_INT


def test_literal_rejects_unconsumed_linear_context():
    lit = annotate_trivially({}, parse_expression("1"), UN)
    with pytest.raises(LinearTypeError):
        check_expr((("x", LI_INT),), lit)


def test_hidden_variable_cannot_be_returned():
    assert not _accepts((("x", HI_INT),), parse_expression("x"))


def _accepts(ctx, e) -> bool:
    try:
        check_expr(ctx, e)
    except LinearTypeError:
        return False
    return True


@pytest.mark.parametrize("name", corpus.NAMES)
def test_corpus_linear_signature_checks(name):
    e = corpus.load(name)
    res = check_program(e.program, e.qlin)
    assert res.type is not None


def test_fib1_main_type():
    e = corpus.load("fib1")
    assert check_program(e.program, e.qlin).type == type_from_text("<li int, un int, un int>")


def test_fact3_store_function_type():
    e = corpus.load("fact3")
    assert dict(e.qlin.ctx)["f"] == type_from_text("<li int, li int> -> <li int, li int>")
    check_program(e.program, e.qlin)


@pytest.mark.parametrize("name", corpus.NAMES)
def test_trivial_signature_checks(name):
    prog = corpus.load(name).program
    check_program(prog, trivialize(prog, "linear"))


def test_closure_dropping_linear_argument_is_rejected():
    prog = parse_program("l1 v1\nstore\n  f = \\x. 1;\nmain\n  f 2\n")
    quals = parse_quals("l1 v1 linear\n1 : un int\n2 : li int\nctx f : li int -> un int\n")
    with pytest.raises(LinearTypeError):
        check_program(prog, quals)


def test_error_names_rule_and_occurrence():
    e = corpus.load("fib1")
    text = (
        "l1 v1 linear\neqz : li int -> li bool\n1 : un int\n1 : un int\n"
        "sub1 : li int -> li int\nadd : (un int, un int) -> un int\n@n : li int\n"
        "ctx f : li int -> <li int, un int, un int>\n"
    )
    with pytest.raises(LinearTypeError) as info:
        check_program(e.program, parse_quals(text))
    assert info.value.rule
