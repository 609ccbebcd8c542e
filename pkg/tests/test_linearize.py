from __future__ import annotations

import random

import pytest

from helpers import _set_cases, _slots, annotate_trivially, random_linear_case
from weaklin import corpus
from weaklin.errors import LinearTypeError
from weaklin.linear import check_expr, check_expr_cases
from weaklin.linearize import li_cost, lin_expr, lin_program, rank
from weaklin.parser import parse_expression
from weaklin.skeleton import trivialize
from weaklin.syntax import LI, UN, Stor


def test_variable_clause():
    assert lin_expr((("x", Stor(LI, "int")),), parse_expression("x")) == [
        (parse_expression("x"), Stor(LI, "int"))
    ]


def test_unbound_variable_gives_nothing():
    assert lin_expr((), parse_expression("x")) == []


def test_literal_outputs_are_lowered_from_un():
    lit = annotate_trivially({}, parse_expression("1"), UN)
    assert {t for _, t in lin_expr((), lit)} == {Stor(LI, "int"), Stor(UN, "int")}


@pytest.mark.parametrize("seed", range(40))
def test_every_result_checks_at_its_type(seed):
    ctx, e = random_linear_case(seed)
    for x, t in lin_expr(ctx, e):
        assert check_expr(ctx, x) == t


def test_trivial_qualification_is_found_when_it_checks():
    checked = 0
    for seed in range(80):
        ctx, e = random_linear_case(seed)
        try:
            _, cases = check_expr_cases(ctx, e)
        except LinearTypeError:
            continue
        checked += 1
        assert _set_cases(e, cases) in {x for x, _ in lin_expr(ctx, e)}, seed
    assert checked >= 20


@pytest.mark.parametrize("name", corpus.NAMES)
def test_trivial_program_qualification_is_found(name):
    prog = corpus.load(name).program
    trivial = trivialize(prog, "linear")
    found = lin_program(prog, ctx_fixed=dict(trivial.ctx), cap=None)
    assert trivial.entries in {q.entries for q in found.candidates}


@pytest.mark.parametrize("seed", range(40))
def test_fixed_occurrences_prune_monotonically(seed):
    ctx, e = random_linear_case(seed)
    full = set(lin_expr(ctx, e))
    occs = sorted({x.occ for x in _slots(e)})
    fixed = {k: "fixed" for k in random.Random(seed).sample(occs, 1)}
    assert set(lin_expr(ctx, e, fixed)) <= full


@pytest.mark.parametrize("name", ["fib1", "fact3"])
def test_program_search_contains_published_signature(name):
    e = corpus.load(name)
    found = lin_program(e.program, cap=None)
    assert not found.truncated
    match = [q for q in found.candidates if q.entries == e.qlin.entries]
    assert match and match[0].ctx == e.qlin.ctx


@pytest.mark.parametrize("name", ["fib1", "fact3"])
def test_rank_puts_published_signature_at_minimal_cost(name):
    e = corpus.load(name)
    ranked = rank(lin_program(e.program, cap=None).candidates, e.program)
    assert ranked[0][0] == li_cost(e.program, e.qlin, 6)


def test_fib1_minimum_cost_is_n_plus_3():
    e = corpus.load("fib1")
    ranked = rank(lin_program(e.program).candidates, e.program, sample_n=6)
    assert ranked[0][0] == 9


def test_rank_is_stable():
    e = corpus.load("fib1")
    same = [e.qlin, e.qlin]
    assert [q for _, q in rank(same, e.program)] == same
    assert rank([e.qlin], e.program)[0][1] == e.qlin


@pytest.mark.parametrize("name", ["fib1", "fact3", "map1"])
def test_count_only_matches_enumeration(name):
    prog = corpus.load(name).program
    assert lin_program(prog, count_only=True).count == len(lin_program(prog, cap=None).candidates)


def test_cap_truncates():
    found = lin_program(corpus.load("fact3").program, cap=2)
    assert found.truncated and len(found.candidates) == 2


def test_store_types_can_be_pinned():
    e = corpus.load("fib1")
    found = lin_program(e.program, ctx_fixed=dict(e.qlin.ctx), cap=None)
    assert found.candidates
    assert all(q.ctx == e.qlin.ctx for q in found.candidates)
