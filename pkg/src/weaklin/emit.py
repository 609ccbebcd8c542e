"""Imperative form of globally typed programs.

Operator and constructor occurrences whose output carries a global
qualifier ``x`` become assignments ``x := o(...)``; ``lo`` occurrences just
lose their annotation.  Variables that appear free in the types of the
global context are never passed as parameters: they are replaced by ``<>``
in lambda and let patterns.  The result is an ordinary :class:`Program`
(with :class:`Assign` nodes) that the machine runs in ``glcmd`` mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Mapping, Optional

from .globaltypes import Ctx, check_program_global, globals_of
from .machine import DEFAULT_FUEL, RunResult, run
from .parser import print_program, tokenize
from .syntax import (
    LO,
    App,
    Assign,
    Case,
    Closure,
    Cons,
    ConsD,
    Expr,
    If,
    Let,
    Nil,
    Op,
    Program,
    QualificationList,
    Tup,
    Var,
    erase_pattern,
)


def _assign(node: Expr, ann) -> Expr:
    if ann is None or ann.output.q == LO:
        return node
    return Assign(ann.output.q, node)


def emit_expr(glob: FrozenSet[str], e: Expr) -> Expr:
    """P applied to an annotated expression, given ``glob`` = Gl of the context."""
    em = lambda x: emit_expr(glob, x)
    if isinstance(e, Var):
        return e
    if isinstance(e, Op):
        return _assign(Op(e.occ, e.name, tuple(em(a) for a in e.args)), e.ann)
    if isinstance(e, Nil):
        return _assign(Nil(e.occ), e.ann)
    if isinstance(e, Cons):
        return _assign(Cons(e.occ, em(e.head), em(e.tail)), e.ann)
    if isinstance(e, ConsD):
        # The forced constructor only differs from cons in what linear
        # evaluation destroys; its imperative form is a plain cons.
        if isinstance(e.old, Var):
            node: Expr = Cons(e.occ, em(e.head), em(e.tail))
        else:
            node = ConsD(e.occ, em(e.old), em(e.head), em(e.tail))
        return _assign(node, e.ann)
    if isinstance(e, Tup):
        return Tup(tuple(em(x) for x in e.items))
    if isinstance(e, App):
        return App(e.fn, em(e.arg))
    if isinstance(e, Let):
        return Let(erase_pattern(e.pat, glob), em(e.bound), em(e.body))
    if isinstance(e, If):
        return If(em(e.cond), em(e.then), em(e.else_))
    if isinstance(e, Case):
        # Global typing never lets a case scrutinee be global.
        return Case(em(e.scrut), em(e.nil_branch), e.head, e.tail, em(e.cons_branch), LO, e.cid)
    if isinstance(e, Assign):
        return Assign(e.target, em(e.rhs))
    raise TypeError(e)


@dataclass
class Imperative:
    """An emitted program together with the global variables it relies on."""

    program: Program
    globals: FrozenSet[str]

    def text(self) -> str:
        return print_imperative(self)

    def run(self, params: Optional[Mapping[str, int]] = None, fuel: int = DEFAULT_FUEL) -> RunResult:
        return run(self.program, "glcmd", params, fuel=fuel, globals_=self.globals)


def emit_annotated(ctx: Ctx, prog: Program) -> Imperative:
    """P over every store closure and the main phrase of an annotated program."""
    glob = frozenset(globals_of(ctx))
    store = []
    for name, v in prog.store:
        if isinstance(v, Closure):
            v = Closure(erase_pattern(v.pat, glob), emit_expr(glob, v.body))
        store.append((name, v))
    out = Program(prog.params, tuple(store), emit_expr(glob, prog.main))
    return Imperative(out, glob)


def emit_program(prog: Program, quals: QualificationList) -> Imperative:
    """Type-check ``prog`` under ``quals`` and return its imperative form."""
    res = check_program_global(prog, quals)
    return emit_annotated(res.ctx, res.program)


def print_imperative(imp: Imperative) -> str:
    return print_program(imp.program, seq=True)


def normalize_layout(text: str) -> str:
    """Token sequence of a rendering, so goldens compare modulo layout."""
    return " ".join(t.text for t in tokenize(text) if t.kind != "eof")
