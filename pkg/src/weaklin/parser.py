"""Concrete syntax for programs (``.l1``) and qualification lists.

Program files::

    l1 v1
    param n
    store
      f = \\x. if eqz(x) then <x, 1, 1> else
            let <x, w, y> = f sub1(x) in <x, y, add(w, y)>;
    main
      f @n

Qualification files (``.qlin`` / ``.qglo``)::

    l1 v1 linear
    eqz : hi int -> li bool
    1 : un int
    ctx f : li int -> <li int, un int, un int>

Comments start with ``#``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

from . import builtins
from .errors import ParseError
from .syntax import (
    OCC_NODES,
    RESERVED,
    App,
    Arrow,
    Assign,
    Case,
    Closure,
    Cons,
    ConsCell,
    ConsD,
    Const,
    Expr,
    If,
    Iota,
    Let,
    ListT,
    Nil,
    NilCell,
    Op,
    OpType,
    ParamConst,
    Pattern,
    Pi,
    Program,
    PTup,
    PVar,
    QualificationList,
    Stor,
    Tup,
    TupleT,
    Type,
    Value,
    Var,
    children,
    pattern_vars,
    with_children,
)

HEADER = "l1 v1"
KEYWORDS = frozenset({"let", "in", "if", "then", "else", "case", "of", "nil", "true", "false", "Pi"})

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<sym>->|:=|[\\<>(){},;:.=\[\]])
  | (?P<int>\d+)
  | (?P<param>@[A-Za-z_][A-Za-z0-9_]*)
  | (?P<ident>[A-Za-z_$][A-Za-z0-9_'$]*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> List[Token]:
    out: List[Token] = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        chunk = m.group(0)
        if m.lastgroup != "ws":
            out.append(Token(m.lastgroup, chunk, line, col))
        nl = chunk.count("\n")
        if nl:
            line += nl
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    out.append(Token("eof", "", line, col))
    return out


class _Stream:
    def __init__(self, tokens: List[Token]):
        self.toks = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("sym", "ident")

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.next()

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            self.fail("expected identifier")
        self.i += 1
        return t.text

    def fail(self, msg: str):
        t = self.tok
        found = t.text or "end of input"
        raise ParseError(f"{msg}, found {found!r}", t.line, t.col)


# --------------------------------------------------------------------------
# expressions


def _is_fun_name(s: _Stream) -> bool:
    t = s.tok
    return t.kind == "ident" and t.text not in KEYWORDS and t.text not in RESERVED


def _starts_atom(t: Token) -> bool:
    if t.kind in ("int", "param"):
        return True
    if t.kind == "sym":
        return t.text in ("<", "(")
    if t.kind == "ident":
        return t.text in ("nil", "true", "false") or (t.text not in KEYWORDS and t.text not in RESERVED)
    return False


def parse_pattern(s: _Stream) -> Pattern:
    if s.at("<"):
        s.next()
        items = []
        if not s.at(">"):
            items.append(parse_pattern(s))
            while s.at(","):
                s.next()
                items.append(parse_pattern(s))
        s.expect(">")
        return PTup(tuple(items))
    return PVar(s.ident())


def parse_expr(s: _Stream) -> Expr:
    if s.at("let"):
        s.next()
        p = parse_pattern(s)
        s.expect("=")
        bound = parse_expr(s)
        s.expect("in")
        return Let(p, bound, parse_expr(s))
    if s.at("if"):
        s.next()
        c = parse_expr(s)
        s.expect("then")
        a = parse_expr(s)
        s.expect("else")
        return If(c, a, parse_expr(s))
    if s.at("case"):
        s.next()
        q = None
        if s.tok.kind == "ident" and s.tok.text in RESERVED:
            q = s.next().text
        scrut = parse_expr(s)
        s.expect("of")
        s.expect("{")
        s.expect("nil")
        s.expect("->")
        e0 = parse_expr(s)
        s.expect(";")
        s.expect("(")
        z1 = s.ident()
        s.expect(":")
        z2 = s.ident()
        s.expect(")")
        s.expect("->")
        e1 = parse_expr(s)
        s.expect("}")
        return Case(scrut, e0, z1, z2, e1, q)
    if s.tok.kind == "ident" and s.peek().text == ":=":
        target = s.ident()
        s.expect(":=")
        return Assign(target, parse_expr(s))
    return _parse_cons(s)


def _parse_cons(s: _Stream) -> Expr:
    head = _parse_app(s)
    if s.at(":"):
        s.next()
        return Cons(-1, head, _parse_cons(s))
    return head


def _parse_app(s: _Stream) -> Expr:
    if (
        _is_fun_name(s)
        and not builtins.is_operator_name(s.tok.text)
        and s.tok.text != "consd"
        and _starts_atom(s.peek())
    ):
        fn = s.ident()
        return App(fn, _parse_atom(s))
    return _parse_atom(s)


def _parse_args(s: _Stream) -> List[Expr]:
    s.expect("(")
    args: List[Expr] = []
    if not s.at(")"):
        args.append(parse_expr(s))
        while s.at(","):
            s.next()
            args.append(parse_expr(s))
    s.expect(")")
    return args


def _parse_atom(s: _Stream) -> Expr:
    t = s.tok
    if t.kind == "int":
        s.next()
        return Op(-1, t.text, ())
    if t.kind == "param":
        s.next()
        return Op(-1, t.text, ())
    if s.at("nil"):
        s.next()
        return Nil(-1)
    if s.at("true") or s.at("false"):
        s.next()
        return Op(-1, t.text, ())
    if s.at("<"):
        s.next()
        items: List[Expr] = []
        if not s.at(">"):
            items.append(parse_expr(s))
            while s.at(","):
                s.next()
                items.append(parse_expr(s))
        s.expect(">")
        return Tup(tuple(items))
    if s.at("("):
        s.next()
        e = parse_expr(s)
        s.expect(")")
        return e
    if t.kind == "ident" and t.text == "consd":
        s.next()
        args = _parse_args(s)
        if len(args) != 3:
            raise ParseError("consd takes three arguments", t.line, t.col)
        return ConsD(-1, *args)
    if t.kind == "ident" and t.text in builtins.TABLE:
        s.next()
        args = _parse_args(s)
        want = builtins.arity(t.text)
        if len(args) != want:
            raise ParseError(f"{t.text} takes {want} arguments", t.line, t.col)
        return Op(-1, t.text, tuple(args))
    if _is_fun_name(s):
        return Var(s.ident())
    s.fail("expected expression")


# --------------------------------------------------------------------------
# numbering


def number(prog: Program) -> Program:
    """Assign occurrence ids (cons infix, other nodes prefix) and case ids."""
    occ = iter(range(1 << 30))
    cid = iter(range(1 << 30))

    def walk(e: Expr) -> Expr:
        if isinstance(e, Cons):
            h = walk(e.head)
            k = next(occ)
            return replace(e, occ=k, head=h, tail=walk(e.tail))
        if isinstance(e, OCC_NODES):
            k = next(occ)
            return with_children(replace(e, occ=k), [walk(c) for c in children(e)])
        if isinstance(e, Case):
            e = replace(e, cid=next(cid))
        return with_children(e, [walk(c) for c in children(e)])

    store = tuple(
        (n, Closure(v.pat, walk(v.body)) if isinstance(v, Closure) else v) for n, v in prog.store
    )
    return Program(prog.params, store, walk(prog.main))


def parse_expression(text: str) -> Expr:
    """Parse a standalone expression (numbered from 0)."""
    s = _Stream(tokenize(text))
    e = parse_expr(s)
    if s.tok.kind != "eof":
        s.fail("trailing input")
    return number(Program((), (), e)).main


def _parse_value(s: _Stream) -> Value:
    t = s.tok
    if s.at("\\"):
        s.next()
        p = parse_pattern(s)
        s.expect(".")
        return Closure(p, parse_expr(s))
    if t.kind == "int":
        s.next()
        return Const("int", int(t.text))
    if s.at("true") or s.at("false"):
        s.next()
        return Const("bool", t.text == "true")
    if t.kind == "param":
        s.next()
        return ParamConst(t.text[1:])
    if s.at("iota"):
        s.next()
        s.expect("(")
        p = s.tok
        if p.kind != "param":
            s.fail("iota expects a parameter")
        s.next()
        s.expect(")")
        return Iota(p.text[1:])
    if s.at("nil"):
        s.next()
        return NilCell()
    if s.at("("):
        s.next()
        h = s.ident()
        s.expect(":")
        tl = s.ident()
        s.expect(")")
        return ConsCell(h, tl)
    s.fail("expected a store value")


def parse_program(text: str) -> Program:
    s = _Stream(tokenize(text))
    _header(s, None)
    params: List[str] = []
    if s.at("param"):
        s.next()
        while s.tok.kind == "ident" and s.tok.text not in ("store", "main"):
            params.append(s.ident())
            if s.at(","):
                s.next()
    store: List[Tuple[str, Value]] = []
    if s.at("store"):
        s.next()
        while not s.at("main"):
            t = s.tok
            name = s.ident()
            if name in (n for n, _ in store):
                raise ParseError(f"duplicate store name {name}", t.line, t.col)
            s.expect("=")
            store.append((name, _parse_value(s)))
            s.expect(";")
    s.expect("main")
    main = parse_expr(s)
    if s.tok.kind != "eof":
        s.fail("trailing input")
    return number(Program(tuple(params), tuple(store), main))


def _header(s: _Stream, system: Optional[str]) -> Optional[str]:
    t = s.tok
    if not (s.at("l1") and s.peek().text == "v1"):
        raise ParseError(f"missing header {HEADER!r}", t.line, t.col)
    s.next()
    s.next()
    if system is None:
        return None
    if s.tok.text in ("linear", "global") and s.tok.line == t.line:
        return s.next().text
    return system


# --------------------------------------------------------------------------
# printing


def print_pattern(p: Pattern) -> str:
    return str(p)


def _atomic(e: Expr) -> bool:
    return isinstance(e, (Var, Op, Nil, Tup, ConsD, Cons))


def print_expr(e: Expr, op_name=None, seq: bool = False) -> str:
    """Render an expression.

    ``op_name`` may remap operator spellings.  With ``seq`` a let whose
    pattern binds no variable is printed as ``e; e'``.
    """
    show = op_name or (lambda n: n)
    pe = lambda x: print_expr(x, op_name, seq)

    def atom(x: Expr) -> str:
        return pe(x) if _atomic(x) else f"({pe(x)})"

    if isinstance(e, Var):
        return e.name
    if isinstance(e, Op):
        if not e.args:
            return show(e.name)
        return f"{show(e.name)}(" + ", ".join(pe(a) for a in e.args) + ")"
    if isinstance(e, Nil):
        return "nil"
    if isinstance(e, Cons):
        return f"({_cons_part(e.head, pe)} : {_cons_part(e.tail, pe)})"
    if isinstance(e, ConsD):
        return "consd(" + ", ".join(pe(a) for a in (e.old, e.head, e.tail)) + ")"
    if isinstance(e, Tup):
        return "<" + ", ".join(pe(x) for x in e.items) + ">"
    if isinstance(e, App):
        return f"{e.fn} {atom(e.arg)}"
    if isinstance(e, Let):
        if seq and not pattern_vars(e.pat):
            return f"{pe(e.bound)}; {pe(e.body)}"
        bound = f"({pe(e.bound)})" if isinstance(e.bound, Assign) else pe(e.bound)
        return f"let {e.pat} = {bound} in {pe(e.body)}"
    if isinstance(e, If):
        return f"if {pe(e.cond)} then {pe(e.then)} else {pe(e.else_)}"
    if isinstance(e, Case):
        q = f"{e.q} " if e.q else ""
        return (
            f"case {q}{pe(e.scrut)} of {{nil -> {pe(e.nil_branch)}; "
            f"({e.head} : {e.tail}) -> {pe(e.cons_branch)}}}"
        )
    if isinstance(e, Assign):
        return f"{e.target} := {pe(e.rhs)}"
    raise TypeError(e)


def _cons_part(e: Expr, pe) -> str:
    return pe(e) if isinstance(e, (Var, Op, Nil, Tup, ConsD, Cons, App)) else f"({pe(e)})"


def print_value(v: Value, seq: bool = False) -> str:
    if isinstance(v, Closure):
        return f"\\{v.pat}. {print_expr(v.body, seq=seq)}"
    if isinstance(v, Const):
        if v.pre == "bool":
            return "true" if v.payload else "false"
        if v.pre == "array":
            raise ValueError("array literals have no concrete syntax; use iota(@n)")
        return str(v.payload)
    if isinstance(v, ParamConst):
        return f"@{v.param}"
    if isinstance(v, Iota):
        return f"iota(@{v.param})"
    if isinstance(v, NilCell):
        return "nil"
    if isinstance(v, ConsCell):
        return f"({v.head} : {v.tail})"
    raise TypeError(v)


def print_program(prog: Program, seq: bool = False) -> str:
    lines = [HEADER]
    if prog.params:
        lines.append("param " + " ".join(prog.params))
    if prog.store:
        lines.append("store")
        for name, v in prog.store:
            lines.append(f"  {name} = {print_value(v, seq)};")
    lines.append("main")
    lines.append(f"  {print_expr(prog.main, seq=seq)}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# types and qualification lists


def _parse_pre(s: _Stream):
    if s.at("["):
        s.next()
        elem = _parse_stor(s)
        s.expect("]")
        return ListT(elem)
    t = s.tok
    if t.text in ("int", "bool", "array"):
        s.next()
        return t.text
    s.fail("expected a pretype")


def _parse_stor(s: _Stream) -> Stor:
    t = s.tok
    if t.kind != "ident" or t.text in KEYWORDS:
        s.fail("expected a qualifier")
    s.next()
    return Stor(t.text, _parse_pre(s))


def parse_type(s: _Stream) -> Type:
    if s.at("Pi"):
        s.next()
        p = parse_pattern(s)
        s.expect(":")
        dom = parse_type(s)
        s.expect(".")
        return Pi(p, dom, parse_type(s))
    left = _parse_prim_type(s)
    if s.at("->"):
        s.next()
        return Arrow(left, parse_type(s))
    return left


def _parse_prim_type(s: _Stream) -> Type:
    if s.at("<"):
        s.next()
        items: List[Type] = []
        if not s.at(">"):
            items.append(parse_type(s))
            while s.at(","):
                s.next()
                items.append(parse_type(s))
        s.expect(">")
        return TupleT(tuple(items))
    if s.at("("):
        s.next()
        t = parse_type(s)
        s.expect(")")
        return t
    return _parse_stor(s)


def type_from_text(text: str) -> Type:
    s = _Stream(tokenize(text))
    t = parse_type(s)
    if s.tok.kind != "eof":
        s.fail("trailing input")
    return t


def optype_from_text(text: str) -> OpType:
    """Parse a single entry such as ``sub1 : li int -> li int``."""
    s = _Stream(tokenize(text))
    t = _parse_optype(s)
    if s.tok.kind != "eof":
        s.fail("trailing input")
    return t


def _entry_kind(name: str) -> str:
    return {"nil": "nil", "cons": "cons", "consd": "consd"}.get(name, "op")


def _parse_optype(s: _Stream) -> OpType:
    t = s.tok
    if t.kind in ("int", "param"):
        s.next()
        name = t.text
    else:
        name = s.next().text
        if t.kind != "ident":
            raise ParseError("expected an operator name", t.line, t.col)
    s.expect(":")
    if s.at("("):
        s.next()
        ins = [_parse_stor(s)]
        while s.at(","):
            s.next()
            ins.append(_parse_stor(s))
        s.expect(")")
        s.expect("->")
        return OpType(_entry_kind(name), name, tuple(ins), _parse_stor(s))
    first = _parse_stor(s)
    if s.at("->"):
        s.next()
        return OpType(_entry_kind(name), name, (first,), _parse_stor(s))
    return OpType(_entry_kind(name), name, (), first)


def parse_quals(text: str, system: Optional[str] = None) -> QualificationList:
    s = _Stream(tokenize(text))
    system = _header(s, system or "linear")
    entries: List[OpType] = []
    ctx: List[Tuple[str, Type]] = []
    cases: List[str] = []
    while s.tok.kind != "eof":
        if s.at("ctx") and s.peek().kind == "ident" and s.peek(2).text == ":":
            s.next()
            name = s.ident()
            s.expect(":")
            ctx.append((name, parse_type(s)))
        elif s.at("case") and s.peek().text != ":":
            s.next()
            cases.append(s.next().text)
        else:
            entries.append(_parse_optype(s))
    return QualificationList(system, tuple(entries), tuple(ctx), tuple(cases) if cases else None)


def print_quals(quals: QualificationList) -> str:
    lines = [f"{HEADER} {quals.system}"]
    lines.extend(str(t) for t in quals.entries)
    lines.extend(f"ctx {n} : {t}" for n, t in quals.ctx)
    if quals.cases:
        lines.extend(f"case {q}" for q in quals.cases)
    return "\n".join(lines) + "\n"
