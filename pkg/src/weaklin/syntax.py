"""Abstract syntax, qualifiers, types, patterns and substitution.

Every phrase of the language lives here as a frozen dataclass.  Operator,
constructor and forced-constructor nodes carry an occurrence id (their
position in the program's qualification list) and an annotation slot
``ann`` that is ``None`` until a qualification list is applied.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from .errors import AlignmentError, FlattenError, SubstitutionError

# --------------------------------------------------------------------------
# qualifiers

LI, UN, HI, LO = "li", "un", "hi", "lo"
RESERVED = frozenset({LI, UN, HI, LO})
LINEAR_QUALS = (LI, UN)
PSEUDO_QUALS = (LI, UN, HI)


def qual_leq(a: str, b: str) -> bool:
    """The two-point order li <= un on linear qualifiers."""
    return a == b or (a == LI and b == UN)


def is_global_var(q: str) -> bool:
    return q not in RESERVED


# --------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class ListT:
    elem: "Stor"

    def __str__(self) -> str:
        return f"[{self.elem}]"


Pre = Union[str, ListT]  # "int" | "bool" | "array" | ListT
BASE_PRETYPES = ("int", "bool", "array")


@dataclass(frozen=True)
class Stor:
    """A storable type ``q P``; ``q`` is li/un/hi, lo, or a variable name."""

    q: str
    pre: Pre

    def __str__(self) -> str:
        return f"{self.q} {self.pre}"


@dataclass(frozen=True)
class Arrow:
    dom: "Type"
    cod: "Type"

    def __str__(self) -> str:
        dom = f"({self.dom})" if isinstance(self.dom, (Arrow, Pi)) else str(self.dom)
        return f"{dom} -> {self.cod}"


@dataclass(frozen=True)
class Pi:
    pat: "Pattern"
    dom: "Type"
    cod: "Type"

    def __str__(self) -> str:
        return f"Pi {self.pat} : {self.dom} . {self.cod}"


@dataclass(frozen=True)
class TupleT:
    items: Tuple["Type", ...]

    def __str__(self) -> str:
        return "<" + ", ".join(map(str, self.items)) + ">"


Type = Union[Stor, Arrow, Pi, TupleT]


@dataclass(frozen=True)
class OpType:
    """Type of one operator/constructor occurrence.

    ``kind`` is one of ``op``, ``nil``, ``cons``, ``consd``.
    """

    kind: str
    name: str
    inputs: Tuple[Stor, ...]
    output: Stor

    def __str__(self) -> str:
        if not self.inputs:
            return f"{self.name} : {self.output}"
        if len(self.inputs) == 1:
            return f"{self.name} : {self.inputs[0]} -> {self.output}"
        ins = ", ".join(map(str, self.inputs))
        return f"{self.name} : ({ins}) -> {self.output}"

    def qualifiers(self) -> List[str]:
        out: List[str] = []
        for s in (*self.inputs, self.output):
            out.extend(stor_quals(s))
        return out


def stor_quals(s: Stor) -> List[str]:
    out = [s.q]
    if isinstance(s.pre, ListT):
        out.extend(stor_quals(s.pre.elem))
    return out


def map_quals(t, fn):
    """Rebuild a type (or OpType) applying ``fn`` to every qualifier."""
    if isinstance(t, Stor):
        pre = ListT(map_quals(t.pre.elem, fn)) if isinstance(t.pre, ListT) else t.pre
        return Stor(fn(t.q), pre)
    if isinstance(t, Arrow):
        return Arrow(map_quals(t.dom, fn), map_quals(t.cod, fn))
    if isinstance(t, Pi):
        return Pi(t.pat, map_quals(t.dom, fn), map_quals(t.cod, fn))
    if isinstance(t, TupleT):
        return TupleT(tuple(map_quals(x, fn) for x in t.items))
    if isinstance(t, OpType):
        return OpType(t.kind, t.name, tuple(map_quals(x, fn) for x in t.inputs), map_quals(t.output, fn))
    raise TypeError(t)


def type_vars(t) -> set:
    """Global-qualifier variables occurring free in a type."""
    if isinstance(t, Stor):
        out = {t.q} if is_global_var(t.q) else set()
        if isinstance(t.pre, ListT):
            out |= type_vars(t.pre.elem)
        return out
    if isinstance(t, Arrow):
        return type_vars(t.dom) | type_vars(t.cod)
    if isinstance(t, Pi):
        return type_vars(t.dom) | (type_vars(t.cod) - pattern_vars_set(t.pat))
    if isinstance(t, TupleT):
        out = set()
        for x in t.items:
            out |= type_vars(x)
        return out
    if isinstance(t, OpType):
        out = set()
        for x in (*t.inputs, t.output):
            out |= type_vars(x)
        return out
    raise TypeError(t)


# --------------------------------------------------------------------------
# patterns


@dataclass(frozen=True)
class PVar:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class PTup:
    items: Tuple["Pattern", ...]

    def __str__(self) -> str:
        return "<" + ", ".join(map(str, self.items)) + ">"


Pattern = Union[PVar, PTup]
UNIT = PTup(())


def pattern_vars(p: Pattern) -> List[str]:
    if isinstance(p, PVar):
        return [p.name]
    out: List[str] = []
    for q in p.items:
        out.extend(pattern_vars(q))
    return out


def pattern_vars_set(p: Pattern) -> set:
    return set(pattern_vars(p))


def check_pattern(p: Pattern) -> None:
    names = pattern_vars(p)
    if len(names) != len(set(names)):
        raise SubstitutionError(f"repeated variable in pattern {p}")


def erase_pattern(p: Pattern, names) -> Pattern:
    """Replace the variables of ``p`` that belong to ``names`` by <>."""
    if isinstance(p, PVar):
        return UNIT if p.name in names else p
    return PTup(tuple(erase_pattern(q, names) for q in p.items))


# --------------------------------------------------------------------------
# expressions


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Op:
    occ: int
    name: str
    args: Tuple["Expr", ...]
    ann: Optional[OpType] = None


@dataclass(frozen=True)
class Nil:
    occ: int
    ann: Optional[OpType] = None


@dataclass(frozen=True)
class Cons:
    occ: int
    head: "Expr"
    tail: "Expr"
    ann: Optional[OpType] = None


@dataclass(frozen=True)
class ConsD:
    """Forced cons ``[old](head : tail)``: ``old`` is destroyed or overwritten."""

    occ: int
    old: "Expr"
    head: "Expr"
    tail: "Expr"
    ann: Optional[OpType] = None


@dataclass(frozen=True)
class Tup:
    items: Tuple["Expr", ...]


@dataclass(frozen=True)
class App:
    fn: str
    arg: "Expr"


@dataclass(frozen=True)
class Let:
    pat: Pattern
    bound: "Expr"
    body: "Expr"


@dataclass(frozen=True)
class If:
    cond: "Expr"
    then: "Expr"
    else_: "Expr"


@dataclass(frozen=True)
class Case:
    scrut: "Expr"
    nil_branch: "Expr"
    head: str
    tail: str
    cons_branch: "Expr"
    q: Optional[str] = None
    cid: int = 0


@dataclass(frozen=True)
class Assign:
    """``target := rhs``; only produced by the imperative emitter."""

    target: str
    rhs: "Expr"


Expr = Union[Var, Op, Nil, Cons, ConsD, Tup, App, Let, If, Case, Assign]
OCC_NODES = (Op, Nil, Cons, ConsD)
KIND_OF = {Op: "op", Nil: "nil", Cons: "cons", ConsD: "consd"}


def is_terminal(e: Expr) -> bool:
    if isinstance(e, Var):
        return True
    return isinstance(e, Tup) and all(is_terminal(x) for x in e.items)


def as_pattern(e: Expr) -> Pattern:
    if isinstance(e, Var):
        return PVar(e.name)
    if isinstance(e, Tup):
        return PTup(tuple(as_pattern(x) for x in e.items))
    raise SubstitutionError(f"not a pattern: {e!r}")


def pattern_expr(p: Pattern) -> Expr:
    if isinstance(p, PVar):
        return Var(p.name)
    return Tup(tuple(pattern_expr(q) for q in p.items))


def children(e: Expr) -> Tuple[Expr, ...]:
    if isinstance(e, Op):
        return e.args
    if isinstance(e, Cons):
        return (e.head, e.tail)
    if isinstance(e, ConsD):
        return (e.old, e.head, e.tail)
    if isinstance(e, Tup):
        return e.items
    if isinstance(e, App):
        return (e.arg,)
    if isinstance(e, Let):
        return (e.bound, e.body)
    if isinstance(e, If):
        return (e.cond, e.then, e.else_)
    if isinstance(e, Case):
        return (e.scrut, e.nil_branch, e.cons_branch)
    if isinstance(e, Assign):
        return (e.rhs,)
    return ()


def with_children(e: Expr, cs: Sequence[Expr]) -> Expr:
    cs = tuple(cs)
    if isinstance(e, Op):
        return replace(e, args=cs)
    if isinstance(e, Cons):
        return replace(e, head=cs[0], tail=cs[1])
    if isinstance(e, ConsD):
        return replace(e, old=cs[0], head=cs[1], tail=cs[2])
    if isinstance(e, Tup):
        return Tup(cs)
    if isinstance(e, App):
        return replace(e, arg=cs[0])
    if isinstance(e, Let):
        return replace(e, bound=cs[0], body=cs[1])
    if isinstance(e, If):
        return If(*cs)
    if isinstance(e, Case):
        return replace(e, scrut=cs[0], nil_branch=cs[1], cons_branch=cs[2])
    if isinstance(e, Assign):
        return replace(e, rhs=cs[0])
    return e


# --------------------------------------------------------------------------
# values, stores, programs


@dataclass(frozen=True)
class Const:
    pre: str
    payload: object

    @property
    def size(self) -> int:
        if self.pre == "bool":
            return 0
        if self.pre == "array":
            return len(self.payload)
        return 1


@dataclass(frozen=True)
class ParamConst:
    """Store constant taken from a run parameter (``x = @n``)."""

    param: str


@dataclass(frozen=True)
class Iota:
    """Store array ``iota(@n)`` = {0, 1, ..., n}."""

    param: str


@dataclass(frozen=True)
class NilCell:
    pass


@dataclass(frozen=True)
class ConsCell:
    head: str
    tail: str


@dataclass(frozen=True)
class Closure:
    pat: Pattern
    body: Expr


Value = Union[Const, ParamConst, Iota, NilCell, ConsCell, Closure]


@dataclass(frozen=True)
class Program:
    params: Tuple[str, ...]
    store: Tuple[Tuple[str, Value], ...]
    main: Expr

    def closure(self, name: str) -> Closure:
        return dict(self.store)[name]


@dataclass(frozen=True)
class QualificationList:
    """Occurrence types in order plus the typed store context.

    ``system`` is ``linear`` or ``global``.  ``cases`` optionally fixes the
    qualifier of every case phrase (by case id); ``None`` leaves the slots to
    the linear checker.
    """

    system: str
    entries: Tuple[OpType, ...]
    ctx: Tuple[Tuple[str, Type], ...] = ()
    cases: Optional[Tuple[str, ...]] = None

    def ctx_dict(self) -> Dict[str, Type]:
        return dict(self.ctx)


# --------------------------------------------------------------------------
# free variables


def free_vars(e, annotations: bool = False) -> set:
    """Free variables of an expression or store value.

    With ``annotations`` the global-qualifier variables of annotation slots
    and assignment targets count as occurrences too.
    """
    if isinstance(e, Closure):
        return free_vars(e.body, annotations) - pattern_vars_set(e.pat)
    if isinstance(e, ConsCell):
        return {e.head, e.tail}
    if isinstance(e, (Const, ParamConst, Iota, NilCell)):
        return set()
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, App):
        return {e.fn} | free_vars(e.arg, annotations)
    if isinstance(e, Let):
        return free_vars(e.bound, annotations) | (
            free_vars(e.body, annotations) - pattern_vars_set(e.pat)
        )
    if isinstance(e, Case):
        return (
            free_vars(e.scrut, annotations)
            | free_vars(e.nil_branch, annotations)
            | (free_vars(e.cons_branch, annotations) - {e.head, e.tail})
        )
    out = set()
    if annotations:
        if isinstance(e, OCC_NODES) and e.ann is not None:
            out |= type_vars(e.ann)
        if isinstance(e, Assign):
            out.add(e.target)
    for c in children(e):
        out |= free_vars(c, annotations)
    return out


# --------------------------------------------------------------------------
# substitution

_fresh_binder = itertools.count(1)


def match_patterns(p: Pattern, q: Pattern) -> Dict[str, str]:
    """The renaming [p -> q]; <> on the left matches anything."""
    if isinstance(p, PTup) and not p.items:
        return {}
    if isinstance(p, PVar):
        if not isinstance(q, PVar):
            raise SubstitutionError(f"cannot bind variable {p} to tuple {q}")
        return {p.name: q.name}
    if not isinstance(q, PTup) or len(q.items) != len(p.items):
        raise SubstitutionError(f"shape mismatch: {p} vs {q}")
    out: Dict[str, str] = {}
    for a, b in zip(p.items, q.items):
        out.update(match_patterns(a, b))
    return out


def subst(p: Pattern, q: Pattern, e: Expr) -> Expr:
    """Simultaneous substitution [p -> q]e, renaming annotations too."""
    return rename(match_patterns(p, q), e)


def _rename_q(m: Dict[str, str]):
    return lambda q: m.get(q, q) if is_global_var(q) else q


def rename(m: Dict[str, str], e: Expr) -> Expr:
    m = {k: v for k, v in m.items() if k != v}
    if not m:
        return e
    return _rename(m, e)


def _rename_pattern(p: Pattern, m: Dict[str, str]) -> Pattern:
    if isinstance(p, PVar):
        return PVar(m.get(p.name, p.name))
    return PTup(tuple(_rename_pattern(q, m) for q in p.items))


def _enter_binder(m: Dict[str, str], bound: List[str], body_fv: set):
    """Restrict ``m`` under a binder; alpha-rename binders that would capture."""
    inner = {k: v for k, v in m.items() if k not in bound and k in body_fv}
    targets = set(inner.values())
    alpha: Dict[str, str] = {}
    for b in bound:
        if b in targets:
            alpha[b] = f"{b}'{next(_fresh_binder)}"
    if alpha:
        inner = {**inner, **alpha}
    return inner, alpha


def _rename(m: Dict[str, str], e: Expr) -> Expr:
    if not m:
        return e
    if isinstance(e, Var):
        return Var(m.get(e.name, e.name))
    if isinstance(e, App):
        return App(m.get(e.fn, e.fn), _rename(m, e.arg))
    if isinstance(e, Assign):
        return Assign(m.get(e.target, e.target), _rename(m, e.rhs))
    if isinstance(e, Let):
        bound = pattern_vars(e.pat)
        inner, alpha = _enter_binder(m, bound, free_vars(e.body, True))
        pat = _rename_pattern(e.pat, alpha) if alpha else e.pat
        return Let(pat, _rename(m, e.bound), _rename(inner, e.body))
    if isinstance(e, Case):
        inner, alpha = _enter_binder(m, [e.head, e.tail], free_vars(e.cons_branch, True))
        return replace(
            e,
            scrut=_rename(m, e.scrut),
            nil_branch=_rename(m, e.nil_branch),
            head=alpha.get(e.head, e.head),
            tail=alpha.get(e.tail, e.tail),
            cons_branch=_rename(inner, e.cons_branch),
        )
    if isinstance(e, OCC_NODES) and e.ann is not None:
        e = replace(e, ann=map_quals(e.ann, _rename_q(m)))
    return with_children(e, [_rename(m, c) for c in children(e)])


def rename_closure(c: Closure, m: Dict[str, str]) -> Closure:
    bound = pattern_vars(c.pat)
    inner, alpha = _enter_binder(m, bound, free_vars(c.body, True))
    pat = _rename_pattern(c.pat, alpha) if alpha else c.pat
    return Closure(pat, _rename(inner, c.body))


# --------------------------------------------------------------------------
# flattening


def flatten(p: Pattern, t: Type) -> List[Tuple[str, Type]]:
    """[p : T] as an ordered context fragment."""
    if isinstance(p, PVar):
        if isinstance(t, TupleT):
            raise FlattenError(f"variable {p} cannot take tuple type {t}")
        return [(p.name, t)]
    if not p.items:
        return []
    if not isinstance(t, TupleT) or len(t.items) != len(p.items):
        raise FlattenError(f"pattern {p} does not match type {t}")
    out: List[Tuple[str, Type]] = []
    for a, b in zip(p.items, t.items):
        out.extend(flatten(a, b))
    return out


# --------------------------------------------------------------------------
# occurrences


@dataclass(frozen=True)
class Occurrence:
    occ: int
    kind: str
    name: str
    arity: int


def _occ_walk(e: Expr) -> Iterator[Expr]:
    """Occurrence order: prefix for operators, infix for cons."""
    if isinstance(e, Cons):
        yield from _occ_walk(e.head)
        yield e
        yield from _occ_walk(e.tail)
        return
    if isinstance(e, OCC_NODES):
        yield e
    for c in children(e):
        yield from _occ_walk(c)


def program_exprs(prog: Program) -> Iterator[Expr]:
    for _, v in prog.store:
        if isinstance(v, Closure):
            yield v.body
    yield prog.main


def occurrences(prog: Program) -> List[Occurrence]:
    out = []
    for root in program_exprs(prog):
        for node in _occ_walk(root):
            name = node.name if isinstance(node, Op) else KIND_OF[type(node)]
            out.append(Occurrence(node.occ, KIND_OF[type(node)], name, len(children(node))))
    return out


def annotations(prog: Program) -> List[Optional[OpType]]:
    """Annotation slots of ``prog`` in occurrence order."""
    return [node.ann for root in program_exprs(prog) for node in _occ_walk(root)]


def case_nodes(prog: Program) -> List[Case]:
    out: List[Case] = []

    def walk(e):
        if isinstance(e, Case):
            out.append(e)
        for c in children(e):
            walk(c)

    for root in program_exprs(prog):
        walk(root)
    return out


def map_expr(e: Expr, fn) -> Expr:
    """Bottom-up rebuild; ``fn`` sees each node after its children."""
    e = with_children(e, [map_expr(c, fn) for c in children(e)])
    return fn(e)


def map_program(prog: Program, fn) -> Program:
    store = tuple(
        (n, Closure(v.pat, map_expr(v.body, fn)) if isinstance(v, Closure) else v)
        for n, v in prog.store
    )
    return Program(prog.params, store, map_expr(prog.main, fn))


def apply_qualification(prog: Program, quals: QualificationList) -> Program:
    """Fill every annotation slot of ``prog`` from ``quals``."""
    occs = occurrences(prog)
    if len(occs) != len(quals.entries):
        raise AlignmentError(
            f"program has {len(occs)} occurrences but the list has {len(quals.entries)}"
        )
    by_occ: Dict[int, OpType] = {}
    for o, t in zip(occs, quals.entries):
        if t.kind != o.kind or len(t.inputs) != o.arity or (o.kind == "op" and t.name != o.name):
            raise AlignmentError(f"occurrence {o.occ} is {o.name}/{o.arity}, list has {t}")
        by_occ[o.occ] = t
    cases = case_nodes(prog)
    case_q: Dict[int, Optional[str]] = {}
    if quals.cases is not None:
        if len(quals.cases) != len(cases):
            raise AlignmentError("case qualifier count mismatch")
        case_q = {c.cid: q for c, q in zip(cases, quals.cases)}

    def fill(e):
        if isinstance(e, OCC_NODES):
            return replace(e, ann=by_occ[e.occ])
        if isinstance(e, Case) and e.cid in case_q:
            return replace(e, q=case_q[e.cid])
        return e

    return map_program(prog, fill)


def strip_annotations(e: Expr) -> Expr:
    return map_expr(e, lambda n: replace(n, ann=None) if isinstance(n, OCC_NODES) else n)


def count_occurrences(e: Expr) -> int:
    return sum(1 for _ in _occ_walk(e))
