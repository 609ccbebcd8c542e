"""Deterministic checker for the weak-linear type system.

Contexts are tuples of ``(name, V)`` pairs where ``V`` is a storable type
(qualifier li, un or hi) or an arrow.  Splits are driven by the free
variables of the sub-phrases: ``spl`` for operator arguments, ``pspl``
for every other multi-premise rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .builtins import POLY_SELECT
from .errors import FlattenError, LinearTypeError
from .syntax import (
    HI,
    LI,
    UN,
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
    Program,
    QualificationList,
    Stor,
    Tup,
    TupleT,
    Type,
    Var,
    apply_qualification,
    flatten,
    free_vars,
    map_program,
    pattern_vars_set,
)

Ctx = Tuple[Tuple[str, Type], ...]


# --------------------------------------------------------------------------
# predicates and splits


def un_pred(v: Type) -> bool:
    """un(V): arrows are unrestricted; ``q P`` is iff ``q`` is not li."""
    if isinstance(v, Stor):
        return v.q != LI
    return True


def ctx_un(ctx: Ctx) -> Ctx:
    return tuple((x, v) for x, v in ctx if un_pred(v))


def _is_linear(v: Type) -> bool:
    return isinstance(v, Stor) and v.q == LI


def _owner(x: str, fv_sets: Sequence[set]) -> int:
    for k in range(len(fv_sets) - 1, -1, -1):
        if x in fv_sets[k]:
            return k
    return 0


def spl(n: int, fv_sets: Sequence[set], ctx: Ctx) -> List[Ctx]:
    """Context split: each li entry goes to the last phrase that uses it."""
    outs: List[list] = [[] for _ in range(n)]
    for x, v in ctx:
        if _is_linear(v):
            outs[_owner(x, fv_sets)].append((x, v))
        else:
            for o in outs:
                o.append((x, v))
    return [tuple(o) for o in outs]


def pspl(n: int, fv_sets: Sequence[set], ctx: Ctx) -> List[Ctx]:
    """Pseudosplit: like ``spl`` but earlier phrases see a hidden copy."""
    outs: List[list] = [[] for _ in range(n)]
    for x, v in ctx:
        if _is_linear(v):
            i = _owner(x, fv_sets)
            for k in range(i):
                outs[k].append((x, Stor(HI, v.pre)))
            outs[i].append((x, v))
        else:
            for o in outs:
                o.append((x, v))
    return [tuple(o) for o in outs]


def override(ctx: Ctx, frag: Sequence[Tuple[str, Type]]) -> Ctx:
    """``ctx, frag`` where later bindings replace earlier ones."""
    names = {x for x, _ in frag}
    return tuple((x, v) for x, v in ctx if x not in names) + tuple(frag)


def lookup(ctx: Ctx, x: str) -> Optional[Type]:
    for y, v in ctx:
        if y == x:
            return v
    return None


def wf_linear(t: Type) -> bool:
    """Unrestricted lists hold no linear elements (at every depth)."""
    if isinstance(t, Stor):
        if isinstance(t.pre, ListT):
            e = t.pre.elem
            if e.q not in (LI, UN) or (t.q == UN and e.q == LI):
                return False
            return wf_linear(e)
        return True
    if isinstance(t, Arrow):
        return wf_linear(t.dom) and wf_linear(t.cod)
    if isinstance(t, TupleT):
        return all(wf_linear(x) for x in t.items)
    return False


def fv_case(e: Case) -> set:
    return free_vars(e.nil_branch) | (free_vars(e.cons_branch) - {e.head, e.tail})


# --------------------------------------------------------------------------
# expressions


class _Checker:
    def __init__(self):
        self.cases: Dict[int, str] = {}

    def fail(self, msg: str, rule: str, occ: Optional[int] = None):
        raise LinearTypeError(msg, rule=rule, occ=occ)

    def rest_un(self, ctx: Ctx, skip: Optional[str], rule: str, occ=None) -> None:
        for y, w in ctx:
            if y != skip and not un_pred(w):
                self.fail(f"linear variable {y} is never consumed", rule, occ)

    def expr(self, ctx: Ctx, e: Expr) -> Type:
        if isinstance(e, Var):
            v = lookup(ctx, e.name)
            if v is None:
                self.fail(f"unbound variable {e.name}", "var")
            if isinstance(v, Stor) and v.q == HI:
                self.fail(f"hidden variable {e.name} used outside an operator input", "var")
            self.rest_un(ctx, e.name, "var")
            return v
        if isinstance(e, Op):
            return self.op(ctx, e)
        if isinstance(e, Nil):
            t = self.ann(e, "nil")
            self.rest_un(ctx, None, "nil", e.occ)
            if not isinstance(t.output.pre, ListT) or t.output.q not in (LI, UN) or not wf_linear(t.output):
                self.fail(f"ill-formed list type {t.output}", "nil", e.occ)
            return t.output
        if isinstance(e, Cons):
            return self.cons(ctx, e, [e.head, e.tail])
        if isinstance(e, ConsD):
            return self.cons(ctx, e, [e.old, e.head, e.tail])
        if isinstance(e, Tup):
            parts = pspl(len(e.items), [free_vars(x) for x in e.items], ctx)
            if not e.items:
                self.rest_un(ctx, None, "tup")
            return TupleT(tuple(self.expr(c, x) for c, x in zip(parts, e.items)))
        if isinstance(e, App):
            f = lookup(ctx, e.fn)
            if not isinstance(f, Arrow):
                self.fail(f"{e.fn} is not a function", "app")
            t = self.expr(ctx, e.arg)
            if t != f.dom:
                self.fail(f"argument of {e.fn} has type {t}, expected {f.dom}", "app")
            return f.cod
        if isinstance(e, Let):
            c1, c2 = pspl(2, [free_vars(e.bound), free_vars(e.body) - pattern_vars_set(e.pat)], ctx)
            t = self.expr(c1, e.bound)
            try:
                frag = flatten(e.pat, t)
            except FlattenError as exc:
                self.fail(str(exc), "let")
            return self.expr(override(c2, frag), e.body)
        if isinstance(e, If):
            c1, c2 = pspl(2, [free_vars(e.cond), free_vars(e.then) | free_vars(e.else_)], ctx)
            tc = self.expr(c1, e.cond)
            if not (isinstance(tc, Stor) and tc.pre == "bool"):
                self.fail(f"condition has type {tc}", "con")
            t1 = self.expr(c2, e.then)
            t2 = self.expr(c2, e.else_)
            if t1 != t2:
                self.fail(f"branches disagree: {t1} vs {t2}", "con")
            return t1
        if isinstance(e, Case):
            c1, c2 = pspl(2, [free_vars(e.scrut), fv_case(e)], ctx)
            ts = self.expr(c1, e.scrut)
            if not (isinstance(ts, Stor) and isinstance(ts.pre, ListT)):
                self.fail(f"case scrutinee has type {ts}", "cas")
            if e.q is not None and e.q != ts.q:
                self.fail(f"case qualifier {e.q} does not match scrutinee {ts}", "cas")
            self.cases[e.cid] = ts.q
            t0 = self.expr(c2, e.nil_branch)
            t1 = self.expr(override(c2, [(e.head, ts.pre.elem), (e.tail, ts)]), e.cons_branch)
            if t0 != t1:
                self.fail(f"case branches disagree: {t0} vs {t1}", "cas")
            return t0
        if isinstance(e, Assign):
            self.fail("assignment is not part of the linear language", "var")
        raise TypeError(e)

    def ann(self, e, kind: str) -> OpType:
        t = e.ann
        if t is None:
            self.fail("missing annotation", kind, e.occ)
        if t.kind != kind:
            self.fail(f"annotation kind {t.kind} on a {kind} node", kind, e.occ)
        return t

    def argument(self, ctx: Ctx, arg: Expr, want: Stor, rule: str, occ: int) -> None:
        if want.q == HI:
            if not isinstance(arg, Var):
                self.fail("hidden input must be a variable", rule, occ)
            v = lookup(ctx, arg.name)
            if v != want:
                self.fail(f"{arg.name} is not available as {want}", rule, occ)
            self.rest_un(ctx, arg.name, rule, occ)
            return
        t = self.expr(ctx, arg)
        if t != want:
            self.fail(f"argument has type {t}, expected {want}", rule, occ)

    def op(self, ctx: Ctx, e: Op) -> Type:
        t = self.ann(e, "op")
        if len(t.inputs) != len(e.args):
            self.fail("arity mismatch", "bop", e.occ)
        if t.output.q not in (LI, UN) or not wf_linear(t.output):
            self.fail(f"bad output {t.output}", "bop", e.occ)
        if e.name in POLY_SELECT and t.output.pre != t.inputs[POLY_SELECT[e.name]].pre:
            self.fail(f"{e.name} must return its argument's pretype", "bop", e.occ)
        if not e.args:
            self.rest_un(ctx, None, "bop", e.occ)
            return t.output
        parts = spl(len(e.args), [free_vars(a) for a in e.args], ctx)
        for c, a, want in zip(parts, e.args, t.inputs):
            if want.q not in (LI, UN, HI) or not wf_linear(Stor(UN if want.q == HI else want.q, want.pre)):
                self.fail(f"bad input {want}", "bop", e.occ)
            self.argument(c, a, want, "bop", e.occ)
        return t.output

    def cons(self, ctx: Ctx, e, args: List[Expr]) -> Type:
        kind = "cons" if isinstance(e, Cons) else "consd"
        t = self.ann(e, kind)
        out = t.output
        if len(t.inputs) != len(args):
            self.fail("arity mismatch", "bco", e.occ)
        if not (isinstance(out.pre, ListT) and out.q in (LI, UN) and wf_linear(out)):
            self.fail(f"ill-formed list type {out}", "bco", e.occ)
        head_t, tail_t = t.inputs[-2], t.inputs[-1]
        if tail_t != out or head_t != out.pre.elem:
            self.fail(f"constructor type {t} is not of the form (E, q[E]) -> q[E]", "bco", e.occ)
        parts = pspl(len(args), [free_vars(a) for a in args], ctx)
        if kind == "consd":
            old_t = t.inputs[0]
            if old_t.q not in (LI, UN, HI) or old_t.pre != out.pre:
                self.fail(f"forced input {old_t} does not match {out}", "bco", e.occ)
            self.argument(parts[0], args[0], old_t, "bco", e.occ)
            parts = parts[1:]
        for c, a, want in zip(parts, args[-2:], (head_t, tail_t)):
            got = self.expr(c, a)
            if got != want:
                self.fail(f"constructor argument has type {got}, expected {want}", "bco", e.occ)
        return out


def check_expr(ctx: Ctx, e: Expr) -> Type:
    """Type ``e`` under ``ctx``; raises ``LinearTypeError`` on failure."""
    return _Checker().expr(tuple(ctx), e)


def check_expr_cases(ctx: Ctx, e: Expr) -> Tuple[Type, Dict[int, str]]:
    c = _Checker()
    t = c.expr(tuple(ctx), e)
    return t, c.cases


# --------------------------------------------------------------------------
# stores and programs


def _check_store(c: _Checker, store, claimed: Dict[str, Type]) -> Ctx:
    ctx: Ctx = ()
    for name, v in store:
        if name not in claimed:
            c.fail(f"no type given for store binding {name}", "sba")
        t = claimed[name]
        if isinstance(v, (Const, ParamConst, Iota)):
            pre = v.pre if isinstance(v, Const) else ("array" if isinstance(v, Iota) else "int")
            if not (isinstance(t, Stor) and t.q in (LI, UN) and t.pre == pre):
                c.fail(f"{name} is a {pre} constant but is typed {t}", "sba")
            ctx = ctx + ((name, t),)
        elif isinstance(v, NilCell):
            if not (isinstance(t, Stor) and isinstance(t.pre, ListT) and t.q in (LI, UN) and wf_linear(t)):
                c.fail(f"{name} is nil but is typed {t}", "sba")
            ctx = ctx + ((name, t),)
        elif isinstance(v, ConsCell):
            if not (isinstance(t, Stor) and isinstance(t.pre, ListT)):
                c.fail(f"{name} is a cons cell but is typed {t}", "sco")
            used = {v.head, v.tail}
            c1 = tuple((x, w) for x, w in ctx if not _is_linear(w) or x in used)
            c2 = tuple((x, w) for x, w in ctx if not (_is_linear(w) and x in used))
            sig = OpType("cons", "cons", (t.pre.elem, t), t)
            c.cons(c1, Cons(-1, Var(v.head), Var(v.tail), sig), [Var(v.head), Var(v.tail)])
            ctx = c2 + ((name, t),)
        elif isinstance(v, Closure):
            if not isinstance(t, Arrow) or not wf_linear(t):
                c.fail(f"function {name} must have an arrow type, got {t}", "sfu")
            try:
                frag = flatten(v.pat, t.dom)
            except FlattenError as exc:
                c.fail(str(exc), "sfu")
            inner = override(override(ctx_un(ctx), [(name, t)]), frag)
            got = c.expr(inner, v.body)
            if got != t.cod:
                c.fail(f"body of {name} has type {got}, expected {t.cod}", "sfu")
            ctx = ctx + ((name, t),)
        else:
            raise TypeError(v)
    return ctx


def check_store(store, claimed) -> Ctx:
    return _check_store(_Checker(), store, dict(claimed))


@dataclass
class LinearResult:
    ctx: Ctx
    type: Type
    program: Program
    cases: Dict[int, str] = field(default_factory=dict)


def check_program(prog: Program, quals: QualificationList) -> LinearResult:
    """Check ``prog`` under a linear qualification list."""
    if quals.system != "linear":
        raise LinearTypeError(f"expected a linear qualification list, got {quals.system}")
    annotated = apply_qualification(prog, quals)
    c = _Checker()
    ctx = _check_store(c, annotated.store, quals.ctx_dict())
    t = c.expr(ctx, annotated.main)
    cases = dict(c.cases)

    def fill(e):
        if isinstance(e, Case) and e.cid in cases:
            return replace(e, q=cases[e.cid])
        return e

    return LinearResult(ctx, t, map_program(annotated, fill), cases)
