"""Deterministic checker for the global (dependent) type system.

Store information is tracked by elements of a small poset ("Pat"):
``"lo"`` is the least element, any other string is a variable name, and
Python tuples are products.  ``pinfo`` computes the information an
expression carries; ``(<=)`` is applied only at operator, constructor and
application arguments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

from .errors import FlattenError, GlobalTypeError
from .syntax import (
    LO,
    App,
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
    PVar,
    QualificationList,
    Stor,
    Tup,
    TupleT,
    Type,
    Var,
    apply_qualification,
    flatten,
    is_global_var,
    pattern_vars_set,
    type_vars,
)

PatElem = Union[str, tuple]


@dataclass(frozen=True)
class Dropped:
    """A global shadowed by a local binder; looking it up is an error."""

    rule: str


Ctx = Tuple[Tuple[str, object], ...]


# --------------------------------------------------------------------------
# the Pat poset


def rho(t: Type) -> PatElem:
    if isinstance(t, Stor):
        return t.q
    if isinstance(t, Pi):
        return LO
    if isinstance(t, TupleT):
        return tuple(rho(x) for x in t.items)
    raise TypeError(t)


def pat_leq(a: PatElem, b: PatElem) -> bool:
    if isinstance(a, str) and isinstance(b, str):
        return a == LO or a == b
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(pat_leq(x, y) for x, y in zip(a, b))
    return False


def type_leq(t: Type, u: Type) -> bool:
    return pat_leq(rho(t), rho(u))


def embed(p: Pattern) -> PatElem:
    """Patterns as Pat elements; the unit pattern is ``lo``."""
    if isinstance(p, PVar):
        return p.name
    if not p.items:
        return LO
    return tuple(embed(q) for q in p.items)


def pat_restrict(p: Pattern, names) -> PatElem:
    """p|_A: variables outside ``names`` become ``lo``."""
    if isinstance(p, PVar):
        return p.name if p.name in names else LO
    if not p.items:
        return LO
    return tuple(pat_restrict(q, names) for q in p.items)


def pat_dot(p: PatElem, t: Type) -> Optional[Type]:
    """p . T; ``None`` where undefined."""
    if p == LO:
        return t
    if isinstance(p, str):
        return Stor(p, t.pre) if isinstance(t, Stor) else None
    if isinstance(t, TupleT) and len(t.items) == len(p):
        parts = [pat_dot(a, b) for a, b in zip(p, t.items)]
        return None if any(x is None for x in parts) else TupleT(tuple(parts))
    return None


def _dot_keep_pi(p: PatElem, t: Type) -> Optional[Type]:
    """Like ``pat_dot`` but function components of ``t`` pass unchanged."""
    if isinstance(t, Pi):
        return t
    if isinstance(p, tuple) and isinstance(t, TupleT) and len(t.items) == len(p):
        parts = [_dot_keep_pi(a, b) for a, b in zip(p, t.items)]
        return None if any(x is None for x in parts) else TupleT(tuple(parts))
    return pat_dot(p, t)


def match_pat(p: Pattern, q: PatElem) -> Dict[str, PatElem]:
    """Bind the variables of pattern ``p`` to components of ``q``."""
    if isinstance(p, PVar):
        return {p.name: q}
    if not p.items:
        return {}
    if q == LO:
        out: Dict[str, PatElem] = {}
        for x in p.items:
            out.update(match_pat(x, LO))
        return out
    if not isinstance(q, tuple) or len(q) != len(p.items):
        raise GlobalTypeError(f"pattern {p} does not match information {show_pat(q)}", rule="app")
    out = {}
    for a, b in zip(p.items, q):
        out.update(match_pat(a, b))
    return out


def subst_pat_in_type(p: Pattern, q: PatElem, t: Type) -> Type:
    """[p -> q]T on qualifier positions."""
    m = match_pat(p, q)
    return _subst_quals(m, t)


def _subst_quals(m: Dict[str, PatElem], t: Type) -> Type:
    if not m:
        return t
    if isinstance(t, Stor):
        q = t.q
        if q in m:
            q = m[q]
            if not isinstance(q, str):
                raise GlobalTypeError(f"tuple information {show_pat(q)} in a scalar position", rule="app")
        pre = ListT(_subst_quals(m, t.pre.elem)) if isinstance(t.pre, ListT) else t.pre
        return Stor(q, pre)
    if isinstance(t, TupleT):
        return TupleT(tuple(_subst_quals(m, x) for x in t.items))
    if isinstance(t, Pi):
        inner = {k: v for k, v in m.items() if k not in pattern_vars_set(t.pat)}
        return Pi(t.pat, _subst_quals(m, t.dom), _subst_quals(inner, t.cod))
    raise TypeError(t)


def subst_pat_in_pat(m: Dict[str, PatElem], q: PatElem) -> PatElem:
    if isinstance(q, str):
        return m.get(q, q)
    return tuple(subst_pat_in_pat(m, x) for x in q)


def show_pat(q: PatElem) -> str:
    if isinstance(q, str):
        return q
    return "<" + ", ".join(show_pat(x) for x in q) + ">"


def wf_type(t: Type) -> bool:
    """Every Pi can carry the information of its domain."""
    if isinstance(t, Stor):
        return not isinstance(t.pre, ListT) or wf_type(t.pre.elem)
    if isinstance(t, TupleT):
        return all(wf_type(x) for x in t.items)
    if isinstance(t, Pi):
        return pat_leq(rho(t.dom), embed(t.pat)) and wf_type(t.dom) and wf_type(t.cod)
    return False


# --------------------------------------------------------------------------
# contexts


def is_lo(v) -> bool:
    return isinstance(v, Pi) or (isinstance(v, Stor) and v.q == LO)


def lookup(ctx: Ctx, x: str):
    for y, v in reversed(ctx):
        if y == x:
            return v
    return None


def seq_ctx(ctx: Ctx, frag: Iterable[Tuple[str, Type]], rule: str = "let") -> Ctx:
    """Gamma1 ; Gamma2: globals of Gamma1 cannot be redefined."""
    out = list(ctx)
    for x, v2 in frag:
        idx = next((i for i, (y, _) in enumerate(out) if y == x), None)
        if idx is None:
            out.append((x, v2))
            continue
        v1 = out[idx][1]
        if isinstance(v1, Dropped) or is_lo(v1):
            del out[idx]
            out.append((x, v2))
        elif not is_lo(v2):
            continue
        else:
            out[idx] = (x, Dropped(rule))
    return tuple(out)


def override(ctx: Ctx, frag: Iterable[Tuple[str, Type]]) -> Ctx:
    frag = list(frag)
    names = {x for x, _ in frag}
    return tuple((x, v) for x, v in ctx if x not in names) + tuple(frag)


def globals_of(ctx: Ctx) -> set:
    """Gl Gamma: variables occurring free in the types of the context."""
    out = set()
    for _, v in ctx:
        if not isinstance(v, Dropped):
            out |= type_vars(v)
    return out


def globals_at(ctx: Ctx, pre) -> set:
    """Gl^P Gamma: variables x with Gamma x = x P."""
    return {x for x, v in ctx if isinstance(v, Stor) and v.q == x and v.pre == pre}


def globals_at_type(ctx: Ctx, e: Stor) -> set:
    base = globals_at(ctx, e.pre)
    return base if e.q == LO else base & {e.q}


def ctx_globalize(ctx: Ctx, names) -> Ctx:
    """Gamma^X."""
    out = []
    for x, v in ctx:
        if isinstance(v, Stor) and x in names:
            out.append((x, Stor(x, v.pre)))
        elif isinstance(v, Pi):
            keep = set(names) & _raw_vars(v.cod)
            dom = pat_dot(pat_restrict(v.pat, keep), v.dom)
            out.append((x, Pi(v.pat, dom, v.cod) if dom is not None else v))
        else:
            out.append((x, v))
    return tuple(out)


def _raw_vars(t: Type) -> set:
    """Qualifier names of a type, including those bound by its own Pi."""
    if isinstance(t, Stor):
        out = {t.q} if is_global_var(t.q) else set()
        if isinstance(t.pre, ListT):
            out |= _raw_vars(t.pre.elem)
        return out
    if isinstance(t, TupleT):
        return set().union(*[_raw_vars(x) for x in t.items]) if t.items else set()
    if isinstance(t, Pi):
        return _raw_vars(t.dom) | _raw_vars(t.cod)
    return set()


# --------------------------------------------------------------------------
# information and synthesis


def _fail(msg: str, rule: str, occ: Optional[int] = None):
    raise GlobalTypeError(msg, rule=rule, occ=occ)


def pinfo(ctx: Ctx, e: Expr) -> PatElem:
    """The store information p^Gamma e."""
    if isinstance(e, Var):
        return e.name
    if isinstance(e, (Op, Nil, Cons, ConsD)):
        if e.ann is None:
            _fail("missing annotation", "bop", e.occ)
        return e.ann.output.q
    if isinstance(e, If):
        return pinfo(ctx, e.then)
    if isinstance(e, Case):
        return pinfo(ctx, e.nil_branch)
    if isinstance(e, Tup):
        return tuple(pinfo(ctx, x) for x in e.items)
    if isinstance(e, Let):
        m = match_pat(e.pat, pinfo(ctx, e.bound))
        return subst_pat_in_pat(m, pinfo(ctx, e.body))
    if isinstance(e, App):
        f = lookup(ctx, e.fn)
        if not isinstance(f, Pi):
            _fail(f"{e.fn} is not a function", "app")
        return rho(subst_pat_in_type(f.pat, pinfo(ctx, e.arg), f.cod))
    if isinstance(e, Assign):
        return e.target
    raise TypeError(e)


def _lookup_var(ctx: Ctx, x: str):
    v = lookup(ctx, x)
    if v is None:
        _fail(f"unbound variable {x}", "var")
    if isinstance(v, Dropped):
        _fail(f"global {x} is shadowed by a local binder", v.rule)
    return v


def _args(ctx: Ctx, e, args: Sequence[Expr], t: OpType, rule: str) -> None:
    if len(args) != len(t.inputs):
        _fail("arity mismatch", rule, e.occ)
    for a, want in zip(args, t.inputs):
        g = pinfo(ctx, a)
        if not isinstance(g, str):
            _fail("tuple argument to an operator", rule, e.occ)
        if not pat_leq(want.q, g):
            _fail(f"argument carries {g} but {want} is declared", rule, e.occ)
        check(ctx, a, Stor(g, want.pre))


def synth(ctx: Ctx, e: Expr) -> Type:
    """A type T with Gamma |- e : T (the synthesis function)."""
    if isinstance(e, Var):
        return _lookup_var(ctx, e.name)
    if isinstance(e, Op):
        t = e.ann
        if t is None or t.kind != "op":
            _fail("missing operator annotation", "bop", e.occ)
        _args(ctx, e, e.args, t, "bop")
        return t.output
    if isinstance(e, Nil):
        t = e.ann
        if t is None or t.kind != "nil" or not isinstance(t.output.pre, ListT):
            _fail("bad nil annotation", "em", e.occ)
        return t.output
    if isinstance(e, (Cons, ConsD)):
        t = e.ann
        kind = "cons" if isinstance(e, Cons) else "consd"
        if t is None or t.kind != kind:
            _fail("missing constructor annotation", "bco", e.occ)
        out = t.output
        if not isinstance(out.pre, ListT) or len(t.inputs) != (2 if kind == "cons" else 3):
            _fail(f"ill-formed constructor type {t}", "bco", e.occ)
        if t.inputs[-1].pre != out.pre or t.inputs[-2] != out.pre.elem:
            _fail(f"constructor type {t} mixes pretypes", "bco", e.occ)
        if kind == "consd" and t.inputs[0].pre != out.pre:
            _fail(f"forced input of {t} is not a list of the same type", "bco", e.occ)
        args = [e.head, e.tail] if kind == "cons" else [e.old, e.head, e.tail]
        _args(ctx, e, args, t, "bco")
        return out
    if isinstance(e, Tup):
        return TupleT(tuple(synth(ctx, x) for x in e.items))
    if isinstance(e, App):
        f = _lookup_var(ctx, e.fn)
        if not isinstance(f, Pi):
            _fail(f"{e.fn} is not a function", "app")
        info = pinfo(ctx, e.arg)
        want = _dot_keep_pi(info, f.dom)
        if want is None or not type_leq(f.dom, want):
            _fail(f"argument of {e.fn} carries {show_pat(info)}, domain is {f.dom}", "app")
        check(ctx, e.arg, want)
        return subst_pat_in_type(f.pat, info, f.cod)
    if isinstance(e, Let):
        t1 = synth(ctx, e.bound)
        try:
            frag = flatten(e.pat, t1)
        except FlattenError as exc:
            _fail(str(exc), "let")
        t2 = synth(seq_ctx(ctx, frag, "let"), e.body)
        return subst_pat_in_type(e.pat, pinfo(ctx, e.bound), t2)
    if isinstance(e, If):
        _cond(ctx, e.cond)
        t1 = synth(ctx, e.then)
        if _accepts(ctx, e.else_, t1):
            return t1
        t2 = synth(ctx, e.else_)
        check(ctx, e.then, t2)
        return t2
    if isinstance(e, Case):
        inner = _case_ctx(ctx, e)
        t0 = synth(ctx, e.nil_branch)
        if _accepts(inner, e.cons_branch, t0):
            return t0
        t1 = synth(inner, e.cons_branch)
        check(ctx, e.nil_branch, t1)
        return t1
    if isinstance(e, Assign):
        _fail("assignment is not part of the global language", "var")
    raise TypeError(e)


def _cond(ctx: Ctx, c: Expr) -> None:
    tc = synth(ctx, c)
    if not (isinstance(tc, Stor) and tc.pre == "bool"):
        _fail(f"condition has type {tc}", "con")


def _case_ctx(ctx: Ctx, e: Case) -> Ctx:
    if e.q is not None and is_global_var(e.q):
        _fail("case phrases must be qualified lo", "cas")
    ts = synth(ctx, e.scrut)
    if not (isinstance(ts, Stor) and isinstance(ts.pre, ListT)):
        _fail(f"case scrutinee has type {ts}", "cas")
    pre = ts.pre.elem.pre
    lst = Stor(LO, ListT(Stor(LO, pre)))
    check(ctx, e.scrut, lst)
    return seq_ctx(ctx, [(e.head, Stor(LO, pre)), (e.tail, lst)], "cas")


def _accepts(ctx: Ctx, e: Expr, t: Type) -> bool:
    try:
        check(ctx, e, t)
        return True
    except GlobalTypeError:
        return False


def check(ctx: Ctx, e: Expr, t: Type) -> None:
    """Gamma |- e : T, raising ``GlobalTypeError`` otherwise."""
    if isinstance(e, Var):
        v = _lookup_var(ctx, e.name)
        if v == t:
            return
        if isinstance(v, Stor) and v.q == LO and t == Stor(e.name, v.pre):
            return
        _fail(f"{e.name} has type {v}, expected {t}", "var")
    if isinstance(e, Tup) and isinstance(t, TupleT):
        if len(e.items) != len(t.items):
            _fail("tuple arity mismatch", "tup")
        for x, u in zip(e.items, t.items):
            check(ctx, x, u)
        return
    if isinstance(e, If):
        _cond(ctx, e.cond)
        check(ctx, e.then, t)
        check(ctx, e.else_, t)
        return
    if isinstance(e, Case):
        inner = _case_ctx(ctx, e)
        check(ctx, e.nil_branch, t)
        check(inner, e.cons_branch, t)
        return
    got = synth(ctx, e)
    if got != t:
        _fail(f"expression has type {got}, expected {t}", _rule_of(e), getattr(e, "occ", None))


def _rule_of(e: Expr) -> str:
    return {Op: "bop", Nil: "em", Cons: "bco", ConsD: "bco", Tup: "tup", App: "app", Let: "let"}.get(
        type(e), "var"
    )


def check_expr_global(ctx: Ctx, e: Expr, t: Type) -> bool:
    try:
        check(tuple(ctx), e, t)
        return True
    except GlobalTypeError:
        return False


# --------------------------------------------------------------------------
# stores and programs


def check_store_global(store, claimed) -> Ctx:
    claimed = dict(claimed)
    ctx: Ctx = ()
    for name, v in store:
        if name not in claimed:
            _fail(f"no type given for store binding {name}", "sba")
        t = claimed[name]
        if isinstance(v, (Const, ParamConst, Iota)):
            pre = v.pre if isinstance(v, Const) else ("array" if isinstance(v, Iota) else "int")
            if not (isinstance(t, Stor) and t.pre == pre and t.q in (LO, name)):
                _fail(f"{name} is a {pre} constant but is typed {t}", "sba")
        elif isinstance(v, NilCell):
            if not (isinstance(t, Stor) and isinstance(t.pre, ListT) and t.q in (LO, name)):
                _fail(f"{name} is nil but is typed {t}", "sba")
        elif isinstance(v, ConsCell):
            if not (isinstance(t, Stor) and isinstance(t.pre, ListT) and t.q in (LO, name)):
                _fail(f"{name} is a cons cell but is typed {t}", "sco")
            check(ctx, Var(v.head), t.pre.elem)
            check(ctx, Var(v.tail), Stor(LO, t.pre) if t.q == name else t)
        elif isinstance(v, Closure):
            if not isinstance(t, Pi) or not wf_type(t):
                _fail(f"{name} must have a well-formed Pi type, got {t}", "sfu")
            try:
                frag = flatten(v.pat, t.dom)
            except FlattenError as exc:
                _fail(str(exc), "sfu")
            cod = subst_pat_in_type(t.pat, embed(v.pat), t.cod)
            inner = override(override(ctx, [(name, t)]), frag)
            check(inner, v.body, cod)
        else:
            raise TypeError(v)
        ctx = override(ctx, [(name, t)])
    return ctx


@dataclass
class GlobalResult:
    ctx: Ctx
    type: Type
    program: Program


def check_program_global(
    prog: Program, quals: QualificationList, target: Optional[Type] = None
) -> GlobalResult:
    """Check ``prog`` under a global qualification list."""
    if quals.system != "global":
        raise GlobalTypeError(f"expected a global qualification list, got {quals.system}")
    annotated = apply_qualification(prog, quals)
    ctx = check_store_global(annotated.store, quals.ctx)
    if target is not None:
        check(ctx, annotated.main, target)
        t = target
    else:
        t = synth(ctx, annotated.main)
    return GlobalResult(ctx, t, annotated)
