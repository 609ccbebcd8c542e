"""Unqualified (skeleton) type inference by unification.

Both searches and ``trivialize`` need the base shape of every occurrence
and every store binding before any qualifier is chosen.  Skeleton types
are plain tuples:

* ``"int" | "bool" | "array"``
* ``("list", elem)``
* ``("tup", (t1, ..., tn))``
* ``("fun", dom, cod)``

Store functions are monomorphic; ``id``/``pi1``/``pi2`` are instantiated
afresh at each occurrence.  Variables left unconstrained default to int.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Tuple

from . import builtins
from .errors import TypeCheckError
from .syntax import (
    LO,
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
    Pattern,
    Pi,
    Program,
    PVar,
    QualificationList,
    Stor,
    Tup,
    TupleT,
    Type,
    UNIT,
    Var,
    case_nodes,
    occurrences,
)


class SkeletonError(TypeCheckError):
    """The program has no simply-typed skeleton."""


class _TV:
    _ids = itertools.count()

    def __init__(self):
        self.id = next(self._ids)
        self.ref = None

    def __repr__(self):
        return f"?{self.id}"


def _find(t):
    while isinstance(t, _TV) and t.ref is not None:
        t = t.ref
    return t


def _occurs(v, t) -> bool:
    t = _find(t)
    if t is v:
        return True
    if isinstance(t, tuple):
        if t[0] == "tup":
            return any(_occurs(v, x) for x in t[1])
        return any(_occurs(v, x) for x in t[1:])
    return False


def _unify(a, b, where: str = "") -> None:
    a, b = _find(a), _find(b)
    if a is b:
        return
    if isinstance(a, _TV):
        if _occurs(a, b):
            raise SkeletonError(f"infinite type {where}", rule="skeleton")
        a.ref = b
        return
    if isinstance(b, _TV):
        _unify(b, a, where)
        return
    if isinstance(a, str) or isinstance(b, str):
        if a != b:
            raise SkeletonError(f"pretype mismatch {_show(a)} vs {_show(b)} {where}", rule="skeleton")
        return
    if a[0] != b[0]:
        raise SkeletonError(f"shape mismatch {_show(a)} vs {_show(b)} {where}", rule="skeleton")
    if a[0] == "tup":
        if len(a[1]) != len(b[1]):
            raise SkeletonError(f"tuple arity mismatch {where}", rule="skeleton")
        for x, y in zip(a[1], b[1]):
            _unify(x, y, where)
    else:
        for x, y in zip(a[1:], b[1:]):
            _unify(x, y, where)


def resolve(t):
    """Fully dereference a term; free variables become int."""
    t = _find(t)
    if isinstance(t, _TV):
        t.ref = "int"
        return "int"
    if isinstance(t, str):
        return t
    if t[0] == "tup":
        return ("tup", tuple(resolve(x) for x in t[1]))
    if t[0] == "list":
        return ("list", resolve(t[1]))
    return ("fun", resolve(t[1]), resolve(t[2]))


def _show(t) -> str:
    t = _find(t)
    if isinstance(t, _TV):
        return repr(t)
    if isinstance(t, str):
        return t
    if t[0] == "list":
        return f"[{_show(t[1])}]"
    if t[0] == "tup":
        return "<" + ", ".join(_show(x) for x in t[1]) + ">"
    return f"({_show(t[1])} -> {_show(t[2])})"


@dataclass
class Skeleton:
    """Resolved skeleton of a whole program."""

    occ: Dict[int, Tuple[Tuple[object, ...], object]] = field(default_factory=dict)
    store: Dict[str, object] = field(default_factory=dict)
    cases: Dict[int, object] = field(default_factory=dict)
    main: object = None


class _Infer:
    def __init__(self):
        self.occ: Dict[int, Tuple[list, object]] = {}
        self.cases: Dict[int, object] = {}

    def bind(self, p: Pattern, t, env: Dict[str, object]) -> Dict[str, object]:
        env = dict(env)
        self._bind(p, t, env)
        return env

    def _bind(self, p: Pattern, t, env) -> None:
        if isinstance(p, PVar):
            env[p.name] = t
            return
        if not p.items:
            return
        parts = [_TV() for _ in p.items]
        _unify(t, ("tup", tuple(parts)), f"binding {p}")
        for q, s in zip(p.items, parts):
            self._bind(q, s, env)

    def expr(self, e: Expr, env: Dict[str, object]):
        if isinstance(e, Var):
            if e.name not in env:
                raise SkeletonError(f"unbound variable {e.name}", rule="var")
            return env[e.name]
        if isinstance(e, Op):
            args = [self.expr(a, env) for a in e.args]
            if builtins.is_literal(e.name):
                if args:
                    raise SkeletonError(f"literal {e.name} takes no arguments", occ=e.occ)
                out = builtins.literal_pretype(e.name)
                self.occ[e.occ] = ([], out)
                return out
            if e.name not in builtins.TABLE:
                raise SkeletonError(f"unknown operator {e.name}", occ=e.occ)
            b = builtins.TABLE[e.name]
            if len(args) != b.arity:
                raise SkeletonError(f"{e.name} expects {b.arity} arguments", occ=e.occ)
            if b.inputs is None:
                ins = [_TV() for _ in args]
                out = ins[builtins.POLY_SELECT[e.name]]
            else:
                ins, out = list(b.inputs), b.output
            for a, i in zip(args, ins):
                _unify(a, i, f"at occurrence {e.occ}")
            self.occ[e.occ] = (ins, out)
            return out
        if isinstance(e, Nil):
            out = ("list", _TV())
            self.occ[e.occ] = ([], out)
            return out
        if isinstance(e, Cons):
            h = self.expr(e.head, env)
            t = self.expr(e.tail, env)
            out = ("list", h)
            _unify(t, out, f"at cons {e.occ}")
            self.occ[e.occ] = ([h, out], out)
            return out
        if isinstance(e, ConsD):
            o = self.expr(e.old, env)
            h = self.expr(e.head, env)
            t = self.expr(e.tail, env)
            out = ("list", h)
            _unify(t, out, f"at consd {e.occ}")
            _unify(o, out, f"at consd {e.occ}")
            self.occ[e.occ] = ([out, h, out], out)
            return out
        if isinstance(e, Tup):
            return ("tup", tuple(self.expr(x, env) for x in e.items))
        if isinstance(e, App):
            if e.fn not in env:
                raise SkeletonError(f"unbound function {e.fn}", rule="app")
            a = self.expr(e.arg, env)
            r = _TV()
            _unify(env[e.fn], ("fun", a, r), f"applying {e.fn}")
            return r
        if isinstance(e, Let):
            t = self.expr(e.bound, env)
            return self.expr(e.body, self.bind(e.pat, t, env))
        if isinstance(e, If):
            _unify(self.expr(e.cond, env), "bool", "in condition")
            a = self.expr(e.then, env)
            _unify(a, self.expr(e.else_, env), "between branches")
            return a
        if isinstance(e, Case):
            elem = _TV()
            _unify(self.expr(e.scrut, env), ("list", elem), "case scrutinee")
            self.cases[e.cid] = elem
            a = self.expr(e.nil_branch, env)
            inner = dict(env)
            inner[e.head] = elem
            inner[e.tail] = ("list", elem)
            _unify(a, self.expr(e.cons_branch, inner), "between case branches")
            return a
        if isinstance(e, Assign):
            t = self.expr(e.rhs, env)
            if e.target in env:
                _unify(env[e.target], t, f"assigning {e.target}")
            return t
        raise TypeError(e)


def infer(prog: Program) -> Skeleton:
    """Infer the skeleton of ``prog`` (store, occurrences, cases, main)."""
    inf = _Infer()
    env: Dict[str, object] = {}
    for name, v in prog.store:
        if isinstance(v, Closure):
            env[name] = ("fun", _TV(), _TV())
        elif isinstance(v, Const):
            env[name] = v.pre
        elif isinstance(v, ParamConst):
            env[name] = "int"
        elif isinstance(v, Iota):
            env[name] = "array"
        elif isinstance(v, NilCell):
            env[name] = ("list", _TV())
        elif isinstance(v, ConsCell):
            for x in (v.head, v.tail):
                if x not in env:
                    raise SkeletonError(f"cons cell {name} refers to unbound {x}", rule="sco")
            env[name] = ("list", env[v.head])
            _unify(env[v.tail], env[name], f"cons cell {name}")
    for name, v in prog.store:
        if isinstance(v, Closure):
            _, dom, cod = env[name]
            body = inf.expr(v.body, inf.bind(v.pat, dom, env))
            _unify(body, cod, f"body of {name}")
    main = inf.expr(prog.main, env)
    sk = Skeleton()
    sk.occ = {k: (tuple(resolve(i) for i in ins), resolve(o)) for k, (ins, o) in inf.occ.items()}
    sk.store = {k: resolve(v) for k, v in env.items()}
    sk.cases = {k: resolve(v) for k, v in inf.cases.items()}
    sk.main = resolve(main)
    return sk


def infer_expr(e: Expr, env: Dict[str, object]):
    """Infer an isolated expression under a skeleton environment."""
    inf = _Infer()
    out = inf.expr(e, dict(env))
    occ = {k: (tuple(resolve(i) for i in ins), resolve(o)) for k, (ins, o) in inf.occ.items()}
    return resolve(out), occ, {k: resolve(v) for k, v in inf.cases.items()}


# --------------------------------------------------------------------------
# decoration


def to_pre(s, q: str):
    """Skeleton pretype to a qualified pretype, every level qualified ``q``."""
    if isinstance(s, str):
        return s
    if s[0] == "list":
        return ListT(Stor(q, to_pre(s[1], q)))
    raise ValueError(f"not a pretype: {s}")


def is_pretype(s) -> bool:
    return isinstance(s, str) or s[0] == "list"


def decorate(s, q: str, system: str = "linear") -> Type:
    """Uniformly qualified type over skeleton ``s``."""
    if is_pretype(s):
        return Stor(q, to_pre(s, q))
    if s[0] == "tup":
        return TupleT(tuple(decorate(x, q, system) for x in s[1]))
    if system == "linear":
        return Arrow(decorate(s[1], q, system), decorate(s[2], q, system))
    return Pi(UNIT, decorate(s[1], q, system), decorate(s[2], q, system))


def skeleton_of(t: Type):
    """Erase qualifiers from a type, returning its skeleton."""
    if isinstance(t, Stor):
        return _pre_skel(t.pre)
    if isinstance(t, TupleT):
        return ("tup", tuple(skeleton_of(x) for x in t.items))
    return ("fun", skeleton_of(t.dom), skeleton_of(t.cod))


def _pre_skel(p):
    if isinstance(p, ListT):
        return ("list", _pre_skel(p.elem.pre))
    return p


def trivialize(prog: Program, system: str) -> QualificationList:
    """The all-un (linear) or all-lo (global) qualification of ``prog``."""
    q = UN if system == "linear" else LO
    sk = infer(prog)
    entries = []
    for o in occurrences(prog):
        ins, out = sk.occ[o.occ]
        entries.append(
            OpType(o.kind, o.name, tuple(Stor(q, to_pre(i, q)) for i in ins), Stor(q, to_pre(out, q)))
        )
    ctx = []
    for name, v in prog.store:
        t = decorate(sk.store[name], q, system)
        if system == "global" and isinstance(v, Closure):
            t = Pi(v.pat, t.dom, t.cod)
        ctx.append((name, t))
    cases = tuple(q for _ in case_nodes(prog))
    return QualificationList(system, tuple(entries), tuple(ctx), cases)
