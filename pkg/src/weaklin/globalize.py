"""Enumeration of global qualifications.

``glob_expr`` is directed by a target type: operator outputs are stamped
from the target and each argument is globalized against candidate targets.
Two candidate policies are available:

``complete`` (default)
    every qualifier from a finite universe (``lo``, the context variables
    of the right pretype, the global names of the context and the target)
    is tried for each argument, declared inputs range over ``lo`` and the
    argument's information, and let/application targets are enumerated.
``forced``
    the narrower displayed policy: argument candidates are the synthesized
    qualifier plus matching globals, declared input equals the argument
    target, and binders are globalized through ``p|Gl . T``.

Every node is filtered by the deterministic checker, so every result
checks against its target.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from .errors import FlattenError, GlobalTypeError
from .globaltypes import (
    Ctx,
    _accepts,
    check_program_global,
    embed,
    globals_of,
    lookup,
    match_pat,
    override,
    pat_dot,
    pat_restrict,
    pinfo,
    seq_ctx,
    subst_pat_in_type,
    synth,
    wf_type,
)
from .skeleton import SkeletonError, decorate, infer, infer_expr, skeleton_of, trivialize
from .syntax import (
    LO,
    App,
    Case,
    Closure,
    Cons,
    ConsD,
    Expr,
    If,
    Let,
    ListT,
    Nil,
    Op,
    OpType,
    Pi,
    Program,
    QualificationList,
    Stor,
    Tup,
    TupleT,
    Type,
    Var,
    annotations,
    apply_qualification,
    case_nodes,
    flatten,
    is_global_var,
    pattern_vars,
    pattern_vars_set,
    type_vars,
)

MODES = ("complete", "forced")


def _dedupe(items: Iterable) -> list:
    seen = set()
    out = []
    for x in items:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


def leaf_variants(t: Type, choices) -> List[Type]:
    """Types obtained by re-qualifying every top-level Stor leaf of ``t``.

    ``choices(stor)`` lists the qualifiers allowed for that leaf.
    """
    if isinstance(t, Stor):
        return [Stor(q, t.pre) for q in choices(t)]
    if isinstance(t, TupleT):
        return [TupleT(ts) for ts in itertools.product(*(leaf_variants(x, choices) for x in t.items))]
    return [t]


class _Glob:
    def __init__(self, mode: str = "complete", extra: Iterable[str] = (), promoted: Iterable[str] = ()):
        if mode not in MODES:
            raise ValueError(f"unknown globalization mode {mode}")
        self.mode = mode
        self.extra = set(extra)
        self.promoted = set(promoted)
        self._memo: Dict[Tuple[int, int, Type], Tuple[Ctx, Expr, List[Expr]]] = {}

    # candidate sets -------------------------------------------------------

    def universe(self, ctx: Ctx, pre) -> List[str]:
        """``lo`` plus every name that may carry a value of pretype ``pre``."""
        typed = {x for x, v in ctx if isinstance(v, Stor) and v.pre == pre}
        dom = {x for x, _ in ctx}
        loose = (globals_of(ctx) | self.extra) - dom
        return [LO] + sorted(typed | loose)

    def _view(self, ctx: Ctx, x: str):
        v = lookup(ctx, x)
        if isinstance(v, Stor) and x in self.promoted:
            return Stor(x, v.pre)
        return v

    def _gl_at(self, ctx: Ctx, pre) -> List[str]:
        return sorted(x for x, _ in ctx if (lambda v: isinstance(v, Stor) and v.q == x and v.pre == pre)(self._view(ctx, x)))

    def _synth_q(self, ctx: Ctx, e: Expr) -> Optional[str]:
        if isinstance(e, Var):
            v = self._view(ctx, e.name)
            return v.q if isinstance(v, Stor) else None
        try:
            t = synth(ctx, e)
        except GlobalTypeError:
            return None
        return t.q if isinstance(t, Stor) else None

    def arg_options(self, ctx: Ctx, a: Expr, pre) -> List[Tuple[str, str]]:
        """(declared input, argument target) pairs for one argument."""
        if self.mode == "forced":
            g = self._synth_q(ctx, a)
            if g is None:
                return []
            cands = [g] if is_global_var(g) else [g] + [x for x in self._gl_at(ctx, pre) if x != g]
            return [(c, c) for c in cands]
        if isinstance(a, Var):
            return [(LO, a.name), (a.name, a.name)]
        out = []
        for g in self.universe(ctx, pre):
            out.append((LO, g))
            if g != LO:
                out.append((g, g))
        return out

    # the enumerator --------------------------------------------------------

    def expr(self, ctx: Ctx, e: Expr, t: Type) -> List[Expr]:
        # The same sub-problem recurs across the candidates of enclosing
        # lets and applications, so results are memoized.  Hashing whole
        # contexts is the bottleneck, so the key uses object identity; the
        # entry keeps ``ctx`` and ``e`` alive so their ids stay unique.
        key = (id(ctx), id(e), t)
        hit = self._memo.get(key)
        if hit is None:
            found = [x for x in _dedupe(self._gen(ctx, e, t)) if _accepts(ctx, x, t)]
            hit = self._memo[key] = (ctx, e, found)
        return hit[2]

    def _gen(self, ctx: Ctx, e: Expr, t: Type) -> Iterable[Expr]:
        if isinstance(e, Var):
            return [e]
        if isinstance(e, Op):
            return self._op(ctx, e, t)
        if isinstance(e, Nil):
            if not (isinstance(t, Stor) and isinstance(t.pre, ListT)):
                return []
            return [replace(e, ann=OpType("nil", "nil", (), t))]
        if isinstance(e, (Cons, ConsD)):
            return self._cons(ctx, e, t)
        if isinstance(e, Tup):
            if not (isinstance(t, TupleT) and len(t.items) == len(e.items)):
                return []
            subs = [self.expr(ctx, x, u) for x, u in zip(e.items, t.items)]
            return (Tup(tuple(es)) for es in itertools.product(*subs))
        if isinstance(e, If):
            conds = []
            for g in ([LO] if self.mode == "forced" or isinstance(e.cond, Var) else self.universe(ctx, "bool")):
                conds += self.expr(ctx, e.cond, Stor(g, "bool"))
            thens = self.expr(ctx, e.then, t)
            elses = self.expr(ctx, e.else_, t) if thens else []
            return (
                replace(e, cond=c, then=a, else_=b)
                for c, a, b in itertools.product(_dedupe(conds), thens, elses)
            )
        if isinstance(e, App):
            return self._app(ctx, e, t)
        if isinstance(e, Let):
            return self._let(ctx, e, t)
        if isinstance(e, Case):
            return self._case(ctx, e, t)
        return []

    def _op(self, ctx: Ctx, e: Op, t: Type) -> Iterable[Expr]:
        if not isinstance(t, Stor) or e.ann is None:
            return
        trivial = e.ann
        if t.pre != trivial.output.pre:
            return
        per_arg = []
        for a, inp in zip(e.args, trivial.inputs):
            opts = []
            for d, g in self.arg_options(ctx, a, inp.pre):
                for sub in self.expr(ctx, a, Stor(g, inp.pre)):
                    opts.append((Stor(d, inp.pre), sub))
            if not opts:
                return
            per_arg.append(opts)
        for combo in itertools.product(*per_arg):
            sig = OpType("op", e.name, tuple(d for d, _ in combo), t)
            yield replace(e, args=tuple(a for _, a in combo), ann=sig)

    def _cons(self, ctx: Ctx, e, t: Type) -> Iterable[Expr]:
        if not (isinstance(t, Stor) and isinstance(t.pre, ListT)):
            return
        elem = t.pre.elem
        forced = isinstance(e, ConsD)
        args = [e.old, e.head, e.tail] if forced else [e.head, e.tail]
        pres = ([t.pre] if forced else []) + [elem.pre, t.pre]
        per_arg = []
        for i, (a, pre) in enumerate(zip(args, pres)):
            is_head = i == len(args) - 2
            opts = []
            for d, g in self.arg_options(ctx, a, pre):
                if is_head and d != elem.q:
                    continue
                for sub in self.expr(ctx, a, Stor(g, pre)):
                    opts.append((Stor(d, pre), sub))
            if is_head and not opts and self.mode == "forced":
                opts = [(elem, s) for s in self.expr(ctx, a, elem)]
            if not opts:
                return
            per_arg.append(opts)
        for combo in itertools.product(*per_arg):
            ins = tuple(d for d, _ in combo)
            sig = OpType(e.ann.kind, e.ann.name, ins, t)
            subs = [a for _, a in combo]
            if forced:
                yield replace(e, old=subs[0], head=subs[1], tail=subs[2], ann=sig)
            else:
                yield replace(e, head=subs[0], tail=subs[1], ann=sig)

    def _binder_targets(self, ctx: Ctx, pat, t: Type) -> List[Type]:
        """Targets for an expression bound to ``pat`` whose trivial type is ``t``."""
        if self.mode == "forced":
            bar = pat_restrict(pat, globals_of(ctx) | self.promoted)
            dotted = pat_dot(bar, t)
            return [dotted] if dotted is not None else []
        return leaf_variants(t, lambda s: self.universe(ctx, s.pre))

    def _app(self, ctx: Ctx, e: App, t: Type) -> Iterable[Expr]:
        f = lookup(ctx, e.fn)
        if not isinstance(f, Pi):
            return []
        if self.mode == "forced":
            targets = self._binder_targets(ctx, f.pat, f.dom)
        else:
            targets = leaf_variants(
                f.dom, lambda s: self.universe(ctx, s.pre) if s.q == LO else [s.q]
            )
        out = []
        for target in targets:
            out += [replace(e, arg=a) for a in self.expr(ctx, e.arg, target)]
        return out

    def _let(self, ctx: Ctx, e: Let, t: Type) -> Iterable[Expr]:
        base = _shape(ctx, e.bound)
        if base is None:
            return
        for target in self._binder_targets(ctx, e.pat, base):
            for b in self.expr(ctx, e.bound, target):
                try:
                    t1 = synth(ctx, b)
                    frag = flatten(e.pat, t1)
                except (GlobalTypeError, FlattenError):
                    continue
                inner = seq_ctx(ctx, frag, "let")
                info = pinfo(ctx, b)
                for body_t in self._body_targets(e.pat, info, t):
                    for body in self.expr(inner, e.body, body_t):
                        yield replace(e, bound=b, body=body)

    def _body_targets(self, pat, info, t: Type) -> List[Type]:
        """Types T2 with [pat -> info] T2 = t."""
        if self.mode == "forced":
            return [t]
        try:
            m = match_pat(pat, info)
        except GlobalTypeError:
            return [t]
        back: Dict[str, List[str]] = {}
        for v, g in m.items():
            if isinstance(g, str):
                back.setdefault(g, []).append(v)
        pvars = pattern_vars_set(pat)

        def choices(s: Stor) -> List[str]:
            keep = [s.q] if not (s.q in pvars and m.get(s.q, s.q) != s.q) else []
            return _dedupe(keep + sorted(back.get(s.q, [])))

        return [u for u in leaf_variants(t, choices) if subst_pat_in_type(pat, info, u) == t]

    def _case(self, ctx: Ctx, e: Case, t: Type) -> Iterable[Expr]:
        ts = _shape(ctx, e.scrut)
        if not (isinstance(ts, Stor) and isinstance(ts.pre, ListT)):
            return
        pre = ts.pre.elem.pre
        lst = Stor(LO, ListT(Stor(LO, pre)))
        scruts = self.expr(ctx, e.scrut, lst)
        if not scruts:
            return
        inner = seq_ctx(ctx, [(e.head, Stor(LO, pre)), (e.tail, lst)], "cas")
        nils = self.expr(ctx, e.nil_branch, t)
        conses = self.expr(inner, e.cons_branch, t) if nils else []
        for s, a, b in itertools.product(scruts, nils, conses):
            yield replace(e, scrut=s, nil_branch=a, cons_branch=b, q=LO)


def glob_expr(
    ctx: Ctx, e: Expr, target: Type, mode: str = "complete", promoted: Iterable[str] = ()
) -> List[Expr]:
    """Globalizations of the trivially annotated ``e`` against ``target``."""
    ctx = tuple(ctx)
    g = _Glob(mode, extra=type_vars(target) | _target_names(target), promoted=promoted)
    return g.expr(ctx, e, target)


def _target_names(t: Type) -> set:
    if isinstance(t, Stor):
        return {t.q} if is_global_var(t.q) else set()
    if isinstance(t, TupleT):
        return set().union(*(_target_names(x) for x in t.items)) if t.items else set()
    return set()


# --------------------------------------------------------------------------
# stores and programs


def _closure_ctx(ctx: Ctx, name: str, t: Pi, clo: Closure):
    frag = flatten(clo.pat, t.dom)
    cod = subst_pat_in_type(t.pat, embed(clo.pat), t.cod)
    return override(override(ctx, [(name, t)]), frag), cod


def glob_store(
    ctx_types: Mapping[str, Type],
    store,
    mode: str = "complete",
    cap: Optional[int] = 1000,
) -> List[Tuple[Tuple[str, object], ...]]:
    """Globalize every function body of ``store`` against its codomain."""
    ctx: Ctx = ()
    per: List[List[Tuple[str, object]]] = []
    for name, v in store:
        t = ctx_types[name]
        if isinstance(v, Closure):
            if not (isinstance(t, Pi) and wf_type(t)):
                return []
            try:
                inner, cod = _closure_ctx(ctx, name, t, v)
            except FlattenError:
                return []
            promoted = type_vars(cod) | (_target_names(cod) & pattern_vars_set(v.pat))
            g = _Glob(mode, extra=_target_names(cod), promoted=promoted)
            bodies = g.expr(inner, v.body, cod)
            if not bodies:
                return []
            per.append([(name, Closure(v.pat, b)) for b in bodies])
        else:
            per.append([(name, v)])
        ctx = override(ctx, [(name, t)])
    out = []
    for combo in itertools.product(*per):
        if cap is not None and len(out) >= cap:
            break
        out.append(tuple(combo))
    return out


@dataclass
class GlobSeed:
    """Starting point of a program-level search."""

    target: Optional[Type] = None
    env: Dict[str, Type] = field(default_factory=dict)
    cap: Optional[int] = 1000


@dataclass
class GlobSearch:
    candidates: List[QualificationList] = field(default_factory=list)
    truncated: bool = False
    rejected: int = 0
    contexts: int = 0


def _promote_store(prog: Program, sk) -> Dict[str, Type]:
    """Default types: constants become self-named globals."""
    out: Dict[str, Type] = {}
    for name, v in prog.store:
        if not isinstance(v, Closure):
            s = decorate(sk.store[name], LO, "global")
            out[name] = Stor(name, s.pre) if isinstance(s, Stor) else s
    return out


def pi_candidates(name: str, clo: Closure, skel, globals_: Mapping[str, Type]) -> List[Pi]:
    """Pi types over the closure's own pattern, codomain leaves drawn from
    ``lo``, the pattern variables and the typed globals of the same pretype."""
    base = decorate(skel, LO, "global")
    pvars = pattern_vars(clo.pat)

    def cod_choices(s: Stor) -> List[str]:
        gl = sorted(x for x, v in globals_.items() if isinstance(v, Stor) and v.q == x and v.pre == s.pre)
        return _dedupe([LO] + pvars + gl)

    out = []
    for cod in leaf_variants(base.cod, cod_choices):
        t = Pi(clo.pat, base.dom, cod)
        if wf_type(t):
            out.append(t)
    return out


def glob_program(
    prog: Program,
    seed: Optional[GlobSeed] = None,
    cap: Optional[int] = None,
    mode: str = "complete",
) -> GlobSearch:
    """Enumerate global qualification lists of ``prog``."""
    seed = seed or GlobSeed()
    cap = seed.cap if cap is None else cap
    sk = infer(prog)
    trivial = apply_qualification(prog, trivialize(prog, "global"))
    env = _promote_store(prog, sk)
    env.update({k: v for k, v in seed.env.items()})
    options = []
    for name, v in prog.store:
        if name in seed.env:
            options.append([seed.env[name]])
        elif isinstance(v, Closure):
            options.append(pi_candidates(name, v, sk.store[name], env))
        else:
            options.append([env[name]])
    result = GlobSearch()
    names = [n for n, _ in prog.store]
    for choice in itertools.product(*options):
        claimed = dict(zip(names, choice))
        result.contexts += 1
        stores = glob_store(claimed, trivial.store, mode, cap)
        if not stores:
            continue
        ctx = tuple(claimed.items())
        targets = [seed.target] if seed.target is not None else _main_targets(ctx, trivial.main, env)
        for target in targets:
            g = _Glob(mode, extra=_target_names(target))
            mains = g.expr(ctx, trivial.main, target)
            for store, main in itertools.product(stores, mains):
                if cap is not None and len(result.candidates) >= cap:
                    result.truncated = True
                    return result
                built = Program(prog.params, store, main)
                q = QualificationList(
                    "global", tuple(annotations(built)), ctx, tuple(LO for _ in case_nodes(built))
                )
                try:
                    check_program_global(prog, q, target)
                except GlobalTypeError:
                    result.rejected += 1
                    continue
                if q not in result.candidates:
                    result.candidates.append(q)
    return result


def _shape(ctx: Ctx, e: Expr) -> Optional[Type]:
    """A type of ``e`` used only for its shape.

    The trivially annotated expression may fail to synthesize even when other
    annotations of it check (an ``if`` whose branches disagree), so fall back
    to the ``lo`` decoration of its skeleton.
    """
    try:
        return synth(ctx, e)
    except GlobalTypeError:
        pass
    env = {x: skeleton_of(v) for x, v in ctx if isinstance(v, (Stor, Pi, TupleT))}
    try:
        return decorate(infer_expr(e, env)[0], LO, "global")
    except (SkeletonError, ValueError):
        return None


def _main_targets(ctx: Ctx, main: Expr, env: Mapping[str, Type]) -> List[Type]:
    try:
        base = synth(ctx, main)
    except GlobalTypeError:
        return []
    names = sorted(x for x, v in env.items() if isinstance(v, Stor) and v.q == x)
    return _dedupe(
        leaf_variants(base, lambda s: [s.q] if is_global_var(s.q) else [LO] + [x for x in names if env[x].pre == s.pre])
    )
