"""Enumeration of linear qualifications.

``lin_expr`` follows the syntax of the expression: contexts are divided
by ``spl`` (operator arguments) or ``pspl`` (constructors, tuples, let,
if, case) using free-variable sets, input types are whatever the arguments
synthesize, and output qualifiers are enumerated downward from the initial
annotation.  Results are grouped by their type and kept lazy, so that the
number of qualifications can be counted without building them.

``lin_program`` stages the search over a whole program: decorations of the
store types first, then function bodies against their claimed codomains,
then ``main``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from . import builtins
from .errors import FlattenError, LinearTypeError
from .linear import (
    Ctx,
    check_program,
    fv_case,
    lookup,
    override,
    pspl,
    spl,
    un_pred,
    wf_linear,
)
from .machine import run
from .skeleton import infer, trivialize
from .syntax import (
    HI,
    LI,
    UN,
    App,
    Arrow,
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
    annotations,
    apply_qualification,
    case_nodes,
    flatten,
    free_vars,
    pattern_vars_set,
)

# --------------------------------------------------------------------------
# lazy result groups


@dataclass
class Lazy:
    """A counted, re-iterable family of expressions."""

    count: int
    gen: Callable[[], Iterator[Expr]]

    def __iter__(self) -> Iterator[Expr]:
        return self.gen()


def _leaf(e: Expr) -> Lazy:
    return Lazy(1, lambda: iter((e,)))


def _lazy_product(gens: Sequence[Callable[[], Iterator[Expr]]]) -> Iterator[tuple]:
    if not gens:
        yield ()
        return
    for x in gens[0]():
        for rest in _lazy_product(gens[1:]):
            yield (x,) + rest


def _combine(parts: Sequence[Lazy], build: Callable[[tuple], Expr]) -> Lazy:
    count = 1
    for p in parts:
        count *= p.count
    gens = [p.gen for p in parts]
    return Lazy(count, lambda: (build(es) for es in _lazy_product(gens)))


def _union(items: Sequence[Lazy]) -> Lazy:
    items = list(items)
    if len(items) == 1:
        return items[0]
    return Lazy(sum(i.count for i in items), lambda: itertools.chain.from_iterable(i.gen() for i in items))


Groups = Dict[Type, Lazy]


class _Acc:
    """Accumulates (type, Lazy) pairs, merging equal types in order."""

    def __init__(self):
        self.parts: Dict[Type, List[Lazy]] = {}

    def add(self, t: Type, lz: Lazy) -> None:
        if lz.count:
            self.parts.setdefault(t, []).append(lz)

    def done(self) -> Groups:
        return {t: _union(ls) for t, ls in self.parts.items()}


def pairs(groups: Groups) -> Iterator[Tuple[Expr, Type]]:
    """Flatten grouped results into (expression, type) pairs."""
    for t, lz in groups.items():
        for e in lz:
            yield e, t


def group_count(groups: Groups) -> int:
    return sum(lz.count for lz in groups.values())


# --------------------------------------------------------------------------
# qualifier decorations


def _below(q: str) -> Tuple[str, ...]:
    return (UN, LI) if q == UN else (q,)


def stor_decorations(s: Stor, fixed: bool = False) -> List[Stor]:
    """Every well-formed Stor obtained by lowering qualifiers of ``s``."""
    if fixed:
        return [s]
    if isinstance(s.pre, ListT):
        out = []
        for elem in stor_decorations(s.pre.elem):
            for q in _below(s.q):
                t = Stor(q, ListT(elem))
                if wf_linear(t):
                    out.append(t)
        return out
    return [Stor(q, s.pre) for q in _below(s.q)]


def skeleton_decorations(s) -> List[Type]:
    """All linear types over a skeleton (both qualifiers at every level)."""
    if isinstance(s, str):
        return [Stor(UN, s), Stor(LI, s)]
    if s[0] == "list":
        out = []
        for elem in skeleton_decorations(s[1]):
            for q in (UN, LI):
                t = Stor(q, ListT(elem))
                if wf_linear(t):
                    out.append(t)
        return out
    if s[0] == "tup":
        return [TupleT(ts) for ts in itertools.product(*(skeleton_decorations(x) for x in s[1]))]
    return [Arrow(d, c) for d in skeleton_decorations(s[1]) for c in skeleton_decorations(s[2])]


# --------------------------------------------------------------------------
# the expression enumerator


Constraint = Union[str, OpType]  # "fixed" or an exact operator type


class _Lin:
    def __init__(self, constraints: Optional[Mapping[int, Constraint]] = None):
        self.constraints = dict(constraints or {})

    # helpers ---------------------------------------------------------------

    def _rest_un(self, ctx: Ctx, skip: Optional[str]) -> bool:
        return all(y == skip or un_pred(w) for y, w in ctx)

    def _outputs(self, e, out: Stor) -> List[Stor]:
        c = self.constraints.get(e.occ)
        if c is None:
            return stor_decorations(out)
        if c == "fixed":
            return [out]
        return [c.output]

    def _allowed(self, e, sig: OpType) -> bool:
        c = self.constraints.get(e.occ)
        return not isinstance(c, OpType) or c == sig

    def _argument(self, ctx: Ctx, a: Expr) -> Groups:
        """Operator-argument position: a bare ``hi`` variable is allowed."""
        if isinstance(a, Var):
            v = lookup(ctx, a.name)
            if isinstance(v, Stor) and v.q == HI:
                return {v: _leaf(a)} if self._rest_un(ctx, a.name) else {}
        return self.expr(ctx, a)

    # clauses ---------------------------------------------------------------

    def expr(self, ctx: Ctx, e: Expr) -> Groups:
        if isinstance(e, Var):
            v = lookup(ctx, e.name)
            if v is None or (isinstance(v, Stor) and v.q == HI) or not self._rest_un(ctx, e.name):
                return {}
            return {v: _leaf(e)}
        if isinstance(e, Op):
            return self.op(ctx, e)
        if isinstance(e, Nil):
            if not self._rest_un(ctx, None):
                return {}
            acc = _Acc()
            for out in self._outputs(e, e.ann.output):
                sig = OpType("nil", "nil", (), out)
                if self._allowed(e, sig):
                    acc.add(out, _leaf(replace(e, ann=sig)))
            return acc.done()
        if isinstance(e, (Cons, ConsD)):
            return self.cons(ctx, e)
        if isinstance(e, Tup):
            if not e.items:
                return {TupleT(()): _leaf(e)} if self._rest_un(ctx, None) else {}
            parts = pspl(len(e.items), [free_vars(x) for x in e.items], ctx)
            subs = [self.expr(c, x) for c, x in zip(parts, e.items)]
            acc = _Acc()
            for combo in itertools.product(*(list(s.items()) for s in subs)):
                ts = tuple(t for t, _ in combo)
                acc.add(TupleT(ts), _combine([lz for _, lz in combo], lambda es: Tup(tuple(es))))
            return acc.done()
        if isinstance(e, App):
            f = lookup(ctx, e.fn)
            if not isinstance(f, Arrow):
                return {}
            sub = self.expr(ctx, e.arg)
            if f.dom not in sub:
                return {}
            return {f.cod: _combine([sub[f.dom]], lambda es, e=e: replace(e, arg=es[0]))}
        if isinstance(e, Let):
            c1, c2 = pspl(2, [free_vars(e.bound), free_vars(e.body) - pattern_vars_set(e.pat)], ctx)
            acc = _Acc()
            for t1, lz1 in self.expr(c1, e.bound).items():
                try:
                    frag = flatten(e.pat, t1)
                except FlattenError:
                    continue
                for t2, lz2 in self.expr(override(c2, frag), e.body).items():
                    acc.add(t2, _combine([lz1, lz2], lambda es, e=e: replace(e, bound=es[0], body=es[1])))
            return acc.done()
        if isinstance(e, If):
            c1, c2 = pspl(2, [free_vars(e.cond), free_vars(e.then) | free_vars(e.else_)], ctx)
            conds = {t: lz for t, lz in self.expr(c1, e.cond).items() if isinstance(t, Stor) and t.pre == "bool"}
            if not conds:
                return {}
            cond = _union(list(conds.values()))
            thens = self.expr(c2, e.then)
            elses = self.expr(c2, e.else_)
            acc = _Acc()
            for t, lz in thens.items():
                if t in elses:
                    acc.add(
                        t,
                        _combine(
                            [cond, lz, elses[t]],
                            lambda es, e=e: replace(e, cond=es[0], then=es[1], else_=es[2]),
                        ),
                    )
            return acc.done()
        if isinstance(e, Case):
            c1, c2 = pspl(2, [free_vars(e.scrut), fv_case(e)], ctx)
            acc = _Acc()
            nils = self.expr(c2, e.nil_branch)
            for ts, lzs in self.expr(c1, e.scrut).items():
                if not (isinstance(ts, Stor) and isinstance(ts.pre, ListT)):
                    continue
                inner = override(c2, [(e.head, ts.pre.elem), (e.tail, ts)])
                for t, lz in self.expr(inner, e.cons_branch).items():
                    if t in nils:
                        acc.add(
                            t,
                            _combine(
                                [lzs, nils[t], lz],
                                lambda es, e=e, q=ts.q: replace(
                                    e, scrut=es[0], nil_branch=es[1], cons_branch=es[2], q=q
                                ),
                            ),
                        )
            return acc.done()
        return {}

    def op(self, ctx: Ctx, e: Op) -> Groups:
        out0 = e.ann.output
        if not e.args:
            if not self._rest_un(ctx, None):
                return {}
            acc = _Acc()
            for out in self._outputs(e, out0):
                sig = OpType("op", e.name, (), out)
                if self._allowed(e, sig):
                    acc.add(out, _leaf(replace(e, ann=sig)))
            return acc.done()
        parts = spl(len(e.args), [free_vars(a) for a in e.args], ctx)
        subs = [self._argument(c, a) for c, a in zip(parts, e.args)]
        acc = _Acc()
        for combo in itertools.product(*(list(s.items()) for s in subs)):
            ins = tuple(t for t, _ in combo)
            if not all(isinstance(t, Stor) for t in ins):
                continue
            if e.name in builtins.POLY_SELECT:
                sel = ins[builtins.POLY_SELECT[e.name]]
                outs = [o for o in self._outputs(e, Stor(out0.q, sel.pre)) if o.pre == sel.pre]
            else:
                outs = self._outputs(e, out0)
            lzs = [lz for _, lz in combo]
            for out in outs:
                sig = OpType("op", e.name, ins, out)
                if not self._allowed(e, sig):
                    continue
                acc.add(out, _combine(lzs, lambda es, e=e, sig=sig: replace(e, args=tuple(es), ann=sig)))
        return acc.done()

    def cons(self, ctx: Ctx, e) -> Groups:
        forced = isinstance(e, ConsD)
        args = [e.old, e.head, e.tail] if forced else [e.head, e.tail]
        parts = pspl(len(args), [free_vars(a) for a in args], ctx)
        subs = []
        if forced:
            subs.append(self._argument(parts[0], args[0]))
        subs += [self.expr(c, a) for c, a in zip(parts[-2:], args[-2:])]
        acc = _Acc()
        for combo in itertools.product(*(list(s.items()) for s in subs)):
            ts = [t for t, _ in combo]
            head_t, tail_t = ts[-2], ts[-1]
            if not (isinstance(tail_t, Stor) and isinstance(tail_t.pre, ListT)):
                continue
            if tail_t.pre.elem != head_t:
                continue
            if forced and not (isinstance(ts[0], Stor) and ts[0].pre == tail_t.pre):
                continue
            sig = OpType(e.ann.kind, e.ann.name, tuple(ts), tail_t)
            if not self._allowed(e, sig):
                continue
            c = self.constraints.get(e.occ)
            if c == "fixed" and sig.output != e.ann.output:
                continue
            lzs = [lz for _, lz in combo]
            if forced:
                build = lambda es, e=e, sig=sig: replace(e, old=es[0], head=es[1], tail=es[2], ann=sig)
            else:
                build = lambda es, e=e, sig=sig: replace(e, head=es[0], tail=es[1], ann=sig)
            acc.add(tail_t, _combine(lzs, build))
        return acc.done()


def lin_expr_groups(ctx: Ctx, e: Expr, constraints=None) -> Groups:
    """Grouped form of ``lin_expr``: result type to lazy expressions."""
    return _Lin(constraints).expr(tuple(ctx), e)


def lin_expr(ctx: Ctx, e: Expr, constraints=None) -> List[Tuple[Expr, Type]]:
    """All linear qualifications of the annotated expression ``e``."""
    return list(pairs(lin_expr_groups(ctx, e, constraints)))


# --------------------------------------------------------------------------
# whole programs


@dataclass
class LinSearch:
    candidates: List[QualificationList] = field(default_factory=list)
    count: int = 0
    truncated: bool = False
    rejected: int = 0


def _store_candidates(prog: Program, sk) -> List[List[Type]]:
    out = []
    for name, v in prog.store:
        if isinstance(v, (Const, ParamConst, Iota)):
            pre = v.pre if isinstance(v, Const) else ("array" if isinstance(v, Iota) else "int")
            out.append([Stor(UN, pre), Stor(LI, pre)])
        else:
            out.append(skeleton_decorations(sk.store[name]))
    return out


def _claimed_types(quals: Optional[QualificationList]) -> Dict[str, Type]:
    return dict(quals.ctx) if quals is not None else {}


def lin_program(
    prog: Program,
    constraints: Optional[Mapping[int, Constraint]] = None,
    cap: Optional[int] = 1000,
    count_only: bool = False,
    ctx_fixed: Optional[Mapping[str, Type]] = None,
) -> LinSearch:
    """Enumerate linear qualification lists of ``prog``.

    ``ctx_fixed`` pins the types of chosen store bindings; the rest are
    enumerated over their skeletons.  With ``count_only`` nothing is built
    and ``count`` holds the total.
    """
    sk = infer(prog)
    trivial = apply_qualification(prog, trivialize(prog, "linear"))
    ctx_fixed = dict(ctx_fixed or {})
    names = [n for n, _ in prog.store]
    options = [
        [ctx_fixed[n]] if n in ctx_fixed else opts
        for n, opts in zip(names, _store_candidates(prog, sk))
    ]
    lin = _Lin(constraints)
    result = LinSearch()
    for choice in itertools.product(*options):
        claimed = dict(zip(names, choice))
        staged = _stage(lin, trivial, claimed)
        if staged is None:
            continue
        bodies, mains = staged
        total = group_count(mains)
        for g in bodies.values():
            total *= g.count
        result.count += total
        if count_only or total == 0:
            continue
        for built in _lazy_product([g.gen for g in bodies.values()] + [_union(list(mains.values())).gen]):
            if cap is not None and len(result.candidates) >= cap:
                result.truncated = True
                break
            q = _to_quals(trivial, dict(zip(bodies.keys(), built[:-1])), built[-1], claimed)
            try:
                check_program(prog, q)
            except LinearTypeError:
                result.rejected += 1
                continue
            result.candidates.append(q)
        if result.truncated:
            break
    return result


def _stage(lin: _Lin, prog: Program, claimed: Dict[str, Type]):
    """Enumerate every function body against its claimed type, then main."""
    ctx: Ctx = ()
    bodies: Dict[str, Lazy] = {}
    for name, v in prog.store:
        t = claimed[name]
        if isinstance(v, Closure):
            if not isinstance(t, Arrow):
                return None
            try:
                frag = flatten(v.pat, t.dom)
            except FlattenError:
                return None
            inner = override(override(tuple((x, w) for x, w in ctx if un_pred(w)), [(name, t)]), frag)
            groups = lin.expr(inner, v.body)
            if t.cod not in groups:
                return None
            bodies[name] = groups[t.cod]
        elif isinstance(v, ConsCell):
            used = {v.head, v.tail}
            ctx = tuple((x, w) for x, w in ctx if un_pred(w) or x not in used)
        ctx = ctx + ((name, t),)
    return bodies, lin.expr(ctx, prog.main)


def _to_quals(prog: Program, bodies: Dict[str, Expr], main: Expr, claimed) -> QualificationList:
    store = tuple(
        (n, Closure(v.pat, bodies[n]) if isinstance(v, Closure) else v) for n, v in prog.store
    )
    built = Program(prog.params, store, main)
    cases = tuple(c.q for c in case_nodes(built))
    return QualificationList(
        "linear",
        tuple(annotations(built)),
        tuple(claimed.items()),
        cases if all(q is not None for q in cases) else None,
    )


# --------------------------------------------------------------------------
# ranking


def qualifier_count(quals: QualificationList, q: str = UN) -> int:
    n = 0
    for t in quals.entries:
        for s in list(t.inputs) + [t.output]:
            n += _count_q(s, q)
    return n


def _count_q(s: Stor, q: str) -> int:
    n = 1 if s.q == q else 0
    if isinstance(s.pre, ListT):
        n += _count_q(s.pre.elem, q)
    return n


def li_cost(prog: Program, quals: QualificationList, n: int) -> int:
    annotated = check_program(prog, quals).program
    return run(annotated, "li", {p: n for p in prog.params}).cost


def rank(
    candidates: Sequence[QualificationList], prog: Program, sample_n: int = 6
) -> List[Tuple[int, QualificationList]]:
    """Sort candidates by li-mode cost at ``sample_n``, then by un count."""
    scored = [(li_cost(prog, q, sample_n), qualifier_count(q), i, q) for i, q in enumerate(candidates)]
    scored.sort(key=lambda s: (s[0], s[1], s[2]))
    return [(c, q) for c, _, _, q in scored]
