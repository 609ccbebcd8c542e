"""Shared generators and brute-force oracles for the test-suite.

The generators build small random programs as source text and parse them,
so they exercise the parser too.  The oracles enumerate every annotation of
every occurrence independently and keep what the type checkers accept; they
share no code with the search algorithms under test.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import replace
from typing import Dict, Iterator, List, Sequence

from weaklin.errors import L1Error
from weaklin.globaltypes import check_expr_global
from weaklin.linear import check_expr_cases
from weaklin.linearize import lin_program
from weaklin.parser import parse_expression, parse_program
from weaklin.skeleton import infer_expr, skeleton_of, to_pre
from weaklin.syntax import (
    HI,
    Let,
    LI,
    LO,
    UN,
    Case,
    Cons,
    ConsD,
    Expr,
    ListT,
    Nil,
    Op,
    OpType,
    Stor,
    children,
    pattern_vars,
    with_children,
)

# ------------------------------------------------------------ expressions


class ExprGen:
    """Random well-shaped expressions over ``int``, ``bool`` and ``[int]``.

    ``ints`` and ``lists`` name the context variables of each pretype.  At
    most ``max_occ`` operator or constructor occurrences are produced.
    """

    def __init__(self, rng: random.Random, ints: Sequence[str], lists: Sequence[str] = (), max_occ: int = 4):
        self.rng = rng
        self.ints = list(ints)
        self.lists = list(lists)
        self.budget = max_occ
        self.fresh = itertools.count()

    def _take(self, n: int = 1) -> bool:
        if self.budget >= n:
            self.budget -= n
            return True
        return False

    def int_(self, scope: List[str], depth: int = 0) -> str:
        r = self.rng.random()
        if depth > 3 or r < 0.25:
            if scope and self.rng.random() < 0.8:
                return self.rng.choice(scope)
            return str(self.rng.randint(0, 3)) if self._take() else (self.rng.choice(scope) if scope else "0")
        choice = self.rng.choice(["un", "bin", "let", "if", "pi", "case"])
        if choice == "un" and self._take():
            op = self.rng.choice(["sub1", "add1", "id", "dbl"])
            return f"{op}({self.int_(scope, depth + 1)})"
        if choice == "bin" and self._take():
            op = self.rng.choice(["add", "mul"])
            return f"{op}({self.int_(scope, depth + 1)}, {self.int_(scope, depth + 1)})"
        if choice == "pi" and self._take():
            op = self.rng.choice(["pi1", "pi2"])
            return f"{op}({self.int_(scope, depth + 1)}, {self.int_(scope, depth + 1)})"
        if choice == "let":
            v = f"v{next(self.fresh)}"
            bound = self.int_(scope, depth + 1)
            return f"(let {v} = {bound} in {self.int_(scope + [v], depth + 1)})"
        if choice == "if" and self._take():
            c = self.bool_(scope, depth + 1)
            return f"(if {c} then {self.int_(scope, depth + 1)} else {self.int_(scope, depth + 1)})"
        if choice == "case" and self.lists:
            xs = self.rng.choice(self.lists)
            z, zs = f"z{next(self.fresh)}", f"zs{next(self.fresh)}"
            nil = self.int_(scope, depth + 1)
            cons = self.int_(scope + [z], depth + 1)
            return f"(case {xs} of {{nil -> {nil}; ({z} : {zs}) -> {cons}}})"
        return self.rng.choice(scope) if scope else "0"

    def bool_(self, scope: List[str], depth: int) -> str:
        # The caller already paid for this occurrence.
        if self.rng.random() < 0.5 or self.budget == 0:
            return f"eqz({self.int_(scope, depth + 1)})"
        return f"leq({self.int_(scope, depth + 1)}, {self.int_(scope, depth + 1)})"

    def list_(self, scope: List[str], depth: int = 0) -> str:
        if self.lists and self.rng.random() < 0.4:
            return self.rng.choice(self.lists)
        if depth < 2 and self._take():
            return f"({self.int_(scope, depth + 1)} : {self.list_(scope, depth + 1)})"
        if self._take():
            return "nil"
        return self.rng.choice(self.lists) if self.lists else "nil"

    def expr(self) -> str:
        if self.lists and self.rng.random() < 0.25:
            return self.list_(list(self.ints))
        if self.rng.random() < 0.2 and self.budget >= 2:
            return f"<{self.int_(list(self.ints))}, {self.int_(list(self.ints))}>"
        return self.int_(list(self.ints))


def annotate_trivially(env_types: Dict[str, object], e: Expr, q: str) -> Expr:
    """Fill every annotation slot of ``e`` with its ``q``-qualified skeleton."""
    env = {x: skeleton_of(t) for x, t in env_types.items()}
    _, occ, _ = infer_expr(e, env)

    def fill(x: Expr) -> Expr:
        x = with_children(x, [fill(c) for c in children(x)])
        if isinstance(x, (Op, Nil, Cons, ConsD)):
            ins, out = occ[x.occ]
            kind = {Op: "op", Nil: "nil", Cons: "cons", ConsD: "consd"}[type(x)]
            name = x.name if isinstance(x, Op) else kind
            ann = OpType(kind, name, tuple(Stor(q, to_pre(i, q)) for i in ins), Stor(q, to_pre(out, q)))
            return replace(x, ann=ann)
        return x

    return fill(e)


def random_linear_case(seed: int, max_occ: int = 4):
    """A random linear context and a trivially annotated expression.

    The expression has between one and ``max_occ`` occurrences.
    """
    rng = random.Random(seed)
    while True:
        ctx, e = _linear_case(rng, max_occ)
        if _slots(e):
            return ctx, e


def _linear_case(rng: random.Random, max_occ: int):
    ctx = []
    for name in ("a", "b")[: rng.randint(1, 2)]:
        ctx.append((name, Stor(rng.choice((LI, UN, HI)), "int")))
    lists = []
    if rng.random() < 0.4:
        q = rng.choice((LI, UN))
        elem = Stor(LI if q == LI and rng.random() < 0.5 else UN, "int")
        ctx.append(("xs", Stor(q, ListT(elem))))
        lists.append("xs")
    gen = ExprGen(rng, [x for x, t in ctx if t.pre == "int"], lists, rng.randint(1, max_occ))
    e = parse_expression(gen.expr())
    return tuple(ctx), annotate_trivially(dict(ctx), e, UN)


def random_global_case(seed: int, max_occ: int = 3):
    """A random global context, a trivially annotated expression and a target."""
    rng = random.Random(seed)
    while True:
        case = _global_case(rng, max_occ)
        if _slots(case[1]):
            return case


def _global_case(rng: random.Random, max_occ: int):
    ctx = []
    for name in ("a", "b")[: rng.randint(1, 2)]:
        ctx.append((name, Stor(rng.choice((LO, name)), "int")))
    gen = ExprGen(rng, [x for x, _ in ctx], (), rng.randint(1, max_occ))
    e = parse_expression(gen.int_([x for x, _ in ctx]))
    target = Stor(rng.choice([LO] + [x for x, _ in ctx]), "int")
    return tuple(ctx), annotate_trivially(dict(ctx), e, LO), target


# ---------------------------------------------------------------- oracles


def _slots(e: Expr) -> List[Expr]:
    out: List[Expr] = []

    def walk(x: Expr) -> None:
        for c in children(x):
            walk(c)
        if isinstance(x, (Op, Nil, Cons, ConsD)):
            out.append(x)

    walk(e)
    return out


def _stor_variants(s: Stor, quals: Sequence[str], inner: Sequence[str]) -> List[Stor]:
    if isinstance(s.pre, ListT):
        return [Stor(q, ListT(el)) for q in quals for el in _stor_variants(s.pre.elem, inner, inner)]
    return [Stor(q, s.pre) for q in quals]


def _builder(e: Expr):
    """Compile ``e`` into a function from an occurrence table to ``e`` relabelled."""
    subs = [_builder(c) for c in children(e)]
    slot = isinstance(e, (Op, Nil, Cons, ConsD))
    if not slot and all(b is None for b in subs):
        return None
    kids = children(e)
    occs = [x.occ for x in _slots(e)]
    # Consecutive candidates differ in few slots, so subtrees are cached on
    # the annotations of the slots they contain.
    cache: Dict[tuple, Expr] = {}

    def build(table: Dict[int, OpType]) -> Expr:
        key = tuple(table[o] for o in occs)
        hit = cache.get(key)
        if hit is None:
            cs = [c if b is None else b(table) for c, b in zip(kids, subs)]
            x = with_children(e, cs) if subs else e
            hit = cache[key] = replace(x, ann=table[x.occ]) if slot else x
        return hit

    return build


def _assignments(e: Expr, variants) -> Iterator[Expr]:
    slots = _slots(e)
    options = []
    for s in slots:
        ins = [variants(t, True) for t in s.ann.inputs]
        outs = variants(s.ann.output, False)
        options.append(
            [OpType(s.ann.kind, s.ann.name, tuple(i), o) for i in itertools.product(*ins) for o in outs]
        )
    build = _builder(e)
    if build is None:
        yield e
        return
    occs = [s.occ for s in slots]
    for combo in itertools.product(*options):
        yield build(dict(zip(occs, combo)))


def _set_cases(e: Expr, cases: Dict[int, str]) -> Expr:
    x = with_children(e, [_set_cases(c, cases) for c in children(e)])
    if isinstance(x, Case):
        return replace(x, q=cases.get(x.cid, x.q))
    return x


def brute_linear(ctx, e: Expr) -> set:
    """Every annotation of ``e`` the linear checker accepts, with its type."""

    def variants(t: Stor, is_input: bool) -> List[Stor]:
        top = (LI, UN, HI) if is_input else (LI, UN)
        return _stor_variants(t, top, (LI, UN))

    out = set()
    for cand in _assignments(e, variants):
        try:
            t, cases = check_expr_cases(ctx, cand)
        except L1Error:
            continue
        out.add((_set_cases(cand, cases), t))
    return out


def scopes(e: Expr, outer: Sequence[str]) -> Dict[int, List[str]]:
    """Names in scope at every occurrence of ``e`` (``outer`` plus enclosing binders)."""
    out: Dict[int, List[str]] = {}

    def walk(x: Expr, scope: List[str]) -> None:
        if isinstance(x, (Op, Nil, Cons, ConsD)):
            out[x.occ] = scope
        if isinstance(x, Let):
            walk(x.bound, scope)
            walk(x.body, scope + pattern_vars(x.pat))
            return
        if isinstance(x, Case):
            walk(x.scrut, scope)
            walk(x.nil_branch, scope)
            walk(x.cons_branch, scope + [x.head, x.tail])
            return
        for c in children(x):
            walk(c, scope)

    walk(e, list(outer))
    return out


def brute_global(ctx, e: Expr, target) -> set:
    """Every annotation of ``e`` the global checker accepts.

    The qualifiers of an occurrence range over ``lo`` and the names in scope
    there.  Boolean results stay ``lo``: conditions are globalized at
    ``lo bool``, so a global boolean is never a candidate.
    """
    scope = scopes(e, [x for x, _ in ctx])
    slots = _slots(e)
    options = []
    for s in slots:
        quals = (LO, *sorted(set(scope[s.occ])))

        def variants(t: Stor) -> List[Stor]:
            return [t] if t.pre == "bool" else _stor_variants(t, quals, (LO,))

        ins = [variants(t) for t in s.ann.inputs]
        outs = variants(s.ann.output)
        options.append(
            [OpType(s.ann.kind, s.ann.name, tuple(i), o) for i in itertools.product(*ins) for o in outs]
        )
    build = _builder(e)
    occs = [s.occ for s in slots]
    out = set()
    for combo in itertools.product(*options):
        cand = build(dict(zip(occs, combo))) if build else e
        try:
            ok = check_expr_global(ctx, cand, target)
        except L1Error:
            ok = False
        if ok:
            out.add(cand)
    return out


def space_size(e: Expr, width_in: int, width_out: int) -> int:
    n = 1
    for s in _slots(e):
        n *= width_in ** len(s.ann.inputs) * width_out
    return n


# --------------------------------------------------------------- programs


def random_program_text(seed: int, max_occ: int = 6) -> str:
    """A random terminating program with a parameter and a helper closure."""
    rng = random.Random(seed)
    lines = ["l1 v1", "param n", "store"]
    ints = []
    if rng.random() < 0.6:
        lines.append(f"  c = {rng.randint(0, 5)};")
        ints.append("c")
    use_fun = rng.random() < 0.6
    if use_fun:
        body = ExprGen(rng, ["x"], (), max(1, max_occ // 2)).int_(["x"])
        lines.append(f"  g = \\x. {body};")
    gen = ExprGen(rng, ints + ["m"], (), max_occ)
    main = gen.int_(ints + ["m"])
    if use_fun and rng.random() < 0.7:
        main = f"g {main}" if main.isidentifier() else f"g ({main})"
    lines += ["main", f"  let m = @n in {main}"]
    return "\n".join(lines) + "\n"


def random_program(seed: int, max_occ: int = 6):
    return parse_program(random_program_text(seed, max_occ))


def sample_linear_qualifications(prog, rng: random.Random, k: int = 3, cap: int = 60) -> List:
    found = lin_program(prog, cap=cap)
    if not found.candidates:
        return []
    return rng.sample(found.candidates, min(k, len(found.candidates)))

