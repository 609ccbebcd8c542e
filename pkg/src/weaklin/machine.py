"""Small-step abstract machine with explicit store and cost counters.

Modes:

``un``
    every operator and constructor allocates a fresh cell; nothing is freed.
``li``
    as ``un`` but inputs qualified li are removed from the store before the
    result is allocated, and ``case li`` removes the scrutinized cell.
``gl``
    an output qualified ``lo`` allocates; an output qualified ``x``
    overwrites cell ``x`` in place.  Nothing is ever freed.
``glcmd``
    as ``gl``, for imperative forms: ``x := e`` overwrites ``x``, and
    pattern variables that belong to the global set ``G`` are not bound.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple

from . import builtins
from .errors import MachineError
from .syntax import (
    LI,
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
    Nil,
    NilCell,
    Op,
    ParamConst,
    Program,
    Tup,
    Value,
    Var,
    as_pattern,
    erase_pattern,
    is_terminal,
    match_patterns,
    rename,
)

MODES = ("un", "li", "gl", "glcmd")
DEFAULT_FUEL = 2_000_000


def value_size(v: Value) -> int:
    if isinstance(v, Const):
        return v.size
    if isinstance(v, (NilCell, ConsCell)):
        return 1
    return 0


@dataclass
class CostReport:
    alloc_units: int = 0
    dealloc_units: int = 0
    steps: int = 0

    @property
    def cost(self) -> int:
        return self.alloc_units - self.dealloc_units

    def as_dict(self) -> dict:
        return {
            "alloc_units": self.alloc_units,
            "dealloc_units": self.dealloc_units,
            "steps": self.steps,
            "cost": self.cost,
        }


@dataclass(frozen=True)
class TraceEntry:
    rule: str
    occ: Optional[int]
    store_size: int
    alloc_units: int
    dealloc_units: int


@dataclass
class MachineConfig:
    store: Dict[str, Value]
    control: Expr
    mode: str = "un"
    params: Mapping[str, int] = field(default_factory=dict)
    globals_: FrozenSet[str] = frozenset()
    counter: int = 0
    report: CostReport = field(default_factory=CostReport)
    trace: Optional[List[TraceEntry]] = None

    def fresh(self) -> str:
        self.counter += 1
        return f"${self.counter}"


def initial_store(prog: Program, params: Mapping[str, int]) -> Dict[str, Value]:
    """Resolve parameter-driven initializers; the result is not costed."""
    store: Dict[str, Value] = {}
    for name, v in prog.store:
        if isinstance(v, ParamConst):
            v = Const("int", int(_param(params, v.param)))
        elif isinstance(v, Iota):
            v = Const("array", tuple(range(int(_param(params, v.param)) + 1)))
        store[name] = v
    return store


def _param(params: Mapping[str, int], name: str) -> int:
    if name not in params:
        raise MachineError(f"missing run parameter {name}", kind="param")
    return params[name]


# --------------------------------------------------------------------------
# store primitives


def dealloc(store: Dict[str, Value], quals, names) -> int:
    """S ~ (quals) names: remove every li-tagged name; return freed units."""
    freed = 0
    for q, x in zip(quals, names):
        if q != LI:
            continue
        if x not in store:
            raise MachineError(f"double free of {x}", kind="double-free")
        freed += value_size(store.pop(x))
    return freed


def _read(cfg: MachineConfig, x: str) -> Value:
    if x not in cfg.store:
        raise MachineError(f"dangling variable {x}", kind="dangling")
    return cfg.store[x]


def _alloc(cfg: MachineConfig, v: Value) -> str:
    x = cfg.fresh()
    cfg.store[x] = v
    cfg.report.alloc_units += value_size(v)
    return x


def _write(cfg: MachineConfig, target: str, v: Value) -> str:
    """In-place update S[x] := v; a missing cell is created and costed."""
    if target not in cfg.store:
        cfg.report.alloc_units += value_size(v)
    cfg.store[target] = v
    return target


def _free(cfg: MachineConfig, quals, names) -> None:
    cfg.report.dealloc_units += dealloc(cfg.store, quals, names)


# --------------------------------------------------------------------------
# stepping


def _is_global_mode(cfg: MachineConfig) -> bool:
    return cfg.mode in ("gl", "glcmd")


def _output(cfg: MachineConfig, node, v: Value, local_rule: str, global_rule: str) -> Tuple[str, str]:
    """Place a result according to the mode and the output qualifier."""
    if _is_global_mode(cfg) and node.ann is not None and node.ann.output.q != LO:
        return _write(cfg, node.ann.output.q, v), global_rule
    return _alloc(cfg, v), (global_rule[:2] + "l" if _is_global_mode(cfg) else local_rule)


def _bind(cfg: MachineConfig, pat, actual, body: Expr) -> Expr:
    if cfg.mode == "glcmd" and cfg.globals_:
        pat = erase_pattern(pat, cfg.globals_)
    return rename(match_patterns(pat, as_pattern(actual)), body)


def _fire(cfg: MachineConfig, e: Expr) -> Tuple[Expr, str]:
    if isinstance(e, Op):
        names = [a.name for a in e.args]
        v = builtins.evaluate(e.name, [_read(cfg, x) for x in names], cfg.params)
        if cfg.mode == "li" and e.ann is not None:
            _free(cfg, [t.q for t in e.ann.inputs], names)
        x, rule = _output(cfg, e, v, "eop", "eog")
        return Var(x), rule
    if isinstance(e, Nil):
        x, rule = _output(cfg, e, NilCell(), "eem", "eeg")
        return Var(x), rule
    if isinstance(e, Cons):
        for a in (e.head, e.tail):
            _read(cfg, a.name)
        x, rule = _output(cfg, e, ConsCell(e.head.name, e.tail.name), "eco", "ecg")
        return Var(x), rule
    if isinstance(e, ConsD):
        for a in (e.old, e.head, e.tail):
            _read(cfg, a.name)
        if cfg.mode == "li" and e.ann is not None:
            _free(cfg, [e.ann.inputs[0].q], [e.old.name])
        x, rule = _output(cfg, e, ConsCell(e.head.name, e.tail.name), "ecd", "ecg")
        return Var(x), rule
    if isinstance(e, Let):
        return _bind(cfg, e.pat, e.bound, e.body), "ele"
    if isinstance(e, App):
        clo = _read(cfg, e.fn)
        if not isinstance(clo, Closure):
            raise MachineError(f"{e.fn} is not a function", kind="stuck")
        return _bind(cfg, clo.pat, e.arg, clo.body), "eap"
    if isinstance(e, If):
        c = _read(cfg, e.cond.name)
        if not (isinstance(c, Const) and c.pre == "bool"):
            raise MachineError("condition is not a boolean", kind="stuck")
        return (e.then if c.payload else e.else_), "eif"
    if isinstance(e, Case):
        x = e.scrut.name
        cell = _read(cfg, x)
        if not isinstance(cell, (NilCell, ConsCell)):
            raise MachineError(f"case on a non-list {x}", kind="stuck")
        if cfg.mode == "li" and e.q == LI:
            _free(cfg, [LI], [x])
        if isinstance(cell, NilCell):
            return e.nil_branch, "eca"
        body = rename({e.head: cell.head, e.tail: cell.tail}, e.cons_branch)
        return body, "eca"
    if isinstance(e, Assign):
        rhs = e.rhs
        if isinstance(rhs, Op):
            v = builtins.evaluate(rhs.name, [_read(cfg, a.name) for a in rhs.args], cfg.params)
        elif isinstance(rhs, Nil):
            v = NilCell()
        elif isinstance(rhs, Cons):
            v = ConsCell(rhs.head.name, rhs.tail.name)
        elif isinstance(rhs, ConsD):
            v = ConsCell(rhs.head.name, rhs.tail.name)
        else:
            raise MachineError("assignment of a non-operator", kind="stuck")
        return Var(_write(cfg, e.target, v)), "eas"
    raise MachineError(f"no rule applies to {type(e).__name__}", kind="stuck")


def _redex_children(e: Expr):
    """Sub-phrases evaluated before ``e`` fires, with their terminal test."""
    if isinstance(e, Op):
        return [(i, a, True) for i, a in enumerate(e.args)]
    if isinstance(e, Cons):
        return [(0, e.head, True), (1, e.tail, True)]
    if isinstance(e, ConsD):
        return [(0, e.old, True), (1, e.head, True), (2, e.tail, True)]
    if isinstance(e, Tup):
        return [(i, a, False) for i, a in enumerate(e.items)]
    if isinstance(e, App):
        return [(0, e.arg, False)]
    if isinstance(e, Let):
        return [(0, e.bound, False)]
    if isinstance(e, If):
        return [(0, e.cond, True)]
    if isinstance(e, Case):
        return [(0, e.scrut, True)]
    if isinstance(e, Assign):
        return [(0, e.rhs, None)]
    return []


def _rebuild(e: Expr, i: int, new: Expr) -> Expr:
    if isinstance(e, Op):
        args = list(e.args)
        args[i] = new
        return replace(e, args=tuple(args))
    if isinstance(e, Cons):
        return replace(e, head=new) if i == 0 else replace(e, tail=new)
    if isinstance(e, ConsD):
        return replace(e, **{("old", "head", "tail")[i]: new})
    if isinstance(e, Tup):
        items = list(e.items)
        items[i] = new
        return Tup(tuple(items))
    if isinstance(e, App):
        return replace(e, arg=new)
    if isinstance(e, Let):
        return replace(e, bound=new)
    if isinstance(e, If):
        return replace(e, cond=new)
    if isinstance(e, Case):
        return replace(e, scrut=new)
    if isinstance(e, Assign):
        return replace(e, rhs=new)
    raise TypeError(e)


def _step_in(cfg: MachineConfig, e: Expr) -> Tuple[Expr, str, Optional[int]]:
    if isinstance(e, Assign):
        rhs = e.rhs
        for i, a, _ in _redex_children(rhs):
            if not isinstance(a, Var):
                new, rule, occ = _step_in(cfg, a)
                return replace(e, rhs=_rebuild(rhs, i, new)), rule, occ
        new, rule = _fire(cfg, e)
        return new, rule, getattr(rhs, "occ", None)
    for i, a, need_var in _redex_children(e):
        done = isinstance(a, Var) if need_var else is_terminal(a)
        if not done:
            if need_var and isinstance(a, Tup):
                raise MachineError("tuple in a scalar position", kind="stuck")
            new, rule, occ = _step_in(cfg, a)
            return _rebuild(e, i, new), rule, occ
    if isinstance(e, Var):
        raise MachineError("no step from a variable", kind="stuck")
    new, rule = _fire(cfg, e)
    return new, rule, getattr(e, "occ", None)


def step(cfg: MachineConfig) -> MachineConfig:
    """Perform one transition in place and return the configuration."""
    new, rule, occ = _step_in(cfg, cfg.control)
    cfg.control = new
    cfg.report.steps += 1
    if cfg.trace is not None:
        r = cfg.report
        cfg.trace.append(TraceEntry(rule, occ, len(cfg.store), r.alloc_units, r.dealloc_units))
    return cfg


@dataclass
class RunResult:
    store: Dict[str, Value]
    result: Expr
    report: CostReport
    trace: Optional[List[TraceEntry]] = None

    @property
    def cost(self) -> int:
        return self.report.cost

    def readback(self):
        return readback(self.store, self.result)

    def rules(self) -> List[str]:
        return [t.rule for t in self.trace or []]


def run(
    prog: Program,
    mode: str = "un",
    params: Optional[Mapping[str, int]] = None,
    fuel: int = DEFAULT_FUEL,
    globals_=(),
    trace: bool = False,
) -> RunResult:
    """Evaluate an (annotated) program until its control is a pattern."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode}")
    params = dict(params or {})
    cfg = MachineConfig(
        store=initial_store(prog, params),
        control=prog.main,
        mode=mode,
        params=params,
        globals_=frozenset(globals_),
        trace=[] if trace else None,
    )
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 20000))
    try:
        while not is_terminal(cfg.control):
            if cfg.report.steps >= fuel:
                raise MachineError(f"fuel exhausted after {fuel} steps", kind="fuel")
            step(cfg)
    finally:
        sys.setrecursionlimit(limit)
    return RunResult(cfg.store, cfg.control, cfg.report, cfg.trace)


# --------------------------------------------------------------------------
# readback


@dataclass(frozen=True)
class Arr:
    items: Tuple[int, ...]


def readback(store: Mapping[str, Value], p: Expr):
    """Resolve a terminal pattern through the store into plain data."""
    if isinstance(p, Tup):
        return tuple(readback(store, x) for x in p.items)
    return _read_value(store, p.name, frozenset())


def _read_value(store, x: str, seen):
    if x not in store:
        raise MachineError(f"dangling variable {x}", kind="dangling")
    v = store[x]
    if isinstance(v, Const):
        return Arr(tuple(v.payload)) if v.pre == "array" else v.payload
    if isinstance(v, Closure):
        return "<fun>"
    out = []
    while isinstance(v, ConsCell):
        if x in seen:
            raise MachineError("cyclic list", kind="cyclic")
        seen = seen | {x}
        out.append(_read_value(store, v.head, seen))
        x = v.tail
        if x not in store:
            raise MachineError(f"dangling variable {x}", kind="dangling")
        v = store[x]
    if not isinstance(v, NilCell):
        raise MachineError("malformed list", kind="stuck")
    return out
