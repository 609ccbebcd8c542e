"""Table of base operators: arity, pretype signature, semantics and display.

Polymorphic entries (``id``, ``pi1``, ``pi2``) have ``inputs`` set to
``None``; their pretypes are fixed per occurrence by skeleton inference.
Literals (``0``, ``1``, ...), ``true``/``false`` and run parameters
(``@n``) are 0-ary operators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple

from .errors import MachineError
from .syntax import Const, Value


@dataclass(frozen=True)
class Builtin:
    name: str
    arity: int
    inputs: Optional[Tuple[str, ...]]
    output: Optional[str]
    display: str
    fn: Callable[..., object]


def _arith(f):
    return lambda *vs: f(*(v.payload for v in vs))


def _set(a, i, v):
    if not 0 <= i < len(a):
        raise MachineError(f"array index {i} out of range", kind="stuck")
    return a[:i] + (v,) + a[i + 1 :]


def _get(a, i):
    if not 0 <= i < len(a):
        raise MachineError(f"array index {i} out of range", kind="stuck")
    return a[i]


TABLE: Dict[str, Builtin] = {
    b.name: b
    for b in [
        Builtin("eqz", 1, ("int",), "bool", "== 0", _arith(lambda x: x == 0)),
        Builtin("sub1", 1, ("int",), "int", "-1", _arith(lambda x: x - 1)),
        Builtin("add1", 1, ("int",), "int", "+1", _arith(lambda x: x + 1)),
        Builtin("dbl", 1, ("int",), "int", "*2", _arith(lambda x: 2 * x)),
        Builtin("add", 2, ("int", "int"), "int", "+", _arith(lambda x, y: x + y)),
        Builtin("mul", 2, ("int", "int"), "int", "*", _arith(lambda x, y: x * y)),
        Builtin("eq", 2, ("int", "int"), "bool", "==", _arith(lambda x, y: x == y)),
        Builtin("leq", 2, ("int", "int"), "bool", "<=", _arith(lambda x, y: x <= y)),
        Builtin("get", 2, ("array", "int"), "int", "·[·]", _arith(_get)),
        Builtin("set", 3, ("array", "int", "int"), "array", "·[·<-·]", _arith(_set)),
        Builtin("getd", 3, ("array", "int", "int"), "int", "·[·,·]", _arith(lambda a, i, _k: _get(a, i))),
        Builtin("id", 1, None, None, "id", lambda v: v),
        Builtin("pi1", 2, None, None, "π1", lambda v, _w: v),
        Builtin("pi2", 2, None, None, "π2", lambda _v, w: w),
    ]
}

POLYMORPHIC = frozenset({"id", "pi1", "pi2"})

# index of the input whose value a polymorphic operator returns
POLY_SELECT = {"id": 0, "pi1": 0, "pi2": 1}


def is_literal(name: str) -> bool:
    return name.lstrip("-").isdigit() or name in ("true", "false") or name.startswith("@")


def is_operator_name(name: str) -> bool:
    return name in TABLE or is_literal(name)


def arity(name: str) -> int:
    if is_literal(name):
        return 0
    return TABLE[name].arity


def literal_pretype(name: str) -> str:
    return "bool" if name in ("true", "false") else "int"


def display(name: str) -> str:
    if is_literal(name):
        return name[1:] if name.startswith("@") else name
    return TABLE[name].display


def evaluate(name: str, args: Sequence[Value], params: Mapping[str, int]) -> Value:
    """Apply the semantic function of operator ``name``."""
    if name.startswith("@"):
        key = name[1:]
        if key not in params:
            raise MachineError(f"missing run parameter {key}", kind="param")
        return Const("int", int(params[key]))
    if name in ("true", "false"):
        return Const("bool", name == "true")
    if is_literal(name):
        return Const("int", int(name))
    b = TABLE[name]
    if b.name in POLYMORPHIC:
        return b.fn(*args)
    for v in args:
        if not isinstance(v, Const):
            raise MachineError(f"{name} applied to a non-constant", kind="stuck")
    out = b.fn(*args)
    if b.output == "bool":
        return Const("bool", bool(out))
    if b.output == "array":
        return Const("array", tuple(out))
    return Const("int", int(out))
