"""The bundled case-study corpus.

Each entry ``name`` ships as ``name.l1`` (program), ``name.qlin`` and
``name.qglo`` (linear and global qualification lists), and optionally
``name.imp`` (expected imperative rendering) and ``name.seed`` (global type
context used to seed the globalization search).  ``expected.json`` records
the published classification of every entry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Dict, List, Optional

from .parser import parse_program, parse_quals
from .syntax import Program, QualificationList, Type

NAMES = (
    "fib1",
    "fib2",
    "fib3",
    "fib4",
    "fib5",
    "fact1",
    "fact2",
    "fact3",
    "map1",
    "insl1",
    "mapl1",
    "fact3g",
    "fib5g",
    "case",
)
CLASSIFIED = tuple(n for n in NAMES if n != "case")


def corpus_dir():
    return resources.files("weaklin") / "corpus"


def read_text(filename: str) -> Optional[str]:
    path = corpus_dir() / filename
    return path.read_text() if path.is_file() else None


@dataclass
class Entry:
    name: str
    program: Program
    qlin: QualificationList
    qglo: QualificationList
    expected: Dict[str, object] = field(default_factory=dict)
    golden: Optional[str] = None
    seed: Optional[Dict[str, Type]] = None

    @property
    def list_adjust(self) -> bool:
        return bool(self.expected.get("list_adjust", False))

    @property
    def reconstructed(self) -> bool:
        return bool(self.expected.get("reconstructed", False))

    def source(self, ext: str) -> str:
        text = read_text(f"{self.name}.{ext}")
        if text is None:
            raise FileNotFoundError(f"{self.name}.{ext}")
        return text


@lru_cache(maxsize=1)
def expected_table() -> Dict[str, Dict[str, object]]:
    return json.loads(read_text("expected.json") or "{}")


def load(name: str) -> Entry:
    if name not in NAMES:
        raise KeyError(f"unknown corpus entry {name!r}")
    seed_text = read_text(f"{name}.seed")
    return Entry(
        name=name,
        program=parse_program(read_text(f"{name}.l1")),
        qlin=parse_quals(read_text(f"{name}.qlin"), "linear"),
        qglo=parse_quals(read_text(f"{name}.qglo"), "global"),
        expected=dict(expected_table().get(name, {})),
        golden=read_text(f"{name}.imp"),
        seed=dict(parse_quals(seed_text, "global").ctx) if seed_text else None,
    )


def load_all(names=NAMES) -> List[Entry]:
    return [load(n) for n in names]
