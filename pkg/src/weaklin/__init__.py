"""Weak-linear to imperative pipeline for a small first-order language.

The package checks programs against linear and global qualification lists,
runs them on an abstract machine that counts memory, searches for
qualifications, compares the two signatures and emits imperative code.
"""

from __future__ import annotations

from .analysis import classify, cost, protects_sig, protects_type
from .emit import emit_program, print_imperative
from .globalize import glob_expr, glob_program
from .globaltypes import check_program_global
from .linear import check_program
from .linearize import lin_expr, lin_program, rank
from .machine import run
from .parser import parse_program, parse_quals, print_program, print_quals

__all__ = [
    "check_program",
    "check_program_global",
    "classify",
    "cost",
    "emit_program",
    "glob_expr",
    "glob_program",
    "lin_expr",
    "lin_program",
    "parse_program",
    "parse_quals",
    "print_imperative",
    "print_program",
    "print_quals",
    "protects_sig",
    "protects_type",
    "rank",
    "run",
]

__version__ = "0.1.0"
