"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations

from typing import Optional


class L1Error(Exception):
    """Base class for all errors raised by weaklin."""


class SubstitutionError(L1Error):
    pass


class FlattenError(L1Error):
    pass


class AlignmentError(L1Error):
    """A qualification list does not line up with a program's occurrences."""


class ParseError(L1Error):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class TypeCheckError(L1Error):
    """Raised by both checkers; carries the rule name and occurrence id."""

    def __init__(self, message: str, rule: str = "", occ: Optional[int] = None):
        where = f" [rule {rule}]" if rule else ""
        if occ is not None:
            where += f" [occ {occ}]"
        super().__init__(message + where)
        self.rule = rule
        self.occ = occ


class LinearTypeError(TypeCheckError):
    pass


class GlobalTypeError(TypeCheckError):
    pass


class MachineError(L1Error):
    """Stuck configuration, dangling variable, double free or fuel exhaustion."""

    def __init__(self, message: str, kind: str = "stuck"):
        super().__init__(message)
        self.kind = kind
