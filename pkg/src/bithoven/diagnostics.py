"""Diagnostics: the single failure channel of every compiler pass."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

from .nodes import Location


class Kind(enum.Enum):
    InvalidOperation = "InvalidOperation"
    TypeMismatch = "TypeMismatch"
    IntegerOverflow = "IntegerOverflow"
    UndefinedVariable = "UndefinedVariable"
    VariableConsumed = "VariableConsumed"
    UselessSig = "UselessSig"
    NoSigRequired = "NoSigRequired"
    NoReturn = "NoReturn"
    UnreachableCode = "UnreachableCode"
    # plumbing kinds, not part of the defect catalogue
    ParseError = "ParseError"
    UnmatchedStackPath = "UnmatchedStackPath"
    PragmaError = "PragmaError"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Diagnostic:
    kind: Kind
    location: Location
    message: str

    def __str__(self) -> str:
        return format_diagnostic(self)

    def to_dict(self) -> dict:
        loc = self.location
        return {
            "kind": self.kind.value,
            "line": loc.line,
            "column": loc.column,
            "start": loc.start,
            "end": loc.end,
            "message": self.message,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Diagnostic":
        loc = Location(data["start"], data["end"], data["line"], data["column"])
        return cls(Kind(data["kind"]), loc, data["message"])


def format_diagnostic(d: Diagnostic) -> str:
    loc = d.location
    return f'Error at line {loc.line}:{loc.column}: {d.kind.value}("{d.message}")'


class DiagnosticError(Exception):
    """Raised by passes that stop at the first problem they find."""

    def __init__(self, diagnostics: Diagnostic | Iterable[Diagnostic]):
        if isinstance(diagnostics, Diagnostic):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(format_diagnostic(d) for d in self.diagnostics))


def error(kind: Kind, loc: Location, message: str) -> DiagnosticError:
    return DiagnosticError(Diagnostic(kind, loc, message))


def dedupe(diagnostics: Iterable[Diagnostic]) -> list[Diagnostic]:
    """Drop repeated (kind, location) pairs and sort into source order."""
    seen = set()
    out = []
    for d in diagnostics:
        key = (d.kind, d.location)
        if key in seen:
            continue
        seen.add(key)
        out.append(d)
    out.sort(key=lambda d: (d.location.start, d.location.end))
    return out
