"""Bithoven: a checked high-level language compiling to Bitcoin Script."""

from .codegen import compile
from .diagnostics import Diagnostic, DiagnosticError, Kind, format_diagnostic
from .parser import parse_program
from .pipeline import Options, analyze, check_source, compile_source
from .script import Op, Script, parse_hex, serialize_asm, serialize_hex

__all__ = [
    "Diagnostic",
    "DiagnosticError",
    "Kind",
    "Op",
    "Options",
    "Script",
    "analyze",
    "check_source",
    "compile",
    "compile_source",
    "format_diagnostic",
    "parse_hex",
    "parse_program",
    "serialize_asm",
    "serialize_hex",
]

__version__ = "0.1.0"
