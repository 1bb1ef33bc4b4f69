"""Front-to-back driver: parse, analyze, compile."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .cfg import build_cfg, check_control_flow
from .codegen import compile as compile_program
from .diagnostics import Diagnostic, DiagnosticError, dedupe
from .liveness import check_liveness
from .nodes import Program
from .parser import parse_program
from .script import Script
from .security import run_security_checks
from .typecheck import check_program


@dataclass(frozen=True)
class Options:
    allow_hash_bound_keys: bool = False
    peephole: bool = True


def _stages(opts: Options) -> list[Callable[[Program], list[Diagnostic]]]:
    flag = {"allow_hash_bound_keys": opts.allow_hash_bound_keys}
    return [
        lambda p: check_program(p, **flag),
        lambda p: check_liveness(p, **flag),
        lambda p: run_security_checks(p, **flag),
        lambda p: check_control_flow(build_cfg(p), p),
    ]


def analyze(program: Program, opts: Options = Options()) -> list[Diagnostic]:
    """Run the analysis passes in order and stop at the first one that complains.

    Later passes assume what earlier ones establish (names resolve, types
    agree, paths match a declaration), so their findings on a program that
    failed an earlier pass would mostly be echoes.
    """
    for stage in _stages(opts):
        found = stage(program)
        if found:
            return dedupe(found)
    return []


def check_source(source: str, opts: Options = Options()) -> tuple[Optional[Program], list[Diagnostic]]:
    try:
        program = parse_program(source)
    except DiagnosticError as exc:
        return None, exc.diagnostics
    return program, analyze(program, opts)


def compile_source(source: str, target: Optional[str] = None, opts: Options = Options()) -> Script:
    """Parse, analyze and lower ``source``; raises DiagnosticError if anything is wrong."""
    program, found = check_source(source, opts)
    if found:
        raise DiagnosticError(found)
    return compile_program(
        program,
        target,
        peephole_opt=opts.peephole,
        allow_hash_bound_keys=opts.allow_hash_bound_keys,
    )
