"""Syntactic scan for signature-check anti-patterns and unsafe literals."""

from __future__ import annotations

from typing import Iterator, Optional

from .diagnostics import Diagnostic, Kind, dedupe
from .nodes import (
    Binary,
    BoolLit,
    CheckSig,
    Expression,
    If,
    MultiSig,
    Program,
    Statement,
    StrLit,
    Timelock,
    Unary,
    Var,
    children,
    key_binding,
    literal_bytes,
    statement_exprs,
    walk_expr,
    walk_statements,
)
from .typecheck import MAX_LOCKTIME, check_literal_bounds

MAX_PUSH = 520


def _useless_sig(root: Expression) -> Iterator[Diagnostic]:
    """Yield one diagnostic per checksig, at its innermost enclosing ``!``."""

    def visit(e: Expression, nearest_not: Optional[Unary]) -> Iterator[Diagnostic]:
        if isinstance(e, CheckSig) and nearest_not is not None:
            yield Diagnostic(
                Kind.UselessSig,
                nearest_not.loc,
                f"! makes checksig operation useless: {nearest_not.describe()}.",
            )
        if isinstance(e, Binary) and e.op in ("==", "!="):
            mangling = e.op == "!="  # == false, != true
            for side, other in ((e.lhs, e.rhs), (e.rhs, e.lhs)):
                if isinstance(side, CheckSig) and isinstance(other, BoolLit) and other.value is mangling:
                    yield Diagnostic(
                        Kind.UselessSig,
                        e.loc,
                        f"Comparison against {'true' if mangling else 'false'} makes checksig "
                        f"operation useless: {e.describe()}",
                    )
        inner = e if isinstance(e, Unary) and e.op == "!" else nearest_not
        for c in children(e):
            yield from visit(c, inner)

    yield from visit(root, None)


def _uncertain_sig(stmts: tuple[Statement, ...], bound: frozenset[str], allow: bool) -> Iterator[Diagnostic]:
    for s in stmts:
        for root in statement_exprs(s):
            for e in walk_expr(root):
                if not isinstance(e, CheckSig):
                    continue
                for _, pubkey in e.factor.pairs:
                    if isinstance(pubkey, StrLit):
                        continue
                    if (
                        allow
                        and not isinstance(e.factor, MultiSig)
                        and isinstance(pubkey, Var)
                        and pubkey.name in bound
                    ):
                        continue
                    yield Diagnostic(
                        Kind.TypeMismatch,
                        pubkey.loc,
                        f"Public Key must be from string literal but: {pubkey.describe()}.",
                    )
        if isinstance(s, If):
            yield from _uncertain_sig(s.then, bound, allow)
            yield from _uncertain_sig(s.else_, bound, allow)
        key = key_binding(s)
        if key is not None:
            bound = bound | {key.name}


def run_security_checks(program: Program, *, allow_hash_bound_keys: bool = False) -> list[Diagnostic]:
    found: list[Diagnostic] = []
    for s in walk_statements(program.body):
        for root in statement_exprs(s):
            found.extend(_useless_sig(root))
            for e in walk_expr(root):
                if isinstance(e, StrLit) and len(literal_bytes(e.text)) > MAX_PUSH:
                    found.append(
                        Diagnostic(
                            Kind.InvalidOperation,
                            e.loc,
                            f"String literal exceeds {MAX_PUSH} bytes: {len(literal_bytes(e.text))}",
                        )
                    )
        if isinstance(s, Timelock) and not 0 <= s.n <= MAX_LOCKTIME:
            found.append(
                Diagnostic(Kind.IntegerOverflow, s.loc, f"Locktime must be 32 bit unsigned int: {s.n}")
            )
    found.extend(_uncertain_sig(program.body, frozenset(), allow_hash_bound_keys))
    found.extend(check_literal_bounds(program))
    return dedupe(found)
