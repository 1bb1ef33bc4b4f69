"""Static type checking over the five-type system.

``num | bool | string | sig | pubkey``; the environment is built from the
stack declarations, and every expression, factor and statement is checked
against it.  Literal bounds are checked too, so that nothing the compiler
accepts can trip a consensus limit at run time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .diagnostics import Diagnostic, DiagnosticError, Kind, dedupe, error
from .nodes import (
    COMPARE_BINARY,
    CRYPTO_UNARY,
    LOGICAL_BINARY,
    MATH_BINARY,
    MATH_UNARY,
    Binary,
    BoolLit,
    CheckSig,
    Expression,
    If,
    Location,
    MultiSig,
    NumLit,
    Program,
    Return,
    SigFactor,
    StackDecl,
    Statement,
    StrLit,
    Type,
    Unary,
    Var,
    Verify,
    Timelock,
    walk_expr,
    walk_statements,
    statement_exprs,
)
from .secp256k1 import is_valid_compressed_pubkey

MAX_SCRIPT_INT = 2**31 - 1
MAX_LOCKTIME = 2**32 - 1
COMPARABLE = (Type.NUM, Type.STRING, Type.BOOL)
ORDERING = frozenset({">", ">=", "<", "<="})

_NOWHERE = Location(0, 0, 1, 1)


@dataclass
class TypingEnv:
    bindings: dict[str, Type] = field(default_factory=dict)

    def __contains__(self, name: str) -> bool:
        return name in self.bindings

    def __getitem__(self, name: str) -> Type:
        return self.bindings[name]


def build_env(decls: tuple[StackDecl, ...] | list[StackDecl]) -> TypingEnv:
    env = TypingEnv()
    for decl in decls:
        for p in decl.params:
            known = env.bindings.get(p.name)
            if known is not None and known != p.type:
                raise error(
                    Kind.TypeMismatch,
                    p.loc,
                    f"Variable {p.name} is declared as {known} and {p.type}: {p.describe()}",
                )
            env.bindings[p.name] = p.type
    return env


def validate_pubkey_literal(hex_text: str, loc: Location = _NOWHERE) -> None:
    """Reject anything but a compressed secp256k1 point in hex."""
    if not is_valid_compressed_pubkey(hex_text):
        raise error(Kind.TypeMismatch, loc, f'Public key is malformed: "{hex_text}".')


def _require(expr: Expression, actual: Type, allowed: tuple[Type, ...], message: str) -> None:
    if actual not in allowed:
        raise error(Kind.InvalidOperation, expr.loc, f"{message} but: {expr.describe()}")


def type_of_expr(env: TypingEnv, e: Expression, *, allow_hash_bound_keys: bool = False) -> Type:
    if isinstance(e, NumLit):
        return Type.NUM
    if isinstance(e, BoolLit):
        return Type.BOOL
    if isinstance(e, StrLit):
        return Type.STRING
    if isinstance(e, Var):
        if e.name not in env:
            raise error(Kind.UndefinedVariable, e.loc, f'Undefined variable: "{e.name}".')
        return env[e.name]
    if isinstance(e, CheckSig):
        check_factor(env, e.factor, allow_hash_bound_keys=allow_hash_bound_keys)
        return Type.BOOL

    def sub(x: Expression) -> Type:
        return type_of_expr(env, x, allow_hash_bound_keys=allow_hash_bound_keys)

    if isinstance(e, Unary):
        t = sub(e.operand)
        if e.op in MATH_UNARY:
            _require(e.operand, t, (Type.NUM,), "Operand must be number")
            return Type.NUM
        if e.op == "!":
            _require(e.operand, t, (Type.BOOL,), "Operand must be boolean")
            return Type.BOOL
        if e.op in CRYPTO_UNARY:
            return Type.STRING
        _require(e.operand, t, (Type.STRING,), "Operand must be string")
        return Type.NUM

    assert isinstance(e, Binary)
    lt = sub(e.lhs)
    rt = sub(e.rhs)
    if e.op in MATH_BINARY:
        _require(e.lhs, lt, (Type.NUM,), "Operand must be number or boolean")
        _require(e.rhs, rt, (Type.NUM,), "Operand must be number or boolean")
        return Type.NUM
    if e.op in LOGICAL_BINARY:
        _require(e.lhs, lt, (Type.BOOL,), "Operand must be boolean")
        _require(e.rhs, rt, (Type.BOOL,), "Operand must be boolean")
        return Type.BOOL
    assert e.op in COMPARE_BINARY
    if lt != rt:
        raise error(
            Kind.InvalidOperation,
            e.lhs.loc,
            f"Compare type must be same but: {e.lhs.describe()} to {e.rhs.describe()}",
        )
    _require(e.lhs, lt, COMPARABLE, "Compare type must be number, string or boolean")
    if e.op in ORDERING:
        _require(e.lhs, lt, (Type.NUM,), "Ordering comparison requires number operands")
    return Type.BOOL


def check_factor(env: TypingEnv, f: SigFactor, *, allow_hash_bound_keys: bool = False) -> None:
    if isinstance(f, MultiSig):
        n = len(f.pairs)
        if not 1 <= f.m <= n:
            raise error(
                Kind.TypeMismatch,
                f.m_loc,
                f"Multisig threshold must be between 1 and {n} but: {f.m}",
            )
    for sig, pubkey in f.pairs:
        st = type_of_expr(env, sig)
        if st != Type.SIG:
            raise error(
                Kind.TypeMismatch, sig.loc, f"Signature must be signature type but: {sig.describe()}."
            )
        if isinstance(pubkey, StrLit):
            validate_pubkey_literal(pubkey.text, pubkey.loc)
            continue
        if (
            allow_hash_bound_keys
            and isinstance(f, MultiSig) is False
            and isinstance(pubkey, Var)
            and type_of_expr(env, pubkey) == Type.PUBKEY
        ):
            continue
        raise error(
            Kind.TypeMismatch,
            pubkey.loc,
            f"Public Key must be from string literal but: {pubkey.describe()}.",
        )


def check_statement(env: TypingEnv, s: Statement, *, allow_hash_bound_keys: bool = False) -> None:
    """Raise DiagnosticError listing every problem found in ``s``."""
    opts = {"allow_hash_bound_keys": allow_hash_bound_keys}
    if isinstance(s, Timelock):
        if not 0 <= s.n <= MAX_LOCKTIME:
            raise error(Kind.IntegerOverflow, s.loc, f"Locktime must be 32 bit unsigned int: {s.n}")
        return
    if isinstance(s, Return):
        type_of_expr(env, s.expr, **opts)
        return
    if isinstance(s, Verify):
        t = type_of_expr(env, s.expr, **opts)
        if t != Type.BOOL:
            raise error(
                Kind.TypeMismatch,
                s.expr.loc,
                f"Verify expression must be boolean but: {s.expr.describe()}",
            )
        return

    assert isinstance(s, If)
    found: list[Diagnostic] = []
    try:
        t = type_of_expr(env, s.cond, **opts)
        if t != Type.BOOL:
            raise error(
                Kind.TypeMismatch, s.cond.loc, f"Condition must be boolean but: {s.cond.describe()}"
            )
    except DiagnosticError as exc:
        found.extend(exc.diagnostics)
    for branch in (s.then, s.else_):
        found.extend(_check_block(env, branch, **opts))
    if found:
        raise DiagnosticError(found)


def _check_block(env: TypingEnv, stmts, **opts) -> list[Diagnostic]:
    found = []
    for s in stmts:
        try:
            check_statement(env, s, **opts)
        except DiagnosticError as exc:
            found.extend(exc.diagnostics)
    return found


def _number_literals(program: Program) -> Iterator[NumLit]:
    for s in walk_statements(program.body):
        for root in statement_exprs(s):
            for e in walk_expr(root):
                if isinstance(e, NumLit):
                    yield e


def check_literal_bounds(program: Program) -> list[Diagnostic]:
    return [
        Diagnostic(Kind.IntegerOverflow, lit.loc, f"Number is 32 bit sign magnitude int: {lit.value}")
        for lit in _number_literals(program)
        if abs(lit.value) > MAX_SCRIPT_INT
    ]


def check_program(program: Program, *, allow_hash_bound_keys: bool = False) -> list[Diagnostic]:
    """All type diagnostics for ``program``; an empty list means well-typed."""
    try:
        env = build_env(program.decls)
    except DiagnosticError as exc:
        return exc.diagnostics
    found = _check_block(env, program.body, allow_hash_bound_keys=allow_hash_bound_keys)
    found.extend(check_literal_bounds(program))
    return dedupe(found)


def expression_types(program: Program) -> dict[int, Type]:
    """Static type of every expression node, keyed by ``id(node)``.

    Only meaningful for a program that passed :func:`check_program`.
    """
    env = build_env(program.decls)
    types: dict[int, Type] = {}
    for s in walk_statements(program.body):
        for root in statement_exprs(s):
            for e in walk_expr(root):
                try:
                    types[id(e)] = type_of_expr(env, e, allow_hash_bound_keys=True)
                except DiagnosticError:
                    pass
    return types
