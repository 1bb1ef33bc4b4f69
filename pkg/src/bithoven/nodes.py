"""Located syntax tree for Bithoven programs.

Every node carries a :class:`Location`.  Nodes are frozen dataclasses, so a
parsed program can be shared freely between analysis passes.  The
``describe()`` methods render nodes the way diagnostics quote them.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterator, Optional, Union


@dataclass(frozen=True)
class Location:
    start: int  # byte offset, inclusive
    end: int  # byte offset, exclusive
    line: int
    column: int

    def __str__(self) -> str:
        return (
            f"Location {{ start: {self.start}, end: {self.end}, "
            f"line: {self.line}, column: {self.column} }}"
        )

    def span(self, other: "Location") -> "Location":
        """Location covering ``self`` through ``other``."""
        return Location(self.start, other.end, self.line, self.column)


class Type(enum.Enum):
    NUM = "num"
    BOOL = "bool"
    STRING = "string"
    SIG = "sig"
    PUBKEY = "pubkey"

    def __str__(self) -> str:
        return self.value

    @property
    def debug_name(self) -> str:
        return _TYPE_DEBUG_NAMES[self]


# concrete type keywords accepted in stack declarations
TYPE_KEYWORDS = {
    "number": Type.NUM,
    "bool": Type.BOOL,
    "string": Type.STRING,
    "signature": Type.SIG,
    "pubkey": Type.PUBKEY,
}

_TYPE_DEBUG_NAMES = {
    Type.NUM: "Number",
    Type.BOOL: "Boolean",
    Type.STRING: "String",
    Type.SIG: "Signature",
    Type.PUBKEY: "PublicKey",
}

TARGETS = ("legacy", "segwit", "taproot")

_HEX = re.compile(r"[0-9a-fA-F]*")


# ---------------------------------------------------------------------------
# operators

MATH_BINARY = frozenset({"+", "-", "max", "min"})
COMPARE_BINARY = frozenset({"==", "!=", ">", ">=", "<", "<="})
LOGICAL_BINARY = frozenset({"&&", "||"})
BINARY_OPS = MATH_BINARY | COMPARE_BINARY | LOGICAL_BINARY

MATH_UNARY = frozenset({"negate", "abs", "++", "--"})
LOGICAL_UNARY = frozenset({"!"})
CRYPTO_UNARY = frozenset({"sha256", "ripemd160"})
BYTE_UNARY = frozenset({"len"})
UNARY_OPS = MATH_UNARY | LOGICAL_UNARY | CRYPTO_UNARY | BYTE_UNARY

_OP_DEBUG_NAMES = {
    "+": "Add",
    "-": "Sub",
    "max": "Max",
    "min": "Min",
    "==": "Equal",
    "!=": "NotEqual",
    ">": "GreaterThan",
    ">=": "GreaterThanOrEqual",
    "<": "LessThan",
    "<=": "LessThanOrEqual",
    "&&": "BoolAnd",
    "||": "BoolOr",
    "negate": "Negate",
    "abs": "Abs",
    "++": "Add1",
    "--": "Sub1",
    "!": "Not",
    "sha256": "Sha256",
    "ripemd160": "Ripemd160",
    "len": "Size",
}


# ---------------------------------------------------------------------------
# program structure


@dataclass(frozen=True)
class Pragma:
    kind: str  # "version" | "target"
    value: str
    loc: Location


@dataclass(frozen=True)
class StackParam:
    name: str
    type: Type
    loc: Location

    def describe(self) -> str:
        return (
            f"StackParam {{ loc: {self.loc}, identifier: Identifier({self.name}), "
            f"ty: {self.type.debug_name} }}"
        )


@dataclass(frozen=True)
class StackDecl:
    params: tuple[StackParam, ...]
    loc: Location

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    def describe(self) -> str:
        return "[" + ", ".join(p.describe() for p in self.params) + "]"


# ---------------------------------------------------------------------------
# expressions


@dataclass(frozen=True)
class NumLit:
    value: int
    loc: Location

    def describe(self) -> str:
        return f"NumberLiteral({self.loc}, {self.value})"


@dataclass(frozen=True)
class BoolLit:
    value: bool
    loc: Location

    def describe(self) -> str:
        return f"BooleanLiteral({self.loc}, {'true' if self.value else 'false'})"


@dataclass(frozen=True)
class StrLit:
    text: str
    loc: Location

    def describe(self) -> str:
        return f'StringLiteral({self.loc}, "{self.text}")'


@dataclass(frozen=True)
class Var:
    name: str
    loc: Location

    def describe(self) -> str:
        return f'Variable({self.loc}, Identifier("{self.name}"))'


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expression"
    rhs: "Expression"
    loc: Location

    def describe(self) -> str:
        return (
            f"BinaryExpression {{ loc: {self.loc}, lhs: {self.lhs.describe()}, "
            f"rhs: {self.rhs.describe()}, op: {_OP_DEBUG_NAMES[self.op]} }}"
        )


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expression"
    loc: Location

    def describe(self) -> str:
        return (
            f"UnaryMathExpression {{ loc: {self.loc}, operand: {self.operand.describe()}, "
            f"op: {_OP_DEBUG_NAMES[self.op]} }}"
        )


@dataclass(frozen=True)
class SingleSig:
    sig: "Expression"
    pubkey: "Expression"
    loc: Location

    def describe(self) -> str:
        return (
            f"SingleSigFactor {{ loc: {self.loc}, sig: {self.sig.describe()}, "
            f"pubkey: {self.pubkey.describe()} }}"
        )

    @property
    def pairs(self) -> tuple[tuple["Expression", "Expression"], ...]:
        return ((self.sig, self.pubkey),)


@dataclass(frozen=True)
class MultiSig:
    m: int
    pairs: tuple[tuple["Expression", "Expression"], ...]
    loc: Location
    m_loc: Location

    def describe(self) -> str:
        inner = ", ".join(f"({s.describe()}, {p.describe()})" for s, p in self.pairs)
        return f"MultiSigFactor {{ loc: {self.loc}, m: {self.m}, pairs: [{inner}] }}"


SigFactor = Union[SingleSig, MultiSig]


@dataclass(frozen=True)
class CheckSig:
    factor: SigFactor
    loc: Location

    def describe(self) -> str:
        return (
            f"CheckSigExpression {{ loc: {self.loc}, operand: {self.factor.describe()}, "
            f"op: CheckSig }}"
        )


Expression = Union[NumLit, BoolLit, StrLit, Var, Binary, Unary, CheckSig]


# ---------------------------------------------------------------------------
# statements


@dataclass(frozen=True)
class If:
    cond: Expression
    then: tuple["Statement", ...]
    else_: tuple["Statement", ...]
    loc: Location

    def describe(self) -> str:
        return f"IfStatement {{ loc: {self.loc}, condition: {self.cond.describe()} }}"


@dataclass(frozen=True)
class Verify:
    expr: Expression
    loc: Location

    def describe(self) -> str:
        return f"VerifyStatement {{ loc: {self.loc}, operand: {self.expr.describe()} }}"


@dataclass(frozen=True)
class Older:
    n: int
    loc: Location

    def describe(self) -> str:
        return f"LocktimeStatement {{ loc: {self.loc}, operand: {self.n}, op: Csv }}"


@dataclass(frozen=True)
class After:
    n: int
    loc: Location

    def describe(self) -> str:
        return f"LocktimeStatement {{ loc: {self.loc}, operand: {self.n}, op: Cltv }}"


@dataclass(frozen=True)
class Return:
    expr: Expression
    loc: Location

    def describe(self) -> str:
        return f"ExpressionStatement {{ loc: {self.loc}, operand: {self.expr.describe()} }}"


Statement = Union[If, Verify, Older, After, Return]
Timelock = (Older, After)


@dataclass(frozen=True)
class Program:
    pragmas: tuple[Pragma, ...]
    decls: tuple[StackDecl, ...]
    body: tuple[Statement, ...]
    body_loc: Location

    def _pragma(self, kind: str) -> Optional[str]:
        for p in self.pragmas:
            if p.kind == kind:
                return p.value
        return None

    @property
    def version(self) -> Optional[str]:
        return self._pragma("version")

    @property
    def target(self) -> str:
        return self._pragma("target") or "segwit"


# ---------------------------------------------------------------------------
# traversal helpers


def children(expr: Expression) -> tuple[Expression, ...]:
    """Direct sub-expressions in evaluation order."""
    if isinstance(expr, Binary):
        return (expr.lhs, expr.rhs)
    if isinstance(expr, Unary):
        return (expr.operand,)
    if isinstance(expr, CheckSig):
        return tuple(e for pair in expr.factor.pairs for e in pair)
    return ()


def walk_expr(expr: Expression) -> Iterator[Expression]:
    """Pre-order walk of an expression tree."""
    yield expr
    for child in children(expr):
        yield from walk_expr(child)


def variables(expr: Expression) -> list[Var]:
    """Variable references in the order they are consumed at run time."""
    return [e for e in walk_expr(expr) if isinstance(e, Var)]


def statement_exprs(stmt: Statement) -> tuple[Expression, ...]:
    if isinstance(stmt, If):
        return (stmt.cond,)
    if isinstance(stmt, (Verify, Return)):
        return (stmt.expr,)
    return ()


def walk_statements(stmts: tuple[Statement, ...]) -> Iterator[Statement]:
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from walk_statements(s.then)
            yield from walk_statements(s.else_)


def terminates(stmts: tuple[Statement, ...]) -> bool:
    """True when every path through ``stmts`` ends in a return."""
    for s in stmts:
        if isinstance(s, Return):
            return True
        if isinstance(s, If) and terminates(s.then) and terminates(s.else_):
            return True
    return False


def literal_bytes(text: str) -> bytes:
    """Bytes a string literal denotes on the stack.

    Even-length hex text is decoded; anything else is taken as UTF-8.
    """
    if len(text) % 2 == 0 and _HEX.fullmatch(text):
        return bytes.fromhex(text)
    return text.encode("utf-8")


def key_binding(stmt: Statement) -> Optional[Var]:
    """The key variable of a ``verify H(k) == "<hex>";`` statement, if any.

    ``H`` is a non-empty chain of sha256/ripemd160.  Such a statement binds a
    spender-supplied public key to a committed hash.
    """
    if not isinstance(stmt, Verify):
        return None
    e = stmt.expr
    if not (isinstance(e, Binary) and e.op == "=="):
        return None
    for hashed, other in ((e.lhs, e.rhs), (e.rhs, e.lhs)):
        if not isinstance(other, StrLit) or not isinstance(hashed, Unary):
            continue
        inner = hashed
        while isinstance(inner, Unary) and inner.op in CRYPTO_UNARY:
            inner = inner.operand
        if isinstance(inner, Var):
            return inner
    return None


def peek_sites(program: Program) -> frozenset[int]:
    """Offsets of pubkey-typed key-binding references, read without consuming."""
    keys = {p.name for d in program.decls for p in d.params if p.type is Type.PUBKEY}
    return frozenset(
        v.loc.start
        for s in walk_statements(program.body)
        if (v := key_binding(s)) is not None and v.name in keys
    )
