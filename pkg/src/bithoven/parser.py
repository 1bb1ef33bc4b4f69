"""Lexer and recursive-descent parser for Bithoven source text."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .diagnostics import DiagnosticError, Kind, error
from .nodes import (
    TARGETS,
    TYPE_KEYWORDS,
    After,
    Binary,
    BoolLit,
    CheckSig,
    Expression,
    If,
    Location,
    MultiSig,
    NumLit,
    Older,
    Pragma,
    Program,
    Return,
    SingleSig,
    StackDecl,
    StackParam,
    Statement,
    StrLit,
    Unary,
    Var,
    Verify,
)

KEYWORDS = frozenset(
    {
        "pragma",
        "if",
        "else",
        "verify",
        "older",
        "after",
        "return",
        "checksig",
        "true",
        "false",
        "max",
        "min",
        "negate",
        "abs",
        "sha256",
        "ripemd160",
        "len",
    }
)

PUNCT = ("&&", "||", "==", "!=", ">=", "<=", "++", "--", "+", "-", ">", "<", "!",
         "(", ")", "{", "}", "[", "]", ",", ";", ":")

_VERSION = re.compile(r"\d+(?:\.\d+)+")
_INTEGER = re.compile(r"\d+")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t"}


@dataclass(frozen=True)
class Token:
    kind: str  # keyword | ident | int | version | string | punct | eof
    lexeme: str
    loc: Location
    value: object = None


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(source)

    def loc(start: int, end: int) -> Location:
        return Location(start, end, line, start - line_start + 1)

    while pos < n:
        ch = source[pos]
        if ch == "\n":
            pos += 1
            line += 1
            line_start = pos
            continue
        if ch.isspace():
            pos += 1
            continue
        if source.startswith("//", pos):
            end = source.find("\n", pos)
            pos = n if end == -1 else end
            continue
        if ch == '"':
            start = pos
            pos += 1
            chars = []
            while True:
                if pos >= n or source[pos] == "\n":
                    raise error(Kind.ParseError, loc(start, pos), "Unterminated string literal")
                c = source[pos]
                if c == '"':
                    pos += 1
                    break
                if c == "\\" and pos + 1 < n and source[pos + 1] in _ESCAPES:
                    chars.append(_ESCAPES[source[pos + 1]])
                    pos += 2
                    continue
                chars.append(c)
                pos += 1
            tokens.append(Token("string", source[start:pos], loc(start, pos), "".join(chars)))
            continue
        if ch.isdigit():
            m = _VERSION.match(source, pos)
            if m:
                tokens.append(Token("version", m.group(), loc(pos, m.end()), m.group()))
            else:
                m = _INTEGER.match(source, pos)
                tokens.append(Token("int", m.group(), loc(pos, m.end()), int(m.group())))
            pos = m.end()
            continue
        m = _IDENT.match(source, pos)
        if m:
            word = m.group()
            kind = "keyword" if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, loc(pos, m.end())))
            pos = m.end()
            continue
        for p in PUNCT:
            if source.startswith(p, pos):
                tokens.append(Token("punct", p, loc(pos, pos + len(p))))
                pos += len(p)
                break
        else:
            raise error(Kind.ParseError, loc(pos, pos + 1), f"Illegal character: {ch!r}")
    tokens.append(Token("eof", "", loc(n, n)))
    return tokens


# binary precedence levels, loosest first
_LEVELS = (
    ("||",),
    ("&&",),
    ("==", "!=", ">", ">=", "<", "<="),
    ("+", "-"),
    ("max", "min"),
)
_UNARY_WORDS = ("!", "negate", "abs", "++", "--", "sha256", "ripemd160", "len")


class Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.pos = 0

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, lexeme: str) -> bool:
        return self.tok.kind in ("keyword", "punct") and self.tok.lexeme == lexeme

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def fail(self, expected: str, tok: Optional[Token] = None) -> DiagnosticError:
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else f'"{tok.lexeme}"'
        return error(Kind.ParseError, tok.loc, f"Unexpected {found}, expected {expected}")

    def expect(self, lexeme: str) -> Token:
        if not self.at(lexeme):
            raise self.fail(f'"{lexeme}"')
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            raise self.fail(what)
        return self.advance()

    def prev_end(self) -> int:
        return self.tokens[self.pos - 1].loc.end

    def span_from(self, start: Location) -> Location:
        return Location(start.start, self.prev_end(), start.line, start.column)

    # -- program -----------------------------------------------------------

    def parse_program(self) -> Program:
        pragmas = []
        while self.at("pragma"):
            pragmas.append(self.parse_pragma())
        self.check_pragmas(pragmas)

        decls = []
        while self.at("("):
            decls.append(self.parse_decl())
        if not decls:
            raise self.fail('a stack declaration "("')

        body_loc = self.tok.loc
        body = self.parse_block()
        if self.tok.kind != "eof":
            raise self.fail("end of input")
        return Program(tuple(pragmas), tuple(decls), body, body_loc)

    def parse_pragma(self) -> Pragma:
        start = self.expect("pragma").loc
        word = self.tok
        if word.kind != "ident" or word.lexeme != "bithoven":
            raise self.fail('"bithoven"')
        self.advance()
        kind = self.tok
        if kind.kind == "ident" and kind.lexeme == "version":
            self.advance()
            value = self.tok
            if value.kind not in ("version", "int"):
                raise self.fail("a version number")
            self.advance()
        elif kind.kind == "ident" and kind.lexeme == "target":
            self.advance()
            value = self.expect_kind("ident", "a compilation target")
            if value.lexeme not in TARGETS:
                raise error(
                    Kind.PragmaError,
                    value.loc,
                    f"Unknown target: {value.lexeme}. Expected one of {', '.join(TARGETS)}",
                )
        else:
            raise self.fail('"version" or "target"')
        self.expect(";")
        return Pragma(kind.lexeme, value.lexeme, self.span_from(start))

    def check_pragmas(self, pragmas: list[Pragma]) -> None:
        for kind in ("version", "target"):
            found = [p for p in pragmas if p.kind == kind]
            if not found:
                raise error(Kind.PragmaError, self.tok.loc, f"Missing {kind} pragma")
            if len(found) > 1:
                raise error(Kind.PragmaError, found[1].loc, f"Duplicate {kind} pragma")

    def parse_decl(self) -> StackDecl:
        start = self.expect("(").loc
        params = [self.parse_param()]
        while self.at(","):
            self.advance()
            params.append(self.parse_param())
        self.expect(")")
        seen = set()
        for p in params:
            if p.name in seen:
                raise error(Kind.ParseError, p.loc, f"Duplicate stack parameter: {p.name}")
            seen.add(p.name)
        return StackDecl(tuple(params), self.span_from(start))

    def parse_param(self) -> StackParam:
        name = self.expect_kind("ident", "a parameter name")
        self.expect(":")
        ty = self.tok
        if ty.kind != "ident" or ty.lexeme not in TYPE_KEYWORDS:
            raise self.fail("a type (" + ", ".join(TYPE_KEYWORDS) + ")")
        self.advance()
        return StackParam(name.lexeme, TYPE_KEYWORDS[ty.lexeme], self.span_from(name.loc))

    # -- statements --------------------------------------------------------

    def parse_block(self) -> tuple[Statement, ...]:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.fail('"}"')
            stmts.append(self.parse_statement())
        self.advance()
        return tuple(stmts)

    def parse_statement(self) -> Statement:
        start = self.tok.loc
        if self.at("if"):
            self.advance()
            cond = self.parse_expr()
            then = self.parse_block()
            else_: tuple[Statement, ...] = ()
            if self.at("else"):
                self.advance()
                else_ = self.parse_block()
            return If(cond, then, else_, self.span_from(start))
        if self.at("verify"):
            self.advance()
            expr = self.parse_expr()
            self.expect(";")
            return Verify(expr, self.span_from(start))
        if self.at("return"):
            self.advance()
            expr = self.parse_expr()
            self.expect(";")
            return Return(expr, self.span_from(start))
        if self.at("older") or self.at("after"):
            op = self.advance().lexeme
            n = self.expect_kind("int", "a non-negative integer")
            self.expect(";")
            cls = Older if op == "older" else After
            return cls(n.value, self.span_from(start))
        raise self.fail("a statement")

    # -- expressions -------------------------------------------------------

    def parse_expr(self, level: int = 0) -> Expression:
        if level == len(_LEVELS):
            return self.parse_unary()
        lhs = self.parse_expr(level + 1)
        ops = _LEVELS[level]
        while self.tok.kind in ("punct", "keyword") and self.tok.lexeme in ops:
            op = self.advance().lexeme
            rhs = self.parse_expr(level + 1)
            lhs = Binary(op, lhs, rhs, lhs.loc.span(rhs.loc))
        return lhs

    def parse_unary(self) -> Expression:
        tok = self.tok
        if tok.kind in ("punct", "keyword") and tok.lexeme in _UNARY_WORDS:
            self.advance()
            operand = self.parse_unary()
            return Unary(tok.lexeme, operand, tok.loc.span(operand.loc))
        return self.parse_primary()

    def parse_primary(self) -> Expression:
        tok = self.tok
        if tok.kind == "int":
            self.advance()
            return NumLit(tok.value, tok.loc)
        if self.at("-") and self.peek().kind == "int":
            self.advance()
            num = self.advance()
            return NumLit(-num.value, tok.loc.span(num.loc))
        if self.at("true") or self.at("false"):
            self.advance()
            return BoolLit(tok.lexeme == "true", tok.loc)
        if tok.kind == "string":
            self.advance()
            return StrLit(tok.value, tok.loc)
        if tok.kind == "ident":
            self.advance()
            return Var(tok.lexeme, tok.loc)
        if self.at("("):
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if self.at("checksig"):
            self.advance()
            factor = self.parse_factor()
            return CheckSig(factor, tok.loc.span(factor.loc))
        raise self.fail("an expression")

    def parse_factor(self):
        start = self.expect("(").loc
        if self.tok.kind == "int" and self.peek().lexeme == "," and self.peek(2).lexeme == "[":
            m = self.advance()
            self.expect(",")
            self.expect("[")
            pairs = [self.parse_pair()]
            while self.at(","):
                self.advance()
                pairs.append(self.parse_pair())
            self.expect("]")
            self.expect(")")
            return MultiSig(m.value, tuple(pairs), self.span_from(start), m.loc)
        sig, pubkey = self.parse_pair_body()
        self.expect(")")
        return SingleSig(sig, pubkey, self.span_from(start))

    def parse_pair(self):
        self.expect("(")
        pair = self.parse_pair_body()
        self.expect(")")
        return pair

    def parse_pair_body(self):
        sig = self.parse_expr()
        self.expect(",")
        pubkey = self.parse_expr()
        return sig, pubkey


def parse_program(source: str) -> Program:
    """Parse source text; raises DiagnosticError on malformed input."""
    return Parser(source).parse_program()

