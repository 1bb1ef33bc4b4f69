"""Reference interpreter for Bithoven programs.

Values carry a runtime type tag so that a test harness can watch every
intermediate result.  Stack parameters are bound lazily: a variable
reference takes the witness item at the position the liveness pass assigned
to it, which mirrors how compiled code rolls items off the stack.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

from ..liveness import analyze_liveness, variable_positions
from ..nodes import (
    After,
    Binary,
    BoolLit,
    CheckSig,
    Expression,
    If,
    MultiSig,
    NumLit,
    Older,
    Program,
    Return,
    Statement,
    StrLit,
    Type,
    Unary,
    Var,
    Verify,
    literal_bytes,
    peek_sites,
)
from ..typecheck import MAX_SCRIPT_INT, build_env
from .context import ExecContext, ExecResult, cast_to_bool
from .hashes import ripemd160, sha256
from .scriptnum import ScriptNumError, num_decode, num_encode

Payload = Union[int, bool, bytes]


@dataclass(frozen=True)
class Value:
    type: Type
    payload: Payload

    def to_bytes(self) -> bytes:
        if self.type is Type.NUM:
            return num_encode(self.payload)
        if self.type is Type.BOOL:
            return b"\x01" if self.payload else b""
        return self.payload


class RuntimeTypeFault(Exception):
    """An operator received a value of the wrong runtime type."""


class _Abort(Exception):
    pass


class _Returned(Exception):
    def __init__(self, value: Value):
        self.value = value


Observer = Callable[[Expression, Value], None]


class _Interpreter:
    def __init__(self, program: Program, ctx: ExecContext, allow_hash_bound_keys: bool, observer):
        self.program = program
        self.ctx = ctx
        self.observer = observer
        self.env = build_env(program.decls)
        paths = analyze_liveness(program, allow_hash_bound_keys=allow_hash_bound_keys)
        self.positions = variable_positions(program, paths)
        self.peeks = peek_sites(program) if allow_hash_bound_keys else frozenset()
        self.remaining = list(reversed(ctx.witness))  # top first
        self.path: list[tuple[int, bool]] = []

    # -- values ------------------------------------------------------------

    def expect(self, v: Value, ty: Type, what: str) -> Payload:
        if v.type is not ty:
            raise RuntimeTypeFault(f"{what} expects {ty}, got {v.type}")
        return v.payload

    def num(self, v: Value, what: str) -> int:
        n = self.expect(v, Type.NUM, what)
        if abs(n) > MAX_SCRIPT_INT:
            raise _Abort(f"numeric operand out of range: {n}")
        return n

    def bind(self, v: Var) -> Value:
        idx = self.positions[v.loc.start]
        if idx >= len(self.remaining):
            raise _Abort(f"no witness item for {v.name}")
        raw = self.remaining[idx] if v.loc.start in self.peeks else self.remaining.pop(idx)
        ty = self.env[v.name]
        if ty is Type.NUM:
            try:
                return Value(ty, num_decode(raw))
            except ScriptNumError as exc:
                raise _Abort(f"{v.name}: {exc}") from None
        if ty is Type.BOOL:
            if raw not in (b"", b"\x01"):
                raise _Abort(f"{v.name}: boolean witness must be empty or 0x01")
            return Value(ty, raw == b"\x01")
        return Value(ty, bytes(raw))

    # -- expressions -------------------------------------------------------

    def eval(self, e: Expression) -> Value:
        v = self._eval(e)
        if self.observer is not None:
            self.observer(e, v)
        return v

    def _eval(self, e: Expression) -> Value:
        if isinstance(e, NumLit):
            return Value(Type.NUM, e.value)
        if isinstance(e, BoolLit):
            return Value(Type.BOOL, e.value)
        if isinstance(e, StrLit):
            return Value(Type.STRING, literal_bytes(e.text))
        if isinstance(e, Var):
            return self.bind(e)
        if isinstance(e, CheckSig):
            return self.checksig(e)
        if isinstance(e, Unary):
            return self.unary(e.op, self.eval(e.operand))
        assert isinstance(e, Binary)
        return self.binary(e.op, self.eval(e.lhs), self.eval(e.rhs))

    def unary(self, op: str, a: Value) -> Value:
        if op == "!":
            return Value(Type.BOOL, not self.expect(a, Type.BOOL, op))
        if op in ("sha256", "ripemd160"):
            digest = sha256 if op == "sha256" else ripemd160
            return Value(Type.STRING, digest(a.to_bytes()))
        if op == "len":
            return Value(Type.NUM, len(self.expect(a, Type.STRING, op)))
        n = self.num(a, op)
        result = {"negate": -n, "abs": abs(n), "++": n + 1, "--": n - 1}[op]
        return Value(Type.NUM, result)

    def binary(self, op: str, a: Value, b: Value) -> Value:
        if op in ("&&", "||"):
            x = self.expect(a, Type.BOOL, op)
            y = self.expect(b, Type.BOOL, op)
            return Value(Type.BOOL, (x and y) if op == "&&" else (x or y))
        if op in ("==", "!="):
            if a.type is not b.type:
                raise RuntimeTypeFault(f"{op} on {a.type} and {b.type}")
            if a.type is Type.NUM:
                same = self.num(a, op) == self.num(b, op)
            elif a.type is Type.BOOL:
                same = a.payload == b.payload
            elif a.type is Type.STRING:
                same = a.payload == b.payload
            else:
                raise RuntimeTypeFault(f"{op} on {a.type}")
            return Value(Type.BOOL, same if op == "==" else not same)
        x, y = self.num(a, op), self.num(b, op)
        table = {
            "+": lambda: Value(Type.NUM, x + y),
            "-": lambda: Value(Type.NUM, x - y),
            "max": lambda: Value(Type.NUM, max(x, y)),
            "min": lambda: Value(Type.NUM, min(x, y)),
            ">": lambda: Value(Type.BOOL, x > y),
            ">=": lambda: Value(Type.BOOL, x >= y),
            "<": lambda: Value(Type.BOOL, x < y),
            "<=": lambda: Value(Type.BOOL, x <= y),
        }
        return table[op]()

    def checksig(self, e: CheckSig) -> Value:
        f = e.factor
        hits = 0
        for sig_e, pk_e in f.pairs:
            sig = self.expect(self.eval(sig_e), Type.SIG, "checksig")
            pk = self.eval(pk_e)
            if pk.type not in (Type.STRING, Type.PUBKEY):
                raise RuntimeTypeFault(f"checksig key of type {pk.type}")
            hits += self.ctx.signature_valid(sig, pk.payload)
        need = f.m if isinstance(f, MultiSig) else 1
        return Value(Type.BOOL, hits == need)

    # -- statements --------------------------------------------------------

    def run_block(self, stmts: tuple[Statement, ...]) -> None:
        for s in stmts:
            self.run_statement(s)

    def run_statement(self, s: Statement) -> None:
        if isinstance(s, Return):
            raise _Returned(self.eval(s.expr))
        if isinstance(s, Verify):
            if not self.expect(self.eval(s.expr), Type.BOOL, "verify"):
                raise _Abort("verify failed")
        elif isinstance(s, Older):
            if self.ctx.sequence < s.n:
                raise _Abort("relative timelock not satisfied")
        elif isinstance(s, After):
            if self.ctx.locktime < s.n:
                raise _Abort("absolute timelock not satisfied")
        else:
            assert isinstance(s, If)
            taken = bool(self.expect(self.eval(s.cond), Type.BOOL, "if"))
            self.path.append((s.loc.start, taken))
            self.run_block(s.then if taken else s.else_)


def exec_bithoven(
    program: Program,
    ctx: ExecContext,
    target: Optional[str] = None,
    *,
    allow_hash_bound_keys: bool = False,
    observer: Optional[Observer] = None,
) -> ExecResult:
    """Run ``program`` directly under ``ctx``.

    ``target`` only selects the success rule: segwit and taproot require a
    single item left on the stack.
    """
    target = target or program.target
    if len(ctx.witness) not in {len(d.params) for d in program.decls}:
        return ExecResult.failure("witness arity matches no stack declaration")
    interp = _Interpreter(program, ctx, allow_hash_bound_keys, observer)
    try:
        interp.run_block(program.body)
    except _Abort as exc:
        return ExecResult.failure(str(exc), tuple(interp.path))
    except _Returned as ret:
        final = tuple(reversed(interp.remaining)) + (ret.value.to_bytes(),)
        path = tuple(interp.path)
        if not cast_to_bool(final[-1]):
            return ExecResult.failure("false final value", path)
        if target != "legacy" and len(final) != 1:
            return ExecResult.failure("clean stack rule violated", path)
        return ExecResult(True, final, path=path)
    return ExecResult.failure("no return statement reached", tuple(interp.path))
