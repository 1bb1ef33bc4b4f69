"""Stack machine for the Script subset the compiler emits."""

from __future__ import annotations

from ..script import Op, Script
from .context import ExecContext, ExecResult, cast_to_bool
from .hashes import hash160, hash256, ripemd160, sha256
from .scriptnum import ScriptNumError, num_decode, num_encode

MAX_STACK = 1000
MAX_MULTISIG_KEYS = 20

TRUE = b"\x01"
FALSE = b""


class ScriptFailure(Exception):
    pass


_UNARY_NUM = {
    Op.OP_1ADD: lambda a: a + 1,
    Op.OP_1SUB: lambda a: a - 1,
    Op.OP_NEGATE: lambda a: -a,
    Op.OP_ABS: abs,
    Op.OP_NOT: lambda a: int(a == 0),
}

_BINARY_NUM = {
    Op.OP_ADD: lambda a, b: a + b,
    Op.OP_SUB: lambda a, b: a - b,
    Op.OP_BOOLAND: lambda a, b: int(a != 0 and b != 0),
    Op.OP_BOOLOR: lambda a, b: int(a != 0 or b != 0),
    Op.OP_NUMEQUAL: lambda a, b: int(a == b),
    Op.OP_NUMNOTEQUAL: lambda a, b: int(a != b),
    Op.OP_LESSTHAN: lambda a, b: int(a < b),
    Op.OP_GREATERTHAN: lambda a, b: int(a > b),
    Op.OP_LESSTHANOREQUAL: lambda a, b: int(a <= b),
    Op.OP_GREATERTHANOREQUAL: lambda a, b: int(a >= b),
    Op.OP_MIN: min,
    Op.OP_MAX: max,
}

_HASHES = {
    Op.OP_SHA256: sha256,
    Op.OP_RIPEMD160: ripemd160,
    Op.OP_HASH256: hash256,
    Op.OP_HASH160: hash160,
}


class _Machine:
    def __init__(self, script: Script, ctx: ExecContext):
        self.script = script
        self.ctx = ctx
        self.stack: list[bytes] = list(ctx.witness)
        self.alt: list[bytes] = []
        self.exec_stack: list[bool] = []
        self.segwit_rules = script.target in ("segwit", "taproot")

    def pop(self) -> bytes:
        if not self.stack:
            raise ScriptFailure("stack underflow")
        return self.stack.pop()

    def pop_num(self, max_size: int = 4) -> int:
        try:
            return num_decode(self.pop(), max_size)
        except ScriptNumError as exc:
            raise ScriptFailure(str(exc)) from None

    def push(self, value: bytes) -> None:
        self.stack.append(value)
        if len(self.stack) + len(self.alt) > MAX_STACK:
            raise ScriptFailure("stack size limit")

    def run(self) -> None:
        for op in self.script.ops:
            executing = all(self.exec_stack)
            if isinstance(op, bytes):
                if executing:
                    self.push(op)
                continue
            if op in (Op.OP_IF, Op.OP_ELSE, Op.OP_ENDIF):
                self.conditional(op, executing)
            elif executing:
                self.step(op)
        if self.exec_stack:
            raise ScriptFailure("unbalanced conditional")

    def conditional(self, op: Op, executing: bool) -> None:
        if op == Op.OP_IF:
            taken = False
            if executing:
                top = self.pop()
                if self.segwit_rules and top not in (FALSE, TRUE):
                    raise ScriptFailure("OP_IF argument must be minimal")
                taken = cast_to_bool(top)
            self.exec_stack.append(taken)
            return
        if not self.exec_stack:
            raise ScriptFailure(f"{op.name} without OP_IF")
        if op == Op.OP_ELSE:
            self.exec_stack[-1] = not self.exec_stack[-1]
        else:
            self.exec_stack.pop()

    def step(self, op: Op) -> None:
        small = op.small_value()
        if small is not None:
            self.push(num_encode(small))
        elif op in _UNARY_NUM:
            self.push(num_encode(_UNARY_NUM[op](self.pop_num())))
        elif op in _BINARY_NUM:
            b = self.pop_num()
            a = self.pop_num()
            self.push(num_encode(_BINARY_NUM[op](a, b)))
        elif op in _HASHES:
            self.push(_HASHES[op](self.pop()))
        elif op == Op.OP_VERIFY:
            if not cast_to_bool(self.pop()):
                raise ScriptFailure("OP_VERIFY failed")
        elif op == Op.OP_DROP:
            self.pop()
        elif op == Op.OP_SWAP:
            b, a = self.pop(), self.pop()
            self.push(b)
            self.push(a)
        elif op in (Op.OP_PICK, Op.OP_ROLL):
            n = self.pop_num()
            if not 0 <= n < len(self.stack):
                raise ScriptFailure(f"{op.name} index out of range")
            item = self.stack[-1 - n]
            if op == Op.OP_ROLL:
                del self.stack[-1 - n]
            self.push(item)
        elif op == Op.OP_TOALTSTACK:
            self.alt.append(self.pop())
        elif op == Op.OP_FROMALTSTACK:
            if not self.alt:
                raise ScriptFailure("alt stack underflow")
            self.push(self.alt.pop())
        elif op == Op.OP_SIZE:
            if not self.stack:
                raise ScriptFailure("stack underflow")
            self.push(num_encode(len(self.stack[-1])))
        elif op in (Op.OP_EQUAL, Op.OP_EQUALVERIFY):
            equal = self.pop() == self.pop()
            if op == Op.OP_EQUALVERIFY:
                if not equal:
                    raise ScriptFailure("OP_EQUALVERIFY failed")
            else:
                self.push(TRUE if equal else FALSE)
        elif op in (Op.OP_CHECKSIG, Op.OP_CHECKSIGVERIFY):
            pubkey, sig = self.pop(), self.pop()
            ok = self.ctx.signature_valid(sig, pubkey)
            if op == Op.OP_CHECKSIGVERIFY:
                if not ok:
                    raise ScriptFailure("OP_CHECKSIGVERIFY failed")
            else:
                self.push(TRUE if ok else FALSE)
        elif op == Op.OP_CHECKSIGADD:
            if self.script.target != "taproot":
                raise ScriptFailure("OP_CHECKSIGADD outside tapscript")
            pubkey = self.pop()
            n = self.pop_num()
            sig = self.pop()
            self.push(num_encode(n + int(self.ctx.signature_valid(sig, pubkey))))
        elif op == Op.OP_CHECKMULTISIG:
            self.push(TRUE if self.checkmultisig() else FALSE)
        elif op in (Op.OP_CSV, Op.OP_CLTV):
            if not self.stack:
                raise ScriptFailure("stack underflow")
            try:
                n = num_decode(self.stack[-1], 5)
            except ScriptNumError as exc:
                raise ScriptFailure(str(exc)) from None
            have = self.ctx.sequence if op == Op.OP_CSV else self.ctx.locktime
            if n < 0 or n > have:
                raise ScriptFailure(f"{op.name} not satisfied")
        else:
            raise ScriptFailure(f"unsupported opcode {op.name}")

    def checkmultisig(self) -> bool:
        if self.script.target == "taproot":
            raise ScriptFailure("OP_CHECKMULTISIG disabled in tapscript")
        n = self.pop_num()
        if not 0 <= n <= MAX_MULTISIG_KEYS:
            raise ScriptFailure("bad key count")
        keys = [self.pop() for _ in range(n)]  # last pushed first
        m = self.pop_num()
        if not 0 <= m <= n:
            raise ScriptFailure("bad signature count")
        sigs = [self.pop() for _ in range(m)]
        if self.pop() != b"":
            raise ScriptFailure("multisig dummy must be empty")
        isig = ikey = 0
        while isig < m:
            if m - isig > n - ikey:
                return False
            if self.ctx.signature_valid(sigs[isig], keys[ikey]):
                isig += 1
            ikey += 1
        return True


def exec_script(script: Script, ctx: ExecContext) -> ExecResult:
    machine = _Machine(script, ctx)
    try:
        machine.run()
    except ScriptFailure as exc:
        return ExecResult.failure(str(exc))
    stack = tuple(machine.stack)
    if not stack or not cast_to_bool(stack[-1]):
        return ExecResult.failure("false or empty final stack")
    if machine.segwit_rules and len(stack) != 1:
        return ExecResult.failure("clean stack rule violated")
    return ExecResult(True, stack)
