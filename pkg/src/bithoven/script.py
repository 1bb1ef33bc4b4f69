"""Bitcoin Script values: opcodes, pushes, and the asm/hex encodings."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union

from .diagnostics import Kind, error
from .nodes import Location


class Op(enum.IntEnum):
    OP_0 = 0x00
    OP_PUSHDATA1 = 0x4C
    OP_PUSHDATA2 = 0x4D
    OP_1NEGATE = 0x4F
    OP_1 = 0x51
    OP_2 = 0x52
    OP_3 = 0x53
    OP_4 = 0x54
    OP_5 = 0x55
    OP_6 = 0x56
    OP_7 = 0x57
    OP_8 = 0x58
    OP_9 = 0x59
    OP_10 = 0x5A
    OP_11 = 0x5B
    OP_12 = 0x5C
    OP_13 = 0x5D
    OP_14 = 0x5E
    OP_15 = 0x5F
    OP_16 = 0x60
    OP_IF = 0x63
    OP_ELSE = 0x67
    OP_ENDIF = 0x68
    OP_VERIFY = 0x69
    OP_TOALTSTACK = 0x6B
    OP_FROMALTSTACK = 0x6C
    OP_DROP = 0x75
    OP_PICK = 0x79
    OP_ROLL = 0x7A
    OP_SWAP = 0x7C
    OP_SIZE = 0x82
    OP_EQUAL = 0x87
    OP_EQUALVERIFY = 0x88
    OP_1ADD = 0x8B
    OP_1SUB = 0x8C
    OP_NEGATE = 0x8F
    OP_ABS = 0x90
    OP_NOT = 0x91
    OP_ADD = 0x93
    OP_SUB = 0x94
    OP_BOOLAND = 0x9A
    OP_BOOLOR = 0x9B
    OP_NUMEQUAL = 0x9C
    OP_NUMNOTEQUAL = 0x9E
    OP_LESSTHAN = 0x9F
    OP_GREATERTHAN = 0xA0
    OP_LESSTHANOREQUAL = 0xA1
    OP_GREATERTHANOREQUAL = 0xA2
    OP_MIN = 0xA3
    OP_MAX = 0xA4
    OP_RIPEMD160 = 0xA6
    OP_SHA256 = 0xA8
    OP_HASH160 = 0xA9
    OP_HASH256 = 0xAA
    OP_CHECKSIG = 0xAC
    OP_CHECKSIGVERIFY = 0xAD
    OP_CHECKMULTISIG = 0xAE
    OP_CLTV = 0xB1
    OP_CSV = 0xB2
    OP_CHECKSIGADD = 0xBA

    @classmethod
    def small_int(cls, n: int) -> "Op":
        """OP_0 .. OP_16."""
        if n == 0:
            return cls.OP_0
        if not 1 <= n <= 16:
            raise ValueError(f"no small-int opcode for {n}")
        return cls(cls.OP_1 + n - 1)

    def small_value(self) -> int | None:
        if self == Op.OP_0:
            return 0
        if self == Op.OP_1NEGATE:
            return -1
        if Op.OP_1 <= self <= Op.OP_16:
            return self - Op.OP_1 + 1
        return None


ScriptOp = Union[Op, bytes]

MAX_PUSH = 520
MAX_SCRIPT_SIZE = 10_000

_NOWHERE = Location(0, 0, 1, 1)


@dataclass
class Script:
    ops: list[ScriptOp] = field(default_factory=list)
    target: str = "segwit"

    def __len__(self) -> int:
        return len(self.ops)

    def functional_ops(self) -> list[str]:
        """Op tokens with stack shuffling removed and every push shown as ``push``."""
        shuffles = {Op.OP_SWAP, Op.OP_ROLL, Op.OP_PICK, Op.OP_TOALTSTACK, Op.OP_FROMALTSTACK}
        out = []
        for i, op in enumerate(self.ops):
            if isinstance(op, bytes) or op.small_value() is not None:
                nxt = self.ops[i + 1] if i + 1 < len(self.ops) else None
                if nxt in (Op.OP_ROLL, Op.OP_PICK):
                    continue  # depth operand
                out.append("push")
            elif op not in shuffles:
                out.append(op.name)
        return out


def push_data(data: bytes) -> ScriptOp:
    if len(data) > MAX_PUSH:
        raise error(Kind.InvalidOperation, _NOWHERE, f"Push exceeds {MAX_PUSH} bytes: {len(data)}")
    return Op.OP_0 if not data else bytes(data)


def _encode_push(data: bytes) -> bytes:
    n = len(data)
    if n > MAX_PUSH:
        raise error(Kind.InvalidOperation, _NOWHERE, f"Push exceeds {MAX_PUSH} bytes: {n}")
    if n < Op.OP_PUSHDATA1:
        return bytes([n]) + data
    if n <= 0xFF:
        return bytes([Op.OP_PUSHDATA1, n]) + data
    return bytes([Op.OP_PUSHDATA2]) + n.to_bytes(2, "little") + data


def serialize_hex(script: Script) -> bytes:
    out = bytearray()
    for op in script.ops:
        out += _encode_push(op) if isinstance(op, bytes) else bytes([op])
    return bytes(out)


def serialize_asm(script: Script) -> str:
    tokens = []
    for op in script.ops:
        if not isinstance(op, bytes):
            tokens.append(op.name)
            continue
        n = len(op)
        prefix = f"OP_PUSHBYTES_{n}" if n < Op.OP_PUSHDATA1 else (
            "OP_PUSHDATA1" if n <= 0xFF else "OP_PUSHDATA2"
        )
        tokens.append(f"{prefix} {op.hex()}")
    return " ".join(tokens)


def parse_hex(raw: bytes, target: str = "segwit") -> Script:
    """Inverse of :func:`serialize_hex` for scripts made of known opcodes."""
    ops: list[ScriptOp] = []
    i = 0

    def take(k: int) -> bytes:
        nonlocal i
        if i + k > len(raw):
            raise ValueError("truncated push")
        chunk = raw[i : i + k]
        i += k
        return chunk

    while i < len(raw):
        b = raw[i]
        i += 1
        if 1 <= b < Op.OP_PUSHDATA1:
            ops.append(take(b))
        elif b == Op.OP_PUSHDATA1:
            ops.append(take(take(1)[0]))
        elif b == Op.OP_PUSHDATA2:
            ops.append(take(int.from_bytes(take(2), "little")))
        else:
            try:
                ops.append(Op(b))
            except ValueError:
                raise ValueError(f"unknown opcode 0x{b:02x}") from None
    return Script(ops, target)


def check_size(script: Script) -> None:
    size = len(serialize_hex(script))
    if size > MAX_SCRIPT_SIZE:
        raise error(Kind.InvalidOperation, _NOWHERE, f"Script exceeds {MAX_SCRIPT_SIZE} bytes: {size}")
