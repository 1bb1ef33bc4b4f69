"""Minimal little-endian sign-magnitude script numbers."""

from __future__ import annotations

MAX_NUM_SIZE = 4


class ScriptNumError(ValueError):
    pass


def num_encode(n: int) -> bytes:
    if n == 0:
        return b""
    mag = abs(n)
    out = bytearray()
    while mag:
        out.append(mag & 0xFF)
        mag >>= 8
    # the top bit of the last byte carries the sign
    if out[-1] & 0x80:
        out.append(0x80 if n < 0 else 0x00)
    elif n < 0:
        out[-1] |= 0x80
    return bytes(out)


def num_decode(data: bytes, max_size: int = MAX_NUM_SIZE) -> int:
    """Decode a script number, rejecting oversized or non-minimal encodings."""
    if len(data) > max_size:
        raise ScriptNumError(f"script number longer than {max_size} bytes")
    if not data:
        return 0
    # a trailing 0x00/0x80 is only allowed when the byte before needs its top bit
    if data[-1] & 0x7F == 0 and (len(data) == 1 or not data[-2] & 0x80):
        raise ScriptNumError("non-minimally encoded script number")
    mag = int.from_bytes(data, "little") & ~(0x80 << (8 * (len(data) - 1)))
    return -mag if data[-1] & 0x80 else mag
