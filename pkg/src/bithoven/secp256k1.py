"""Compressed secp256k1 public key validation."""

from __future__ import annotations

import re

# field prime p = 2^256 - 2^32 - 977
P = 2**256 - 2**32 - 977
B = 7

_HEX66 = re.compile(r"[0-9a-fA-F]{66}")


def is_quadratic_residue(a: int) -> bool:
    """Euler's criterion modulo P; zero counts as a residue."""
    a %= P
    return a == 0 or pow(a, (P - 1) // 2, P) == 1


def is_valid_compressed_pubkey(hex_text: str) -> bool:
    if not _HEX66.fullmatch(hex_text):
        return False
    raw = bytes.fromhex(hex_text)
    if raw[0] not in (0x02, 0x03):
        return False
    x = int.from_bytes(raw[1:], "big")
    if x >= P:
        return False
    return is_quadratic_residue(pow(x, 3, P) + B)
