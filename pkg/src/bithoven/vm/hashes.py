"""Hash primitives used by both interpreters."""

from __future__ import annotations

import hashlib

from Crypto.Hash import RIPEMD160  # hashlib lacks ripemd160 on OpenSSL 3 builds


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def ripemd160(data: bytes) -> bytes:
    return RIPEMD160.new(data).digest()


def hash256(data: bytes) -> bytes:
    return sha256(sha256(data))


def hash160(data: bytes) -> bytes:
    return ripemd160(sha256(data))
