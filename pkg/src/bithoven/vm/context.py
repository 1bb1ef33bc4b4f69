"""Execution context and result shared by both interpreters."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

Oracle = Mapping[tuple[bytes, bytes], bool]


@dataclass(frozen=True)
class ExecContext:
    witness: tuple[bytes, ...] = ()  # bottom to top
    sequence: int = 0
    locktime: int = 0
    sig_oracle: Oracle = field(default_factory=dict)

    def signature_valid(self, sig: bytes, pubkey: bytes) -> bool:
        return bool(self.sig_oracle.get((bytes(sig), bytes(pubkey)), False))


@dataclass(frozen=True)
class ExecResult:
    success: bool
    stack: tuple[bytes, ...] = ()
    reason: str = field(default="", compare=False)
    path: Optional[tuple[tuple[int, bool], ...]] = field(default=None, compare=False)

    @classmethod
    def failure(cls, reason: str, path=None) -> "ExecResult":
        return cls(False, (), reason, path)

    def __str__(self) -> str:
        return "success" if self.success else "failure"


def cast_to_bool(value: bytes) -> bool:
    """Script truthiness: any non-zero byte, ignoring a sign bit on the last byte."""
    for i, b in enumerate(value):
        if b != 0:
            return not (i == len(value) - 1 and b == 0x80)
    return False


def load_oracle(path: str | Path) -> dict[tuple[bytes, bytes], bool]:
    """Read ``sig_hex<TAB>pubkey_hex<TAB>true|false`` rows; blank and # lines are skipped."""
    table: dict[tuple[bytes, bytes], bool] = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), 1):
            if not row or not "".join(row).strip() or row[0].startswith("#"):
                continue
            if len(row) != 3 or row[2].strip().lower() not in ("true", "false"):
                raise ValueError(f"{path}:{lineno}: expected sig_hex, pubkey_hex, true|false")
            sig, pubkey, verdict = (c.strip() for c in row)
            table[(bytes.fromhex(sig), bytes.fromhex(pubkey))] = verdict.lower() == "true"
    return table
