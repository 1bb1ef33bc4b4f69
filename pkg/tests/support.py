"""Shared test helpers: corpus paths, keys, a program generator, brute-force oracles.

Nothing here calls into the analysis passes except as a filter for generated
programs; the oracles re-derive their answers straight from the AST.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

from bithoven.liveness import analyze_liveness
from bithoven.nodes import (
    Binary,
    BoolLit,
    CheckSig,
    If,
    Program,
    Return,
    Type,
    Unary,
    Verify,
)
from bithoven.parser import parse_program
from bithoven.pipeline import check_source
from bithoven.vm import ExecContext, exec_bithoven, num_encode

FIXTURES = Path(__file__).parent / "fixtures"

# compressed encodings of 1G, 2G, 3G on secp256k1
PK_ALICE = "0279be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798"
PK_BOB = "02c6047f9441ed7d6d3045406e95c07cd85c778e4b8cef3ca7abac09b95c709ee5"
PK_CAROL = "02f9308a019258c31049344f85f89d5229b531c845836f99b08601f113bce036f9"
PK_DAVE = "02e493dbf1c10d80f3581e4904930b1404cc6c13900ee0758474fa94abe8c4cd13"
KEYS = (PK_ALICE, PK_BOB, PK_CAROL, PK_DAVE)

HEADER = "pragma bithoven version 0.0.1;\npragma bithoven target {target};\n\n"


def source(decls: str, body: str, target: str = "segwit") -> str:
    return HEADER.format(target=target) + decls + "\n{\n" + body + "\n}\n"


def read_fixture(name: str) -> str:
    return (FIXTURES / name).read_text()


# ---------------------------------------------------------------------------
# random analysis-clean programs

_TYPE_WORD = {Type.NUM: "number", Type.BOOL: "bool", Type.STRING: "string", Type.SIG: "signature"}
_NUM_POOL = (0, 1, -1, 2, 7, 16, 17, 100, 127, 128, 255, 256, 1000, 32767, 32768, -128, 2**31 - 1, -(2**31 - 1))


@dataclass
class _Scope:
    """Variables still unconsumed on every path reaching the current point."""

    free: dict[str, Type]

    def take(self, rng: random.Random, ty: Type) -> Optional[str]:
        names = sorted(n for n, t in self.free.items() if t is ty)
        if not names:
            return None
        name = rng.choice(names)
        del self.free[name]
        return name


class ProgramGenerator:
    def __init__(self, rng: random.Random, max_depth: int = 3, max_vars: int = 6):
        self.rng = rng
        self.max_depth = max_depth
        self.max_vars = max_vars

    # expressions ----------------------------------------------------------

    def num(self, scope: _Scope, depth: int) -> str:
        r = self.rng.random()
        if depth <= 0 or r < 0.3:
            if self.rng.random() < 0.7:
                v = scope.take(self.rng, Type.NUM)
                if v:
                    return v
            return str(self.rng.choice(_NUM_POOL))
        if r < 0.6:
            op = self.rng.choice(["+", "-", "max", "min"])
            return f"({self.num(scope, depth - 1)} {op} {self.num(scope, depth - 1)})"
        if r < 0.85:
            op = self.rng.choice(["negate", "abs", "++", "--"])
            return f"{op} {self.num(scope, depth - 1)}"
        return f"len {self.string(scope, depth - 1)}"

    def string(self, scope: _Scope, depth: int) -> str:
        r = self.rng.random()
        if depth <= 0 or r < 0.4:
            if self.rng.random() < 0.7:
                v = scope.take(self.rng, Type.STRING)
                if v:
                    return v
            return '"' + self.rng.choice(["", "ab", "00", "deadbeef", "hello", "0102030405"]) + '"'
        op = self.rng.choice(["sha256", "ripemd160"])
        inner = self.rng.choice([self.string, self.num, self.plain_bool])
        return f"{op} {inner(scope, depth - 1)}"

    def plain_bool(self, scope: _Scope, depth: int) -> str:
        """A boolean expression with no signature check inside."""
        r = self.rng.random()
        if depth <= 0 or r < 0.25:
            v = scope.take(self.rng, Type.BOOL) if self.rng.random() < 0.75 else None
            return v or self.rng.choice(["true", "false"])
        if r < 0.55:
            op = self.rng.choice(["==", "!=", "<", "<=", ">", ">="])
            return f"({self.num(scope, depth - 1)} {op} {self.num(scope, depth - 1)})"
        if r < 0.65:
            op = self.rng.choice(["==", "!="])
            return f"({self.string(scope, depth - 1)} {op} {self.string(scope, depth - 1)})"
        if r < 0.85:
            op = self.rng.choice(["&&", "||", "==", "!="])
            return f"({self.plain_bool(scope, depth - 1)} {op} {self.plain_bool(scope, depth - 1)})"
        return f"! {self.plain_bool(scope, depth - 1)}"

    def checksig(self, scope: _Scope) -> Optional[str]:
        sig = scope.take(self.rng, Type.SIG)
        if sig is None:
            return None
        more = [s for s in (scope.take(self.rng, Type.SIG) for _ in range(self.rng.randint(0, 2))) if s]
        if not more or self.rng.random() < 0.3:
            for s in more:  # give them back
                scope.free[s] = Type.SIG
            return f"checksig({sig}, \"{self.rng.choice(KEYS)}\")"
        sigs = [sig] + more
        keys = self.rng.sample(KEYS, len(sigs))
        m = self.rng.randint(1, len(sigs))
        pairs = ", ".join(f"({s}, \"{k}\")" for s, k in zip(sigs, keys))
        return f"checksig({m}, [{pairs}])"

    def guarded_bool(self, scope: _Scope, depth: int) -> str:
        sig = self.checksig(scope) if self.rng.random() < 0.85 else None
        if sig is None:
            return self.plain_bool(scope, depth)
        if self.rng.random() < 0.4:
            return sig
        op = self.rng.choice(["&&", "&&", "||"])
        return f"({sig} {op} {self.plain_bool(scope, depth)})"

    # statements -----------------------------------------------------------

    def block(self, scope: _Scope, depth: int, indent: int) -> tuple[list[str], list[_Scope]]:
        """Lines of a block that always ends in ``return``."""
        pad = " " * indent
        lines: list[str] = []
        for _ in range(self.rng.randint(0, 3)):
            r = self.rng.random()
            if r < 0.5:
                lines.append(f"{pad}verify {self.guarded_bool(scope, 2)};")
            elif r < 0.7:
                kw = self.rng.choice(["older", "after"])
                lines.append(f"{pad}{kw} {self.rng.choice([0, 1, 10, 500, 1000, 65535, 4294967295])};")
            elif depth < self.max_depth:
                lines.extend(self.fallthrough_if(scope, depth, indent))
        if depth < self.max_depth and self.rng.random() < 0.55:
            cond = self.plain_bool(scope, 1)
            lines.append(f"{pad}if {cond} {{")
            then, _ = self.block(_Scope(dict(scope.free)), depth + 1, indent + 4)
            lines.extend(then)
            lines.append(f"{pad}}} else {{")
            other, _ = self.block(_Scope(dict(scope.free)), depth + 1, indent + 4)
            lines.extend(other)
            lines.append(f"{pad}}}")
            return lines, []
        expr = self.guarded_bool(scope, 2) if self.rng.random() < 0.9 else self.num(scope, 2)
        lines.append(f"{pad}return {expr};")
        return lines, []

    def fallthrough_if(self, scope: _Scope, depth: int, indent: int) -> list[str]:
        pad = " " * indent
        cond = self.plain_bool(scope, 1)
        arms = []
        shared_after = dict(scope.free)
        for _ in range(2):
            arm_scope = _Scope(dict(scope.free))
            body = [f"{pad}    verify {self.guarded_bool(arm_scope, 1)};"]
            arms.append(body)
            for name in list(shared_after):
                if name not in arm_scope.free:
                    del shared_after[name]
        scope.free = shared_after
        return [f"{pad}if {cond} {{", *arms[0], f"{pad}}} else {{", *arms[1], f"{pad}}}"]

    # whole programs -------------------------------------------------------

    def variables(self) -> dict[str, Type]:
        n = self.rng.randint(1, self.max_vars)
        out = {}
        weights = [(Type.SIG, 4), (Type.NUM, 2), (Type.BOOL, 2), (Type.STRING, 1)]
        pool = [t for t, w in weights for _ in range(w)]
        for i in range(n):
            ty = self.rng.choice(pool)
            out[f"{ty.value}_{i}"] = ty
        if Type.SIG not in out.values():
            out["sig_x"] = Type.SIG
        return out

    def candidate(self, target: str) -> str:
        vars_ = self.variables()
        lines, _ = self.block(_Scope(dict(vars_)), 0, 4)
        body = "\n".join(lines)
        placeholder = "(" + ", ".join(f"{n}: {_TYPE_WORD[t]}" for n, t in vars_.items()) + ")"
        program = parse_program(source(placeholder, body, target))
        decls = self.declarations(program, vars_)
        if decls is None:
            return ""
        return source("\n".join(decls), body, target)

    def declarations(self, program: Program, vars_: dict[str, Type]) -> Optional[list[str]]:
        orders: dict[frozenset, list[str]] = {}
        for uses in consumption_orders(program):
            key = frozenset(uses)
            if not uses:
                return None
            orders.setdefault(key, uses)
        decls = []
        for uses in orders.values():
            uses = list(uses)
            if self.rng.random() < 0.25:
                self.rng.shuffle(uses)
            decls.append("(" + ", ".join(f"{n}: {_TYPE_WORD[vars_[n]]}" for n in uses) + ")")
        return decls

    def program(self, target: str = "segwit", attempts: int = 500) -> str:
        for _ in range(attempts):
            text = self.candidate(target)
            if not text:
                continue
            prog, diags = check_source(text)
            if prog is not None and not diags:
                return text
        raise RuntimeError("generator could not produce an analysis-clean program")


# ---------------------------------------------------------------------------
# brute-force oracles over the AST


def ast_paths(stmts, prefix=()) -> Iterator[tuple[tuple, bool]]:
    """Yield (statements executed in order, ends-in-return) for every path."""

    def go(block, i, done):
        if i == len(block):
            yield done, False
            return
        s = block[i]
        if isinstance(s, Return):
            yield done + (s,), True
            return
        if isinstance(s, If):
            for taken, arm in ((True, s.then), (False, s.else_)):
                for inner, returned in go(arm, 0, done + ((s, taken),)):
                    if returned:
                        yield inner, True
                    else:
                        yield from go(block, i + 1, inner)
            return
        yield from go(block, i + 1, done + (s,))

    yield from go(tuple(stmts), 0, tuple(prefix))


def _var_names(e) -> list[str]:
    from bithoven.nodes import variables

    return [v.name for v in variables(e)]


def consumption_orders(program: Program) -> list[list[str]]:
    out = []
    for steps, _ in ast_paths(program.body):
        names = []
        for step in steps:
            s = step[0] if isinstance(step, tuple) else step
            expr = s.cond if isinstance(s, If) else getattr(s, "expr", None)
            if expr is not None:
                names.extend(_var_names(expr))
        out.append(names)
    return out


def _atoms(e) -> list:
    if isinstance(e, (CheckSig, BoolLit)):
        return []
    if isinstance(e, Unary) and e.op == "!":
        return _atoms(e.operand)
    if isinstance(e, Binary) and e.op in ("&&", "||"):
        return _atoms(e.lhs) + _atoms(e.rhs)
    if isinstance(e, Binary) and e.op in ("==", "!=") and (_is_boolish(e.lhs) or _is_boolish(e.rhs)):
        return _atoms(e.lhs) + _atoms(e.rhs)
    return [e]


def _is_boolish(e) -> bool:
    return isinstance(e, (CheckSig, BoolLit)) or (isinstance(e, Unary) and e.op == "!") or (
        isinstance(e, Binary) and e.op in ("&&", "||", "==", "!=", "<", "<=", ">", ">=")
    )


def _truth(e, env) -> bool:
    if id(e) in env:
        return env[id(e)]
    if isinstance(e, CheckSig):
        return False
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, Unary):
        return not _truth(e.operand, env)
    if e.op == "&&":
        return _truth(e.lhs, env) and _truth(e.rhs, env)
    if e.op == "||":
        return _truth(e.lhs, env) or _truth(e.rhs, env)
    same = _truth(e.lhs, env) == _truth(e.rhs, env)
    return same if e.op == "==" else not same


def passes_without_signature(constraints: list[tuple[object, bool]]) -> bool:
    """Truth-table search: can every constraint hold with all checksigs false?"""
    atoms = [a for e, _ in constraints for a in _atoms(e)]
    for bits in itertools.product((False, True), repeat=len(atoms)):
        env = {id(a): b for a, b in zip(atoms, bits)}
        if all(_truth(e, env) == want for e, want in constraints):
            return True
    return False


def control_flow_oracle(program: Program) -> set[str]:
    """Kinds a control-flow checker must report, derived by path enumeration."""
    kinds = set()

    def dead(block):
        for i, s in enumerate(block):
            if isinstance(s, Return) and i + 1 < len(block):
                return True
            if isinstance(s, If):
                if dead(s.then) or dead(s.else_):
                    return True
                if _always_returns(s.then) and _always_returns(s.else_) and i + 1 < len(block):
                    return True
        return False

    if dead(program.body):
        kinds.add("UnreachableCode")
    for steps, returned in ast_paths(program.body):
        if not returned:
            kinds.add("NoReturn")
            continue
        constraints = []
        for step in steps:
            if isinstance(step, tuple):
                constraints.append((step[0].cond, step[1]))
            elif isinstance(step, (Verify, Return)):
                constraints.append((step.expr, True))
        if passes_without_signature(constraints):
            kinds.add("NoSigRequired")
    return kinds


def _always_returns(block) -> bool:
    return all(returned for _, returned in ast_paths(block))


# ---------------------------------------------------------------------------
# execution contexts


def _canonical(rng: random.Random, ty: Type, sig_id: int) -> bytes:
    if ty is Type.NUM:
        return num_encode(rng.choice(_NUM_POOL + (3, 5, 42)))
    if ty is Type.BOOL:
        return rng.choice([b"", b"\x01"])
    if ty is Type.SIG:
        return bytes([0x30, sig_id, rng.randrange(256)])
    return rng.choice([b"", b"ab", b"\x00", bytes.fromhex("deadbeef"), b"hello", rng.randbytes(5)])


def random_context(rng: random.Random, program: Program) -> tuple[ExecContext, int]:
    index = rng.randrange(len(program.decls))
    decl = program.decls[index]
    items = [_canonical(rng, p.type, i) for i, p in enumerate(decl.params)]
    witness = tuple(reversed(items))  # first parameter ends up on top
    sigs = [v for p, v in zip(decl.params, items) if p.type is Type.SIG]
    oracle = {(s, bytes.fromhex(k)): True for s in sigs for k in KEYS if rng.random() < 0.35}
    ctx = ExecContext(
        witness,
        sequence=rng.choice([0, 10, 999, 1000, 70000, 2**32 - 1]),
        locktime=rng.choice([0, 10, 999, 1000, 70000, 2**32 - 1]),
        sig_oracle=oracle,
    )
    return ctx, index


def well_formed(program: Program, ctx: ExecContext, decl_index: int) -> bool:
    """True when the witness was built for the declaration of the path actually executed."""
    result = exec_bithoven(program, ctx)
    if result.path is None:
        return False
    taken = set(result.path)
    return any(
        taken <= set(p.path_id) and p.matched_decl == decl_index for p in analyze_liveness(program)
    )


def contexts_for(rng: random.Random, program: Program, n: int = 8, attempts: int = 400) -> list[ExecContext]:
    out = []
    for _ in range(attempts):
        ctx, index = random_context(rng, program)
        if well_formed(program, ctx, index):
            out.append(ctx)
            if len(out) == n:
                break
    return out
