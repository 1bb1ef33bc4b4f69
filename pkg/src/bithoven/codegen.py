"""Lowering of analyzed programs to Bitcoin Script.

Stack variables are consumed by depth: the compiler keeps a symbolic copy of
every live declaration's remaining parameters plus a count of temporaries
sitting above them, and emits ``OP_SWAP`` or ``<k> OP_ROLL`` to bring each
variable to the top when it is used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .diagnostics import Kind, error
from .liveness import PathConsumption, analyze_liveness
from .nodes import (
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
    terminates,
)
from .script import Op, Script, ScriptOp, check_size, push_data
from .typecheck import expression_types
from .vm.scriptnum import num_encode

_UNARY = {
    "negate": [Op.OP_NEGATE],
    "abs": [Op.OP_ABS],
    "++": [Op.OP_1ADD],
    "--": [Op.OP_1SUB],
    "!": [Op.OP_NOT],
    "sha256": [Op.OP_SHA256],
    "ripemd160": [Op.OP_RIPEMD160],
    "len": [Op.OP_SIZE, Op.OP_SWAP, Op.OP_DROP],
}

_BINARY = {
    "+": Op.OP_ADD,
    "-": Op.OP_SUB,
    "max": Op.OP_MAX,
    "min": Op.OP_MIN,
    "&&": Op.OP_BOOLAND,
    "||": Op.OP_BOOLOR,
    ">": Op.OP_GREATERTHAN,
    ">=": Op.OP_GREATERTHANOREQUAL,
    "<": Op.OP_LESSTHAN,
    "<=": Op.OP_LESSTHANOREQUAL,
}

_FUSE = {Op.OP_EQUAL: Op.OP_EQUALVERIFY, Op.OP_CHECKSIG: Op.OP_CHECKSIGVERIFY}


def push_num(n: int) -> ScriptOp:
    if n == -1:
        return Op.OP_1NEGATE
    if 0 <= n <= 16:
        return Op.small_int(n)
    return push_data(num_encode(n))


def peephole(ops: list[ScriptOp]) -> list[ScriptOp]:
    """Fuse hash pairs and drop redundant swaps."""
    out: list[ScriptOp] = []
    for op in ops:
        prev = out[-1] if out else None
        if prev == Op.OP_SHA256 and op == Op.OP_SHA256:
            out[-1] = Op.OP_HASH256
        elif prev == Op.OP_SHA256 and op == Op.OP_RIPEMD160:
            out[-1] = Op.OP_HASH160
        elif prev == Op.OP_SWAP and op == Op.OP_SWAP:
            out.pop()
        else:
            out.append(op)
    return out


@dataclass
class _Frame:
    """Symbolic stack for one region of code."""

    paths: list[PathConsumption]
    layouts: dict[int, list[str]]  # declaration index -> remaining names, top first
    temps: int = 0

    def fork(self, branch: tuple[int, bool]) -> "_Frame":
        paths = [p for p in self.paths if branch in p.path_id]
        decls = {p.matched_decl for p in paths}
        layouts = {d: list(names) for d, names in self.layouts.items() if d in decls}
        return _Frame(paths, layouts, self.temps)


@dataclass
class _Compiler:
    program: Program
    target: str
    peeks: frozenset[int]
    types: dict[int, Type]
    ops: list[ScriptOp] = field(default_factory=list)

    def internal(self, loc: Location, message: str):
        return error(Kind.InvalidOperation, loc, f"Internal compiler error: {message}")

    def emit(self, frame: _Frame, *ops: ScriptOp, delta: int = 0) -> None:
        self.ops.extend(ops)
        frame.temps += delta

    # -- expressions -------------------------------------------------------

    def var(self, frame: _Frame, v: Var) -> None:
        layouts = frame.layouts.values()
        if not layouts or any(v.name not in names for names in layouts):
            raise self.internal(v.loc, f"{v.name} is not on the stack")
        depths = {names.index(v.name) + frame.temps for names in layouts}
        if len(depths) != 1:
            raise self.internal(v.loc, f"stack layout for {v.name} is not unique: {sorted(depths)}")
        depth = depths.pop()
        if v.loc.start in self.peeks:
            self.emit(frame, push_num(depth), Op.OP_PICK, delta=1)
            return
        for names in frame.layouts.values():
            names.remove(v.name)
        if depth == 1:
            self.ops.append(Op.OP_SWAP)
        elif depth > 1:
            self.ops.extend([push_num(depth), Op.OP_ROLL])
        frame.temps += 1

    def expr(self, frame: _Frame, e: Expression) -> None:
        if isinstance(e, NumLit):
            self.emit(frame, push_num(e.value), delta=1)
        elif isinstance(e, BoolLit):
            self.emit(frame, Op.OP_1 if e.value else Op.OP_0, delta=1)
        elif isinstance(e, StrLit):
            self.emit(frame, push_data(literal_bytes(e.text)), delta=1)
        elif isinstance(e, Var):
            self.var(frame, e)
        elif isinstance(e, Unary):
            self.expr(frame, e.operand)
            self.emit(frame, *_UNARY[e.op])
        elif isinstance(e, Binary):
            self.expr(frame, e.lhs)
            self.expr(frame, e.rhs)
            if e.op in ("==", "!="):
                if self.types.get(id(e.lhs)) == Type.STRING:
                    tail = [Op.OP_EQUAL] if e.op == "==" else [Op.OP_EQUAL, Op.OP_NOT]
                else:
                    tail = [Op.OP_NUMEQUAL if e.op == "==" else Op.OP_NUMNOTEQUAL]
                self.emit(frame, *tail, delta=-1)
            else:
                self.emit(frame, _BINARY[e.op], delta=-1)
        else:
            assert isinstance(e, CheckSig)
            self.checksig(frame, e)

    def checksig(self, frame: _Frame, e: CheckSig) -> None:
        f = e.factor
        if not isinstance(f, MultiSig):
            self.expr(frame, f.sig)
            self.expr(frame, f.pubkey)
            self.emit(frame, Op.OP_CHECKSIG, delta=-1)
            return
        n = len(f.pairs)
        if self.target == "taproot":
            for i, (sig, pubkey) in enumerate(f.pairs):
                self.expr(frame, sig)
                if i:
                    self.emit(frame, Op.OP_SWAP)
                self.expr(frame, pubkey)
                self.emit(frame, Op.OP_CHECKSIG if i == 0 else Op.OP_CHECKSIGADD, delta=-1 if i == 0 else -2)
            self.emit(frame, push_num(f.m), Op.OP_NUMEQUAL)
        elif f.m == n:
            self.emit(frame, Op.OP_0, delta=1)
            for sig, _ in f.pairs:
                self.expr(frame, sig)
            self.emit(frame, push_num(f.m), delta=1)
            for _, pubkey in f.pairs:
                self.expr(frame, pubkey)
            self.emit(frame, push_num(n), Op.OP_CHECKMULTISIG, delta=-(2 * n + 1))
        else:
            # threshold below n: count 1-of-1 matches so that every signature
            # slot is consumed exactly once, then compare the tally with m
            for i, (sig, pubkey) in enumerate(f.pairs):
                self.emit(frame, Op.OP_0, delta=1)
                self.expr(frame, sig)
                self.emit(frame, Op.OP_1, delta=1)
                self.expr(frame, pubkey)
                self.emit(frame, Op.OP_1, Op.OP_CHECKMULTISIG, delta=-3)
                if i:
                    self.emit(frame, Op.OP_ADD, delta=-1)
            self.emit(frame, push_num(f.m), Op.OP_NUMEQUAL)

    # -- statements --------------------------------------------------------

    def block(self, frame: _Frame, stmts: tuple[Statement, ...]) -> None:
        for j, s in enumerate(stmts):
            if isinstance(s, Return):
                self.expr(frame, s.expr)
                return
            if isinstance(s, Verify):
                mark = len(self.ops)
                self.expr(frame, s.expr)
                last = self.ops[-1] if len(self.ops) > mark else None
                if last in _FUSE:
                    self.ops[-1] = _FUSE[last]
                else:
                    self.ops.append(Op.OP_VERIFY)
                frame.temps -= 1
            elif isinstance(s, (Older, After)):
                lock = Op.OP_CSV if isinstance(s, Older) else Op.OP_CLTV
                self.emit(frame, push_num(s.n), lock, Op.OP_DROP)
            else:
                assert isinstance(s, If)
                rest = stmts[j + 1 :]
                self.conditional(frame, s, rest)
                if terminates(s.then) or terminates(s.else_):
                    return

    def conditional(self, frame: _Frame, s: If, rest: tuple[Statement, ...]) -> None:
        self.expr(frame, s.cond)
        self.emit(frame, Op.OP_IF, delta=-1)
        then_term, else_term = terminates(s.then), terminates(s.else_)
        then_body, else_body = s.then, s.else_
        if then_term != else_term:
            # only one arm falls through: the remainder of the block belongs to it
            if then_term:
                else_body = else_body + rest
            else:
                then_body = then_body + rest
        arms = []
        for taken, body in ((True, then_body), (False, else_body)):
            if not taken:
                self.ops.append(Op.OP_ELSE)
            arm = frame.fork((s.loc.start, taken))
            self.block(arm, body)
            arms.append(arm)
        self.ops.append(Op.OP_ENDIF)
        if then_term or else_term:
            return
        # both arms fall through: merge their layouts for the code after OP_ENDIF
        merged: dict[int, list[str]] = {}
        for arm in arms:
            if arm.temps != frame.temps:
                raise self.internal(s.loc, "branch left temporaries on the stack")
            for d, names in arm.layouts.items():
                if merged.setdefault(d, names) != names:
                    raise self.internal(s.loc, f"branches disagree on the layout of declaration {d}")
        frame.layouts = merged


def compile(
    program: Program,
    target: Optional[str] = None,
    *,
    peephole_opt: bool = True,
    allow_hash_bound_keys: bool = False,
) -> Script:
    """Lower an analyzed program; raises DiagnosticError on internal inconsistency."""
    target = target or program.target
    paths = analyze_liveness(program, allow_hash_bound_keys=allow_hash_bound_keys)
    layouts = {p.matched_decl: list(program.decls[p.matched_decl].names) for p in paths}
    compiler = _Compiler(
        program,
        target,
        peek_sites(program) if allow_hash_bound_keys else frozenset(),
        expression_types(program),
    )
    frame = _Frame(paths, layouts)
    compiler.block(frame, program.body)
    ops = peephole(compiler.ops) if peephole_opt else compiler.ops
    script = Script(ops, target)
    check_size(script)
    return script
