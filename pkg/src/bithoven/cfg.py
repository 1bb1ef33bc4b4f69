"""Control-flow graph and the path invariants checked over it.

Every path from entry must end in a ``return``; no statement may follow a
return; and no returning path may succeed while every signature check on it
fails.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .diagnostics import Diagnostic, Kind, dedupe
from .nodes import (
    COMPARE_BINARY,
    LOGICAL_BINARY,
    Binary,
    BoolLit,
    CheckSig,
    Expression,
    If,
    Program,
    Return,
    Statement,
    Unary,
    Verify,
    statement_exprs,
    variables,
    walk_expr,
)

ENTRY = 0
EXIT = 1


@dataclass
class CfgNode:
    id: int
    stmt: Optional[Statement] = None
    terminates: bool = False
    has_checksig: bool = False


@dataclass
class Cfg:
    nodes: list[CfgNode] = field(default_factory=list)
    # node id -> [(successor id, label)]; labels are "next", "then", "else"
    edges: dict[int, list[tuple[int, str]]] = field(default_factory=dict)
    node_of: dict[int, int] = field(default_factory=dict)  # id(stmt) -> node id

    def add(self, stmt: Optional[Statement]) -> CfgNode:
        has_sig = stmt is not None and any(
            isinstance(e, CheckSig) for root in statement_exprs(stmt) for e in walk_expr(root)
        )
        node = CfgNode(len(self.nodes), stmt, isinstance(stmt, Return), has_sig)
        self.nodes.append(node)
        self.edges[node.id] = []
        if stmt is not None:
            self.node_of[id(stmt)] = node.id
        return node

    def successors(self, n: int) -> list[int]:
        return [m for m, _ in self.edges[n]]

    def reachable(self) -> set[int]:
        seen = {ENTRY}
        todo = deque([ENTRY])
        while todo:
            for m in self.successors(todo.popleft()):
                if m not in seen:
                    seen.add(m)
                    todo.append(m)
        return seen


def build_cfg(program: Program) -> Cfg:
    cfg = Cfg()
    cfg.add(None)  # entry
    cfg.add(None)  # exit

    def block(stmts: tuple[Statement, ...], preds: list[tuple[int, str]]) -> list[tuple[int, str]]:
        for s in stmts:
            node = cfg.add(s)
            for p, label in preds:
                cfg.edges[p].append((node.id, label))
            if isinstance(s, Return):
                preds = []
            elif isinstance(s, If):
                preds = block(s.then, [(node.id, "then")]) + block(s.else_, [(node.id, "else")])
            else:
                preds = [(node.id, "next")]
        return preds

    for p, label in block(program.body, [(ENTRY, "next")]):
        cfg.edges[p].append((EXIT, label))
    return cfg


# -- signature requirement -------------------------------------------------
#
# A condition is modelled as a boolean formula whose leaves are checksig
# results (forced false), boolean literals, and opaque atoms.  Each atom
# occurrence is an independent free variable, so every formula is read-once
# and the (can be true, can be false) pair composes exactly.


def _boolean_shaped(e: Expression) -> bool:
    if isinstance(e, (BoolLit, CheckSig)):
        return True
    if isinstance(e, Unary):
        return e.op == "!"
    if isinstance(e, Binary):
        return e.op in LOGICAL_BINARY or e.op in COMPARE_BINARY
    return False


def outcomes(e: Expression) -> tuple[bool, bool]:
    """Whether ``e`` can evaluate true / false when every checksig fails."""
    if isinstance(e, CheckSig):
        return (False, True)
    if isinstance(e, BoolLit):
        return (e.value, not e.value)
    if isinstance(e, Unary) and e.op == "!":
        t, f = outcomes(e.operand)
        return (f, t)
    if isinstance(e, Binary):
        if e.op in LOGICAL_BINARY:
            lt, lf = outcomes(e.lhs)
            rt, rf = outcomes(e.rhs)
            if e.op == "&&":
                return (lt and rt, lf or rf)
            return (lt or rt, lf and rf)
        if e.op in ("==", "!=") and (_boolean_shaped(e.lhs) or _boolean_shaped(e.rhs)):
            lt, lf = outcomes(e.lhs)
            rt, rf = outcomes(e.rhs)
            same = (lt and rt) or (lf and rf)
            differ = (lt and rf) or (lf and rt)
            return (same, differ) if e.op == "==" else (differ, same)
    return (True, True)


def _returning_paths(cfg: Cfg, live: set[int]) -> Iterator[list[tuple[int, str]]]:
    """Entry-to-return paths as (node, label of the edge taken out of it)."""
    stack: list[tuple[int, list[tuple[int, str]]]] = [(ENTRY, [])]
    while stack:
        n, trail = stack.pop()
        if cfg.nodes[n].terminates:
            yield trail + [(n, "")]
            continue
        for m, label in reversed(cfg.edges[n]):
            if m in live and m != EXIT:
                stack.append((m, trail + [(n, label)]))


def _path_satisfiable_without_sig(cfg: Cfg, trail: list[tuple[int, str]]) -> bool:
    for n, label in trail:
        s = cfg.nodes[n].stmt
        if isinstance(s, If):
            t, f = outcomes(s.cond)
            if not (t if label == "then" else f):
                return False
        elif isinstance(s, (Verify, Return)):
            if not outcomes(s.expr)[0]:
                return False
    return True


def check_control_flow(cfg: Cfg, program: Program) -> list[Diagnostic]:
    live = cfg.reachable()
    found: list[Diagnostic] = []

    def unreachable(stmts: tuple[Statement, ...]) -> None:
        for s in stmts:
            if cfg.node_of[id(s)] not in live:
                found.append(
                    Diagnostic(
                        Kind.UnreachableCode,
                        s.loc,
                        f"Unreachable code after return statement: {s.describe()}. "
                        "Move return statement at the last scope of execution path",
                    )
                )
                return
            if isinstance(s, If):
                unreachable(s.then)
                unreachable(s.else_)

    unreachable(program.body)

    for node in cfg.nodes:
        if node.id not in live or EXIT not in cfg.successors(node.id):
            continue
        if node.stmt is None:
            found.append(
                Diagnostic(
                    Kind.NoReturn,
                    program.body_loc,
                    "Return statement must exist for each possible execution path: empty body.",
                )
            )
        else:
            found.append(
                Diagnostic(
                    Kind.NoReturn,
                    node.stmt.loc,
                    f"Return statement must exist for each possible execution path: {node.stmt.describe()}.",
                )
            )

    for trail in _returning_paths(cfg, live):
        if not _path_satisfiable_without_sig(cfg, trail):
            continue
        names = {
            v.name
            for n, _ in trail
            if cfg.nodes[n].stmt is not None
            for root in statement_exprs(cfg.nodes[n].stmt)
            for v in variables(root)
        }
        decl = next((d for d in program.decls if set(d.names) == names), program.decls[0])
        found.append(
            Diagnostic(
                Kind.NoSigRequired,
                decl.params[0].loc,
                f"At least one signature required for stack but: {decl.describe()}.",
            )
        )
    return dedupe(found)
