"""Linear use of stack variables along every execution path.

Each path through nested ``if`` statements must consume every parameter of
exactly one stack declaration exactly once.  The pass also fixes where each
variable reference sits on the stack at run time (its index among the
not-yet-consumed parameters), which code generation relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .diagnostics import Diagnostic, DiagnosticError, Kind, dedupe
from .nodes import If, Program, Return, Statement, Var, peek_sites, statement_exprs, variables

MAX_NESTING = 16
MAX_PATHS = 2**16

Branch = tuple[int, bool]  # (offset of the if statement, branch taken)


@dataclass(frozen=True)
class PathConsumption:
    path_id: tuple[Branch, ...]
    consumed: tuple[str, ...]
    matched_decl: Optional[int]
    uses: tuple[Var, ...] = field(default=(), compare=False, repr=False)
    returns: bool = False
    peeks: frozenset[int] = field(default=frozenset(), compare=False, repr=False)


@dataclass
class _State:
    path: list[Branch]
    uses: list[Var]
    returns: bool = False

    def extend(self, vs: list[Var]) -> "_State":
        return _State(list(self.path), self.uses + vs, self.returns)


def nesting_depth(stmts: tuple[Statement, ...]) -> int:
    depth = 0
    for s in stmts:
        if isinstance(s, If):
            depth = max(depth, 1 + nesting_depth(s.then), 1 + nesting_depth(s.else_))
    return depth


def _run(block: tuple[Statement, ...], states: list[_State]) -> list[_State]:
    for s in block:
        out: list[_State] = []
        for st in states:
            if st.returns:
                out.append(st)
                continue
            uses = [v for e in statement_exprs(s) for v in variables(e)]
            nxt = st.extend(uses)
            if isinstance(s, If):
                for taken, branch in ((True, s.then), (False, s.else_)):
                    fork = nxt.extend([])
                    fork.path.append((s.loc.start, taken))
                    out.extend(_run(branch, [fork]))
            else:
                nxt.returns = isinstance(s, Return)
                out.append(nxt)
        if len(out) > MAX_PATHS:
            raise DiagnosticError(
                Diagnostic(Kind.UnmatchedStackPath, s.loc, f"Too many execution paths: more than {MAX_PATHS}")
            )
        states = out
    return states


def enumerate_paths(program: Program) -> list[_State]:
    if nesting_depth(program.body) > MAX_NESTING:
        raise DiagnosticError(
            Diagnostic(
                Kind.UnmatchedStackPath,
                program.body_loc,
                f"Conditional nesting deeper than {MAX_NESTING} is not supported",
            )
        )
    return _run(program.body, [_State([], [])])


def analyze_liveness(program: Program, *, allow_hash_bound_keys: bool = False) -> list[PathConsumption]:
    """Per-path consumption records; raises DiagnosticError on any violation.

    With ``allow_hash_bound_keys`` the key variable of a hash-binding verify is
    read in place and stays on the stack for the checksig that follows.
    """
    peeks = peek_sites(program) if allow_hash_bound_keys else frozenset()
    declared = {p.name for d in program.decls for p in d.params}
    found: list[Diagnostic] = []
    result: list[PathConsumption] = []
    used_decls: set[int] = set()

    for st in enumerate_paths(program):
        seen: set[str] = set()
        clean = True
        for v in st.uses:
            if v.name not in declared:
                found.append(Diagnostic(Kind.UndefinedVariable, v.loc, f'Undefined variable: "{v.name}".'))
                clean = False
            elif v.name in seen:
                found.append(Diagnostic(Kind.VariableConsumed, v.loc, f"Consumed variable: {v.name}."))
                clean = False
            if v.loc.start not in peeks:
                seen.add(v.name)
        consumed = tuple(v.name for v in st.uses if v.loc.start not in peeks)
        matched = None
        if clean:
            hits = [i for i, d in enumerate(program.decls) if set(d.names) == seen]
            anchor = st.uses[-1].loc if st.uses else program.body_loc
            if not hits:
                found.append(
                    Diagnostic(
                        Kind.UnmatchedStackPath,
                        anchor,
                        f"Execution path consumes [{', '.join(consumed)}] which matches no stack declaration",
                    )
                )
            elif len(hits) > 1:
                found.append(
                    Diagnostic(
                        Kind.UnmatchedStackPath,
                        anchor,
                        f"Execution path consumes [{', '.join(consumed)}] which matches "
                        f"{len(hits)} stack declarations ambiguously",
                    )
                )
            else:
                matched = hits[0]
                used_decls.add(matched)
        result.append(PathConsumption(tuple(st.path), consumed, matched, tuple(st.uses), st.returns, peeks))

    if not found:
        for i, d in enumerate(program.decls):
            if i not in used_decls:
                found.append(
                    Diagnostic(
                        Kind.UnmatchedStackPath,
                        d.loc,
                        f"Stack declaration is not consumed by any execution path: {d.describe()}",
                    )
                )
        found.extend(_layout_conflicts(program, result))
    if found:
        raise DiagnosticError(dedupe(found))
    return result


def _positions_per_path(program: Program, path: PathConsumption) -> list[tuple[Var, int]]:
    remaining = list(program.decls[path.matched_decl].names)
    out = []
    for v in path.uses:
        idx = remaining.index(v.name)
        out.append((v, idx))
        if v.loc.start not in path.peeks:
            del remaining[idx]
    return out


def _layout_conflicts(program: Program, paths: list[PathConsumption]) -> list[Diagnostic]:
    known: dict[int, int] = {}
    found = []
    for path in paths:
        for v, idx in _positions_per_path(program, path):
            prev = known.setdefault(v.loc.start, idx)
            if prev != idx:
                found.append(
                    Diagnostic(
                        Kind.UnmatchedStackPath,
                        v.loc,
                        f"Stack position of {v.name} differs between execution paths ({prev} and {idx})",
                    )
                )
    return found


def variable_positions(program: Program, paths: list[PathConsumption]) -> dict[int, int]:
    """Map each variable reference (by offset) to its index among unconsumed parameters."""
    out: dict[int, int] = {}
    for path in paths:
        if path.matched_decl is None:
            continue
        for v, idx in _positions_per_path(program, path):
            out[v.loc.start] = idx
    return out


def check_liveness(program: Program, *, allow_hash_bound_keys: bool = False) -> list[Diagnostic]:
    try:
        analyze_liveness(program, allow_hash_bound_keys=allow_hash_bound_keys)
    except DiagnosticError as exc:
        return exc.diagnostics
    return []
