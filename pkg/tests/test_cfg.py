import dataclasses
import random

import pytest

from bithoven.cfg import ENTRY, EXIT, build_cfg, check_control_flow, outcomes
from bithoven.diagnostics import Kind
from bithoven.nodes import Binary, BoolLit, CheckSig, If, Older, Return, Unary
from bithoven.parser import parse_program

from support import PK_ALICE, ProgramGenerator, control_flow_oracle, read_fixture, source

SIG = f'checksig(s, "{PK_ALICE}")'


def cf_kinds(program) -> set[str]:
    return {d.kind.value for d in check_control_flow(build_cfg(program), program)}


def parse(body: str, decls: str = "(s: signature, c: bool, d: bool)"):
    return parse_program(source(decls, body))


@pytest.mark.parametrize(
    "name, kind, line, col",
    [
        ("l02_nosig.bithoven", Kind.NoSigRequired, 4, 2),
        ("l17_no_return.bithoven", Kind.NoReturn, 7, 5),
        ("l18_unreachable.bithoven", Kind.UnreachableCode, 7, 5),
    ],
)
def test_corpus(name, kind, line, col):
    prog = parse_program(read_fixture(name))
    (d,) = check_control_flow(build_cfg(prog), prog)
    assert (d.kind, d.location.line, d.location.column) == (kind, line, col)
    assert cf_kinds(prog) == {kind.value}


def test_graph_shape_for_htlc():
    cfg = build_cfg(parse_program(read_fixture("htlc.bithoven")))
    # entry, exit, if, older, return, verify, return
    assert len(cfg.nodes) == 7
    if_node = cfg.successors(ENTRY)[0]
    assert sorted(label for _, label in cfg.edges[if_node]) == ["else", "then"]
    returns = [n.id for n in cfg.nodes if n.terminates]
    assert all(cfg.successors(r) == [] for r in returns)
    assert all(EXIT not in cfg.successors(n.id) for n in cfg.nodes)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("c", (True, True)),
        ("true", (True, False)),
        (SIG, (False, True)),
        (f"! {SIG}", (True, False)),
        (f"c && {SIG}", (False, True)),
        (f"c || {SIG}", (True, True)),
        (f"{SIG} == false", (True, False)),
        (f"c && ! c", (True, True)),  # occurrences are treated independently
    ],
)
def test_outcomes(text, expected):
    assert outcomes(parse(f"return {text};").body[0].expr) == expected


def test_empty_body_has_no_return():
    assert cf_kinds(parse("")) == {"NoReturn"}


def test_guarded_fallthrough_needs_signature():
    body = f"if c {{ verify {SIG}; }} return d;"
    assert cf_kinds(parse(body)) == {"NoSigRequired"}
    assert cf_kinds(parse(f"if c {{ verify {SIG}; }} else {{ verify ! c; }} return {SIG};")) == set()


# -- mutation testing against the path-enumeration oracle ---------------------


def _rebuild(stmts, fn, counter):
    out = []
    for s in stmts:
        if isinstance(s, If):
            s = dataclasses.replace(s, then=_rebuild(s.then, fn, counter), else_=_rebuild(s.else_, fn, counter))
        out.append(s)
    counter[0] -= 1
    return fn(tuple(out)) if counter[0] == 0 else tuple(out)


def _strip_sigs(e, value):
    if isinstance(e, CheckSig):
        return BoolLit(value, e.loc)
    if isinstance(e, Unary):
        return dataclasses.replace(e, operand=_strip_sigs(e.operand, value))
    if isinstance(e, Binary):
        return dataclasses.replace(e, lhs=_strip_sigs(e.lhs, value), rhs=_strip_sigs(e.rhs, value))
    return e


def _mutations(rng):
    def drop_last(block):
        return block[:-1]

    def trailing_stmt(block):
        return block + (Older(5, block[-1].loc if block else _LOC),)

    def strip(block):
        value = rng.random() < 0.5
        return tuple(
            dataclasses.replace(s, expr=_strip_sigs(s.expr, value)) if hasattr(s, "expr") else
            dataclasses.replace(s, cond=_strip_sigs(s.cond, value)) if isinstance(s, If) else s
            for s in block
        )

    return [drop_last, trailing_stmt, strip]


_LOC = parse("return true;").body[0].loc


def _count_blocks(stmts):
    return 1 + sum(_count_blocks(s.then) + _count_blocks(s.else_) for s in stmts if isinstance(s, If))


def test_generated_programs_are_clean_and_agree_with_oracle():
    gen = ProgramGenerator(random.Random(5))
    for _ in range(200):
        prog = parse_program(gen.program())
        assert control_flow_oracle(prog) == set() == cf_kinds(prog)


def test_mutants_agree_with_oracle():
    rng = random.Random(9)
    gen = ProgramGenerator(rng)
    seen = set()
    for _ in range(300):
        prog = parse_program(gen.program())
        fn = rng.choice(_mutations(rng))
        target = rng.randrange(_count_blocks(prog.body)) + 1
        body = _rebuild(prog.body, fn, [target])
        mutant = dataclasses.replace(prog, body=body)
        expected = control_flow_oracle(mutant)
        assert cf_kinds(mutant) == expected, (fn.__name__, mutant)
        seen |= expected
    assert seen == {"NoReturn", "UnreachableCode", "NoSigRequired"}


def test_verified_signature_with_constant_return_is_accepted():
    assert cf_kinds(parse(f"verify ({SIG}); return true;")) == set()
