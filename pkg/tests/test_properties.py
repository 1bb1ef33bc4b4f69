import random

from hypothesis import given, settings, strategies as st

from bithoven.codegen import compile
from bithoven.parser import parse_program
from bithoven.pipeline import Options, check_source
from bithoven.vm import ExecContext, exec_bithoven, exec_script
from bithoven.vm.hashes import sha256
from bithoven.vm.scriptnum import num_decode, num_encode

from support import PK_ALICE, ProgramGenerator, contexts_for, source

SCRIPT_INTS = st.integers(min_value=-(2**31 - 1), max_value=2**31 - 1)


@given(SCRIPT_INTS)
def test_num_round_trip(n):
    assert num_decode(num_encode(n)) == n


@given(SCRIPT_INTS, SCRIPT_INTS)
def test_num_encoding_is_injective(a, b):
    assert (num_encode(a) == num_encode(b)) == (a == b)


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_locktime_range_fits_five_bytes(n):
    assert len(num_encode(n)) <= 5 and num_decode(num_encode(n), 5) == n


def _generated(seed: int, count: int):
    rng = random.Random(seed)
    gen = ProgramGenerator(rng)
    for _ in range(count):
        prog = parse_program(gen.program(rng.choice(["legacy", "segwit", "taproot"])))
        yield prog, contexts_for(rng, prog, 4)


def test_peephole_preserves_behaviour():
    for prog, contexts in _generated(31, 80):
        fused, plain = compile(prog), compile(prog, peephole_opt=False)
        assert len(fused) <= len(plain)
        for ctx in contexts:
            assert exec_script(fused, ctx) == exec_script(plain, ctx)


def test_success_stacks_agree_under_legacy():
    # without the clean-stack rule, leftover items must match item for item
    for prog, contexts in _generated(47, 60):
        script = compile(prog, "legacy")
        for ctx in contexts:
            direct, compiled = exec_bithoven(prog, ctx, "legacy"), exec_script(script, ctx)
            assert direct.success == compiled.success
            if direct.success:
                assert direct.stack == compiled.stack


@settings(max_examples=60, deadline=None)
@given(st.binary(max_size=40), st.binary(max_size=40), st.booleans())
def test_hash_bound_key_agrees(key, claimed, sig_ok):
    body = f'verify sha256 k == "{sha256(claimed).hex()}"; return checksig(s, k);'
    text = source("(s: signature, k: pubkey)", body)
    opts = Options(allow_hash_bound_keys=True)
    prog, diags = check_source(text, opts)
    assert diags == []
    assert check_source(text)[1] != []
    script = compile(prog, allow_hash_bound_keys=True)
    ctx = ExecContext((key, b"\x30"), sig_oracle={(b"\x30", key): sig_ok})
    direct = exec_bithoven(prog, ctx, allow_hash_bound_keys=True)
    assert direct.success == exec_script(script, ctx).success
    if key == claimed:
        assert direct.success == sig_ok


@given(st.sampled_from(["legacy", "segwit", "taproot"]), st.integers(min_value=0, max_value=2**32 - 1))
def test_relative_timelock_threshold(target, seq):
    prog, _ = check_source(source("(s: signature)", f'older 70000; return checksig(s, "{PK_ALICE}");', target))
    ctx = ExecContext((b"\x30",), sequence=seq, sig_oracle={(b"\x30", bytes.fromhex(PK_ALICE)): True})
    assert exec_script(compile(prog), ctx).success == exec_bithoven(prog, ctx).success == (seq >= 70000)
