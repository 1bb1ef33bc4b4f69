"""Command-line driver: ``bithoven check|compile|run FILE``.

Exit codes: 0 on success, 1 on diagnostics or a failed run, 2 on usage or
I/O errors.  Diagnostics go to stderr, artifacts to stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence, TextIO

from .codegen import compile as compile_program
from .diagnostics import Diagnostic, DiagnosticError, format_diagnostic
from .nodes import TARGETS
from .pipeline import Options, check_source
from .script import serialize_asm, serialize_hex
from .vm import ExecContext, exec_script, load_oracle

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bithoven", description="Check, compile and run Bithoven contracts.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("input", help="path to a .bithoven source file")
        p.add_argument("--target", choices=TARGETS, help="override the target pragma")
        p.add_argument("--diagnostics-format", choices=("text", "json"), default="text")
        p.add_argument("--allow-hash-bound-keys", action="store_true",
                       help="accept a variable key bound by a preceding hash check")
        p.add_argument("--no-peephole", action="store_true", help=argparse.SUPPRESS)

    common(sub.add_parser("check", help="run the parser and all analysis passes"))
    p_compile = sub.add_parser("compile", help="emit Bitcoin Script")
    common(p_compile)
    p_compile.add_argument("--format", choices=("asm", "hex"), default="asm")
    p_run = sub.add_parser("run", help="compile and execute under a spending context")
    common(p_run)
    p_run.add_argument("--witness", nargs="*", default=[], metavar="HEX",
                       help="witness items, bottom of the stack first")
    p_run.add_argument("--sequence", type=int, default=0)
    p_run.add_argument("--locktime", type=int, default=0)
    p_run.add_argument("--oracle", metavar="TSV", help="signature oracle table")
    return parser


def _report(diags: list[Diagnostic], fmt: str, err: TextIO) -> None:
    if fmt == "json":
        err.write(json.dumps([d.to_dict() for d in diags]) + "\n")
    else:
        for d in diags:
            err.write(format_diagnostic(d) + "\n")


def main(argv: Optional[Sequence[str]] = None, out: TextIO = None, err: TextIO = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    try:
        with open(args.input, encoding="utf-8") as fh:
            source = fh.read()
    except OSError as exc:
        err.write(f"bithoven: cannot read {args.input}: {exc.strerror}\n")
        return EXIT_USAGE

    opts = Options(allow_hash_bound_keys=args.allow_hash_bound_keys, peephole=not args.no_peephole)
    program, diags = check_source(source, opts)
    if diags:
        _report(diags, args.diagnostics_format, err)
        return EXIT_DIAGNOSTICS
    if args.command == "check":
        return EXIT_OK

    try:
        script = compile_program(
            program,
            args.target,
            peephole_opt=opts.peephole,
            allow_hash_bound_keys=opts.allow_hash_bound_keys,
        )
    except DiagnosticError as exc:
        _report(exc.diagnostics, args.diagnostics_format, err)
        return EXIT_DIAGNOSTICS

    if args.command == "compile":
        text = serialize_asm(script) if args.format == "asm" else serialize_hex(script).hex()
        out.write(text + "\n")
        return EXIT_OK

    try:
        witness = tuple(bytes.fromhex(w) for w in args.witness)
        oracle = load_oracle(args.oracle) if args.oracle else {}
    except (ValueError, OSError) as exc:
        err.write(f"bithoven: {exc}\n")
        return EXIT_USAGE
    ctx = ExecContext(witness, args.sequence, args.locktime, oracle)
    result = exec_script(script, ctx)
    out.write(f"{result}\n")
    out.write(" ".join(item.hex() for item in result.stack) + "\n")
    if not result.success and result.reason:
        err.write(f"bithoven: {result.reason}\n")
    return EXIT_OK if result.success else EXIT_DIAGNOSTICS


if __name__ == "__main__":
    sys.exit(main())
