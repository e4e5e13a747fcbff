"""Run an SMT-LIB2 file through the cvc5 Python bindings and print the status line.

Usage: ``python -m oclsql.cvc5_runner [--opt name=value ...] FILE.smt2``

This gives cvc5 the same command-line shape as a solver executable so the
prover can drive it as a subprocess.
"""

from __future__ import annotations

import argparse
import sys


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="oclsql-cvc5", description=__doc__.splitlines()[0])
    ap.add_argument("file")
    ap.add_argument("--opt", action="append", default=[], metavar="NAME=VALUE",
                    help="cvc5 option, repeatable (e.g. --opt mbqi=true)")
    args = ap.parse_args(argv)
    try:
        import cvc5
    except ImportError:
        print("(error \"the cvc5 Python package is not installed\")")
        return 3
    tm = cvc5.TermManager()
    solver = cvc5.Solver(tm)
    for opt in args.opt:
        name, _, value = opt.partition("=")
        solver.setOption(name, value or "true")
    sm = cvc5.SymbolManager(tm)
    parser = cvc5.InputParser(solver, sm)
    try:
        with open(args.file, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        print(f"(error \"{e}\")")
        return 3
    parser.setStringInput(cvc5.InputLanguage.SMT_LIB_2_6, text, args.file)
    try:
        while True:
            cmd = parser.nextCommand()
            if cmd.isNull():
                break
            out = cmd.invoke(solver, sm)
            if out:
                sys.stdout.write(out if out.endswith("\n") else out + "\n")
                sys.stdout.flush()
    except RuntimeError as e:
        print(f"(error \"{str(e).replace(chr(34), chr(39))}\")")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
