"""Command-line front end.

Exit codes: 0 Correct, 1 Incorrect, 2 Inconclusive, 3 tool error (bad input,
translation failure, solver failure). In oracle mode 0 means no disagreement
was found and 1 means at least one was.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .datamodel import EnumerationBounds, ModelError, Variable, load_data_model, load_object_model
from .ocl import OclError
from .ocl2msfol import UnsupportedConstruct
from .prover import (
    ProblemError, SolverConfig, SolverError, all_theories, check, check_all, decide, emit_all, make_problem, cross_check,
)
from .relational import instance_dml, schema_ddl
from .sql import SqlError

TOOL_ERROR = 3
DEFAULT_BOUNDS = "objects=2;Integer=null,17,19;String=null,a"


@dataclass(frozen=True)
class RunConfig:
    data_model: str
    ocl: str
    sql: str
    variables: tuple[Variable, ...] = ()
    assumptions: tuple[str, ...] = ()
    solver: str | None = None
    timeout: float = 60.0
    jobs: int = 1
    emit_dir: str | None = None
    bounds: str = DEFAULT_BOUNDS
    mode: str = "prove"
    name: str = "problem"
    emit_sql: bool = False
    object_model: str | None = None

    def __post_init__(self):
        if self.mode == "prove" and not self.solver:
            raise ValueError("prove mode needs a solver (--solver or OCLSQL_SOLVER)")
        if self.mode == "emit" and not self.emit_dir:
            raise ValueError("emit mode needs --emit-dir")


def _read(path: str, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ValueError(f"cannot read {what} {path!r}: {e.strerror or e}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="oclsql", description="Check that a SQL select statement implements an OCL Boolean constraint.")
    ap.add_argument("--data-model", required=True, metavar="PATH", help="data model (JSON)")
    ocl = ap.add_mutually_exclusive_group(required=True)
    ocl.add_argument("--ocl", metavar="PATH", help="file holding the OCL expression")
    ocl.add_argument("--ocl-inline", metavar="STR", help="the OCL expression itself")
    sql = ap.add_mutually_exclusive_group(required=True)
    sql.add_argument("--sql", metavar="PATH", help="file holding the SQL select statement")
    sql.add_argument("--sql-inline", metavar="STR", help="the SQL select statement itself")
    ap.add_argument("--var", action="append", default=[], metavar="NAME:TYPE",
                    help="free variable declaration, repeatable (e.g. self:Student)")
    ap.add_argument("--assume", action="append", default=[], metavar="STR",
                    help="OCL Boolean assumption over the variables, repeatable")
    ap.add_argument("--solver", metavar="PATH", default=None,
                    help="solver command (default: $OCLSQL_SOLVER), e.g. z3 or 'oclsql-cvc5 --opt mbqi=true'")
    ap.add_argument("--timeout", type=float, default=60.0, metavar="SECS", help="per-theory timeout (default 60)")
    ap.add_argument("--jobs", type=int, default=1, help="theories checked concurrently (default 1)")
    ap.add_argument("--emit-dir", metavar="DIR", help="where .smt2 files go (prove mode default: current dir)")
    ap.add_argument("--oracle-bounds", metavar="SPEC", default=DEFAULT_BOUNDS,
                    help=f"enumeration bounds for oracle mode (default {DEFAULT_BOUNDS!r})")
    ap.add_argument("--mode", choices=("prove", "emit", "oracle"), default="prove")
    ap.add_argument("--name", help="case name used in file names (default: OCL file stem or 'problem')")
    ap.add_argument("--emit-sql", action="store_true",
                    help="also write schema.sql (and data.sql with --object-model) to the emit directory")
    ap.add_argument("--object-model", metavar="PATH", help="object model (JSON) for --emit-sql")
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    name = args.name or (Path(args.ocl).stem if args.ocl else "problem")
    emit_dir = args.emit_dir or ("." if args.mode == "prove" else None)
    return RunConfig(
        data_model=args.data_model,
        ocl=args.ocl_inline if args.ocl_inline is not None else _read(args.ocl, "OCL file"),
        sql=args.sql_inline if args.sql_inline is not None else _read(args.sql, "SQL file"),
        variables=tuple(Variable.parse(v) for v in args.var),
        assumptions=tuple(args.assume),
        solver=args.solver or os.environ.get("OCLSQL_SOLVER") or None,
        timeout=args.timeout, jobs=args.jobs, emit_dir=emit_dir, bounds=args.oracle_bounds,
        mode=args.mode, name=name, emit_sql=args.emit_sql, object_model=args.object_model)


def run(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    dm = load_data_model(_read(cfg.data_model, "data model"))
    p = make_problem(dm, cfg.ocl, cfg.sql, cfg.variables, cfg.assumptions, cfg.name)
    if cfg.emit_dir:
        d = Path(cfg.emit_dir)
        d.mkdir(parents=True, exist_ok=True)
        for fname, text in emit_all(p).items():
            (d / fname).write_text(text, encoding="utf-8")
            if cfg.mode == "emit":
                print(d / fname, file=out)
        if cfg.emit_sql:
            (d / "schema.sql").write_text(schema_ddl(dm), encoding="utf-8")
            if cfg.object_model:
                om = load_object_model(_read(cfg.object_model, "object model"), dm)
                (d / "data.sql").write_text(instance_dml(om, dm), encoding="utf-8")
    if cfg.mode == "emit":
        return 0
    if cfg.mode == "oracle":
        rep = cross_check(p, EnumerationBounds.parse(cfg.bounds))
        print(rep.summary(), file=out)
        for kind, ws in rep.samples.items():
            for w in ws:
                print(f"{kind}: {_describe(w)}", file=out)
        return 0 if rep.agrees_with_correct else 1
    scfg = SolverConfig(cfg.solver, cfg.timeout, cfg.jobs)
    theories = all_theories(p)
    if scfg.jobs > 1:
        results = check_all(theories, scfg)
        for k, r in results.items():
            print(f"{cfg.name}-{k}: {r.value}", file=out)
    else:
        results = {}
        for k, th in theories.items():
            results[k] = check(th, scfg)
            print(f"{cfg.name}-{k}: {results[k].value}", file=out, flush=True)
    verdict = decide(results)
    print(f"Verdict: {verdict}", file=out)
    return verdict.exit_code


def _describe(w) -> str:
    objs = ", ".join(f"{o}" for o in w.om.objects) or "no objects"
    vals = ", ".join(f"{oid}.{a}={v!r}" for (oid, a), v in w.om.values)
    links = ", ".join(f"{l.assoc}({l.left},{l.right})" for l in w.om.links)
    sigma = ", ".join(f"{k}={v}" for k, v in w.sigma.items())
    return f"[{objs}] [{vals}] [{links}] sigma[{sigma}] OCL={w.ocl} SQL={w.sql}"


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(config_from_args(args))
    except (ModelError, OclError, SqlError, ProblemError, UnsupportedConstruct, SolverError, ValueError) as e:
        print(f"oclsql: error: {e}", file=sys.stderr)
        return TOOL_ERROR


if __name__ == "__main__":
    sys.exit(main())
