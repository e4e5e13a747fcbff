"""Correctness problems: theory assembly, solver driving, verdicts and the oracle cross-check.

A select statement ``sel`` with one Boolean item implements an OCL Boolean
expression ``expr`` when, for every instance and assignment, ``sel`` returns
exactly one row and that row's cell is TRUE exactly when ``expr`` is true.
Three theories encode the failure cases (C1: not exactly one row; C2: ``expr``
true but the cell is not TRUE; C3: the cell is TRUE but ``expr`` is not true)
and every scalar subselect adds a single-row obligation.
"""

from __future__ import annotations

import enum
import os
import shlex
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import msfol as F
from .datamodel import (
    DataModel, Obj, EnumerationBounds, Variable, check_variables, enumerate_assignments, enumerate_object_models,
)
from .msfol import Theory
from .ocl import BOOLEAN, OclExpr, eval_ocl, free_variables, parse_ocl, print_ocl
from .ocl2msfol import DataSymbols, TranslationContext, inval_of, null_of, declare_frees, frees_axioms, o2f_data, translate_boolean
from .relational import o2s, o2s_inst, o2s_inst_assignment
from .sql import BOOL as SQL_BOOL
from .sql import ScalarSubqueryError, Select, VarE, exec_sql, parse_select, print_select, sub_expressions
from .sql2msfol import NamingRegistry, s2f_schema, s2f_select, unique_row


class ProblemError(ValueError):
    pass


@dataclass(frozen=True)
class CorrectnessProblem:
    dm: DataModel
    expr: OclExpr
    sel: Select
    frees: tuple[Variable, ...] = ()
    assumptions: tuple[OclExpr, ...] = ()
    name: str = "problem"

    def __post_init__(self):
        if len(self.sel.items) != 1:
            raise ProblemError(f"the select statement must have exactly one item, it has {len(self.sel.items)}")
        if self.sel.items[0].expr.type != SQL_BOOL:
            raise ProblemError("the selected item must be Boolean")
        for e in (self.expr,) + self.assumptions:
            if e.type != BOOLEAN:
                raise ProblemError(f"{print_ocl(e)} is not a Boolean expression")
        declared = {v.name for v in self.frees}
        used = set().union(*(free_variables(e) for e in (self.expr,) + self.assumptions)) | _sql_vars(self.sel)
        if used - declared:
            raise ProblemError(f"undeclared variables: {', '.join(sorted(used - declared))}")


def _sql_vars(s: Select) -> set[str]:
    out: set[str] = set()
    stack = [i.expr for i in s.items] + [e for e in (s.on, s.where) if e is not None]
    subs = [f.select for f in s.sources if hasattr(f, "select")]
    while stack:
        e = stack.pop()
        if isinstance(e, VarE):
            out.add(e.name)
        if hasattr(e, "select"):
            subs.append(e.select)
        stack.extend(sub_expressions(e))
    for sub in subs:
        out |= _sql_vars(sub)
    return out


def make_problem(dm: DataModel, ocl_text: str, sql_text: str, variables: Sequence[Variable] = (),
                 assumptions: Sequence[str] = (), name: str = "problem") -> CorrectnessProblem:
    variables = tuple(variables)
    check_variables(dm, variables)
    expr = parse_ocl(ocl_text, dm, variables)
    sel = parse_select(sql_text, o2s(dm), variables)
    assumed = tuple(parse_ocl(a, dm, variables) for a in assumptions)
    return CorrectnessProblem(dm, expr, sel, variables, assumed, name)


# -- theories ----------------------------------------------------------------


class _Build:
    """Every theory of one problem, translated once so names stay consistent."""

    def __init__(self, p: CorrectnessProblem):
        self.p = p
        ctx = TranslationContext(p.dm)
        free_decls = declare_frees(p.frees, ctx)
        frees_ax = frees_axioms(p.frees, ctx)
        assumed = [translate_boolean(a, ctx)["true"] for a in p.assumptions]
        assume_defs = list(ctx.defs)
        self.truth = translate_boolean(p.expr, ctx)
        expr_defs = [d for d in ctx.defs if d not in assume_defs]
        self.base = F.union(
            o2f_data(p.dm), s2f_schema(p.dm).theory,
            F.make_theory(frees_ax + assume_defs + assumed, declarations=free_decls, comments=ctx.comments))
        self.expr_defs = F.make_theory(expr_defs, comments=ctx.comments)
        frees = {v.name: ctx.env[v.name] for v in p.frees}
        self.sel = s2f_select(p.sel, NamingRegistry(p.sel), p.dm, frees)
        self.sel_theory = self.sel.theory()

    def all_true(self) -> F.Formula:
        x = F.Var("x", F.INT)
        item = self.sel.items[0]
        return F.forall([x], F.implies(self.sel.index(x), F.eq(item(x), F.SQL_TRUE)))

    def theory(self, kind: str) -> Theory:
        if kind == "C1":
            return F.union(self.base, self.sel_theory, F.make_theory(goals=[F.not_(unique_row(self.sel.index))]))
        if kind == "C2":
            return F.union(self.base, self.expr_defs, self.sel_theory, F.make_theory(
                [self.truth["true"]], goals=[F.not_(self.all_true())]))
        if kind == "C3":
            return F.union(self.base, self.expr_defs, self.sel_theory, F.make_theory(
                [self.all_true()], goals=[F.not_(self.truth["true"])]))
        raise ValueError(f"unknown theory kind {kind!r}")

    def obligations(self) -> list[tuple[str, Theory, str]]:
        out = []
        for k, ob in enumerate(self.sel.obligations, 1):
            th = F.union(self.base, F.make_theory(ob.axioms, goals=[ob.goal]))
            out.append((f"O{k}", th, ob.source))
        return out


def build_theory(kind: str, p: CorrectnessProblem) -> Theory:
    return _Build(p).theory(kind)


def build_obligations(p: CorrectnessProblem) -> list[tuple[str, Theory, str]]:
    """(id, theory, subselect text) per scalar subselect occurrence."""
    return _Build(p).obligations()


def all_theories(p: CorrectnessProblem) -> dict[str, Theory]:
    """Obligations first, then C1, C2, C3 (the order verdicts are decided in)."""
    b = _Build(p)
    out = {name: th for name, th, _ in b.obligations()}
    for k in ("C1", "C2", "C3"):
        out[k] = b.theory(k)
    return out


def emit_all(p: CorrectnessProblem) -> dict[str, str]:
    """File name -> SMT-LIB2 text, e.g. ``exm1-C1.smt2``."""
    b = _Build(p)
    out = {}
    for name, th, src in b.obligations():
        out[f"{p.name}-{name}.smt2"] = F.emit_smtlib(th, title=f"{p.name} {name}: single row for {src}")
    titles = {"C1": "the select does not return exactly one row",
              "C2": "the OCL expression is true but the selected cell is not TRUE",
              "C3": "the selected cell is TRUE but the OCL expression is not true"}
    for k in ("C1", "C2", "C3"):
        out[f"{p.name}-{k}.smt2"] = F.emit_smtlib(b.theory(k), title=f"{p.name} {k}: {titles[k]}")
    return out


# -- solving -----------------------------------------------------------------


class SolverResult(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"
    TIMEOUT = "timeout"


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """``command`` is the solver executable, optionally followed by arguments (shell-quoted)."""

    command: str
    timeout: float = 60.0
    jobs: int = 1

    @property
    def argv(self) -> list[str]:
        argv = shlex.split(self.command)
        if not argv:
            raise SolverError("empty solver command")
        return argv


def parse_solver_output(out: str) -> SolverResult:
    for line in out.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("(error"):
            raise SolverError(f"solver reported an error: {line}")
        try:
            return SolverResult(line.split()[0])  # e.g. cvc5's "unknown (INCOMPLETE)"
        except ValueError:
            raise SolverError(f"unparseable solver output: {line!r}") from None
    raise SolverError("the solver produced no output")


def check_text(smt: str, cfg: SolverConfig) -> SolverResult:
    with tempfile.NamedTemporaryFile("w", suffix=".smt2", delete=False) as fh:
        fh.write(smt)
        path = fh.name
    try:
        return check_file(path, cfg)
    finally:
        os.unlink(path)


def check_file(path: str, cfg: SolverConfig) -> SolverResult:
    try:
        proc = subprocess.run(cfg.argv + [path], capture_output=True, text=True, timeout=cfg.timeout)
    except subprocess.TimeoutExpired:
        return SolverResult.TIMEOUT
    except OSError as e:
        raise SolverError(f"cannot run solver {cfg.argv[0]!r}: {e}") from None
    try:
        return parse_solver_output(proc.stdout)
    except SolverError as e:
        err = proc.stderr.strip().splitlines()
        raise SolverError(f"{e}{' / ' + err[-1] if err else ''}") from None


def check(t: Theory, cfg: SolverConfig) -> SolverResult:
    return check_text(F.emit_smtlib(t), cfg)


def check_all(theories: Mapping[str, Theory], cfg: SolverConfig) -> dict[str, SolverResult]:
    names = list(theories)
    if cfg.jobs <= 1:
        return {n: check(theories[n], cfg) for n in names}
    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        results = list(pool.map(lambda n: check(theories[n], cfg), names))
    return dict(zip(names, results))


@dataclass(frozen=True)
class Verdict:
    kind: str  # 'Correct' | 'Incorrect' | 'Inconclusive'
    theories: tuple[str, ...] = ()

    def __str__(self) -> str:
        return self.kind if not self.theories else f"{self.kind} ({', '.join(self.theories)})"

    @property
    def exit_code(self) -> int:
        return {"Correct": 0, "Incorrect": 1, "Inconclusive": 2}[self.kind]


CORRECT = Verdict("Correct")


def decide(results: Mapping[str, SolverResult]) -> Verdict:
    """Any SAT: Incorrect (first SAT theory); else UNKNOWN/TIMEOUT: Inconclusive; else Correct."""
    for name, r in results.items():
        if r is SolverResult.SAT:
            return Verdict("Incorrect", (name,))
    open_ = tuple(n for n, r in results.items() if r in (SolverResult.UNKNOWN, SolverResult.TIMEOUT))
    return Verdict("Inconclusive", open_) if open_ else CORRECT


@dataclass(frozen=True)
class ProofReport:
    results: dict
    verdict: Verdict


def prove(p: CorrectnessProblem, cfg: SolverConfig) -> ProofReport:
    results = check_all(all_theories(p), cfg)
    return ProofReport(results, decide(results))


# -- oracle ------------------------------------------------------------------


@dataclass(frozen=True)
class Witness:
    om: object
    sigma: dict
    ocl: object
    sql: object


@dataclass
class OracleReport:
    """Counts over every considered (instance, assignment), plus the first few witnesses of each kind."""

    instances: int = 0
    assignments: int = 0
    considered: int = 0
    discrepancies: int = 0
    row_count_failures: int = 0
    subselect_failures: int = 0
    samples: dict = field(default_factory=lambda: {"discrepancy": [], "row-count": [], "subselect": []})

    @property
    def agrees_with_correct(self) -> bool:
        return not (self.discrepancies or self.row_count_failures or self.subselect_failures)

    def summary(self) -> str:
        return "\n".join([
            f"instances: {self.instances}",
            f"assignments: {self.assignments}",
            f"considered (assumptions true): {self.considered}",
            f"discrepancies: {self.discrepancies}",
            f"row-count failures: {self.row_count_failures}",
            f"scalar-subselect failures: {self.subselect_failures}",
        ])


def cross_check(p: CorrectnessProblem, b: EnumerationBounds, *, samples: int = 3) -> OracleReport:
    """Compare OCL evaluation with SQL execution on every bounded instance and assignment.

    Object variables range over the objects of their class; primitive
    variables over the bounds' domain for their type.
    """
    rep = OracleReport()
    domains = {k: v for k, v in b.domains.items() if "." not in k}

    def record(kind, w):
        if len(rep.samples[kind]) < samples:
            rep.samples[kind].append(w)

    for om in enumerate_object_models(p.dm, b):
        rep.instances += 1
        db = o2s_inst(om, p.dm)
        for sigma in enumerate_assignments(p.frees, om, domains, nullable_objects=False):
            rep.assignments += 1
            env = sigma.as_dict()
            if any(eval_ocl(om, env, a) is not True for a in p.assumptions):
                continue
            rep.considered += 1
            ocl = eval_ocl(om, env, p.expr)
            try:
                rows = exec_sql(db, o2s_inst_assignment(sigma), p.sel).rows
            except ScalarSubqueryError as e:
                rep.subselect_failures += 1
                record("subselect", Witness(om, env, ocl, str(e)))
                continue
            if len(rows) != 1:
                rep.row_count_failures += 1
                record("row-count", Witness(om, env, ocl, rows))
                continue
            if (ocl is True) != (rows[0][0] is True):
                rep.discrepancies += 1
                record("discrepancy", Witness(om, env, ocl, rows[0][0]))
    return rep


# -- ground instances ---------------------------------------------------------


def instance_axioms(dm: DataModel, om, sigma: Mapping, env: Mapping[str, F.Term]) -> list[F.Formula]:
    """Ground facts pinning the MSFOL data symbols (and the free constants in ``env``) to ``om``/``sigma``."""
    syms = DataSymbols(dm)
    objs = {o.oid: F.Decl(f"o#{o.oid}", (), F.CLASSIFIER)() for o in om.objects}
    axioms: list[F.Formula] = []
    consts = list(objs.values())
    for i, a in enumerate(consts):
        for b in consts[i + 1:]:
            axioms.append(F.not_(F.eq(a, b)))

    def term(v, sort):
        if v is None:
            return null_of(sort)
        if isinstance(v, Obj):
            return objs[v.oid]
        lit = F.IntLit(v) if sort == F.INT else F.StrLit(v)
        axioms.append(F.and_(F.not_(F.eq(lit, null_of(sort))), F.not_(F.eq(lit, inval_of(sort)))))
        return lit

    c, d = F.Var("c", F.CLASSIFIER), F.Var("d", F.CLASSIFIER)
    for cls in dm.classes:
        members = [F.eq(c, objs[o.oid]) for o in om.of_class(cls)]
        axioms.append(F.forall([c], F.iff(syms.classes[cls](c), F.or_(*members))))
    for o in om.objects:
        for a in dm.attributes_of(o.cls):
            fn = syms.attribute(o.cls, a.name)
            axioms.append(F.eq(fn(objs[o.oid]), term(om.value(o, a.name), fn.result)))
    for s in dm.associations:
        pairs = [F.and_(F.eq(c, objs[l.left]), F.eq(d, objs[l.right])) for l in om.linked(s.name)]
        axioms.append(F.forall([c, d], F.iff(syms.associations[s.name](c, d), F.or_(*pairs))))
    for name, v in (sigma.items() if isinstance(sigma, Mapping) else sigma.bindings):
        t = env[name]
        axioms.append(F.eq(t, term(v, t.sort)))
    return axioms
