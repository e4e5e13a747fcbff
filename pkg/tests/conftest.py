import json
import shutil
from pathlib import Path

import pytest

from oclsql.datamodel import Variable, load_data_model
from oclsql.prover import SolverConfig, make_problem

ROOT = Path(__file__).resolve().parent.parent
CASES = ROOT / "cases"
DOCS = ROOT / "docs"

Z3 = shutil.which("z3")

try:
    import cvc5  # noqa: F401
    HAVE_CVC5 = True
except ImportError:
    HAVE_CVC5 = False

needs_z3 = pytest.mark.skipif(Z3 is None, reason="z3 executable not on PATH")


def z3_config(timeout: float = 60.0) -> SolverConfig:
    return SolverConfig("z3", timeout)


def cvc5_config(timeout: float = 60.0) -> SolverConfig:
    import sys
    return SolverConfig(f"{shlex_quote(sys.executable)} -m oclsql.cvc5_runner --opt mbqi=true", timeout)


def shlex_quote(s: str) -> str:
    import shlex
    return shlex.quote(s)


def university():
    return load_data_model((CASES / "university.json").read_text())


CASE_META = json.loads((CASES / "cases.json").read_text())
EXAMPLE_CASES = [f"exm{i}" for i in range(1, 8)]


def case_problem(name: str, with_assumptions: bool = True):
    meta = CASE_META[name]
    return make_problem(
        university(), (CASES / f"{name}.ocl").read_text(), (CASES / f"{name}.sql").read_text(),
        [Variable.parse(v) for v in meta["vars"]], meta["assume"] if with_assumptions else [], name)


@pytest.fixture
def dm():
    return university()


def doc_tables() -> dict[str, dict[tuple[str, ...], str]]:
    """Truth tables from docs/semantics.md, keyed by their corner cell."""
    tables: dict[str, dict[tuple[str, ...], str]] = {}
    rows: list[list[str]] = []
    for line in (DOCS / "semantics.md").read_text().splitlines() + [""]:
        if line.startswith("|"):
            cells = [c.strip() for c in line.strip().strip("|").split("|")]
            if not set("".join(cells)) <= set("-"):
                rows.append(cells)
            continue
        if rows:
            head, body = rows[0], rows[1:]
            t = {}
            for r in body:
                if head[1] == "result":
                    t[(r[0],)] = r[1]
                else:
                    for col, cell in zip(head[1:], r[1:]):
                        t[(r[0], col)] = cell
            tables[head[0]] = t
            rows = []
    return tables


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
