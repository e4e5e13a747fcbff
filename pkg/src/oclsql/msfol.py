"""Many-sorted first-order logic: terms, formulas, theories and SMT-LIB2 output."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union


class SortError(TypeError):
    pass


class SignatureConflict(ValueError):
    pass


@dataclass(frozen=True)
class Sort:
    name: str

    def __str__(self) -> str:
        return self.name


INT = Sort("Int")
STRING = Sort("String")
CLASSIFIER = Sort("Classifier")
SQLBOOL = Sort("SqlBool")
BOOL = Sort("Bool")

SQLBOOL_CONSTRUCTORS = ("TRUE", "FALSE", "NULL")


@dataclass(frozen=True)
class Decl:
    """A constant (no args), function, or predicate (Bool result)."""

    name: str
    args: tuple[Sort, ...]
    result: Sort

    @property
    def kind(self) -> str:
        if not self.args:
            return "constant"
        return "predicate" if self.result == BOOL else "function"

    def __call__(self, *args: "Term") -> "App":
        return App(self, tuple(args))


# -- terms -----------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort


@dataclass(frozen=True)
class App:
    decl: Decl
    args: tuple = ()

    def __post_init__(self):
        if len(self.args) != len(self.decl.args):
            raise SortError(f"{self.decl.name} expects {len(self.decl.args)} arguments, got {len(self.args)}")
        for want, arg in zip(self.decl.args, self.args):
            if sort_of(arg) != want:
                raise SortError(f"{self.decl.name}: argument of sort {sort_of(arg)} where {want} expected")

    @property
    def sort(self) -> Sort:
        return self.decl.result


@dataclass(frozen=True)
class IntLit:
    value: int
    sort = INT


@dataclass(frozen=True)
class StrLit:
    value: str
    sort = STRING


@dataclass(frozen=True)
class SqlBoolLit:
    value: str
    sort = SQLBOOL

    def __post_init__(self):
        if self.value not in SQLBOOL_CONSTRUCTORS:
            raise ValueError(self.value)


SQL_TRUE = SqlBoolLit("TRUE")
SQL_FALSE = SqlBoolLit("FALSE")
SQL_NULL = SqlBoolLit("NULL")


# -- formulas ----------------------------------------------------------------


@dataclass(frozen=True)
class BoolConst:
    value: bool
    sort = BOOL


TOP = BoolConst(True)
BOTTOM = BoolConst(False)


@dataclass(frozen=True)
class Eq:
    left: "Term"
    right: "Term"
    sort = BOOL

    def __post_init__(self):
        if sort_of(self.left) != sort_of(self.right):
            raise SortError(f"equality between {sort_of(self.left)} and {sort_of(self.right)}")
        if sort_of(self.left) == BOOL:
            raise SortError("use Iff for formula equivalence")


@dataclass(frozen=True)
class Cmp:
    """Integer comparison."""

    op: str
    left: "Term"
    right: "Term"
    sort = BOOL

    def __post_init__(self):
        if self.op not in ("<", "<=", ">", ">="):
            raise ValueError(self.op)
        if sort_of(self.left) != INT or sort_of(self.right) != INT:
            raise SortError(f"{self.op} needs Int operands")


@dataclass(frozen=True)
class Not:
    arg: "Formula"
    sort = BOOL

    def __post_init__(self):
        _need_formula(self.arg)


@dataclass(frozen=True)
class And:
    args: tuple
    sort = BOOL

    def __post_init__(self):
        for a in self.args:
            _need_formula(a)


@dataclass(frozen=True)
class Or:
    args: tuple
    sort = BOOL

    def __post_init__(self):
        for a in self.args:
            _need_formula(a)


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"
    sort = BOOL

    def __post_init__(self):
        _need_formula(self.left)
        _need_formula(self.right)


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"
    sort = BOOL

    def __post_init__(self):
        _need_formula(self.left)
        _need_formula(self.right)


@dataclass(frozen=True)
class Forall:
    vars: tuple[Var, ...]
    body: "Formula"
    sort = BOOL

    def __post_init__(self):
        _need_formula(self.body)


@dataclass(frozen=True)
class Exists:
    vars: tuple[Var, ...]
    body: "Formula"
    sort = BOOL

    def __post_init__(self):
        _need_formula(self.body)


Term = Union[Var, App, IntLit, StrLit, SqlBoolLit]
Formula = Union[BoolConst, Eq, Cmp, Not, And, Or, Implies, Iff, Forall, Exists, App, Var]


def sort_of(t) -> Sort:
    try:
        return t.sort
    except AttributeError:
        raise SortError(f"not a term: {t!r}") from None


def _need_formula(f) -> None:
    if sort_of(f) != BOOL:
        raise SortError(f"expected a formula, got sort {sort_of(f)}")


# -- smart constructors (light simplification, deterministic) ---------------


def and_(*fs: Formula) -> Formula:
    out: list = []
    for f in fs:
        _need_formula(f)
        if f == TOP:
            continue
        if f == BOTTOM:
            return BOTTOM
        for g in f.args if isinstance(f, And) else (f,):
            if g not in out:
                out.append(g)
    if not out:
        return TOP
    return out[0] if len(out) == 1 else And(tuple(out))


def or_(*fs: Formula) -> Formula:
    out: list = []
    for f in fs:
        _need_formula(f)
        if f == BOTTOM:
            continue
        if f == TOP:
            return TOP
        for g in f.args if isinstance(f, Or) else (f,):
            if g not in out:
                out.append(g)
    if not out:
        return BOTTOM
    return out[0] if len(out) == 1 else Or(tuple(out))


def not_(f: Formula) -> Formula:
    if f == TOP:
        return BOTTOM
    if f == BOTTOM:
        return TOP
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def implies(a: Formula, b: Formula) -> Formula:
    if a == BOTTOM or b == TOP:
        return TOP
    if a == TOP:
        return b
    if b == BOTTOM:
        return not_(a)
    return Implies(a, b)


def iff(a: Formula, b: Formula) -> Formula:
    if a == b:
        return TOP
    if a == TOP:
        return b
    if b == TOP:
        return a
    if a == BOTTOM:
        return not_(b)
    if b == BOTTOM:
        return not_(a)
    return Iff(a, b)


def eq(a: Term, b: Term) -> Formula:
    if a == b:
        return TOP
    return Eq(a, b)


def forall(vs: Iterable[Var], body: Formula) -> Formula:
    vs = tuple(v for v in vs if v in free_vars(body))
    if body in (TOP, BOTTOM) or not vs:
        return body
    return Forall(vs, body)


def exists(vs: Iterable[Var], body: Formula) -> Formula:
    vs = tuple(v for v in vs if v in free_vars(body))
    if body in (TOP, BOTTOM) or not vs:
        return body
    return Exists(vs, body)


# -- traversal ---------------------------------------------------------------


def children(node) -> tuple:
    if isinstance(node, App):
        return node.args
    if isinstance(node, (Eq, Cmp, Implies, Iff)):
        return (node.left, node.right)
    if isinstance(node, Not):
        return (node.arg,)
    if isinstance(node, (And, Or)):
        return node.args
    if isinstance(node, (Forall, Exists)):
        return (node.body,)
    return ()


def walk(node) -> Iterator:
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def free_vars(node) -> set[Var]:
    if isinstance(node, Var):
        return {node}
    if isinstance(node, (Forall, Exists)):
        return free_vars(node.body) - set(node.vars)
    out: set[Var] = set()
    for c in children(node):
        out |= free_vars(c)
    return out


def symbols(node) -> list[Decl]:
    """Declarations referenced by ``node``, in first-occurrence order."""
    seen: dict[Decl, None] = {}
    for n in walk(node):
        if isinstance(n, App):
            seen.setdefault(n.decl)
    return list(seen)


def uses_sort(node, sort: Sort) -> bool:
    for n in walk(node):
        if isinstance(n, (Var, App, IntLit, StrLit, SqlBoolLit)) and sort_of(n) == sort:
            return True
        if isinstance(n, (Forall, Exists)) and any(v.sort == sort for v in n.vars):
            return True
        if isinstance(n, Eq) and sort_of(n.left) == sort:
            return True
    return False


# -- theories ----------------------------------------------------------------


@dataclass(frozen=True)
class Theory:
    declarations: tuple[Decl, ...] = ()
    axioms: tuple = ()
    goals: tuple = ()
    comments: tuple[tuple[str, str], ...] = field(default=(), compare=False)

    def __post_init__(self):
        names: dict[str, Decl] = {}
        for d in self.declarations:
            other = names.setdefault(d.name, d)
            if other != d:
                raise SignatureConflict(f"symbol {d.name!r} declared twice with different signatures")
        for f in self.axioms + self.goals:
            _need_formula(f)
            if free_vars(f):
                raise SortError(f"open formula asserted: free {sorted(v.name for v in free_vars(f))}")

    def symbol(self, name: str) -> Decl:
        for d in self.declarations:
            if d.name == name:
                return d
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(d.name == name for d in self.declarations)


def make_theory(axioms: Iterable = (), goals: Iterable = (), declarations: Iterable[Decl] = (),
                comments: Iterable[tuple[str, str]] = ()) -> Theory:
    """Build a theory, declaring every symbol its formulas use."""
    axioms = _dedup(f for f in axioms if f != TOP)
    goals = _dedup(goals)
    decls = _dedup(declarations)
    for f in axioms + goals:
        for d in symbols(f):
            if d not in decls:
                decls.append(d)
    return Theory(tuple(decls), tuple(axioms), tuple(goals), tuple(comments))


def union(*theories: Theory) -> Theory:
    decls: list[Decl] = []
    axioms: list = []
    goals: list = []
    comments: dict[str, str] = {}
    for t in theories:
        decls += t.declarations
        axioms += t.axioms
        goals += t.goals
        for k, v in t.comments:
            comments.setdefault(k, v)
    return Theory(tuple(_dedup(decls)), tuple(_dedup(axioms)), tuple(_dedup(goals)),
                  tuple(comments.items()))


def _dedup(items) -> list:
    return list(dict.fromkeys(items))


# -- SMT-LIB2 printing -------------------------------------------------------

_SIMPLE_SYMBOL = re.compile(r"^[A-Za-z~!@$%^&*_+=<>.?/\-][A-Za-z0-9~!@$%^&*_+=<>.?/\-]*$")
_RESERVED = {
    "true", "false", "and", "or", "not", "=>", "=", "ite", "let", "forall", "exists", "distinct",
    "assert", "par", "_", "!", "as", "match", "NUMERAL", "DECIMAL", "STRING", "BINARY", "HEXADECIMAL",
    "Int", "String", "Bool", "Classifier", "SqlBool", "TRUE", "FALSE", "NULL",
}


def encode_symbol(name: str) -> str:
    """Reversible mapping from arbitrary names to SMT-LIB2 symbols."""
    if _SIMPLE_SYMBOL.match(name) and name not in _RESERVED and "%" not in name:
        return name
    out = []
    for ch in name:
        if ch in "|\\%" or not (0x20 <= ord(ch) < 0x7F):
            out.extend(f"%{b:02X}" for b in ch.encode("utf-8"))
        else:
            out.append(ch)
    return "|" + "".join(out) + "|"


def decode_symbol(sym: str) -> str:
    if not sym.startswith("|"):
        return sym
    raw = sym[1:-1]
    data = bytearray()
    i = 0
    while i < len(raw):
        if raw[i] == "%":
            data.append(int(raw[i + 1:i + 3], 16))
            i += 3
        else:
            data.extend(raw[i].encode())
            i += 1
    return data.decode("utf-8")


def _str_literal(s: str) -> str:
    body = []
    for ch in s:
        if ch == '"':
            body.append('""')
        elif 0x20 <= ord(ch) < 0x7F:
            body.append(ch)
        else:
            body.append("\\u{%x}" % ord(ch))
    return '"' + "".join(body) + '"'


def to_smt(node) -> str:
    if isinstance(node, Var):
        return encode_symbol(node.name)
    if isinstance(node, App):
        name = encode_symbol(node.decl.name)
        if not node.args:
            return name
        return f"({name} {' '.join(to_smt(a) for a in node.args)})"
    if isinstance(node, IntLit):
        return str(node.value) if node.value >= 0 else f"(- {-node.value})"
    if isinstance(node, StrLit):
        return _str_literal(node.value)
    if isinstance(node, SqlBoolLit):
        return node.value
    if isinstance(node, BoolConst):
        return "true" if node.value else "false"
    if isinstance(node, Eq):
        return f"(= {to_smt(node.left)} {to_smt(node.right)})"
    if isinstance(node, Cmp):
        return f"({node.op} {to_smt(node.left)} {to_smt(node.right)})"
    if isinstance(node, Not):
        return f"(not {to_smt(node.arg)})"
    if isinstance(node, (And, Or)):
        op = "and" if isinstance(node, And) else "or"
        return f"({op} {' '.join(to_smt(a) for a in node.args)})"
    if isinstance(node, Implies):
        return f"(=> {to_smt(node.left)} {to_smt(node.right)})"
    if isinstance(node, Iff):
        return f"(= {to_smt(node.left)} {to_smt(node.right)})"
    if isinstance(node, (Forall, Exists)):
        q = "forall" if isinstance(node, Forall) else "exists"
        bound = " ".join(f"({encode_symbol(v.name)} {v.sort})" for v in node.vars)
        return f"({q} ({bound}) {to_smt(node.body)})"
    raise TypeError(f"cannot print {node!r}")


def _one_line(text: str) -> str:
    return " ".join(text.split())


def emit_smtlib(theory: Theory, *, title: str | None = None) -> str:
    lines: list[str] = []
    if title:
        lines.append(f"; {_one_line(title)}")
    lines.append("(set-logic ALL)")
    formulas = theory.axioms + theory.goals
    if any(uses_sort(f, CLASSIFIER) for f in formulas) or any(
            CLASSIFIER in d.args or d.result == CLASSIFIER for d in theory.declarations):
        lines.append("(declare-sort Classifier 0)")
    if any(uses_sort(f, SQLBOOL) for f in formulas) or any(
            SQLBOOL in d.args or d.result == SQLBOOL for d in theory.declarations):
        ctors = " ".join(f"({c})" for c in SQLBOOL_CONSTRUCTORS)
        lines.append(f"(declare-datatypes ((SqlBool 0)) (({ctors})))")
    notes = dict(theory.comments)
    for d in theory.declarations:
        if d.name in notes:
            lines.append(f"; {encode_symbol(d.name)}: {_one_line(notes[d.name])}")
        args = " ".join(str(s) for s in d.args)
        lines.append(f"(declare-fun {encode_symbol(d.name)} ({args}) {d.result})")
    for f in theory.axioms:
        lines.append(f"(assert {to_smt(f)})")
    if theory.goals:
        lines.append("; goal")
        for f in theory.goals:
            lines.append(f"(assert {to_smt(f)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"
