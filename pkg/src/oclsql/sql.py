"""SQL select subset: typed AST, parser, printer and three-valued executor.

Supported statements::

    SELECT items [FROM fromitem [JOIN fromitem [ON expr]]] [WHERE expr]

where a from-item is a table or a parenthesized uncorrelated subselect.
Column types are ``int``, ``varchar``, ``bool`` and ``id:<Class>`` (integer
columns holding object ids: class keys, foreign keys, association ends).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .datamodel import Variable
from .relational import DatabaseInstance, SqlSchema

INT = "int"
VARCHAR = "varchar"
BOOL = "bool"


def id_type(cls: str) -> str:
    return f"id:{cls}"


def is_id(t: str) -> bool:
    return t.startswith("id:")


class SqlError(ValueError):
    def __init__(self, msg: str, pos: int | None = None):
        super().__init__(msg if pos is None else f"{msg} (at offset {pos})")
        self.pos = pos


class SqlSyntaxError(SqlError):
    pass


class SqlTypeError(SqlError):
    pass


class CorrelatedSubqueryError(SqlError):
    pass


class ScalarSubqueryError(RuntimeError):
    """A scalar subselect returned a number of rows other than one."""


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class BoolLit:
    value: bool
    type = BOOL


@dataclass(frozen=True)
class NullLit:
    type: str = BOOL


@dataclass(frozen=True)
class IntLit:
    value: int
    type = INT


@dataclass(frozen=True)
class StrLit:
    value: str
    type = VARCHAR


@dataclass(frozen=True)
class VarE:
    name: str
    type: str


@dataclass(frozen=True)
class ColRef:
    qualifier: str | None
    name: str
    source: int  # 0: FROM item, 1: JOIN item
    type: str


@dataclass(frozen=True)
class NotE:
    operand: "SqlExpr"
    type = BOOL


@dataclass(frozen=True)
class AndE:
    left: "SqlExpr"
    right: "SqlExpr"
    type = BOOL


@dataclass(frozen=True)
class OrE:
    left: "SqlExpr"
    right: "SqlExpr"
    type = BOOL


@dataclass(frozen=True)
class CmpE:
    op: str
    left: "SqlExpr"
    right: "SqlExpr"
    type = BOOL


@dataclass(frozen=True)
class CaseE:
    cond: "SqlExpr"
    then: "SqlExpr"
    else_: "SqlExpr"
    type: str


@dataclass(frozen=True)
class IsNullE:
    operand: "SqlExpr"
    type = BOOL


@dataclass(frozen=True)
class ExistsE:
    select: "Select"
    type = BOOL


@dataclass(frozen=True)
class ScalarSub:
    select: "Select"
    type: str


SqlExpr = Union[BoolLit, NullLit, IntLit, StrLit, VarE, ColRef, NotE, AndE, OrE, CmpE, CaseE,
                IsNullE, ExistsE, ScalarSub]


@dataclass(frozen=True)
class SelectItem:
    expr: SqlExpr
    alias: str | None = None

    @property
    def label(self) -> str | None:
        if self.alias:
            return self.alias
        if isinstance(self.expr, ColRef):
            return self.expr.name
        return None


@dataclass(frozen=True)
class TableRef:
    table: str
    alias: str | None = None

    @property
    def ref_name(self) -> str:
        return self.alias or self.table


@dataclass(frozen=True)
class SubqueryRef:
    select: "Select"
    alias: str

    @property
    def ref_name(self) -> str:
        return self.alias


FromItem = Union[TableRef, SubqueryRef]


@dataclass(frozen=True)
class Select:
    items: tuple[SelectItem, ...]
    from_: FromItem | None = None
    join: FromItem | None = None
    on: SqlExpr | None = None
    where: SqlExpr | None = None

    @property
    def sources(self) -> tuple[FromItem, ...]:
        return tuple(f for f in (self.from_, self.join) if f is not None)


def sub_expressions(e: SqlExpr) -> tuple:
    if isinstance(e, (NotE, IsNullE)):
        return (e.operand,)
    if isinstance(e, (AndE, OrE, CmpE)):
        return (e.left, e.right)
    if isinstance(e, CaseE):
        return (e.cond, e.then, e.else_)
    return ()


def subselects(e: SqlExpr) -> list["Select"]:
    if isinstance(e, (ExistsE, ScalarSub)):
        return [e.select]
    out = []
    for c in sub_expressions(e):
        out += subselects(c)
    return out


def count_scalar_subselects(s: Select) -> int:
    n = 0
    exprs = [i.expr for i in s.items] + [x for x in (s.on, s.where) if x is not None]
    stack = list(exprs)
    while stack:
        e = stack.pop()
        if isinstance(e, ScalarSub):
            n += 1
        if isinstance(e, (ScalarSub, ExistsE)):
            n += count_scalar_subselects(e.select)
        stack.extend(sub_expressions(e))
    for f in s.sources:
        if isinstance(f, SubqueryRef):
            n += count_scalar_subselects(f.select)
    return n


def from_columns(f: FromItem, schema: SqlSchema) -> list[tuple[str, str]]:
    """(column name, type) pairs exposed by a from-item."""
    if isinstance(f, TableRef):
        t = schema.table(f.table)
        return [(c.name, id_type(c.references) if c.references else c.sql_type) for c in t.columns]
    return [(i.label, i.expr.type) for i in f.select.items]


# -- lexer -------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+|--[^\n]*)
  | (?P<int>\d+)
  | (?P<str>'(?:[^']|'')*')
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><>|<=|>=|!=|[.(),;=<>\-*])
""", re.VERBOSE)

KEYWORDS = {"SELECT", "FROM", "WHERE", "JOIN", "ON", "AS", "AND", "OR", "NOT", "TRUE", "FALSE",
            "NULL", "CASE", "WHEN", "THEN", "ELSE", "END", "IS", "EXISTS", "INNER", "CROSS"}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int

    @property
    def upper(self) -> str:
        return self.text.upper()


def _lex(text: str) -> list[_Tok]:
    out, i = [], 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if not m:
            raise SqlSyntaxError(f"unexpected character {text[i]!r}", i)
        kind = m.lastgroup
        if kind != "ws":
            tok = m.group()
            if kind == "id" and tok.upper() in KEYWORDS:
                kind = "kw"
            out.append(_Tok(kind, tok, i))
        i = m.end()
    out.append(_Tok("eof", "", len(text)))
    return out


# -- parser ------------------------------------------------------------------


@dataclass
class _Scope:
    sources: list  # [(FromItem, [(col, type)])]
    outer: "_Scope | None"

    def names(self) -> set[str]:
        out = set()
        for f, cols in self.sources:
            out.add(f.ref_name.lower())
            out |= {c.lower() for c, _ in cols if c}
        return out


class _Parser:
    def __init__(self, text: str, schema: SqlSchema, variables: Mapping[str, str]):
        self.toks = _lex(text)
        self.i = 0
        self.schema = schema
        self.vars = dict(variables)

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def kw(self, *words: str) -> bool:
        return self.tok.kind == "kw" and self.tok.upper in words

    def op(self, *ops: str) -> bool:
        return self.tok.kind == "op" and self.tok.text in ops

    def take_kw(self, word: str) -> _Tok:
        if not self.kw(word):
            raise SqlSyntaxError(f"expected {word}, found {self._found()}", self.tok.pos)
        self.i += 1
        return self.toks[self.i - 1]

    def take_op(self, op: str) -> _Tok:
        if not self.op(op):
            raise SqlSyntaxError(f"expected {op!r}, found {self._found()}", self.tok.pos)
        self.i += 1
        return self.toks[self.i - 1]

    def take_id(self) -> _Tok:
        if self.tok.kind != "id":
            raise SqlSyntaxError(f"expected an identifier, found {self._found()}", self.tok.pos)
        self.i += 1
        return self.toks[self.i - 1]

    def _found(self) -> str:
        return "end of input" if self.tok.kind == "eof" else repr(self.tok.text)

    def parse(self) -> Select:
        s = self.select(None)
        if self.op(";"):
            self.i += 1
        if self.tok.kind != "eof":
            raise SqlSyntaxError(f"unexpected {self._found()}", self.tok.pos)
        return s

    def select(self, outer: _Scope | None) -> Select:
        self.take_kw("SELECT")
        raw_items = [self.skip_expr()]
        while self.op(","):
            self.i += 1
            raw_items.append(self.skip_expr())
        scope = _Scope([], outer)
        from_ = join = on = where = None
        if self.kw("FROM"):
            self.i += 1
            from_ = self.from_item(outer)
            scope.sources.append((from_, from_columns(from_, self.schema)))
            if self.kw("JOIN", "INNER", "CROSS"):
                if self.kw("INNER", "CROSS"):
                    self.i += 1
                self.take_kw("JOIN")
                join = self.from_item(outer)
                if join.ref_name.lower() == from_.ref_name.lower():
                    raise SqlSyntaxError(f"duplicate from-item name {join.ref_name!r}", self.tok.pos)
                scope.sources.append((join, from_columns(join, self.schema)))
                if self.kw("ON"):
                    self.i += 1
                    on = self.condition(scope)
        if self.kw("WHERE"):
            self.i += 1
            where = self.condition(scope)
        end = self.i
        items = []
        for start, stop, alias in raw_items:
            self.i = start
            items.append(SelectItem(self.expr(scope), alias))
            if self.i != stop:
                raise SqlSyntaxError(f"unexpected {self._found()} in select item", self.tok.pos)
        self.i = end
        return Select(tuple(items), from_, join, on, where)

    def skip_expr(self) -> tuple[int, int, str | None]:
        """Skip a select item (parsed later, once the FROM scope is known)."""
        start = self.i
        depth = 0
        while True:
            t = self.tok
            if t.kind == "eof":
                break
            if depth == 0 and (self.op(",", ";", ")") or self.kw("FROM", "WHERE", "AS")):
                break
            if self.op("("):
                depth += 1
            elif self.op(")"):
                depth -= 1
            self.i += 1
        if self.i == start:
            raise SqlSyntaxError(f"expected a select item, found {self._found()}", self.tok.pos)
        end = self.i
        alias = None
        if self.kw("AS"):
            self.i += 1
            alias = self.take_id().text
        return start, end, alias

    def from_item(self, outer: _Scope | None) -> FromItem:
        if self.op("("):
            self.i += 1
            sub = self.select(outer)
            self.take_op(")")
            if self.kw("AS"):
                self.i += 1
            alias = self.take_id().text
            return SubqueryRef(sub, alias)
        t = self.take_id()
        table = self.schema.table(t.text)
        if table is None:
            raise SqlTypeError(f"unknown table {t.text!r}", t.pos)
        alias = None
        if self.kw("AS"):
            self.i += 1
            alias = self.take_id().text
        elif self.tok.kind == "id":
            alias = self.take_id().text
        return TableRef(table.name, alias)

    def condition(self, scope: _Scope) -> SqlExpr:
        pos = self.tok.pos
        e = self.expr(scope)
        if e.type != BOOL:
            raise SqlTypeError(f"condition must be Boolean, got {e.type}", pos)
        return e

    # expressions

    def expr(self, scope: _Scope) -> SqlExpr:
        e = self.and_(scope)
        while self.kw("OR"):
            pos = self.take_kw("OR").pos
            e = OrE(e, self.and_(scope))
            _need_bool(e.left, e.right, "OR", pos)
        return e

    def and_(self, scope) -> SqlExpr:
        e = self.not_(scope)
        while self.kw("AND"):
            pos = self.take_kw("AND").pos
            e = AndE(e, self.not_(scope))
            _need_bool(e.left, e.right, "AND", pos)
        return e

    def not_(self, scope) -> SqlExpr:
        if self.kw("NOT"):
            pos = self.take_kw("NOT").pos
            e = self.not_(scope)
            _need_bool(e, e, "NOT", pos)
            return NotE(e)
        return self.predicate(scope)

    def predicate(self, scope) -> SqlExpr:
        e = self.primary(scope)
        if self.op("=", "<>", "!=", "<", "<=", ">", ">="):
            t = self.tok
            self.i += 1
            op = "<>" if t.text == "!=" else t.text
            r = self.primary(scope)
            e = _comparison(op, e, r, t.pos)
        while self.kw("IS"):
            self.i += 1
            negate = False
            if self.kw("NOT"):
                self.i += 1
                negate = True
            self.take_kw("NULL")
            e = IsNullE(e)
            if negate:
                e = NotE(e)
        return e

    def primary(self, scope) -> SqlExpr:
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return IntLit(int(t.text))
        if self.op("-") and self.toks[self.i + 1].kind == "int":
            self.i += 2
            return IntLit(-int(self.toks[self.i - 1].text))
        if t.kind == "str":
            self.i += 1
            return StrLit(t.text[1:-1].replace("''", "'"))
        if self.kw("TRUE", "FALSE"):
            self.i += 1
            return BoolLit(t.upper == "TRUE")
        if self.kw("NULL"):
            self.i += 1
            return NullLit()
        if self.kw("NOT"):
            pos = self.take_kw("NOT").pos
            e = self.primary(scope)
            _need_bool(e, e, "NOT", pos)
            return NotE(e)
        if self.kw("EXISTS"):
            self.i += 1
            self.take_op("(")
            sub = self.select(scope)
            self.take_op(")")
            return ExistsE(sub)
        if self.kw("CASE"):
            return self.case(scope)
        if self.op("("):
            self.i += 1
            if self.kw("SELECT"):
                sub = self.select(scope)
                self.take_op(")")
                if len(sub.items) != 1:
                    raise SqlTypeError("a scalar subselect must project exactly one item", t.pos)
                return ScalarSub(sub, sub.items[0].expr.type)
            e = self.expr(scope)
            self.take_op(")")
            return e
        if t.kind == "id":
            self.i += 1
            if self.op("."):
                self.i += 1
                col = self.take_id()
                return self.column(scope, t.text, col.text, t.pos)
            return self.identifier(scope, t.text, t.pos)
        raise SqlSyntaxError(f"expected an expression, found {self._found()}", t.pos)

    def case(self, scope) -> SqlExpr:
        pos = self.take_kw("CASE").pos
        self.take_kw("WHEN")
        cond = self.expr(scope)
        if cond.type != BOOL:
            raise SqlTypeError("CASE condition must be Boolean", pos)
        self.take_kw("THEN")
        then = self.expr(scope)
        self.take_kw("ELSE")
        else_ = self.expr(scope)
        self.take_kw("END")
        if isinstance(then, NullLit) and not isinstance(else_, NullLit):
            then = NullLit(else_.type)
        elif isinstance(else_, NullLit) and not isinstance(then, NullLit):
            else_ = NullLit(then.type)
        if then.type != else_.type:
            raise SqlTypeError(f"CASE branches have types {then.type} and {else_.type}", pos)
        return CaseE(cond, then, else_, then.type)

    def column(self, scope: _Scope, qual: str, name: str, pos: int) -> SqlExpr:
        for i, (f, cols) in enumerate(scope.sources):
            if f.ref_name.lower() == qual.lower():
                for c, typ in cols:
                    if c is not None and c.lower() == name.lower():
                        return ColRef(f.ref_name, c, i, typ)
                raise SqlTypeError(f"{qual} has no column {name!r}", pos)
        if _outer_has(scope.outer, qual):
            raise CorrelatedSubqueryError(f"{qual}.{name} refers to an enclosing query (correlated subqueries "
                                          f"are not supported)", pos)
        raise SqlTypeError(f"unknown table or alias {qual!r}", pos)

    def identifier(self, scope: _Scope, name: str, pos: int) -> SqlExpr:
        hits = []
        for i, (f, cols) in enumerate(scope.sources):
            for c, typ in cols:
                if c is not None and c.lower() == name.lower():
                    hits.append(ColRef(None, c, i, typ))
        if len(hits) > 1:
            raise SqlTypeError(f"column {name!r} is ambiguous", pos)
        if hits:
            return hits[0]
        if name in self.vars:
            return VarE(name, self.vars[name])
        if _outer_has(scope.outer, name):
            raise CorrelatedSubqueryError(f"{name} refers to an enclosing query (correlated subqueries "
                                          f"are not supported)", pos)
        raise SqlTypeError(f"unknown column or variable {name!r}", pos)


def _outer_has(scope: _Scope | None, name: str) -> bool:
    while scope is not None:
        if name.lower() in scope.names():
            return True
        scope = scope.outer
    return False


def _need_bool(a: SqlExpr, b: SqlExpr, op: str, pos: int) -> None:
    for e in (a, b):
        if e.type != BOOL:
            raise SqlTypeError(f"{op} needs Boolean operands, got {e.type}", pos)


def _comparison(op: str, l: SqlExpr, r: SqlExpr, pos: int) -> CmpE:
    if isinstance(l, NullLit) and not isinstance(r, NullLit):
        l = NullLit(r.type)
    elif isinstance(r, NullLit) and not isinstance(l, NullLit):
        r = NullLit(l.type)
    lt, rt = l.type, r.type
    if not (lt == rt or (is_id(lt) and is_id(rt))):
        raise SqlTypeError(f"cannot compare {lt} with {rt}", pos)
    if op not in ("=", "<>") and lt != INT:
        raise SqlTypeError(f"{op} needs int operands, got {lt}", pos)
    return CmpE(op, l, r)


def variable_types(variables: Sequence[Variable]) -> dict[str, str]:
    out = {}
    for v in variables:
        out[v.name] = {"Integer": INT, "String": VARCHAR}.get(v.type, id_type(v.type))
    return out


def parse_select(text: str, schema: SqlSchema, variables: Sequence[Variable] | Mapping[str, str] = ()) -> Select:
    if not isinstance(variables, Mapping):
        variables = variable_types(variables)
    return _Parser(text, schema, variables).parse()


# -- printer -----------------------------------------------------------------


def _prec(e: SqlExpr) -> int:
    if isinstance(e, OrE):
        return 1
    if isinstance(e, AndE):
        return 2
    if isinstance(e, NotE):
        return 3
    if isinstance(e, CmpE):
        return 4
    if isinstance(e, IsNullE):
        return 5
    return 6


def print_expr(e: SqlExpr) -> str:
    if isinstance(e, BoolLit):
        return "TRUE" if e.value else "FALSE"
    if isinstance(e, NullLit):
        return "NULL"
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, StrLit):
        return "'" + e.value.replace("'", "''") + "'"
    if isinstance(e, VarE):
        return e.name
    if isinstance(e, ColRef):
        return f"{e.qualifier}.{e.name}" if e.qualifier else e.name
    if isinstance(e, NotE):
        return f"NOT {_wrap(e.operand, 4)}"
    if isinstance(e, (AndE, OrE)):
        p = _prec(e)
        op = "AND" if isinstance(e, AndE) else "OR"
        return f"{_wrap(e.left, p)} {op} {_wrap(e.right, p + 1)}"
    if isinstance(e, CmpE):
        return f"{_wrap(e.left, 5)} {e.op} {_wrap(e.right, 5)}"
    if isinstance(e, IsNullE):
        return f"{_wrap(e.operand, 6)} IS NULL"
    if isinstance(e, CaseE):
        return f"CASE WHEN {print_expr(e.cond)} THEN {print_expr(e.then)} ELSE {print_expr(e.else_)} END"
    if isinstance(e, ExistsE):
        return f"EXISTS ({print_select(e.select)})"
    if isinstance(e, ScalarSub):
        return f"({print_select(e.select)})"
    raise TypeError(e)


def _wrap(e: SqlExpr, min_prec: int) -> str:
    s = print_expr(e)
    if _prec(e) < min_prec and not isinstance(e, NotE) or (isinstance(e, NotE) and min_prec > 3):
        return f"({s})"
    return s


def _print_from(f: FromItem) -> str:
    if isinstance(f, TableRef):
        return f.table + (f" {f.alias}" if f.alias else "")
    return f"({print_select(f.select)}) AS {f.alias}"


def print_select(s: Select) -> str:
    items = ", ".join(print_expr(i.expr) + (f" AS {i.alias}" if i.alias else "") for i in s.items)
    out = f"SELECT {items}"
    if s.from_ is not None:
        out += f" FROM {_print_from(s.from_)}"
    if s.join is not None:
        out += f" JOIN {_print_from(s.join)}"
    if s.on is not None:
        out += f" ON {print_expr(s.on)}"
    if s.where is not None:
        out += f" WHERE {print_expr(s.where)}"
    return out


# -- executor ----------------------------------------------------------------


@dataclass(frozen=True)
class ResultTable:
    columns: tuple
    rows: tuple[tuple, ...]


def exec_sql(db: DatabaseInstance, varmap: Mapping[str, object], s: Select) -> ResultTable:
    """Execute ``s`` over ``db``. NULL is ``None``; SQL Booleans are ``True``/``False``/``None``."""
    return _Exec(db, dict(varmap)).select(s)


class _Exec:
    def __init__(self, db: DatabaseInstance, varmap: dict):
        self.db = db
        self.vars = varmap
        self._subs: dict[int, ResultTable] = {}

    def source_rows(self, f: FromItem) -> list[tuple]:
        if isinstance(f, TableRef):
            return list(self.db.table(f.table))
        return list(self.sub(f.select).rows)

    def sub(self, s: Select) -> ResultTable:
        # uncorrelated: a subselect's result does not depend on the outer row
        key = id(s)
        if key not in self._subs:
            self._subs[key] = self.select(s)
        return self._subs[key]

    def select(self, s: Select) -> ResultTable:
        if s.from_ is None:
            envs = [()]
        elif s.join is None:
            envs = [(r,) for r in self.source_rows(s.from_)]
        else:
            right = self.source_rows(s.join)
            envs = [(l, r) for l in self.source_rows(s.from_) for r in right]
            if s.on is not None:
                envs = [env for env in envs if self.eval(s.on, env, s) is True]
        if s.where is not None:
            envs = [env for env in envs if self.eval(s.where, env, s) is True]
        rows = tuple(tuple(self.eval(i.expr, env, s) for i in s.items) for env in envs)
        return ResultTable(tuple(i.label for i in s.items), rows)

    def eval(self, e: SqlExpr, env: tuple, s: Select):
        if isinstance(e, (BoolLit, IntLit, StrLit)):
            return e.value
        if isinstance(e, NullLit):
            return None
        if isinstance(e, VarE):
            return self.vars[e.name]
        if isinstance(e, ColRef):
            f = s.sources[e.source]
            names = [c for c, _ in from_columns(f, self.db.schema)]
            return env[e.source][names.index(e.name)]
        if isinstance(e, NotE):
            v = self.eval(e.operand, env, s)
            return None if v is None else not v
        if isinstance(e, AndE):
            a, b = self.eval(e.left, env, s), self.eval(e.right, env, s)
            if a is False or b is False:
                return False
            return None if a is None or b is None else True
        if isinstance(e, OrE):
            a, b = self.eval(e.left, env, s), self.eval(e.right, env, s)
            if a is True or b is True:
                return True
            return None if a is None or b is None else False
        if isinstance(e, CmpE):
            a, b = self.eval(e.left, env, s), self.eval(e.right, env, s)
            if a is None or b is None:
                return None
            return {"=": a == b, "<>": a != b, "<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[e.op]
        if isinstance(e, IsNullE):
            return self.eval(e.operand, env, s) is None
        if isinstance(e, CaseE):
            if self.eval(e.cond, env, s) is True:
                return self.eval(e.then, env, s)
            return self.eval(e.else_, env, s)
        if isinstance(e, ExistsE):
            return len(self.sub(e.select).rows) > 0
        if isinstance(e, ScalarSub):
            res = self.sub(e.select)
            if len(res.rows) != 1:
                raise ScalarSubqueryError(f"scalar subselect returned {len(res.rows)} rows: "
                                          f"{print_select(e.select)}")
            return res.rows[0][0]
        raise TypeError(e)
