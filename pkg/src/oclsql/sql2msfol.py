"""Translation of the relational schema and SQL select statements into MSFOL.

Rows are indexed by integers. Every table, select and join has an index
predicate ``index_T`` and every select expression ``e`` evaluated in a select
``sel`` gets a value function ``val_sel(e)`` from row indexes to the sort of
``e`` (Int, String, Classifier for id columns, SqlBool for conditions).

Base-table column values are the terms ``id(x)`` (key column),
``att(id(x))`` (attribute column) and ``id(left_as(x))``/``id(right_as(x))``
(association ends), so the two translations share attribute and association
symbols.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import msfol as F
from .datamodel import DataModel
from .msfol import CLASSIFIER, INT, SQLBOOL, STRING, Decl, Formula, Term, Var
from .ocl2msfol import DataSymbols, UnsupportedConstruct, null_of, inval_of
from .relational import id_column
from .sql import (
    AndE, BoolLit, CaseE, CmpE, ColRef, ExistsE, IntLit, IsNullE, NotE, NullLit, OrE, ScalarSub,
    Select, SqlExpr, StrLit, SubqueryRef, TableRef, VarE, is_id, print_expr, print_select,
)

ID = Decl("id", (INT,), CLASSIFIER)

_X = Var("x", INT)
_Y = Var("y", INT)
_Z = Var("z", INT)


def sql_sort(t: str) -> F.Sort:
    if t == "int":
        return INT
    if t == "varchar":
        return STRING
    if t == "bool":
        return SQLBOOL
    if is_id(t):
        return CLASSIFIER
    raise UnsupportedConstruct(f"no MSFOL sort for SQL type {t}")


def sql_null(sort: F.Sort) -> Term:
    return F.SQL_NULL if sort == SQLBOOL else null_of(sort)


# -- schema ------------------------------------------------------------------


@dataclass(frozen=True)
class SchemaAxioms:
    theory: F.Theory
    index: dict
    left: dict
    right: dict


def _schema_symbols(dm: DataModel):
    index = {c: Decl(f"index_{c}", (INT,), F.BOOL) for c in dm.classes}
    left, right = {}, {}
    for s in dm.associations:
        index[s.name] = Decl(f"index_{s.name}", (INT,), F.BOOL)
        left[s.name] = Decl(f"left_{s.name}", (INT,), INT)
        right[s.name] = Decl(f"right_{s.name}", (INT,), INT)
    return index, left, right


def s2f_schema(dm: DataModel) -> SchemaAxioms:
    syms = DataSymbols(dm)
    index, left, right = _schema_symbols(dm)
    x, y = _X, _Y
    c, d = Var("c", CLASSIFIER), Var("d", CLASSIFIER)
    axioms: list[Formula] = []
    for cls in dm.classes:
        ix, pred = index[cls], syms.classes[cls]
        axioms += [
            F.forall([x], F.implies(ix(x), pred(ID(x)))),
            F.forall([c], F.implies(pred(c), F.exists([x], F.and_(ix(x), F.eq(ID(x), c))))),
            F.forall([x, y], F.implies(F.and_(ix(x), ix(y), F.eq(ID(x), ID(y))), F.eq(x, y))),
        ]
    for s in dm.associations:
        ix, rel, l, r = index[s.name], syms.associations[s.name], left[s.name], right[s.name]
        axioms += [
            F.forall([x], F.implies(ix(x), rel(ID(l(x)), ID(r(x))))),
            F.forall([c, d], F.implies(rel(c, d), F.exists([x], F.and_(
                ix(x), F.eq(ID(l(x)), c), F.eq(ID(r(x)), d))))),
            F.forall([x, y], F.implies(
                F.and_(ix(x), ix(y), F.eq(ID(l(x)), ID(l(y))), F.eq(ID(r(x)), ID(r(y)))), F.eq(x, y))),
        ]
    decls = [ID] + [d for c in dm.classes for d in (index[c],)]
    for s in dm.associations:
        decls += [index[s.name], left[s.name], right[s.name]]
    if not dm.classes and not dm.associations:
        decls = [ID]
    return SchemaAxioms(F.make_theory(axioms, declarations=decls), index, left, right)


# -- naming ------------------------------------------------------------------


class NamingRegistry:
    """Deterministic names for selects, joins and value functions (preorder numbering)."""

    def __init__(self, top: Select, top_name: str = "sel"):
        self.selects: dict[int, str] = {}
        self.joins: dict[int, str] = {}
        self._nodes: list = []  # keeps ids stable for the registry's lifetime
        self._vals: dict[tuple[str, SqlExpr], str] = {}
        self._counter = 0
        self._visit(top, top_name)

    def _visit(self, s: Select, name: str | None = None) -> None:
        self._nodes.append(s)
        if name is None:
            self._counter += 1
            name = f"sel_{self._counter}"
        self.selects[id(s)] = name
        for item in s.items:
            self._visit_expr(item.expr)
        for f in s.sources:
            if isinstance(f, SubqueryRef):
                self._visit(f.select)
        if s.join is not None:
            self.joins[id(s)] = f"join_{name}"
        for e in (s.on, s.where):
            if e is not None:
                self._visit_expr(e)

    def _visit_expr(self, e: SqlExpr) -> None:
        if isinstance(e, (ExistsE, ScalarSub)):
            self._visit(e.select)
            return
        for c in _children(e):
            self._visit_expr(c)

    def select(self, s: Select) -> str:
        return self.selects[id(s)]

    def join(self, s: Select) -> str:
        return self.joins[id(s)]

    def val(self, sel_name: str, e: SqlExpr) -> str:
        key = (sel_name, e)
        if key not in self._vals:
            self._vals[key] = f"val_{sel_name}({print_expr(e)})"
        return self._vals[key]


def _children(e: SqlExpr) -> tuple:
    if isinstance(e, (NotE, IsNullE)):
        return (e.operand,)
    if isinstance(e, (AndE, OrE, CmpE)):
        return (e.left, e.right)
    if isinstance(e, CaseE):
        return (e.cond, e.then, e.else_)
    return ()


# -- selects -----------------------------------------------------------------


@dataclass(frozen=True)
class ProofObligation:
    """Single-row goal for a scalar subselect; ``axioms`` define the subselect only."""

    name: str
    source: str
    axioms: tuple
    goal: Formula


@dataclass(frozen=True)
class SelectTranslation:
    index: Decl
    items: tuple[Decl, ...]
    axioms: tuple
    obligations: tuple[ProofObligation, ...]
    comments: tuple = ()

    def theory(self) -> F.Theory:
        return F.make_theory(self.axioms, comments=self.comments)


def unique_row(index: Decl) -> Formula:
    """Exactly one x satisfies ``index``."""
    x, y = _X, _Y
    return F.exists([x], F.and_(index(x), F.forall([y], F.implies(F.not_(F.eq(y, x)), F.not_(index(y))))))


@dataclass
class _Space:
    """Column resolution for one select: source i's column at row x."""

    sel: Select
    name: str
    resolvers: list = field(default_factory=list)  # per source: (name, x) -> Term


class _Translator:
    def __init__(self, dm: DataModel, reg: NamingRegistry, frees: dict):
        self.dm = dm
        self.syms = DataSymbols(dm)
        self.index, self.left, self.right = _schema_symbols(dm)
        self.reg = reg
        self.frees = frees
        self.comments: list = []
        self._done: dict[int, tuple] = {}
        self._spaces: dict[int, _Space] = {}
        self._vals: dict[tuple, Decl] = {}

    def select(self, s: Select) -> tuple[Decl, list, list]:
        """(index decl, axioms defining s, obligations inside s)."""
        if id(s) in self._done:
            return self._done[id(s)]
        name = self.reg.select(s)
        ix = Decl(f"index_{name}", (INT,), F.BOOL)
        self.comments.append((ix.name, print_select(s)))
        axioms: list = []
        obligations: list = []
        space = _Space(s, name)
        self._spaces[id(s)] = space
        x = _X
        if s.from_ is None:
            if s.where is not None:
                raise UnsupportedConstruct("WHERE without FROM is not supported")
            axioms.append(unique_row(ix))
        else:
            src_ix, res0 = self.source(s.from_, axioms, obligations)
            if s.join is None:
                space.resolvers = [res0]
                row_ok = src_ix(x)
            else:
                jn = self.reg.join(s)
                j_ix = Decl(f"index_{jn}", (INT,), F.BOOL)
                lj = Decl(f"left_{jn}", (INT,), INT)
                rj = Decl(f"right_{jn}", (INT,), INT)
                src2_ix, res1 = self.source(s.join, axioms, obligations)
                y, z = _Y, _Z
                axioms += [
                    F.forall([x], F.implies(j_ix(x), F.and_(src_ix(lj(x)), src2_ix(rj(x))))),
                    F.forall([y, z], F.implies(F.and_(src_ix(y), src2_ix(z)), F.exists([x], F.and_(
                        j_ix(x), F.eq(lj(x), y), F.eq(rj(x), z))))),
                    F.forall([x, y], F.implies(F.and_(j_ix(x), j_ix(y), F.eq(lj(x), lj(y)),
                                                      F.eq(rj(x), rj(y))), F.eq(x, y))),
                ]
                space.resolvers = [lambda c, t, r=res0: r(c, lj(t)), lambda c, t, r=res1: r(c, rj(t))]
                row_ok = j_ix(x)
                if s.on is not None:
                    row_ok = F.and_(row_ok, F.eq(self.expr(s.on, space, axioms, obligations)(x), F.SQL_TRUE))
            if s.where is not None:
                row_ok = F.and_(row_ok, F.eq(self.expr(s.where, space, axioms, obligations)(x), F.SQL_TRUE))
            axioms.append(F.forall([x], F.iff(ix(x), row_ok)))
        items = tuple(self.expr(i.expr, space, axioms, obligations) for i in s.items)
        out = (ix, items, axioms, obligations)
        self._done[id(s)] = out
        return out

    def source(self, f, axioms: list, obligations: list):
        if isinstance(f, TableRef):
            t = f.table
            if t in self.dm.classes:
                def res(col, x, cls=t):
                    if col == id_column(cls):
                        return ID(x)
                    return self.syms.attribute(cls, col)(ID(x))
                return self.index[t], res
            s = self.dm.association(t)

            def res(col, x, s=s):
                fn = self.left[s.name] if col == s.left_end else self.right[s.name]
                return ID(fn(x))
            return self.index[t], res
        ix, items, sub_axioms, sub_obls = self.select(f.select)
        axioms += sub_axioms
        obligations += sub_obls
        labels = [i.label for i in f.select.items]

        def res(col, x, items=items, labels=labels):
            return items[labels.index(col)](x)
        return ix, res

    def expr(self, e: SqlExpr, sp: _Space, axioms: list, obligations: list) -> Decl:
        """Declare val_sp(e), add its defining axioms, return the function symbol."""
        key = (sp.name, id(e))
        if key in self._vals:
            return self._vals[key]
        sort = sql_sort(e.type)
        val = Decl(self.reg.val(sp.name, e), (INT,), sort)
        x = _X
        v = val(x)
        sub = lambda c: self.expr(c, sp, axioms, obligations)(x)

        def is_(t, lit):
            return F.eq(t, lit)

        if isinstance(e, BoolLit):
            body = F.eq(v, F.SQL_TRUE if e.value else F.SQL_FALSE)
        elif isinstance(e, NullLit):
            body = F.eq(v, sql_null(sort))
        elif isinstance(e, IntLit):
            lit = F.IntLit(e.value)
            axioms.append(self._literal(lit))
            body = F.eq(v, lit)
        elif isinstance(e, StrLit):
            lit = F.StrLit(e.value)
            axioms.append(self._literal(lit))
            body = F.eq(v, lit)
        elif isinstance(e, VarE):
            body = F.eq(v, self.frees[e.name])
        elif isinstance(e, ColRef):
            body = F.eq(v, sp.resolvers[e.source](e.name, x))
        elif isinstance(e, NotE):
            a = sub(e.operand)
            body = F.and_(F.iff(is_(v, F.SQL_TRUE), is_(a, F.SQL_FALSE)),
                          F.iff(is_(v, F.SQL_FALSE), is_(a, F.SQL_TRUE)),
                          F.iff(is_(v, F.SQL_NULL), is_(a, F.SQL_NULL)))
        elif isinstance(e, (AndE, OrE)):
            a, b = sub(e.left), sub(e.right)
            dom, rec = (F.SQL_FALSE, F.SQL_TRUE) if isinstance(e, AndE) else (F.SQL_TRUE, F.SQL_FALSE)
            body = F.and_(F.iff(is_(v, dom), F.or_(is_(a, dom), is_(b, dom))),
                          F.iff(is_(v, rec), F.and_(is_(a, rec), is_(b, rec))),
                          F.iff(is_(v, F.SQL_NULL), F.and_(
                              F.not_(F.or_(is_(a, dom), is_(b, dom))),
                              F.or_(is_(a, F.SQL_NULL), is_(b, F.SQL_NULL)))))
        elif isinstance(e, IsNullE):
            a = sub(e.operand)
            nul = sql_null(sql_sort(e.operand.type))
            body = F.and_(F.iff(is_(v, F.SQL_TRUE), F.eq(a, nul)),
                          F.iff(is_(v, F.SQL_FALSE), F.not_(F.eq(a, nul))))
        elif isinstance(e, CmpE):
            a, b = sub(e.left), sub(e.right)
            nul = sql_null(sql_sort(e.left.type))
            either_null = F.or_(F.eq(a, nul), F.eq(b, nul))
            holds = _compare(e.op, a, b)
            body = F.and_(F.iff(is_(v, F.SQL_NULL), either_null),
                          F.iff(is_(v, F.SQL_TRUE), F.and_(F.not_(either_null), holds)),
                          F.iff(is_(v, F.SQL_FALSE), F.and_(F.not_(either_null), F.not_(holds))))
        elif isinstance(e, CaseE):
            c, t, f = sub(e.cond), sub(e.then), sub(e.else_)
            body = F.and_(F.implies(is_(c, F.SQL_TRUE), F.eq(v, t)),
                          F.implies(F.not_(is_(c, F.SQL_TRUE)), F.eq(v, f)))
        elif isinstance(e, ExistsE):
            ix, _, sub_axioms, sub_obls = self.select(e.select)
            axioms += sub_axioms
            obligations += sub_obls
            y = _Y
            some = F.exists([y], ix(y))
            body = F.and_(F.iff(is_(v, F.SQL_TRUE), some), F.iff(is_(v, F.SQL_FALSE), F.not_(some)))
        elif isinstance(e, ScalarSub):
            ix, items, sub_axioms, sub_obls = self.select(e.select)
            axioms += sub_axioms
            obligations += sub_obls
            w = Decl(f"w_{self.reg.select(e.select)}", (), sort)()
            y = _Y
            axioms.append(F.exists([y], F.and_(ix(y), F.eq(items[0](y), w))))
            obligations.append(ProofObligation(
                self.reg.select(e.select), print_select(e.select), tuple(sub_axioms), F.not_(unique_row(ix))))
            body = F.eq(v, w)
        else:
            raise UnsupportedConstruct(f"unsupported SQL expression {print_expr(e)}")
        axioms.append(F.forall([x], body))
        self._vals[key] = val
        return val

    @staticmethod
    def _literal(lit: Term) -> Formula:
        return F.and_(F.not_(F.eq(lit, null_of(lit.sort))), F.not_(F.eq(lit, inval_of(lit.sort))))


def _compare(op: str, a: Term, b: Term) -> Formula:
    if op == "=":
        return F.Eq(a, b)
    if op == "<>":
        return F.not_(F.Eq(a, b))
    return F.Cmp(op, a, b)


def s2f_select(s: Select, reg: NamingRegistry, dm: DataModel, frees: dict | None = None) -> SelectTranslation:
    """Axioms defining ``s`` and its subselects, plus the scalar-subselect obligations.

    ``frees`` maps SQL variable names to the MSFOL constants shared with the OCL side.
    """
    frees = dict(frees or {})
    tr = _Translator(dm, reg, frees)
    ix, items, axioms, obligations = tr.select(s)
    return SelectTranslation(ix, tuple(items), tuple(dict.fromkeys(axioms)),
                             tuple(obligations), tuple(tr.comments))


def s2f_expr(e: SqlExpr, s: Select, reg: NamingRegistry, dm: DataModel, frees: dict | None = None) -> F.Theory:
    """Axioms for one expression of ``s`` evaluated in ``s``'s row space."""
    tr = _Translator(dm, reg, dict(frees or {}))
    tr.select(s)
    tr._vals.clear()  # re-derive e's axioms even if translating s already covered it
    axioms: list = []
    tr.expr(e, tr._spaces[id(s)], axioms, [])
    return F.make_theory(dict.fromkeys(axioms))
