"""Translation of data models and OCL Boolean expressions into MSFOL.

Every OCL Boolean expression gets four formulas, saying when it evaluates to
``true``, ``false``, ``null`` and ``invalid``. Non-Boolean scalar and object
expressions become terms together with their null/invalid conditions;
set-valued expressions become fresh predicates whose defining axioms are
collected in the context (the expression's definitions).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from . import msfol as F
from .datamodel import DataModel, Variable
from .msfol import BOOL, CLASSIFIER, INT, STRING, App, Decl, Formula, Term, Var
from .ocl import (
    BOOLEAN, INTEGER, STRING as OCL_STRING, VOID, AllInstances, AttrCall, BinOp, BoolLit, CollCall,
    IntLit, IsUndefined, Iterate, NavCall, NotOp, NullLit, OclExpr, SetType, StrLit, VarRef,
    free_variables, print_ocl,
)


class UnsupportedConstruct(ValueError):
    pass


NULL_INT = Decl("nullInt", (), INT)
INVAL_INT = Decl("invalInt", (), INT)
NULL_STRING = Decl("nullString", (), STRING)
INVAL_STRING = Decl("invalString", (), STRING)
NULL_CLASSIFIER = Decl("nullClassifier", (), CLASSIFIER)
INVAL_CLASSIFIER = Decl("invalClassifier", (), CLASSIFIER)

_NULLS = {INT: NULL_INT(), STRING: NULL_STRING(), CLASSIFIER: NULL_CLASSIFIER()}
_INVALS = {INT: INVAL_INT(), STRING: INVAL_STRING(), CLASSIFIER: INVAL_CLASSIFIER()}


def null_of(sort: F.Sort) -> Term:
    return _NULLS[sort]


def inval_of(sort: F.Sort) -> Term:
    return _INVALS[sort]


def sort_for(ocl_type) -> F.Sort:
    if ocl_type == INTEGER:
        return INT
    if ocl_type == OCL_STRING:
        return STRING
    if ocl_type in (BOOLEAN,) or isinstance(ocl_type, SetType):
        raise UnsupportedConstruct(f"no MSFOL value sort for OCL type {ocl_type}")
    return CLASSIFIER


class DataSymbols:
    """Predicate/function symbols of a data model's MSFOL theory."""

    def __init__(self, dm: DataModel):
        self.dm = dm
        self.classes = {c: Decl(c, (CLASSIFIER,), BOOL) for c in dm.classes}
        by_name: dict[str, set] = {}
        for a in dm.attributes:
            by_name.setdefault(a.name, set()).add(sort_for(a.type))
        self.attributes: dict[tuple[str, str], Decl] = {}
        for a in dm.attributes:
            name = a.name if len(by_name[a.name]) == 1 else f"{a.owner}.{a.name}"
            self.attributes[(a.owner, a.name)] = Decl(name, (CLASSIFIER,), sort_for(a.type))
        self.associations = {s.name: Decl(s.name, (CLASSIFIER, CLASSIFIER), BOOL) for s in dm.associations}
        taken = set(self.classes) | {d.name for d in self.attributes.values()}
        clash = taken & set(self.associations)
        if clash or len(taken) < len(self.classes) + len({d.name for d in self.attributes.values()}):
            raise UnsupportedConstruct(f"class/attribute/association names collide: {sorted(clash)}")

    def attribute(self, owner: str, name: str) -> Decl:
        return self.attributes[(owner, name)]


def o2f_data(dm: DataModel) -> F.Theory:
    syms = DataSymbols(dm)
    c = Var("c", CLASSIFIER)
    d = Var("d", CLASSIFIER)
    axioms: list[Formula] = [F.not_(F.eq(null_of(s), inval_of(s))) for s in (INT, STRING, CLASSIFIER)]
    preds = list(syms.classes.values())
    for p in preds:
        axioms.append(F.not_(p(null_of(CLASSIFIER))))
        axioms.append(F.not_(p(inval_of(CLASSIFIER))))
    for i, p in enumerate(preds):
        for q in preds[i + 1:]:
            axioms.append(F.forall([c], F.not_(F.and_(p(c), q(c)))))
    for a in dm.attributes:
        fn = syms.attribute(a.owner, a.name)
        owner = syms.classes[a.owner]
        if dm.is_class(a.type):
            ok = F.or_(F.eq(fn(c), null_of(CLASSIFIER)), syms.classes[a.type](fn(c)))
        else:
            ok = F.not_(F.eq(fn(c), inval_of(fn.result)))
        axioms.append(F.forall([c], F.implies(owner(c), ok)))
    for s in dm.associations:
        r = syms.associations[s.name]
        axioms.append(F.forall([c, d], F.implies(
            r(c, d), F.and_(syms.classes[s.left_class](c), syms.classes[s.right_class](d)))))
    base = [NULL_INT, INVAL_INT, NULL_STRING, INVAL_STRING, NULL_CLASSIFIER, INVAL_CLASSIFIER]
    decls = base + preds + list(dict.fromkeys(syms.attributes.values())) + list(syms.associations.values())
    return F.make_theory(axioms, declarations=decls)


@dataclass(frozen=True)
class Val:
    """Translation of a scalar/object expression."""

    term: Term
    null: Formula
    inval: Formula


@dataclass(frozen=True)
class Coll:
    """Translation of a set expression: membership predicate applied to context args."""

    decl: Decl
    args: tuple
    inval: Formula

    def member(self, t: Term) -> Formula:
        return self.decl(*self.args, t)

    @property
    def elem_sort(self) -> F.Sort:
        return self.decl.args[-1]


@dataclass
class TranslationContext:
    dm: DataModel
    symbols: DataSymbols = None
    env: dict = field(default_factory=dict)
    defs: list = field(default_factory=list)
    comments: list = field(default_factory=list)
    _cache: dict = field(default_factory=dict)
    _names: set = field(default_factory=set)
    _counter: int = 0
    _memo: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.symbols is None:
            self.symbols = DataSymbols(self.dm)

    def fresh(self, hint: str, sort: F.Sort) -> Var:
        self._counter += 1
        return Var(f"{hint}_{self._counter}", sort)

    def add_def(self, f: Formula) -> None:
        if f not in self.defs and f != F.TOP:
            self.defs.append(f)

    def definitions(self) -> F.Theory:
        return F.make_theory(self.defs, comments=self.comments)


def declare_frees(variables: Sequence[Variable], ctx: TranslationContext) -> list[Decl]:
    """Declare free variables as constants and bind them in ``ctx``.

    Object variables are constrained to their class; primitive variables may
    be null but never invalid.
    """
    out = []
    for v in variables:
        sort = sort_for(v.type)
        d = Decl(v.name, (), sort)
        if v.name in ctx.symbols.classes or v.name in ctx.symbols.associations or \
                any(a.name == v.name for a in ctx.symbols.attributes.values()):
            raise UnsupportedConstruct(f"variable {v.name!r} clashes with a data-model symbol")
        ctx.env[v.name] = d()
        out.append(d)
    return out


def frees_axioms(variables: Sequence[Variable], ctx: TranslationContext) -> list[Formula]:
    axioms = []
    for v in variables:
        t = ctx.env[v.name]
        if ctx.dm.is_class(v.type):
            axioms.append(ctx.symbols.classes[v.type](t))
        else:
            axioms.append(F.not_(F.eq(t, inval_of(t.sort))))
    return axioms


def o2f_true(e: OclExpr, ctx: TranslationContext) -> Formula:
    return _Translator(ctx).truth(e, ctx.env, "true")


def o2f_false(e: OclExpr, ctx: TranslationContext) -> Formula:
    return _Translator(ctx).truth(e, ctx.env, "false")


def o2f_null(e: OclExpr, ctx: TranslationContext) -> Formula:
    return _Translator(ctx).truth(e, ctx.env, "null")


def o2f_inval(e: OclExpr, ctx: TranslationContext) -> Formula:
    return _Translator(ctx).truth(e, ctx.env, "inval")


def o2f_eval(e: OclExpr, ctx: TranslationContext):
    """Term (for values/objects) or predicate application builder (for sets)."""
    tr = _Translator(ctx)
    if isinstance(e.type, SetType):
        return tr.coll(e, ctx.env)
    if e.type == BOOLEAN:
        raise UnsupportedConstruct("o2f_eval applies to non-Boolean expressions")
    return tr.val(e, ctx.env)


KINDS = ("true", "false", "null", "inval")


class _Translator:
    def __init__(self, ctx: TranslationContext):
        self.ctx = ctx

    # -- Boolean expressions -------------------------------------------------

    def truth(self, e: OclExpr, env: dict, kind: str) -> Formula:
        if e.type != BOOLEAN:
            raise UnsupportedConstruct(f"{print_ocl(e)} is not Boolean")
        key = (e, tuple(env.items()), kind)
        memo = self.ctx._memo
        if key not in memo:
            memo[key] = self._truth(e, env, kind)
        return memo[key]

    def _truth(self, e, env, k) -> Formula:
        T = lambda x, kk, en=env: self.truth(x, en, kk)
        if isinstance(e, BoolLit):
            return {"true": F.BoolConst(e.value), "false": F.BoolConst(not e.value)}.get(k, F.BOTTOM)
        if isinstance(e, NotOp):
            return T(e.operand, {"true": "false", "false": "true"}.get(k, k))
        if isinstance(e, IsUndefined):
            undef = self.undefined(e.source, env)
            return {"true": undef, "false": F.not_(undef)}.get(k, F.BOTTOM)
        if isinstance(e, BinOp):
            if e.op in ("and", "or", "implies"):
                return self.connective(e, env, k)
            if e.op in ("=", "<>"):
                return self.equality(e, env, k)
            return self.comparison(e, env, k)
        if isinstance(e, CollCall) and e.op in ("isEmpty", "notEmpty"):
            c = self.coll(e.source, env)
            y = self.ctx.fresh("y", c.elem_sort)
            some = F.exists([y], c.member(y))
            if k == "inval":
                return c.inval
            if k == "null":
                return F.BOTTOM
            empty = (k == "true") == (e.op == "isEmpty")
            return F.and_(F.not_(c.inval), F.not_(some) if empty else some)
        if isinstance(e, Iterate) and e.op in ("forAll", "exists"):
            return self.quantifier(e, env, k)
        if isinstance(e, VarRef):
            raise UnsupportedConstruct("Boolean-typed variables are not supported")
        raise UnsupportedConstruct(f"unsupported Boolean construct: {print_ocl(e)}")

    def connective(self, e: BinOp, env, k) -> Formula:
        a, b = e.left, e.right
        T = lambda x, kk: self.truth(x, env, kk)
        inval = F.or_(T(a, "inval"), T(b, "inval"))
        null = F.or_(T(a, "null"), T(b, "null"))
        if e.op == "and":
            dominant, dom_kind, other = F.or_(T(a, "false"), T(b, "false")), "false", F.and_(T(a, "true"), T(b, "true"))
        elif e.op == "or":
            dominant, dom_kind, other = F.or_(T(a, "true"), T(b, "true")), "true", F.and_(T(a, "false"), T(b, "false"))
        else:
            dominant, dom_kind, other = F.or_(T(a, "false"), T(b, "true")), "true", F.and_(T(a, "true"), T(b, "false"))
        if k == dom_kind:
            return dominant
        if k == "inval":
            return F.and_(F.not_(dominant), inval)
        if k == "null":
            return F.and_(F.not_(dominant), F.not_(inval), null)
        return other

    def equality(self, e: BinOp, env, k) -> Formula:
        a, b = e.left, e.right
        if a.type == BOOLEAN:
            T = lambda x, kk: self.truth(x, env, kk)
            inval = F.or_(T(a, "inval"), T(b, "inval"))
            same = F.or_(*(F.and_(T(a, kk), T(b, kk)) for kk in ("true", "false", "null")))
        elif a.type == VOID and b.type == VOID:
            inval, same = F.BOTTOM, F.TOP
        else:
            va, vb = self.val(a, env), self.val(b, env)
            inval = F.or_(va.inval, vb.inval)
            same = F.or_(F.and_(va.null, vb.null),
                         F.and_(F.not_(va.null), F.not_(vb.null), F.eq(va.term, vb.term)))
        if k == "inval":
            return inval
        if k == "null":
            return F.BOTTOM
        positive = (k == "true") == (e.op == "=")
        return F.and_(F.not_(inval), same if positive else F.not_(same))

    def comparison(self, e: BinOp, env, k) -> Formula:
        va, vb = self.val(e.left, env), self.val(e.right, env)
        undefined = F.or_(va.inval, vb.inval, va.null, vb.null)
        if k == "inval":
            return undefined
        if k == "null":
            return F.BOTTOM
        holds = F.Cmp(e.op, va.term, vb.term)
        return F.and_(F.not_(undefined), holds if k == "true" else F.not_(holds))

    def quantifier(self, e: Iterate, env, k) -> Formula:
        c = self.coll(e.source, env)

        def some(kind: str) -> Formula:
            x = self.ctx.fresh(e.var, c.elem_sort)
            inner = dict(env)
            inner[e.var] = x
            return F.exists([x], F.and_(c.member(x), self.truth(e.body, inner, kind)))

        def every(kind: str) -> Formula:
            x = self.ctx.fresh(e.var, c.elem_sort)
            inner = dict(env)
            inner[e.var] = x
            return F.forall([x], F.implies(c.member(x), self.truth(e.body, inner, kind)))

        decisive, default = ("false", "true") if e.op == "forAll" else ("true", "false")
        ok = F.not_(c.inval)
        if k == decisive:
            return F.and_(ok, some(decisive))
        if k == default:
            return F.and_(ok, every(default))
        if k == "inval":
            return F.or_(c.inval, F.and_(F.not_(some(decisive)), some("inval")))
        return F.and_(ok, F.not_(some(decisive)), F.not_(some("inval")), some("null"))

    def undefined(self, e: OclExpr, env) -> Formula:
        if e.type == BOOLEAN:
            return F.or_(self.truth(e, env, "null"), self.truth(e, env, "inval"))
        if isinstance(e.type, SetType):
            return self.coll(e, env).inval
        v = self.val(e, env)
        return F.or_(v.null, v.inval)

    # -- values ----------------------------------------------------------------

    def val(self, e: OclExpr, env) -> Val:
        if isinstance(e, IntLit):
            lit = F.IntLit(e.value)
            self.literal_axiom(lit)
            return Val(lit, F.BOTTOM, F.BOTTOM)
        if isinstance(e, StrLit):
            lit = F.StrLit(e.value)
            self.literal_axiom(lit)
            return Val(lit, F.BOTTOM, F.BOTTOM)
        if isinstance(e, NullLit):
            sort = CLASSIFIER if e.type == VOID else sort_for(e.type)
            return Val(null_of(sort), F.TOP, F.BOTTOM)
        if isinstance(e, VarRef):
            t = env[e.name]
            return Val(t, F.eq(t, null_of(t.sort)), F.eq(t, inval_of(t.sort)))
        if isinstance(e, AttrCall):
            src = self.val(e.source, env)
            fn = self.ctx.symbols.attribute(e.source.type, e.attr)
            term = fn(src.term)
            inval = F.or_(src.null, src.inval)
            return Val(term, F.and_(F.not_(inval), F.eq(term, null_of(fn.result))), inval)
        raise UnsupportedConstruct(f"unsupported value expression: {print_ocl(e)}")

    def literal_axiom(self, lit: Term) -> None:
        self.ctx.add_def(F.and_(F.not_(F.eq(lit, null_of(lit.sort))), F.not_(F.eq(lit, inval_of(lit.sort)))))

    # -- sets ------------------------------------------------------------------

    def coll(self, e: OclExpr, env) -> Coll:
        if not isinstance(e.type, SetType):
            raise UnsupportedConstruct(f"{print_ocl(e)} is not a set")
        fv = free_variables(e)
        params = [(n, t) for n, t in env.items() if n in fv and isinstance(t, Var)]
        key = (e, tuple((n, t.sort) for n, t in params))
        decl = self.ctx._cache.get(key)
        if decl is None:
            decl = self.define(e, env, params, key)
        return Coll(decl, tuple(t for _, t in params), self.coll_inval(e, env))

    def define(self, e: OclExpr, env, params, key) -> Decl:
        text = print_ocl(e)
        name, n = text, 1
        while name in self.ctx._names:
            n += 1
            name = f"{text}#{n}"
        self.ctx._names.add(name)
        elem = sort_for(e.type.elem)
        decl = Decl(name, tuple(t.sort for _, t in params) + (elem,), BOOL)
        formals = {pn: self.ctx.fresh(pn, t.sort) for pn, t in params}
        inner = {n_: (formals[n_] if n_ in formals else t) for n_, t in env.items()
                 if not isinstance(t, Var) or n_ in formals}
        y = self.ctx.fresh("y", elem)
        body = self.coll_body(e, inner, y)
        self.ctx._cache[key] = decl
        self.ctx.add_def(F.forall(list(formals.values()) + [y], F.iff(decl(*formals.values(), y), body)))
        return decl

    def coll_body(self, e: OclExpr, env, y: Var) -> Formula:
        if isinstance(e, AllInstances):
            return self.ctx.symbols.classes[e.cls](y)
        if isinstance(e, NavCall):
            src = self.val(e.source, env)
            rel = self.ctx.symbols.associations[e.assoc]
            return rel(y, src.term) if e.side == "left" else rel(src.term, y)
        if isinstance(e, Iterate) and e.op in ("select", "reject"):
            c = self.coll(e.source, env)
            inner = dict(env)
            inner[e.var] = y
            return F.and_(c.member(y), self.truth(e.body, inner, "true" if e.op == "select" else "false"))
        if isinstance(e, Iterate) and e.op == "collect":
            c = self.coll(e.source, env)
            x = self.ctx.fresh(e.var, c.elem_sort)
            inner = dict(env)
            inner[e.var] = x
            if isinstance(e.body.type, SetType):
                image = self.coll(e.body, inner).member(y)
            else:
                image = F.eq(y, self.val(e.body, inner).term)
            return F.exists([x], F.and_(c.member(x), image))
        if isinstance(e, CollCall) and e.op in ("including", "excluding"):
            c = self.coll(e.source, env)
            v = self.val(e.arg, env)
            if e.op == "including":
                return F.or_(c.member(y), F.eq(y, v.term))
            return F.and_(c.member(y), F.not_(F.eq(y, v.term)))
        if isinstance(e, CollCall) and e.op in ("union", "intersection"):
            a, b = self.coll(e.source, env), self.coll(e.arg, env)
            combine = F.or_ if e.op == "union" else F.and_
            return combine(a.member(y), b.member(y))
        raise UnsupportedConstruct(f"unsupported set expression: {print_ocl(e)}")

    def coll_inval(self, e: OclExpr, env) -> Formula:
        if isinstance(e, AllInstances):
            return F.BOTTOM
        if isinstance(e, NavCall):
            src = self.val(e.source, env)
            return F.or_(src.null, src.inval)
        if isinstance(e, Iterate):
            c = self.coll(e.source, env)
            x = self.ctx.fresh(e.var, c.elem_sort)
            inner = dict(env)
            inner[e.var] = x
            if e.op == "collect":
                bad = self.coll(e.body, inner).inval if isinstance(e.body.type, SetType) \
                    else self.val(e.body, inner).inval
            else:
                bad = F.or_(self.truth(e.body, inner, "null"), self.truth(e.body, inner, "inval"))
            return F.or_(c.inval, F.exists([x], F.and_(c.member(x), bad)))
        if isinstance(e, CollCall) and e.op in ("including", "excluding"):
            return F.or_(self.coll(e.source, env).inval, self.val(e.arg, env).inval)
        if isinstance(e, CollCall) and e.op in ("union", "intersection"):
            return F.or_(self.coll(e.source, env).inval, self.coll(e.arg, env).inval)
        raise UnsupportedConstruct(f"unsupported set expression: {print_ocl(e)}")


def translate_boolean(e: OclExpr, ctx: TranslationContext) -> dict[str, Formula]:
    """All four valuation formulas of ``e``."""
    tr = _Translator(ctx)
    return {k: tr.truth(e, ctx.env, k) for k in KINDS}
