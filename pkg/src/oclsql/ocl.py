"""OCL subset: typed AST, parser, printer and four-valued evaluator."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .datamodel import PRIMITIVE_TYPES, DataModel, Obj, ObjectModel, Variable

BOOLEAN = "Boolean"
INTEGER = "Integer"
STRING = "String"
VOID = "OclVoid"


@dataclass(frozen=True)
class SetType:
    elem: str

    def __str__(self) -> str:
        return f"Set({self.elem})"


OclType = Union[str, SetType]


class OclError(ValueError):
    def __init__(self, msg: str, pos: int | None = None):
        super().__init__(msg if pos is None else f"{msg} (at offset {pos})")
        self.pos = pos


class OclSyntaxError(OclError):
    pass


class OclTypeError(OclError):
    pass


class _Invalid:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "invalid"

    def __reduce__(self):
        return (_Invalid, ())


INVALID = _Invalid()


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class BoolLit:
    value: bool
    type = BOOLEAN


@dataclass(frozen=True)
class IntLit:
    value: int
    type = INTEGER


@dataclass(frozen=True)
class StrLit:
    value: str
    type = STRING


@dataclass(frozen=True)
class NullLit:
    type: OclType = VOID


@dataclass(frozen=True)
class VarRef:
    name: str
    type: OclType


@dataclass(frozen=True)
class AttrCall:
    source: "OclExpr"
    attr: str
    type: OclType


@dataclass(frozen=True)
class NavCall:
    source: "OclExpr"
    assoc: str
    end: str
    side: str  # 'left' or 'right': where ``end`` sits in the association
    type: OclType


@dataclass(frozen=True)
class AllInstances:
    cls: str

    @property
    def type(self) -> SetType:
        return SetType(self.cls)


@dataclass(frozen=True)
class Iterate:
    op: str  # forAll exists select reject collect
    source: "OclExpr"
    var: str
    body: "OclExpr"
    type: OclType


@dataclass(frozen=True)
class CollCall:
    op: str  # isEmpty notEmpty including excluding union intersection
    source: "OclExpr"
    arg: "OclExpr | None"
    type: OclType


@dataclass(frozen=True)
class IsUndefined:
    source: "OclExpr"
    type = BOOLEAN


@dataclass(frozen=True)
class BinOp:
    op: str  # = <> < <= > >= and or implies
    left: "OclExpr"
    right: "OclExpr"
    type = BOOLEAN


@dataclass(frozen=True)
class NotOp:
    operand: "OclExpr"
    type = BOOLEAN


OclExpr = Union[BoolLit, IntLit, StrLit, NullLit, VarRef, AttrCall, NavCall, AllInstances,
                Iterate, CollCall, IsUndefined, BinOp, NotOp]

ITERATORS = ("forAll", "exists", "select", "reject", "collect")
COLL_OPS = ("isEmpty", "notEmpty", "including", "excluding", "union", "intersection")
COMPARISONS = ("<", "<=", ">", ">=")


def is_boolean(e: OclExpr) -> bool:
    return e.type == BOOLEAN


def is_collection(e: OclExpr) -> bool:
    return isinstance(e.type, SetType)


def free_variables(e: OclExpr) -> set[str]:
    if isinstance(e, VarRef):
        return {e.name}
    if isinstance(e, Iterate):
        return free_variables(e.source) | (free_variables(e.body) - {e.var})
    out: set[str] = set()
    for c in subexpressions(e):
        out |= free_variables(c)
    return out


def subexpressions(e: OclExpr) -> tuple:
    if isinstance(e, (AttrCall, NavCall, IsUndefined)):
        return (e.source,)
    if isinstance(e, Iterate):
        return (e.source, e.body)
    if isinstance(e, CollCall):
        return (e.source,) if e.arg is None else (e.source, e.arg)
    if isinstance(e, BinOp):
        return (e.left, e.right)
    if isinstance(e, NotOp):
        return (e.operand,)
    return ()


# -- lexer -------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+|--[^\n]*)
  | (?P<int>\d+)
  | (?P<str>'(?:[^'\\]|\\.)*'|"(?:[^"\\]|\\.)*")
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|<>|<=|>=|[.()|,:=<>\-])
""", re.VERBOSE)

KEYWORDS = {"and", "or", "not", "implies", "true", "false", "null"}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _lex(text: str) -> list[_Tok]:
    out, i = [], 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if not m:
            raise OclSyntaxError(f"unexpected character {text[i]!r}", i)
        kind = m.lastgroup
        if kind != "ws":
            tok = m.group()
            if kind == "id" and tok in KEYWORDS:
                kind = "kw"
            out.append(_Tok(kind, tok, i))
        i = m.end()
    out.append(_Tok("eof", "", len(text)))
    return out


def _unquote(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s[1:-1])


# -- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, dm: DataModel, variables: Sequence[Variable]):
        self.toks = _lex(text)
        self.i = 0
        self.dm = dm
        self.scope: list[tuple[str, OclType]] = [(v.name, v.type) for v in variables]
        for v in variables:
            if v.type not in PRIMITIVE_TYPES and not dm.is_class(v.type):
                raise OclTypeError(f"variable {v.name!r} has unknown type {v.type!r}")

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def take(self, text: str | None = None, kind: str | None = None) -> _Tok:
        t = self.tok
        if (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            want = repr(text) if text else kind
            got = repr(t.text) if t.kind != "eof" else "end of input"
            raise OclSyntaxError(f"expected {want}, found {got}", t.pos)
        self.i += 1
        return t

    def at(self, *texts: str) -> bool:
        return self.tok.text in texts and self.tok.kind in ("op", "kw", "id")

    def lookup(self, name: str) -> OclType | None:
        for n, t in reversed(self.scope):
            if n == name:
                return t
        return None

    def parse(self) -> OclExpr:
        e = self.implies()
        if self.tok.kind != "eof":
            raise OclSyntaxError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return e

    def implies(self) -> OclExpr:
        e = self.or_()
        while self.at("implies"):
            pos = self.take().pos
            e = _logic("implies", e, self.or_(), pos)
        return e

    def or_(self) -> OclExpr:
        e = self.and_()
        while self.at("or"):
            pos = self.take().pos
            e = _logic("or", e, self.and_(), pos)
        return e

    def and_(self) -> OclExpr:
        e = self.equality()
        while self.at("and"):
            pos = self.take().pos
            e = _logic("and", e, self.equality(), pos)
        return e

    def equality(self) -> OclExpr:
        e = self.relational()
        while self.at("=", "<>"):
            t = self.take()
            e = _equality(t.text, e, self.relational(), t.pos)
        return e

    def relational(self) -> OclExpr:
        e = self.unary()
        while self.at(*COMPARISONS):
            t = self.take()
            r = self.unary()
            for side in (e, r):
                if side.type != INTEGER:
                    raise OclTypeError(f"{t.text} needs Integer operands, got {side.type}", t.pos)
            e = BinOp(t.text, e, r)
        return e

    def unary(self) -> OclExpr:
        if self.at("not"):
            pos = self.take().pos
            e = self.unary()
            if e.type != BOOLEAN:
                raise OclTypeError(f"not needs a Boolean operand, got {e.type}", pos)
            return NotOp(e)
        if self.at("-") and self.toks[self.i + 1].kind == "int":
            self.take()
            return self.postfix(IntLit(-int(self.take().text)))
        return self.postfix(self.primary())

    def primary(self) -> OclExpr:
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return IntLit(int(t.text))
        if t.kind == "str":
            self.i += 1
            return StrLit(_unquote(t.text))
        if t.kind == "kw" and t.text in ("true", "false"):
            self.i += 1
            return BoolLit(t.text == "true")
        if t.kind == "kw" and t.text == "null":
            self.i += 1
            return NullLit()
        if t.text == "(":
            self.i += 1
            e = self.implies()
            self.take(")")
            return e
        if t.kind == "id":
            self.i += 1
            typ = self.lookup(t.text)
            if typ is not None:
                return VarRef(t.text, typ)
            if self.dm.is_class(t.text):
                self.take(".")
                self.take("allInstances")
                self.take("(")
                self.take(")")
                return AllInstances(t.text)
            raise OclTypeError(f"unknown variable or class {t.text!r}", t.pos)
        got = repr(t.text) if t.kind != "eof" else "end of input"
        raise OclSyntaxError(f"expected an expression, found {got}", t.pos)

    def postfix(self, e: OclExpr) -> OclExpr:
        while True:
            if self.at("."):
                self.take()
                e = self.dot(e)
            elif self.at("->"):
                self.take()
                e = self.arrow(e)
            else:
                return e

    def dot(self, src: OclExpr) -> OclExpr:
        t = self.take(kind="id")
        if t.text == "oclIsUndefined":
            self.take("(")
            self.take(")")
            return IsUndefined(src)
        if isinstance(src.type, SetType) or src.type in (BOOLEAN, INTEGER, STRING, VOID):
            raise OclTypeError(f"cannot access {t.text!r} on a value of type {src.type}", t.pos)
        attr = self.dm.attribute(src.type, t.text)
        if attr is not None:
            return AttrCall(src, attr.name, attr.type)
        end = self.dm.end(src.type, t.text)
        if end is not None:
            assoc, side = end
            cls = assoc.left_class if side == "left" else assoc.right_class
            return NavCall(src, assoc.name, t.text, side, SetType(cls))
        raise OclTypeError(f"class {src.type} has no attribute or association end {t.text!r}", t.pos)

    def arrow(self, src: OclExpr) -> OclExpr:
        t = self.take(kind="id")
        if not isinstance(src.type, SetType):
            raise OclTypeError(f"->{t.text} needs a collection, got {src.type}", t.pos)
        elem = src.type.elem
        self.take("(")
        if t.text in ITERATORS:
            var = self.take(kind="id")
            if var.text in KEYWORDS:
                raise OclSyntaxError("iterator variable expected", var.pos)
            if self.at(":"):
                self.take()
                declared = self.take(kind="id")
                if declared.text != elem:
                    raise OclTypeError(f"iterator declared {declared.text} over Set({elem})", declared.pos)
            self.take("|")
            self.scope.append((var.text, elem))
            try:
                body = self.implies()
            finally:
                self.scope.pop()
            self.take(")")
            if t.text == "collect":
                if body.type == BOOLEAN or body.type == VOID:
                    raise OclTypeError(f"collect of {body.type} values is not supported", t.pos)
                rt = body.type if isinstance(body.type, SetType) else SetType(body.type)
                return Iterate("collect", src, var.text, body, rt)
            if body.type != BOOLEAN:
                raise OclTypeError(f"{t.text} body must be Boolean, got {body.type}", t.pos)
            return Iterate(t.text, src, var.text, body, BOOLEAN if t.text in ("forAll", "exists") else src.type)
        if t.text in ("isEmpty", "notEmpty"):
            self.take(")")
            return CollCall(t.text, src, None, BOOLEAN)
        if t.text in ("including", "excluding"):
            arg = self.implies()
            self.take(")")
            if isinstance(arg, NullLit):
                arg = NullLit(elem)
            elif arg.type != elem:
                raise OclTypeError(f"->{t.text} argument of type {arg.type} on Set({elem})", t.pos)
            return CollCall(t.text, src, arg, src.type)
        if t.text in ("union", "intersection"):
            arg = self.implies()
            self.take(")")
            if arg.type != src.type:
                raise OclTypeError(f"->{t.text} of {src.type} with {arg.type}", t.pos)
            return CollCall(t.text, src, arg, src.type)
        raise OclSyntaxError(f"unsupported collection operation {t.text!r}", t.pos)


def _logic(op: str, l: OclExpr, r: OclExpr, pos: int) -> OclExpr:
    for side in (l, r):
        if side.type != BOOLEAN:
            raise OclTypeError(f"{op} needs Boolean operands, got {side.type}", pos)
    return BinOp(op, l, r)


def _equality(op: str, l: OclExpr, r: OclExpr, pos: int) -> OclExpr:
    lt, rt = l.type, r.type
    if isinstance(lt, SetType) or isinstance(rt, SetType):
        raise OclTypeError(f"{op} on collections is not supported", pos)
    if isinstance(l, NullLit) and rt != VOID:
        l = NullLit(rt)
    elif isinstance(r, NullLit) and lt != VOID:
        r = NullLit(lt)
    elif lt != rt:
        raise OclTypeError(f"{op} between {lt} and {rt}", pos)
    return BinOp(op, l, r)


def parse_ocl(text: str, dm: DataModel, variables: Sequence[Variable] = ()) -> OclExpr:
    return _Parser(text, dm, variables).parse()


# -- printer -------------------------------------------------------------------

_PREC = {"implies": 1, "or": 2, "and": 3, "=": 4, "<>": 4, "<": 5, "<=": 5, ">": 5, ">=": 5}


def _prec(e: OclExpr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, NotOp):
        return 6
    if isinstance(e, IntLit) and e.value < 0:
        return 6
    return 7


def print_ocl(e: OclExpr) -> str:
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, StrLit):
        return "'" + e.value.replace("\\", "\\\\").replace("'", "\\'") + "'"
    if isinstance(e, NullLit):
        return "null"
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, AllInstances):
        return f"{e.cls}.allInstances()"
    if isinstance(e, AttrCall):
        return f"{_atom(e.source)}.{e.attr}"
    if isinstance(e, NavCall):
        return f"{_atom(e.source)}.{e.end}"
    if isinstance(e, IsUndefined):
        return f"{_atom(e.source)}.oclIsUndefined()"
    if isinstance(e, Iterate):
        return f"{_atom(e.source)}->{e.op}({e.var} | {print_ocl(e.body)})"
    if isinstance(e, CollCall):
        arg = "" if e.arg is None else print_ocl(e.arg)
        return f"{_atom(e.source)}->{e.op}({arg})"
    if isinstance(e, NotOp):
        inner = print_ocl(e.operand)
        return f"not {inner}" if _prec(e.operand) >= 6 else f"not ({inner})"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        l = print_ocl(e.left)
        r = print_ocl(e.right)
        if _prec(e.left) < p:
            l = f"({l})"
        if _prec(e.right) <= p:
            r = f"({r})"
        return f"{l} {e.op} {r}"
    raise TypeError(e)


def _atom(e: OclExpr) -> str:
    s = print_ocl(e)
    return s if _prec(e) == 7 else f"({s})"


# -- evaluator -------------------------------------------------------------------

Value = Union[bool, int, str, Obj, None, _Invalid, frozenset]


def ocl_and(a, b):
    if a is False or b is False:
        return False
    if a is INVALID or b is INVALID:
        return INVALID
    if a is None or b is None:
        return None
    return True


def ocl_or(a, b):
    if a is True or b is True:
        return True
    if a is INVALID or b is INVALID:
        return INVALID
    if a is None or b is None:
        return None
    return False


def ocl_implies(a, b):
    if a is False or b is True:
        return True
    if a is INVALID or b is INVALID:
        return INVALID
    if a is None or b is None:
        return None
    return False


def ocl_not(a):
    if a is INVALID or a is None:
        return a
    return not a


def eval_ocl(om: ObjectModel, sigma: Mapping[str, Value], e: OclExpr) -> Value:
    """Evaluate ``e`` in ``om`` under the variable bindings ``sigma``."""
    if hasattr(sigma, "as_dict"):
        sigma = sigma.as_dict()
    return _Eval(om).run(e, dict(sigma))


class _Eval:
    def __init__(self, om: ObjectModel):
        self.om = om

    def run(self, e: OclExpr, env: dict) -> Value:
        if isinstance(e, (BoolLit, IntLit, StrLit)):
            return e.value
        if isinstance(e, NullLit):
            return None
        if isinstance(e, VarRef):
            return env[e.name]
        if isinstance(e, AllInstances):
            return frozenset(self.om.of_class(e.cls))
        if isinstance(e, AttrCall):
            src = self.run(e.source, env)
            if src is None or src is INVALID:
                return INVALID
            return self.om.value(src, e.attr)
        if isinstance(e, NavCall):
            src = self.run(e.source, env)
            if src is None or src is INVALID:
                return INVALID
            return self.navigate(src, e)
        if isinstance(e, IsUndefined):
            v = self.run(e.source, env)
            return v is None or v is INVALID
        if isinstance(e, NotOp):
            return ocl_not(self.run(e.operand, env))
        if isinstance(e, BinOp):
            return self.binop(e, env)
        if isinstance(e, CollCall):
            return self.collop(e, env)
        if isinstance(e, Iterate):
            return self.iterate(e, env)
        raise TypeError(e)

    def navigate(self, src: Obj, e: NavCall) -> frozenset:
        links = self.om.linked(e.assoc)
        # the navigating object stands at the end opposite to ``e.end``
        if e.side == "left":
            return frozenset(self.om.get(l.left) for l in links if l.right == src.oid)
        return frozenset(self.om.get(l.right) for l in links if l.left == src.oid)

    def binop(self, e: BinOp, env: dict) -> Value:
        l = self.run(e.left, env)
        r = self.run(e.right, env)
        if e.op == "and":
            return ocl_and(l, r)
        if e.op == "or":
            return ocl_or(l, r)
        if e.op == "implies":
            return ocl_implies(l, r)
        if l is INVALID or r is INVALID:
            return INVALID
        if e.op in ("=", "<>"):
            same = _same(l, r)
            return same if e.op == "=" else not same
        if l is None or r is None:
            return INVALID
        return {"<": l < r, "<=": l <= r, ">": l > r, ">=": l >= r}[e.op]

    def collop(self, e: CollCall, env: dict) -> Value:
        src = self.run(e.source, env)
        arg = None if e.arg is None else self.run(e.arg, env)
        if src is INVALID or arg is INVALID:
            return INVALID
        if e.op == "isEmpty":
            return not src
        if e.op == "notEmpty":
            return bool(src)
        if e.op == "including":
            return src | {arg}
        if e.op == "excluding":
            return frozenset(x for x in src if not _same(x, arg))
        if e.op == "union":
            return src | arg
        return src & arg

    def iterate(self, e: Iterate, env: dict) -> Value:
        src = self.run(e.source, env)
        if src is INVALID:
            return INVALID
        results = []
        for x in sorted(src, key=_sort_key):
            inner = dict(env)
            inner[e.var] = x
            results.append((x, self.run(e.body, inner)))
        vals = [r for _, r in results]
        if e.op == "forAll":
            out = True
            for v in vals:
                out = ocl_and(out, v)
            return out
        if e.op == "exists":
            out = False
            for v in vals:
                out = ocl_or(out, v)
            return out
        if e.op == "collect":
            if any(v is INVALID for v in vals):
                return INVALID
            out = set()
            for v in vals:
                out |= v if isinstance(v, frozenset) else {v}
            return frozenset(out)
        if any(v is None or v is INVALID for v in vals):
            return INVALID
        keep = e.op == "select"
        return frozenset(x for x, v in results if v is keep)


def _same(a, b) -> bool:
    # bool is an int subclass; typing keeps Booleans and Integers apart, but be strict anyway
    return type(a) is type(b) and a == b


def _sort_key(x):
    return (x is None, type(x).__name__, x.oid if isinstance(x, Obj) else x if x is not None else 0)

