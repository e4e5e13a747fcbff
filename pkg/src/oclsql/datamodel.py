"""Data models, object models, assignments, and bounded enumeration of them."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from typing import Iterable, Iterator, Mapping, Sequence, Union

import jsonschema

PRIMITIVE_TYPES = ("Integer", "String")


class ModelError(ValueError):
    """Malformed or inconsistent data-model / object-model input."""


@dataclass(frozen=True)
class Attribute:
    name: str
    owner: str
    type: str


@dataclass(frozen=True)
class Association:
    name: str
    left_end: str
    left_class: str
    right_end: str
    right_class: str


@dataclass(frozen=True)
class DataModel:
    classes: tuple[str, ...] = ()
    attributes: tuple[Attribute, ...] = ()
    associations: tuple[Association, ...] = ()

    def __post_init__(self):
        if len(set(self.classes)) != len(self.classes):
            raise ModelError("duplicate class name")
        known = set(self.classes)
        seen = set()
        for a in self.attributes:
            if a.owner not in known:
                raise ModelError(f"attribute {a.name!r} belongs to unknown class {a.owner!r}")
            if a.type not in PRIMITIVE_TYPES and a.type not in known:
                raise ModelError(f"attribute {a.owner}.{a.name} has unknown type {a.type!r}")
            if (a.owner, a.name) in seen:
                raise ModelError(f"duplicate attribute {a.owner}.{a.name}")
            seen.add((a.owner, a.name))
        names = set()
        for s in self.associations:
            if s.name in names:
                raise ModelError(f"duplicate association {s.name!r}")
            names.add(s.name)
            for c in (s.left_class, s.right_class):
                if c not in known:
                    raise ModelError(f"association {s.name!r} references unknown class {c!r}")
            if s.left_end == s.right_end:
                raise ModelError(f"association {s.name!r} has two ends named {s.left_end!r}")

    def attributes_of(self, cls: str) -> tuple[Attribute, ...]:
        return tuple(a for a in self.attributes if a.owner == cls)

    def attribute(self, cls: str, name: str) -> Attribute | None:
        for a in self.attributes:
            if a.owner == cls and a.name == name:
                return a
        return None

    def association(self, name: str) -> Association:
        for s in self.associations:
            if s.name == name:
                return s
        raise KeyError(name)

    def end(self, cls: str, end_name: str) -> tuple[Association, str] | None:
        """Association end reachable from an object of ``cls``: (association, 'left'|'right').

        ``obj.end`` navigates to the objects standing at ``end``; the navigating
        object stands at the opposite end.
        """
        for s in self.associations:
            if s.left_end == end_name and s.right_class == cls:
                return s, "left"
            if s.right_end == end_name and s.left_class == cls:
                return s, "right"
        return None

    def is_class(self, name: str) -> bool:
        return name in self.classes


@dataclass(frozen=True, order=True)
class Obj:
    oid: int
    cls: str

    def __repr__(self) -> str:
        return f"{self.cls}#{self.oid}"


@dataclass(frozen=True, order=True)
class Link:
    assoc: str
    left: int
    right: int


Value = Union[int, str, Obj, None]


@dataclass(frozen=True)
class ObjectModel:
    """A population of a data model. Missing attribute values are null."""

    objects: tuple[Obj, ...] = ()
    values: tuple[tuple[tuple[int, str], Value], ...] = ()
    links: tuple[Link, ...] = ()

    @cached_property
    def _values(self) -> dict:
        return dict(self.values)

    @cached_property
    def _by_id(self) -> dict[int, Obj]:
        return {o.oid: o for o in self.objects}

    def value(self, obj: Obj, attr: str) -> Value:
        return self._values.get((obj.oid, attr))

    def get(self, oid: int) -> Obj:
        return self._by_id[oid]

    def of_class(self, cls: str) -> tuple[Obj, ...]:
        return tuple(o for o in self.objects if o.cls == cls)

    def linked(self, assoc: str) -> tuple[Link, ...]:
        return tuple(l for l in self.links if l.assoc == assoc)


def make_object_model(dm: DataModel, objects: Iterable[Obj],
                      values: Mapping[tuple[int, str], Value] | None = None,
                      links: Iterable[Link] = ()) -> ObjectModel:
    """Canonicalize and validate an object model against ``dm``."""
    values = dict(values or {})
    objs = sorted(objects)
    by_id: dict[int, Obj] = {}
    for o in objs:
        if o.oid in by_id:
            raise ModelError(f"duplicate object id {o.oid}")
        if not dm.is_class(o.cls):
            raise ModelError(f"object {o.oid} has unknown class {o.cls!r}")
        if o.oid < 1:
            raise ModelError(f"object id {o.oid} is not a positive integer")
        by_id[o.oid] = o
    canon = []
    for o in objs:
        for a in dm.attributes_of(o.cls):
            v = values.pop((o.oid, a.name), None)
            canon.append(((o.oid, a.name), _check_value(dm, a, v, by_id)))
    if values:
        (oid, name), _ = next(iter(values.items()))
        if oid not in by_id:
            raise ModelError(f"attribute value for unknown object {oid}")
        raise ModelError(f"object {oid} ({by_id[oid].cls}) has no attribute {name!r}")
    ls = sorted(set(links))
    for l in ls:
        try:
            s = dm.association(l.assoc)
        except KeyError:
            raise ModelError(f"link uses unknown association {l.assoc!r}") from None
        for oid, cls in ((l.left, s.left_class), (l.right, s.right_class)):
            if oid not in by_id:
                raise ModelError(f"link {l.assoc}({l.left},{l.right}) references unknown object {oid}")
            if by_id[oid].cls != cls:
                raise ModelError(f"link {l.assoc}({l.left},{l.right}): object {oid} is a "
                                 f"{by_id[oid].cls}, expected {cls}")
    return ObjectModel(tuple(objs), tuple(canon), tuple(ls))


def _check_value(dm: DataModel, a: Attribute, v, by_id: Mapping[int, Obj]) -> Value:
    if v is None:
        return None
    if a.type == "Integer":
        if isinstance(v, bool) or not isinstance(v, int):
            raise ModelError(f"{a.owner}.{a.name} expects an Integer, got {v!r}")
        return v
    if a.type == "String":
        if not isinstance(v, str):
            raise ModelError(f"{a.owner}.{a.name} expects a String, got {v!r}")
        return v
    oid = v.oid if isinstance(v, Obj) else v
    target = by_id.get(oid) if isinstance(oid, int) and not isinstance(oid, bool) else None
    if target is None or target.cls != a.type:
        raise ModelError(f"{a.owner}.{a.name} expects a {a.type} object id, got {v!r}")
    return target


# -- documents ---------------------------------------------------------------


def _schema(name: str) -> dict:
    return json.loads(resources.files("oclsql.schemas").joinpath(name).read_text())


def _parse_json(text: str, schema: str) -> dict:
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as e:
        raise ModelError(f"parse error at line {e.lineno}, column {e.colno}: {e.msg}") from None
    try:
        jsonschema.validate(doc, _schema(schema))
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ModelError(f"invalid document at {where}: {e.message}") from None
    return doc


def load_data_model(text: str) -> DataModel:
    doc = _parse_json(text, "datamodel.schema.json")
    classes = tuple(doc.get("classes", {}))
    attrs = tuple(Attribute(a["name"], c, a["type"])
                  for c, lst in doc.get("classes", {}).items() for a in lst)
    assocs = tuple(Association(s["name"], s["leftEnd"], s["leftClass"], s["rightEnd"], s["rightClass"])
                   for s in doc.get("associations", []))
    return DataModel(classes, attrs, assocs)


def dump_data_model(dm: DataModel) -> str:
    doc = {
        "classes": {c: [{"name": a.name, "type": a.type} for a in dm.attributes_of(c)]
                    for c in dm.classes},
        "associations": [{"name": s.name, "leftEnd": s.left_end, "leftClass": s.left_class,
                          "rightEnd": s.right_end, "rightClass": s.right_class}
                         for s in dm.associations],
    }
    return json.dumps(doc, indent=2) + "\n"


def load_object_model(text: str, dm: DataModel) -> ObjectModel:
    doc = _parse_json(text, "objectmodel.schema.json")
    objects = []
    values: dict[tuple[int, str], Value] = {}
    for o in doc.get("objects", []):
        if any(x.oid == o["id"] for x in objects):
            raise ModelError(f"duplicate object id {o['id']}")
        objects.append(Obj(o["id"], o["class"]))
        for k, v in o.get("attrs", {}).items():
            values[(o["id"], k)] = v
    links = [Link(l["assoc"], l["left"], l["right"]) for l in doc.get("links", [])]
    return make_object_model(dm, objects, values, links)


def dump_object_model(om: ObjectModel) -> str:
    attrs: dict[int, dict] = {o.oid: {} for o in om.objects}
    for (oid, name), v in om.values:
        attrs[oid][name] = v.oid if isinstance(v, Obj) else v
    doc = {
        "objects": [{"id": o.oid, "class": o.cls, "attrs": attrs[o.oid]} for o in om.objects],
        "links": [{"assoc": l.assoc, "left": l.left, "right": l.right} for l in om.links],
    }
    return json.dumps(doc, indent=2) + "\n"


# -- assignments -------------------------------------------------------------


@dataclass(frozen=True)
class Variable:
    name: str
    type: str

    @classmethod
    def parse(cls, decl: str) -> "Variable":
        name, sep, typ = decl.partition(":")
        if not sep or not name.strip() or not typ.strip():
            raise ValueError(f"variable declaration must look like NAME:TYPE, got {decl!r}")
        return cls(name.strip(), typ.strip())

    def __str__(self) -> str:
        return f"{self.name}:{self.type}"


def check_variables(dm: DataModel, variables: Sequence[Variable]) -> None:
    names = set()
    for v in variables:
        if v.name in names:
            raise ModelError(f"variable {v.name!r} declared twice")
        names.add(v.name)
        if v.type not in PRIMITIVE_TYPES and not dm.is_class(v.type):
            raise ModelError(f"variable {v.name!r} has unknown type {v.type!r}")


@dataclass(frozen=True)
class Assignment:
    bindings: tuple[tuple[str, Value], ...] = ()

    def __getitem__(self, name: str) -> Value:
        for k, v in self.bindings:
            if k == name:
                return v
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(k == name for k, _ in self.bindings)

    def as_dict(self) -> dict[str, Value]:
        return dict(self.bindings)


def make_assignment(variables: Sequence[Variable], values: Mapping[str, Value],
                    om: ObjectModel | None = None) -> Assignment:
    out = []
    for v in variables:
        if v.name not in values:
            raise ModelError(f"no value for variable {v.name!r}")
        x = values[v.name]
        if x is not None:
            ok = {
                "Integer": isinstance(x, int) and not isinstance(x, (bool, Obj)),
                "String": isinstance(x, str),
            }.get(v.type, isinstance(x, Obj) and x.cls == v.type)
            if not ok:
                raise ModelError(f"value {x!r} is not of type {v.type} (variable {v.name!r})")
            if isinstance(x, Obj) and om is not None and x not in om.objects:
                raise ModelError(f"variable {v.name!r} bound to {x!r}, which is not in the object model")
        out.append((v.name, x))
    return Assignment(tuple(out))


# -- bounded enumeration -----------------------------------------------------

DEFAULT_DOMAINS: dict[str, tuple] = {"Integer": (None, 0, 1), "String": (None, "a")}


@dataclass(frozen=True)
class EnumerationBounds:
    """Finite bounds for enumerating object models.

    ``domains`` maps ``"Class.attr"`` or a primitive type name to the finite
    value set (``None`` is null). Class-typed attributes range over null plus
    the objects of the target class.
    """

    max_objects: int | Mapping[str, int] = 1
    domains: Mapping[str, tuple] = field(default_factory=lambda: dict(DEFAULT_DOMAINS))

    def __post_init__(self):
        for k, vs in self.domains.items():
            if not vs:
                raise ValueError(f"empty domain for {k!r}")

    def max_for(self, cls: str) -> int:
        if isinstance(self.max_objects, int):
            return self.max_objects
        return self.max_objects.get(cls, 0)

    def domain(self, attr: Attribute) -> tuple:
        key = f"{attr.owner}.{attr.name}"
        if key in self.domains:
            return tuple(self.domains[key])
        if attr.type in self.domains:
            return tuple(self.domains[attr.type])
        return DEFAULT_DOMAINS[attr.type]

    @classmethod
    def parse(cls, spec: str) -> "EnumerationBounds":
        """Parse e.g. ``objects=2;Integer=null,17,19;String=null,a;Student.age=null,3``."""
        max_objects: int | dict[str, int] = 1
        domains = dict(DEFAULT_DOMAINS)
        for part in filter(None, (p.strip() for p in spec.split(";"))):
            key, sep, rhs = part.partition("=")
            if not sep:
                raise ValueError(f"bad bounds item {part!r}")
            key = key.strip()
            if key == "objects":
                max_objects = int(rhs)
            elif key.startswith("objects."):
                if isinstance(max_objects, int):
                    max_objects = {}
                max_objects[key.split(".", 1)[1]] = int(rhs)
            else:
                domains[key] = tuple(_parse_bound_value(x.strip()) for x in rhs.split(","))
        return cls(max_objects, domains)


def _parse_bound_value(x: str):
    if x == "null":
        return None
    try:
        return int(x)
    except ValueError:
        return x.strip('"')


def enumerate_object_models(dm: DataModel, bounds: EnumerationBounds) -> Iterator[ObjectModel]:
    """Every conformant object model within ``bounds``, once each, in a fixed order.

    Object ids are assigned 1, 2, ... in class-declaration order.
    """
    ranges = [range(bounds.max_for(c) + 1) for c in dm.classes]
    for counts in itertools.product(*ranges):
        objects: list[Obj] = []
        for cls, n in zip(dm.classes, counts):
            objects += [Obj(len(objects) + i + 1, cls) for i in range(n)]
        slots = []
        for o in objects:
            for a in dm.attributes_of(o.cls):
                dom = (None,) + tuple(x for x in objects if x.cls == a.type) if dm.is_class(a.type) \
                    else bounds.domain(a)
                slots.append(((o.oid, a.name), dom))
        pairs = []
        for s in dm.associations:
            pairs += [Link(s.name, l.oid, r.oid) for l in objects if l.cls == s.left_class
                      for r in objects if r.cls == s.right_class]
        for vals in itertools.product(*(d for _, d in slots)):
            values = tuple((k, v) for (k, _), v in zip(slots, vals))
            for mask in itertools.product((False, True), repeat=len(pairs)):
                links = tuple(p for p, keep in zip(pairs, mask) if keep)
                yield ObjectModel(tuple(objects), values, links)


def enumerate_assignments(variables: Sequence[Variable], om: ObjectModel,
                          domains: Mapping[str, tuple] | None = None, *,
                          nullable_objects: bool = True) -> Iterator[Assignment]:
    """All valid assignments of ``variables`` over ``om``.

    Object-typed variables range over the objects of their class, plus null
    when ``nullable_objects``; primitive variables over ``domains[type]``.
    """
    domains = dict(DEFAULT_DOMAINS, **(domains or {}))
    choices = []
    for v in variables:
        if v.type in PRIMITIVE_TYPES:
            choices.append(tuple(domains[v.type]))
        else:
            objs = om.of_class(v.type)
            choices.append(objs + ((None,) if nullable_objects else ()))
    for combo in itertools.product(*choices):
        yield Assignment(tuple((v.name, x) for v, x in zip(variables, combo)))
