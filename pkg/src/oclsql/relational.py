"""Object-relational mapping of data models and instances to SQL tables."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .datamodel import Assignment, DataModel, Obj, ObjectModel

SqlValue = object  # int | str | bool | None (NULL)


@dataclass(frozen=True)
class Column:
    name: str
    sql_type: str  # 'int' | 'varchar'
    references: str | None = None  # target class table for id-valued columns


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple[Column, ...]
    primary_key: str | None
    kind: str  # 'class' | 'association'

    def column(self, name: str) -> Column | None:
        for c in self.columns:
            if c.name == name:
                return c
        return None

    def index(self, name: str) -> int:
        return [c.name for c in self.columns].index(name)


@dataclass(frozen=True)
class SqlSchema:
    tables: tuple[Table, ...] = ()

    def table(self, name: str) -> Table | None:
        for t in self.tables:
            if t.name == name:
                return t
        return None


def id_column(cls: str) -> str:
    return f"{cls}_id"


def o2s(dm: DataModel) -> SqlSchema:
    tables = []
    for c in dm.classes:
        cols = [Column(id_column(c), "int", c)]
        for a in dm.attributes_of(c):
            if dm.is_class(a.type):
                cols.append(Column(a.name, "int", a.type))
            else:
                cols.append(Column(a.name, "int" if a.type == "Integer" else "varchar"))
        tables.append(Table(c, tuple(cols), id_column(c), "class"))
    for s in dm.associations:
        cols = (Column(s.left_end, "int", s.left_class), Column(s.right_end, "int", s.right_class))
        tables.append(Table(s.name, cols, None, "association"))
    return SqlSchema(tuple(tables))


def schema_ddl(dm: DataModel) -> str:
    """DDL statements: classes, then attributes, then associations."""
    out = []
    for c in dm.classes:
        out.append(f"CREATE TABLE {c} ({id_column(c)} int PRIMARY KEY);")
    for a in dm.attributes:
        sql_type = "varchar" if a.type == "String" else "int"
        out.append(f"ALTER TABLE {a.owner} ADD COLUMN {a.name} {sql_type};")
        if dm.is_class(a.type):
            out.append(f"ALTER TABLE {a.owner} ADD FOREIGN KEY fk_{a.owner}_{a.name}({a.name}) "
                       f"REFERENCES {a.type}({id_column(a.type)});")
    for s in dm.associations:
        out.append(
            f"CREATE TABLE {s.name} ({s.left_end} int, {s.right_end} int, "
            f"FOREIGN KEY fk_{s.left_class}_{s.left_end}({s.left_end}) "
            f"REFERENCES {s.left_class}({id_column(s.left_class)}), "
            f"FOREIGN KEY fk_{s.right_class}_{s.right_end}({s.right_end}) "
            f"REFERENCES {s.right_class}({id_column(s.right_class)}));")
    return "\n".join(out) + ("\n" if out else "")


class IntegrityError(ValueError):
    pass


@dataclass(frozen=True)
class DatabaseInstance:
    schema: SqlSchema
    rows: tuple[tuple[str, tuple[tuple, ...]], ...]

    def __post_init__(self):
        for name, rows in self.rows:
            t = self.schema.table(name)
            if t is None:
                raise IntegrityError(f"unknown table {name}")
            for r in rows:
                if len(r) != len(t.columns):
                    raise IntegrityError(f"row {r} does not fit table {name}")
            if t.primary_key is not None:
                keys = [r[t.index(t.primary_key)] for r in rows]
                if len(set(keys)) != len(keys) or None in keys:
                    raise IntegrityError(f"primary key violation in {name}")
            else:
                if len(set(rows)) != len(rows):
                    raise IntegrityError(f"duplicate association row in {name}")
        for name, rows in self.rows:
            t = self.schema.table(name)
            for i, col in enumerate(t.columns):
                if col.references is None or col.name == t.primary_key:
                    continue
                target = set(r[0] for r in self.table(col.references))
                for r in rows:
                    if r[i] is not None and r[i] not in target:
                        raise IntegrityError(f"foreign key {name}.{col.name}={r[i]} has no target row")

    def table(self, name: str) -> tuple[tuple, ...]:
        for n, rows in self.rows:
            if n == name:
                return rows
        raise KeyError(name)


def o2s_inst(om: ObjectModel, dm: DataModel) -> DatabaseInstance:
    schema = o2s(dm)
    out = []
    for t in schema.tables:
        if t.kind == "class":
            rows = []
            for o in om.of_class(t.name):
                row = [o.oid]
                for a in dm.attributes_of(t.name):
                    v = om.value(o, a.name)
                    row.append(v.oid if isinstance(v, Obj) else v)
                rows.append(tuple(row))
        else:
            rows = [(l.left, l.right) for l in om.linked(t.name)]
        out.append((t.name, tuple(rows)))
    return DatabaseInstance(schema, tuple(out))


def _sql_literal(v) -> str:
    if v is None:
        return "NULL"
    if isinstance(v, str):
        return "'" + v.replace("'", "''") + "'"
    return str(v)


def instance_dml(om: ObjectModel, dm: DataModel) -> str:
    """DML statements: object inserts, attribute updates, link inserts."""
    out = []
    for o in om.objects:
        out.append(f"INSERT INTO {o.cls} ({id_column(o.cls)}) VALUES ({o.oid});")
    for o in om.objects:
        for a in dm.attributes_of(o.cls):
            v = om.value(o, a.name)
            if v is None:
                continue
            v = v.oid if isinstance(v, Obj) else v
            out.append(f"UPDATE {o.cls} SET {a.name} = {_sql_literal(v)} WHERE {id_column(o.cls)} = {o.oid};")
    for l in om.links:
        s = dm.association(l.assoc)
        out.append(f"INSERT INTO {s.name} ({s.left_end}, {s.right_end}) VALUES ({l.left}, {l.right});")
    return "\n".join(out) + ("\n" if out else "")


def o2s_inst_assignment(sigma: Assignment | Mapping) -> dict[str, SqlValue]:
    """Objects become their ids; scalars are unchanged; null becomes NULL (None)."""
    items = sigma.bindings if isinstance(sigma, Assignment) else sigma.items()
    return {k: (v.oid if isinstance(v, Obj) else v) for k, v in items}
