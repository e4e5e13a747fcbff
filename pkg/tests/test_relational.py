import sqlite3

import pytest
from hypothesis import given, settings, strategies as st

from oclsql.datamodel import (
    Attribute, DataModel, EnumerationBounds, Link, Obj, enumerate_object_models, make_assignment, make_object_model,
    Variable,
)
from oclsql.relational import (
    Column, DatabaseInstance, IntegrityError, id_column, instance_dml, o2s, o2s_inst, o2s_inst_assignment, schema_ddl,
)

from conftest import university

ADVISING = DataModel(("Student", "Lecturer"),
                     (Attribute("age", "Student", "Integer"), Attribute("advisor", "Student", "Lecturer")), ())


def test_schema_tables(dm):
    s = o2s(dm)
    assert [t.name for t in s.tables] == ["Student", "Lecturer", "Enrolment"]
    st_ = s.table("Student")
    assert st_.primary_key == "Student_id"
    assert st_.columns == (Column("Student_id", "int", "Student"), Column("name", "varchar"), Column("age", "int"))
    enr = s.table("Enrolment")
    assert enr.kind == "association" and enr.primary_key is None
    assert [c.references for c in enr.columns] == ["Student", "Lecturer"]
    assert s.table("Nope") is None


def test_ddl_text(dm):
    assert schema_ddl(dm) == (
        "CREATE TABLE Student (Student_id int PRIMARY KEY);\n"
        "CREATE TABLE Lecturer (Lecturer_id int PRIMARY KEY);\n"
        "ALTER TABLE Student ADD COLUMN name varchar;\n"
        "ALTER TABLE Student ADD COLUMN age int;\n"
        "ALTER TABLE Lecturer ADD COLUMN name varchar;\n"
        "ALTER TABLE Lecturer ADD COLUMN age int;\n"
        "CREATE TABLE Enrolment (students int, lecturers int, "
        "FOREIGN KEY fk_Student_students(students) REFERENCES Student(Student_id), "
        "FOREIGN KEY fk_Lecturer_lecturers(lecturers) REFERENCES Lecturer(Lecturer_id));\n")


def test_ddl_class_typed_attribute():
    ddl = schema_ddl(ADVISING)
    assert "ALTER TABLE Student ADD COLUMN advisor int;" in ddl
    assert "REFERENCES Lecturer(Lecturer_id)" in ddl
    assert o2s(ADVISING).table("Student").column("advisor").references == "Lecturer"


def test_dml_text(dm):
    om = make_object_model(dm, [Obj(1, "Student"), Obj(2, "Lecturer")],
                           {(1, "name"): "O'Neil", (2, "age"): 40}, [Link("Enrolment", 1, 2)])
    assert instance_dml(om, dm) == (
        "INSERT INTO Student (Student_id) VALUES (1);\n"
        "INSERT INTO Lecturer (Lecturer_id) VALUES (2);\n"
        "UPDATE Student SET name = 'O''Neil' WHERE Student_id = 1;\n"
        "UPDATE Lecturer SET age = 40 WHERE Lecturer_id = 2;\n"
        "INSERT INTO Enrolment (students, lecturers) VALUES (1, 2);\n")
    assert instance_dml(make_object_model(dm, []), dm) == ""


def _sqlite_rows(dm, om):
    """Run the generated DML in sqlite over plain tables and read everything back."""
    db = sqlite3.connect(":memory:")
    schema = o2s(dm)
    for t in schema.tables:
        db.execute(f"CREATE TABLE {t.name} ({', '.join(c.name for c in t.columns)})")
    db.executescript(instance_dml(om, dm))
    out = {}
    for t in schema.tables:
        out[t.name] = sorted(db.execute(f"SELECT * FROM {t.name}").fetchall(), key=repr)
    return out


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_instance_matches_dml_run_in_sqlite(k):
    dm = university()
    models = list(enumerate_object_models(dm, EnumerationBounds.parse("objects=1;Integer=null,3;String=null,'x")))
    om = models[k % len(models)]
    inst = o2s_inst(om, dm)
    want = _sqlite_rows(dm, om)
    assert {n: sorted(rows, key=repr) for n, rows in inst.rows} == want


def test_instance_of_class_typed_attribute():
    om = make_object_model(ADVISING, [Obj(1, "Student"), Obj(2, "Lecturer")], {(1, "advisor"): 2})
    assert o2s_inst(om, ADVISING).table("Student") == ((1, None, 2),)


@pytest.mark.parametrize("rows, message", [
    ((("Student", ((1, None, None), (1, "a", None))),), "primary key"),
    ((("Student", ((None, None, None),)),), "primary key"),
    ((("Student", ((1, None),)),), "does not fit"),
    ((("Teacher", ()),), "unknown table"),
    ((("Student", ((1, None, None),)), ("Lecturer", ()), ("Enrolment", ((1, 5),))), "no target row"),
    ((("Student", ((1, None, None),)), ("Lecturer", ((2, None, None),)),
      ("Enrolment", ((1, 2), (1, 2)))), "duplicate association row"),
])
def test_integrity(dm, rows, message):
    with pytest.raises(IntegrityError, match=message):
        DatabaseInstance(o2s(dm), rows)


def test_assignment_mapping(dm):
    om = make_object_model(dm, [Obj(4, "Student")])
    a = make_assignment([Variable("self", "Student"), Variable("user", "String"), Variable("n", "Integer")],
                        {"self": Obj(4, "Student"), "user": None, "n": 3}, om)
    assert o2s_inst_assignment(a) == {"self": 4, "user": None, "n": 3}
    assert o2s_inst_assignment({"x": "a"}) == {"x": "a"}
    assert id_column("Lecturer") == "Lecturer_id"
