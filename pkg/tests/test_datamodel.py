import itertools
import json

import pytest
from hypothesis import given, settings, strategies as st

from oclsql.datamodel import (
    Association, Attribute, DataModel, EnumerationBounds, Link, ModelError, Obj, Variable, check_variables,
    dump_data_model, dump_object_model, enumerate_assignments, enumerate_object_models, load_data_model,
    load_object_model, make_assignment, make_object_model,
)

from conftest import university

ADVISING = DataModel(
    ("Student", "Lecturer"),
    (Attribute("age", "Student", "Integer"), Attribute("advisor", "Student", "Lecturer")),
    (),
)


def test_university_loads(dm):
    assert dm.classes == ("Student", "Lecturer")
    assert [a.name for a in dm.attributes_of("Student")] == ["name", "age"]
    assert dm.end("Student", "lecturers") == (dm.association("Enrolment"), "right")
    assert dm.end("Lecturer", "students") == (dm.association("Enrolment"), "left")
    assert dm.end("Student", "students") is None


def test_data_model_round_trip(dm):
    assert load_data_model(dump_data_model(dm)) == dm


@pytest.mark.parametrize("doc, message", [
    ("{", "parse error at line 1"),
    ('{"classes": []}', "invalid document at classes"),
    ('{"classes": {"A": [{"name": "x", "type": "Real"}]}}', "unknown type 'Real'"),
    ('{"classes": {"A": [{"name": "x", "type": "Integer"}, {"name": "x", "type": "String"}]}}',
     "duplicate attribute A.x"),
    ('{"classes": {"A": []}, "associations": [{"name": "R", "leftEnd": "a", "leftClass": "A",'
     ' "rightEnd": "b", "rightClass": "B"}]}', "unknown class 'B'"),
    ('{"classes": {"A": []}, "associations": [{"name": "R", "leftEnd": "a", "leftClass": "A",'
     ' "rightEnd": "a", "rightClass": "A"}]}', "two ends named"),
])
def test_data_model_errors(doc, message):
    with pytest.raises(ModelError, match=message):
        load_data_model(doc)


def test_empty_document_is_empty_model():
    dm = load_data_model("")
    assert dm.classes == () and dm.associations == ()


def test_object_model_round_trip(dm):
    om = make_object_model(dm, [Obj(2, "Lecturer"), Obj(1, "Student")],
                           {(1, "age"): 19, (2, "name"): "a"}, [Link("Enrolment", 1, 2)])
    assert [o.oid for o in om.objects] == [1, 2]
    assert om.value(Obj(1, "Student"), "name") is None
    assert load_object_model(dump_object_model(om), dm) == om


@pytest.mark.parametrize("objects, values, links, message", [
    ([Obj(1, "Student"), Obj(1, "Lecturer")], {}, [], "duplicate object id 1"),
    ([Obj(1, "Teacher")], {}, [], "unknown class 'Teacher'"),
    ([Obj(0, "Student")], {}, [], "not a positive integer"),
    ([Obj(1, "Student")], {(1, "age"): "old"}, [], "expects an Integer"),
    ([Obj(1, "Student")], {(1, "age"): True}, [], "expects an Integer"),
    ([Obj(1, "Student")], {(1, "name"): 3}, [], "expects a String"),
    ([Obj(1, "Student")], {(1, "salary"): 3}, [], "has no attribute 'salary'"),
    ([Obj(1, "Student")], {(5, "age"): 3}, [], "unknown object 5"),
    ([Obj(1, "Student")], {}, [Link("Enrolment", 1, 2)], "unknown object 2"),
    ([Obj(1, "Student"), Obj(2, "Student")], {}, [Link("Enrolment", 1, 2)], "expected Lecturer"),
    ([Obj(1, "Student")], {}, [Link("Teaches", 1, 1)], "unknown association"),
])
def test_object_model_errors(dm, objects, values, links, message):
    with pytest.raises(ModelError, match=message):
        make_object_model(dm, objects, values, links)


def test_object_model_json_errors(dm):
    with pytest.raises(ModelError, match="invalid document"):
        load_object_model('{"objects": [{"id": 0, "class": "Student"}]}', dm)
    with pytest.raises(ModelError, match="duplicate object id"):
        load_object_model('{"objects": [{"id": 1, "class": "Student"}, {"id": 1, "class": "Student"}]}', dm)


def test_class_typed_attribute_values():
    om = make_object_model(ADVISING, [Obj(1, "Student"), Obj(2, "Lecturer")], {(1, "advisor"): 2})
    assert om.value(Obj(1, "Student"), "advisor") == Obj(2, "Lecturer")
    with pytest.raises(ModelError, match="object id"):
        make_object_model(ADVISING, [Obj(1, "Student"), Obj(2, "Lecturer")], {(1, "advisor"): 1})


def test_variables_and_assignments(dm):
    vs = [Variable.parse("self:Student"), Variable.parse(" user : String ")]
    assert vs[1] == Variable("user", "String")
    check_variables(dm, vs)
    with pytest.raises(ModelError, match="declared twice"):
        check_variables(dm, vs + vs[:1])
    with pytest.raises(ModelError, match="unknown type"):
        check_variables(dm, [Variable("x", "Teacher")])
    with pytest.raises(ValueError):
        Variable.parse("self")
    om = make_object_model(dm, [Obj(1, "Student")])
    a = make_assignment(vs, {"self": Obj(1, "Student"), "user": None}, om)
    assert a["self"] == Obj(1, "Student") and a.as_dict()["user"] is None
    with pytest.raises(ModelError, match="not of type"):
        make_assignment(vs, {"self": 3, "user": "a"})
    with pytest.raises(ModelError, match="not in the object model"):
        make_assignment(vs, {"self": Obj(4, "Student"), "user": "a"}, om)
    with pytest.raises(ModelError, match="no value"):
        make_assignment(vs, {"self": None})


def test_bounds_parse():
    b = EnumerationBounds.parse("objects=2;Integer=null,17,19;String=null,a;Student.age=3")
    assert b.max_objects == 2
    assert b.domains["Integer"] == (None, 17, 19)
    assert b.domains["String"] == (None, "a")
    assert b.domain(Attribute("age", "Student", "Integer")) == (3,)
    assert b.domain(Attribute("age", "Lecturer", "Integer")) == (None, 17, 19)
    per_class = EnumerationBounds.parse("objects.Student=2")
    assert per_class.max_for("Student") == 2 and per_class.max_for("Lecturer") == 0
    with pytest.raises(ValueError):
        EnumerationBounds.parse("objects")
    with pytest.raises(ValueError):
        EnumerationBounds(1, {"Integer": ()})


def expected_university_count(max_objects, n_int, n_str):
    """Closed form: per (s, l) population, attribute choices times link subsets."""
    total = 0
    for s in range(max_objects + 1):
        for l in range(max_objects + 1):
            total += (n_int * n_str) ** (s + l) * 2 ** (s * l)
    return total


@pytest.mark.parametrize("spec, n_int, n_str, k", [
    ("objects=0", 3, 2, 0),
    ("objects=1;Integer=null,17,19;String=null,a", 3, 2, 1),
    ("objects=2;Integer=null,17,19;String=null,a", 3, 2, 2),
    ("objects=2;Integer=null;String=null", 1, 1, 2),
])
def test_enumeration_count_matches_closed_form(dm, spec, n_int, n_str, k):
    models = list(enumerate_object_models(dm, EnumerationBounds.parse(spec)))
    assert len(models) == expected_university_count(k, n_int, n_str)
    assert len(set(models)) == len(models)


def test_enumeration_with_class_typed_attribute():
    # one student, one lecturer: advisor in {null, lecturer} when the lecturer exists
    b = EnumerationBounds(1, {"Integer": (None,)})
    models = list(enumerate_object_models(ADVISING, b))
    # (s,l): (0,0) 1, (0,1) 1, (1,0) advisor null only: 1, (1,1) 2
    assert len(models) == 5


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2), st.integers(0, 2))
def test_enumerated_models_are_valid(s, l):
    dm = university()
    b = EnumerationBounds({"Student": s, "Lecturer": l}, {"Integer": (None, 1), "String": (None,)})
    for om in itertools.islice(enumerate_object_models(dm, b), 50):
        again = make_object_model(dm, om.objects, dict(om.values), om.links)
        assert again == om
        assert len(om.of_class("Student")) <= s and len(om.of_class("Lecturer")) <= l


def test_assignments(dm):
    om = make_object_model(dm, [Obj(1, "Student"), Obj(2, "Student")])
    vs = [Variable("self", "Student"), Variable("user", "String")]
    strict = list(enumerate_assignments(vs, om, {"String": (None, "a")}, nullable_objects=False))
    assert len(strict) == 2 * 2
    loose = list(enumerate_assignments(vs, om, {"String": (None, "a")}))
    assert len(loose) == 3 * 2
    assert list(enumerate_assignments([], om)) == [make_assignment([], {})]


def test_dump_is_json(dm):
    assert json.loads(dump_data_model(dm))["classes"]["Student"][1] == {"name": "age", "type": "Integer"}
