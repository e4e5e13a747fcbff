import pytest
from hypothesis import given, settings, strategies as st

from oclsql.datamodel import Link, Obj, Variable, make_object_model
from oclsql.ocl import (
    INVALID, AttrCall, BinOp, Iterate, NavCall, NotOp, NullLit, OclSyntaxError, OclTypeError, SetType,
    eval_ocl, free_variables, ocl_and, ocl_implies, ocl_not, ocl_or, parse_ocl, print_ocl,
)

from conftest import CASES, EXAMPLE_CASES, doc_tables, university

NAMES = {"true": True, "false": False, "null": None, "invalid": INVALID}
VARS = [Variable("self", "Student"), Variable("caller", "Lecturer"), Variable("user", "String"),
        Variable("n", "Integer")]


def om_small(dm):
    return make_object_model(
        dm, [Obj(1, "Student"), Obj(2, "Student"), Obj(3, "Lecturer")],
        {(1, "age"): 17, (1, "name"): "a", (3, "age"): 19}, [Link("Enrolment", 1, 3)])


def ev(dm, text, **sigma):
    om = om_small(dm)
    env = {"self": om.get(1), "caller": om.get(3), "user": "a", "n": 0}
    env.update(sigma)
    return eval_ocl(om, env, parse_ocl(text, dm, VARS))


@pytest.mark.parametrize("corner, fn", [("and", ocl_and), ("or", ocl_or), ("implies", ocl_implies)])
def test_binary_connectives_match_docs(corner, fn):
    table = doc_tables()[corner]
    assert len(table) == 16
    for (a, b), want in table.items():
        assert fn(NAMES[a], NAMES[b]) is NAMES[want], (a, corner, b)


def test_not_matches_docs():
    table = doc_tables()["not"]
    assert len(table) == 4
    for (a,), want in table.items():
        assert ocl_not(NAMES[a]) is NAMES[want]


@pytest.mark.parametrize("text, want", [
    ("null = null", True),
    ("null <> null", False),
    ("self.age = null", False),
    ("Student.allInstances()->select(s | s.age > 0)->isEmpty()", INVALID),
    ("self.age < 18", True),
    ("self.age < n", False),
    ("null.oclIsUndefined()", True),
    ("self.lecturers->forAll(l | l.age > self.age)", True),
    ("Lecturer.allInstances()->collect(l | l.age)->including(17)->notEmpty()", True),
    ("Student.allInstances()->forAll(s | s.lecturers->forAll(l | s.age < l.age))", True),
    ("Student.allInstances()->exists(s | s.age = 17)", True),
    ("Student.allInstances()->collect(s | s.age)->excluding(17)->isEmpty()", False),
    ("caller.students->isEmpty()", False),
    ("not false implies false", False),
    ("self.name = user", True),
])
def test_evaluator_cases(dm, text, want):
    assert ev(dm, text) is want


def test_null_comparisons_are_invalid(dm):
    for op in ("<", "<=", ">", ">="):
        assert ev(dm, f"n {op} 1", n=None) is INVALID
    assert ev(dm, "n = 1", n=None) is False
    assert ev(dm, "false and (n < 1)", n=None) is False
    assert ev(dm, "true or (n < 1)", n=None) is True
    assert ev(dm, "(n < 1) or n.oclIsUndefined()", n=None) is True
    assert ev(dm, "(n < 1) and n.oclIsUndefined()", n=None) is INVALID


def test_navigation_from_null_is_invalid(dm):
    assert ev(dm, "self.age = 1", self=None) is INVALID
    assert ev(dm, "self.lecturers->isEmpty()", self=None) is INVALID


def test_collect_keeps_null_and_select_rejects_it(dm):
    # student 2 has no age
    assert ev(dm, "Student.allInstances()->collect(s | s.age)->including(null)->excluding(null)->isEmpty()") is False
    assert ev(dm, "Student.allInstances()->collect(s | s.age)->excluding(17)->notEmpty()") is True
    assert ev(dm, "Student.allInstances()->reject(s | s.age = 17)->notEmpty()") is True


def test_empty_iterators(dm):
    om = make_object_model(dm, [])
    assert eval_ocl(om, {}, parse_ocl("Student.allInstances()->forAll(s | s.age < 0)", dm)) is True
    assert eval_ocl(om, {}, parse_ocl("Student.allInstances()->exists(s | s.age < 0)", dm)) is False


def test_typing(dm):
    e = parse_ocl("self.age = null", dm, VARS)
    assert isinstance(e, BinOp) and e.right == NullLit("Integer")
    assert isinstance(e.left, AttrCall) and e.left.type == "Integer"
    nav = parse_ocl("self.lecturers", dm, VARS)
    assert isinstance(nav, NavCall) and nav.type == SetType("Lecturer") and nav.side == "right"
    it = parse_ocl("caller.students->select(s | s.age > 1)", dm, VARS)
    assert isinstance(it, Iterate) and it.type == SetType("Student")
    assert isinstance(parse_ocl("not not true", dm, VARS), NotOp)
    assert free_variables(parse_ocl("self.name = user and Student.allInstances()->forAll(s | s = self)", dm, VARS)) \
        == {"self", "user"}


@pytest.mark.parametrize("text, err", [
    ("self.age +", OclSyntaxError),
    ("self.", OclSyntaxError),
    ("(true", OclSyntaxError),
    ("true true", OclSyntaxError),
    ("'abc", OclSyntaxError),
    ("self.salary = 1", OclTypeError),
    ("self.age = 'a'", OclTypeError),
    ("self.age and true", OclTypeError),
    ("unknown = 1", OclTypeError),
    ("Teacher.allInstances()->isEmpty()", OclTypeError),
    ("self.lecturers = caller.students", OclTypeError),
    ("self->forAll(s | true)", OclTypeError),
    ("Student.allInstances()->forAll(s | s.age)", OclTypeError),
    ("self.name < user", OclTypeError),
])
def test_errors(dm, text, err):
    with pytest.raises(err):
        parse_ocl(text, dm, VARS)


def test_error_position(dm):
    with pytest.raises(OclSyntaxError) as info:
        parse_ocl("true and )", dm)
    assert info.value.pos == 9


@pytest.mark.parametrize("name", EXAMPLE_CASES)
def test_case_files_round_trip(dm, name):
    text = (CASES / f"{name}.ocl").read_text()
    e = parse_ocl(text, dm, VARS)
    assert parse_ocl(print_ocl(e), dm, VARS) == e


def _exprs():
    atoms = st.sampled_from(["n = 0", "true", "false", "null = null", "self.age < n", "self.age = null",
                             "self.name = user", "self.lecturers->isEmpty()",
                             "Student.allInstances()->exists(s | s.age >= n)"])
    return st.recursive(atoms, lambda c: st.one_of(
        st.tuples(c, st.sampled_from(["and", "or", "implies", "=", "<>"]), c).map(lambda t: f"({t[0]}) {t[1]} ({t[2]})"),
        c.map(lambda x: f"not ({x})")), max_leaves=8)


@settings(max_examples=150, deadline=None)
@given(_exprs(), st.sampled_from([None, 0, 18]))
def test_print_parse_round_trip_preserves_value(text, n):
    dm = university()
    e = parse_ocl(text, dm, VARS)
    printed = print_ocl(e)
    again = parse_ocl(printed, dm, VARS)
    assert again == e
    assert print_ocl(again) == printed
    om = om_small(dm)
    env = {"self": om.get(1), "caller": om.get(3), "user": "a", "n": n}
    assert eval_ocl(om, env, again) is eval_ocl(om, env, e)
