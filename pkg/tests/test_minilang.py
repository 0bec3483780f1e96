from __future__ import annotations

from collections import Counter
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as O
from conftest import CORPUS_FILES
from nvgen.minilang import MiniSyntaxError, parse, parse_expr, pretty, type_check
from nvgen.minilang import ast as A
from nvgen.minilang.analysis import enumerate_statements, node_type_histogram, scope_at, signature_of
from nvgen.minilang.types import TypeRef
from nvgen.transform.loopflip import header_of


def read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


# ---------------------------------------------------------------- parsing


def test_minimal_class():
    prog = parse("class A { }")
    assert [c.name for c in prog.classes] == ["A"]
    assert prog.classes[0].fields == [] and prog.classes[0].methods == []
    assert prog.tests == []


def test_counted_loop_header_normalized():
    prog = parse("class A { void m() { for (int i = 0; i < 32; i += 4) { } } }")
    loop = prog.classes[0].methods[0].body[0]
    assert isinstance(loop, A.ForCounted)
    h = header_of(loop)
    assert (h.counter, h.comp, h.op, h.step) == ("i", "<", "+", 4)
    assert h.init == A.IntLit(0) and h.bound == A.IntLit(32)
    assert "i = i + 4" in pretty(prog)


def test_increment_shorthand_normalized():
    prog = parse("class A { void m() { for (int i = 9; i >= 0; i--) { } } }")
    h = header_of(prog.classes[0].methods[0].body[0])
    assert (h.comp, h.op, h.step) == (">=", "-", 1)


def test_comments_ignored():
    src = "// lead\nclass A { /* block\n comment */ int f; }\n"
    assert [f.name for f in parse(src).classes[0].fields] == ["f"]


def test_syntax_error_has_position():
    with pytest.raises(MiniSyntaxError) as info:
        parse("class A {\n  void m() { int x = ; }\n}")
    assert "2:" in str(info.value)


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: Path(p).name)
def test_corpus_round_trip(path):
    prog = parse(read(path))
    again = parse(pretty(prog))
    assert again == prog
    assert pretty(again) == pretty(prog)


# random expressions over two int variables and one bool variable
INT_ATOMS = st.sampled_from(["x", "y", "0", "1", "7", "42"])


def int_exprs():
    return st.recursive(
        INT_ATOMS,
        lambda inner: st.one_of(
            st.tuples(inner, st.sampled_from(["+", "-", "*", "/", "%", "<<", ">>", "&", "|", "^"]), inner).map(
                lambda t: f"({t[0]} {t[1]} {t[2]})"
            ),
            inner.map(lambda e: f"-({e})"),
            inner.map(lambda e: f"~({e})"),
        ),
        max_leaves=8,
    )


def bool_exprs():
    compare = st.tuples(int_exprs(), st.sampled_from(["<", "<=", ">", ">=", "==", "!="]), int_exprs()).map(
        lambda t: f"{t[0]} {t[1]} {t[2]}"
    )
    return st.recursive(
        st.one_of(st.just("b"), st.just("true"), compare),
        lambda inner: st.one_of(
            st.tuples(inner, st.sampled_from(["&&", "||"]), inner).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
            inner.map(lambda e: f"!({e})"),
        ),
        max_leaves=6,
    )


@settings(max_examples=150, deadline=None)
@given(int_exprs(), bool_exprs())
def test_random_program_round_trip(ie, be):
    src = (
        "class A {\n  int m(int x, int y, bool b) {\n"
        f"    int r = {ie};\n    if ({be}) {{ r = r + 1; }}\n    return r;\n  }}\n}}\n"
    )
    prog = parse(src)
    assert parse(pretty(prog)) == prog
    assert type_check(prog).ok


@settings(max_examples=150, deadline=None)
@given(int_exprs())
def test_expression_print_parse_stable(e):
    from nvgen.minilang import expr_str

    once = parse_expr(e)
    assert parse_expr(expr_str(once)) == once


# ---------------------------------------------------------------- typing


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: Path(p).name)
def test_corpus_typechecks(path):
    result = type_check(parse(read(path)))
    assert result.ok, [str(e) for e in result.errors]


def test_bool_into_int_is_mismatch():
    result = type_check(parse("class A { void m() { int x = true; } }"))
    assert "TypeMismatch" in result.kinds()


def test_undeclared_name():
    result = type_check(parse("class A { int m() { return y; } }"))
    assert "UndeclaredName" in result.kinds()


def test_private_method_not_callable_from_other_class():
    src = """
class A { private int secret() { return 1; } }
class B { int m(A a) { return a.secret(); } }
"""
    assert not type_check(parse(src)).ok


def test_interface_method_through_interface_type():
    src = """
interface Shape { int area(); }
class Sq implements Shape { public int area() { return 4; } }
class U { int m() { Shape s = new Sq(); return s.area(); } }
"""
    assert type_check(parse(src)).ok


# ---------------------------------------------------------------- enumeration and histogram


def test_empty_method_has_no_statements():
    assert enumerate_statements(parse("class A { void m() { } }")) == []


def test_if_else_entries():
    prog = parse("class A { void m(int a) { if (a > 0) { a = 1; } else { a = 2; } } }")
    assert [i.kind for i in enumerate_statements(prog)] == ["If", "Assignment", "Assignment"]


def test_single_return_histogram():
    assert node_type_histogram(parse("class A { int m() { return 1; } }")) == {"Return": 1.0}


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: Path(p).name)
def test_histogram_matches_recount(path):
    prog = parse(read(path))
    hist = node_type_histogram(prog)
    assert sum(hist.values()) == pytest.approx(1.0)
    counts = Counter(s.kind for s, *_rest in O.method_statements(prog))
    total = sum(counts.values())
    assert hist == pytest.approx({k: v / total for k, v in counts.items()})


# ---------------------------------------------------------------- scope


def test_static_method_sees_only_static_fields():
    prog = parse("class A { static int count; int inst; static void m() { count = 1; } }")
    assert {(b.name, b.origin) for b in scope_at(prog, "0/0/0").bindings} == {("count", "staticField")}


def test_location_scope_of_sample_class():
    prog = parse("class A { int i; void m(int a) { bool b; i = a; } }")
    scope = scope_at(prog, "0/0/1")
    got = {b.name: str(b.type) for b in scope.bindings}
    assert got == {"a": "int", "b": "bool", "i": "int", "this": "A"}


def _expected_scopes(prog: A.Program) -> dict[str, set[str]]:
    """Brute-force scope names: walk each body threading the visible locals."""
    out: dict[str, set[str]] = {}

    def walk(body, visible, cls_names):
        visible = set(visible)
        for s in body:
            out[s.sid] = visible | cls_names
            if isinstance(s, A.VarDecl):
                visible.add(s.name)
            for child, extra in _children(s):
                walk(child, visible | extra, cls_names)

    for _ci, _mi, cls, m in A.method_bodies(prog):
        fields = {f.name for f in cls.fields if f.static or not m.static}
        if not m.static:
            fields.add("this")
        walk(m.body, {p.name for p in m.params}, fields)
    return out


def _children(s: A.Stmt):
    if isinstance(s, A.If):
        yield s.then, set()
        yield s.other or [], set()
    elif isinstance(s, A.While):
        yield s.body, set()
    elif isinstance(s, A.ForCounted):
        yield s.body, {s.counter} if s.declares else set()
    elif isinstance(s, A.ForEach):
        yield s.body, {s.name}
    elif isinstance(s, A.Try):
        yield s.body, set()
        yield s.handler, {s.catch_name}
    elif isinstance(s, A.Block):
        yield s.body, set()


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: Path(p).name)
def test_scope_matches_rewalk(path):
    prog = parse(read(path))
    expected = _expected_scopes(prog)
    for info in enumerate_statements(prog):
        assert scope_at(prog, info.sid).names() == expected[info.sid], info.sid


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: Path(p).name)
def test_free_identifiers_are_in_scope(path):
    prog = parse(read(path))
    for stmt, cls, _m, _d in O.method_statements(prog):
        names = scope_at(prog, stmt.sid).names()
        for key, (_t, _w, name_only) in O.free_vars(prog, cls, stmt).items():
            assert key[-1] in names or not name_only, (stmt.sid, key)


# ---------------------------------------------------------------- signatures


def test_signature_of_return():
    prog = parse("class A { int m(int x) { return x; } }")
    sig = signature_of(prog, "0/0/0")
    assert sig.used_var_types == (TypeRef("int"),) and sig.return_type == TypeRef("int")


def test_signature_of_guarded_flag():
    prog = parse(
        "class Ctx { public bool eof; }\n"
        "class A { void m(int inAvail, int max, Ctx context) { bool flag; if (inAvail < max) { flag = true; } } }"
    )
    sig = signature_of(prog, "1/0/1")
    assert sig.type_counts() == Counter({"int": 2, "bool": 1})
    assert sig.return_type is None


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: Path(p).name)
def test_signature_stable_under_round_trip(path):
    prog = parse(read(path))
    again = parse(pretty(prog))
    for info in enumerate_statements(prog):
        assert signature_of(prog, info.sid) == signature_of(again, info.sid)
