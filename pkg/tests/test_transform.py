from __future__ import annotations

import random
from collections import Counter
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CORPUS_FILES
from nvgen.campaign import classify_variant, load_subject
from nvgen.interpreter import ProbeConfig, compute_coverage, run_test
from nvgen.interpreter.harness import CoverageMap
from nvgen.minilang import ast as A
from nvgen.minilang import parse, parse_stmt, pretty, stmt_str, type_check
from nvgen.minilang.analysis import enumerate_statements
from nvgen.transform import ami as AMI
from nvgen.transform import generic as G
from nvgen.transform import loopflip as LF
from nvgen.transform import swap as SW
from nvgen.transform.base import NoCoveredStatements, NotApplicable, PreconditionViolated, make_location


def everywhere(prog: A.Program) -> CoverageMap:
    return CoverageMap({i.sid: frozenset(["any"]) for i in enumerate_statements(prog)})


def loc(prog: A.Program, sid: str):
    return make_location(prog, sid, everywhere(prog))


# ---------------------------------------------------------------- location selection


def test_single_covered_statement_always_selected():
    prog = parse("class M { static int f() { int a = 1; return a; } static int g() { return 2; } }"
                 "\ntest t { assertEquals(M.g(), 2); }")
    cov = compute_coverage(prog)
    for seed in range(20):
        assert G.select_location(prog, cov, random.Random(seed)).sid == "0/1/0"


def test_no_covered_statement():
    prog = parse("class M { static int g() { return 2; } }\ntest t { assertTrue(true); }")
    with pytest.raises(NoCoveredStatements):
        G.select_location(prog, compute_coverage(prog), random.Random(0))


def test_selection_is_seeded():
    sub = load_subject(CORPUS_FILES[0])
    a = [G.select_location(sub.program, sub.coverage, random.Random(3)).sid for _ in range(5)]
    b = [G.select_location(sub.program, sub.coverage, random.Random(3)).sid for _ in range(5)]
    assert a == b


def test_selection_is_uniform():
    sub = load_subject(str(Path(CORPUS_FILES[0]).parent / "bank.mini"))
    covered = sub.coverage.covered_statements()
    rng = random.Random(11)
    draws = Counter(G.select_location(sub.program, sub.coverage, rng).sid for _ in range(10_000))
    expected = 10_000 / len(covered)
    chi2 = sum((draws[s] - expected) ** 2 / expected for s in covered)
    # 99.9th percentile of chi-square with up to 60 degrees of freedom is below 100
    assert set(draws) == set(covered)
    assert chi2 < 100


# ---------------------------------------------------------------- compatibility and binding

TRANSPLANT_SRC = """
class Ctx { public bool eof; }
class Reader {
  public void fill(int inAvail, int max, Ctx context) {
    if (inAvail < max) {
      context.eof = true;
    }
  }
  public void host(int a, int i, bool b) {
    a = a + i;
  }
  public void text(string s, int n) {
    n = s.length();
  }
}
test t {
  Reader r = new Reader();
  r.fill(1, 2, new Ctx());
  r.host(1, 2, true);
  r.text("ab", 0);
}
"""


def test_guarded_flag_is_compatible_with_two_ints_and_a_bool():
    prog = parse(TRANSPLANT_SRC)
    here = loc(prog, "1/1/0")
    assert "1/0/0" in G.find_compatible_transplants(prog, here, "add")


def test_string_transplant_needs_a_string():
    prog = parse(TRANSPLANT_SRC)
    assert "1/2/0" not in G.find_compatible_transplants(prog, loc(prog, "1/1/0"), "add")
    assert G.incompatibility(prog, loc(prog, "1/1/0"), G.prepare_transplant(prog, "1/2/0"), "add") == "NoCompatibleVariable"


def test_four_rewritings_for_two_ints():
    prog = parse(TRANSPLANT_SRC)
    t = G.prepare_transplant(prog, "1/0/0")
    # guard reads two ints, body writes a bool field reached through context
    here = loc(prog, "1/1/0")
    _stmt, count = G.bind_transplant(prog, t, here, random.Random(0))
    assert count == 4
    assert set(t.binding) >= {"inAvail", "max"}
    assert {t.binding["inAvail"], t.binding["max"]} <= {"a", "i"}


def test_single_bool_binding():
    src = """
class Ctx { public bool eof; }
class R {
  public void set(Ctx context) { context.eof = true; }
  public void host(bool b) { b = false; }
}
test t { R r = new R(); r.set(new Ctx()); r.host(true); }
"""
    prog = parse(src)
    stmt, count = G.bind_transplant(prog, G.prepare_transplant(prog, "1/0/0"), loc(prog, "1/1/0"), random.Random(0))
    assert stmt_str(stmt) == "b = true;"
    assert count == 1


def test_closed_statement_binds_unchanged():
    prog = parse("class R { public void f() { int k = 3; } public void g(int a) { a = 1; } }")
    stmt, count = G.bind_transplant(prog, G.prepare_transplant(prog, "0/0/0"), loc(prog, "0/1/0"), random.Random(0))
    assert stmt_str(stmt) == "int k = 3;" and count == 1


# ---------------------------------------------------------------- add / delete / replace


def test_add_inserts_before_location():
    prog = parse("class R { public void f(int a) { a = 1; a = 2; } }")
    v = G.apply_add(prog, loc(prog, "0/0/0"), parse_stmt("a = 7;"))
    body = v.program.classes[0].methods[0].body
    assert [stmt_str(s) for s in body] == ["a = 7;", "a = 1;", "a = 2;"]
    assert body[0].sid == "0/0/0+0"
    assert type_check(v.program).ok


def test_add_pure_statement_is_neutral(write_mini):
    sub = load_subject(write_mini("class M { public static int f(int x) { int y = x + 1; return y; } }"
                                  "\ntest t { assertEquals(M.f(1), 2); }"))
    v = G.apply_add(sub.program, make_location(sub.program, "0/0/1", sub.coverage), parse_stmt("x = x + 0;"))
    assert classify_variant(sub, v, 10**6)["verdict"] == "Neutral"


def test_delete_sole_statement():
    prog = parse("class R { public void f(int a) { a = 1; } }")
    v = G.apply_delete(prog, loc(prog, "0/0/0"))
    assert v.program.classes[0].methods[0].body == []
    assert type_check(v.program).ok


def test_delete_return_does_not_compile(write_mini):
    sub = load_subject(write_mini("class M { public static int f() { return 1; } }\ntest t { assertEquals(M.f(), 1); }"))
    v = G.apply_delete(sub.program, make_location(sub.program, "0/0/0", sub.coverage))
    assert classify_variant(sub, v, 10**6)["verdict"] == "NonCompiling"


def test_replace_return_with_same_type():
    prog = parse("class R { public int f(int x, int y) { return x; } public int g(int y) { return y; } }")
    v = G.apply_replace(prog, loc(prog, "0/0/0"), parse_stmt("return y;"), "0/1/0")
    assert stmt_str(v.program.classes[0].methods[0].body[0]) == "return y;"


def test_replace_return_with_other_type_rejected():
    prog = parse("class R { public int f(int x, bool b) { return x; } public bool g(bool b) { return b; } }")
    with pytest.raises(PreconditionViolated) as info:
        G.apply_replace(prog, loc(prog, "0/0/0"), parse_stmt("return b;"), "0/1/0")
    assert info.value.reason == "ReturnTypeMismatch"
    assert "0/1/0" not in G.find_compatible_transplants(prog, loc(prog, "0/0/0"), "replace")


def test_replace_by_itself_rejected():
    prog = parse("class R { public void f(int a) { a = 1; } }")
    with pytest.raises(PreconditionViolated):
        G.apply_replace(prog, loc(prog, "0/0/0"), parse_stmt("a = 1;"), "0/0/0")
    assert G.find_compatible_transplants(prog, loc(prog, "0/0/0"), "replace") == []


@pytest.mark.parametrize("kind", ["add", "delete", "replace"])
@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: Path(p).name)
def test_generic_variants_seeded_and_local(path, kind):
    sub = load_subject(path)
    emitted = 0
    for seed in range(15):
        try:
            v = G.synthesize(sub.program, sub.coverage, kind, random.Random(seed), prepared=sub.prepared)
        except NotApplicable:
            continue
        emitted += 1
        again = G.synthesize(sub.program, sub.coverage, kind, random.Random(seed), prepared=sub.prepared)
        assert pretty(again.program) == pretty(v.program)
        assert _edits(sub.program, v.program) == 1
        if kind == "add":
            ci, mi = (int(x) for x in v.location.split("/")[:2])
            grown = sum(1 for _ in A.iter_body(_method(v.program, ci, mi).body))
            base = sum(1 for _ in A.iter_body(_method(sub.program, ci, mi).body))
            assert grown == base + sum(1 for _ in A.iter_body([_inserted(_method(v.program, ci, mi))]))
    assert emitted


def _method(prog: A.Program, ci: int, mi: int) -> A.MethodDecl:
    return prog.classes[ci].methods[mi]


def _inserted(m: A.MethodDecl) -> A.Stmt:
    return next(s for s in A.iter_body(m.body) if "+" in s.sid)


def _edits(original: A.Program, variant: A.Program) -> int:
    """Number of statement slots that differ, comparing every body list pairwise."""
    count = 0

    def compare(a: list, b: list):
        nonlocal count
        if len(a) != len(b):
            count += 1
            return
        for x, y in zip(a, b):
            if type(x) is not type(y) or stmt_str(x).splitlines()[0] != stmt_str(y).splitlines()[0]:
                count += 1
                continue
            for ba, bb in zip(x.child_bodies(), y.child_bodies()):
                compare(ba, bb)

    for c1, c2 in zip(original.classes, variant.classes):
        for m1, m2 in zip(c1.methods, c2.methods):
            compare(m1.body, m2.body)
    return count


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: Path(p).name)
def test_bound_adds_typecheck(path):
    sub = load_subject(path)
    for seed in range(25):
        try:
            v = G.synthesize(sub.program, sub.coverage, "add", random.Random(seed), prepared=sub.prepared)
        except NotApplicable:
            continue
        assert type_check(v.program).ok, v.description


# ---------------------------------------------------------------- add method invocation

AMI_SRC = """
class Tool {
  public int level;
  public void reset() { level = 0; }
  public bool ready() { return level > 0; }
  public static void tick() { }
  private int hidden() { return 1; }
}
class Host {
  public static int count;
  public int work(Tool tool, int n) {
    int r = n + 1;
    return r;
  }
  public static void bump() {
    count = count + 1;
  }
}
test t {
  Host h = new Host();
  assertEquals(h.work(new Tool(), 1), 2);
  Host.bump();
}
"""


def names(prog, sid):
    return [r.qualified_name for r in AMI.accessible_methods(prog, loc(prog, sid)).candidates]


def test_accessible_methods_rules():
    prog = parse(AMI_SRC)
    at_work = names(prog, "1/0/0")
    assert "Tool.reset" in at_work and "Tool.ready" in at_work and "Tool.tick" in at_work
    assert "Tool.hidden" not in at_work
    assert "Host.work" not in at_work  # the host itself
    assert "Host.bump" in at_work
    at_bump = names(prog, "1/1/0")
    assert "Tool.reset" not in at_bump  # no receiver in a static method
    assert "Host.work" not in at_bump
    assert "Host.bump" not in at_bump


def _ami(prog, sid, method):
    here = loc(prog, sid)
    ref = next(r for r in AMI.accessible_methods(prog, here).candidates if r.qualified_name == method)
    return AMI.apply_add_method_invocation(prog, here, ref, random.Random(0))


def test_void_static_call_has_no_well():
    prog = parse(AMI_SRC)
    v = _ami(prog, "1/0/0", "Tool.tick")
    assert v.details["well"] is None
    inserted = v.program.classes[1].methods[0].body[0]
    assert isinstance(inserted, A.Try) and inserted.handler == []
    assert stmt_str(inserted.body[0]) == "Tool.tick();"
    assert len(v.program.classes[1].fields) == 1


def test_bool_call_assigned_to_well_field():
    prog = parse(AMI_SRC)
    v = _ami(prog, "1/0/0", "Tool.ready")
    host = v.program.classes[1]
    well = next(f for f in host.fields if f.name == v.details["well"])
    assert well.name == "__well_0" and str(well.type) == "bool"
    assert stmt_str(v.program.classes[1].methods[0].body[0].body[0]) == "this.__well_0 = tool.ready();"
    assert type_check(v.program).ok


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: Path(p).name)
def test_ami_structure(path):
    sub = load_subject(path)
    rng = random.Random(5)
    for sid in sub.coverage.covered_statements()[:25]:
        here = make_location(sub.program, sid, sub.coverage)
        cands = AMI.accessible_methods(sub.program, here)
        for ref in AMI.sample_methods(cands, rng, 3):
            v = AMI.apply_add_method_invocation(sub.program, here, ref, rng)
            assert type_check(v.program).ok, v.description
            tries = sum(1 for _ in _all_stmts(v.program) if isinstance(_, A.Try))
            assert tries == sum(1 for _ in _all_stmts(sub.program) if isinstance(_, A.Try)) + 1
            wells = sum(len(c.fields) for c in v.program.classes) - sum(len(c.fields) for c in sub.program.classes)
            assert wells == (0 if ref.return_type is None else 1)


def _all_stmts(prog: A.Program):
    for _ci, _mi, _c, m in A.method_bodies(prog):
        yield from A.iter_body(m.body)


def test_sample_methods_caps_and_keeps_order():
    prog = parse(AMI_SRC)
    cands = AMI.accessible_methods(prog, loc(prog, "1/0/0"))
    picked = AMI.sample_methods(cands, random.Random(1), 2)
    assert len(picked) == 2
    order = [r.qualified_name for r in cands.candidates]
    assert [order.index(r.qualified_name) for r in picked] == sorted(order.index(r.qualified_name) for r in picked)


# ---------------------------------------------------------------- swap subtype


def test_swap_candidates():
    prog = parse("class R { public void f() { List<int> l = new ArrayListImpl<int>(); "
                 "ArrayListImpl<int> c = new ArrayListImpl<int>(); } }")
    assert SW.enumerate_swap_candidates(prog) == [SW.SwapCandidate("0/0/0", "List", "ArrayListImpl")]


APPEND_INDEX = """
class Bag {
  private List<int> items;
  public Bag() { items = new ArrayListImpl<int>(); }
  public void push(int v) { items.add(v); }
  public int at(int i) { return items.get(i); }
}
test t {
  Bag b = new Bag();
  b.push(4);
  b.push(9);
  assertEquals(b.at(1), 9);
}
"""


def test_array_to_linked_list_is_neutral(write_mini):
    sub = load_subject(write_mini(APPEND_INDEX))
    cand = SW.enumerate_swap_candidates(sub.program)[0]
    reg = SW.SwapRegistry.for_program(sub.program)
    v = SW.apply_swap_subtype(sub.program, cand, "LinkedListImpl", reg)
    assert classify_variant(sub, v, 10**6)["verdict"] == "Neutral"
    with pytest.raises(PreconditionViolated):
        SW.apply_swap_subtype(sub.program, cand, "ArrayListImpl", reg)


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: Path(p).name)
def test_every_registry_swap_typechecks(path):
    prog = load_subject(path).program
    reg = SW.SwapRegistry.for_program(prog)
    for cand in SW.enumerate_swap_candidates(prog):
        for target in reg.alternatives(cand.interface, cand.current):
            assert type_check(SW.apply_swap_subtype(prog, cand, target, reg).program).ok


# ---------------------------------------------------------------- loop flip


def loop_program(header: str, body: str = "s = s + i + \",\";") -> A.Program:
    return parse(f'class L {{ public static string run(int n) {{ string s = ""; for ({header}) {{ {body} }} return s; }} }}'
                 '\ntest t { assertEquals(L.run(5), ""); }')


def test_while_and_doubling_excluded():
    prog = parse("class L { public static void f(int n) { int i = 0; while (i < n) { i = i + 1; } "
                 "for (int j = 1; j < n; j = j * 2) { } } }")
    assert LF.enumerate_counted_loops(prog) == []


def test_simple_reversal_header():
    v = LF.flip_loop(loop_program("int i = 0; i < n; i++"), "0/0/1")
    assert stmt_str(v.program.classes[0].methods[0].body[1]).startswith("for (int i = n - 1; i >= 0; i = i - 1)")


def test_step_four_starts_at_28():
    prog = loop_program("int i = 0; i < 32; i += 4")
    v = LF.flip_loop(prog, "0/0/1")
    loop = v.program.classes[0].methods[0].body[1]
    assert LF.last_index(0, "<", 32, 4) == 28
    assert (loop.cond.op, loop.update.op, loop.update.right.value) == (">=", "-", 4)
    assert _indices(v.program) == list(range(28, -1, -4))


def _indices(prog: A.Program, sid: str = "0/0/1") -> list[int]:
    """Loop counter values seen by a loop-index probe while running the test."""
    events = []
    run_test(prog, "t", ProbeConfig(loop_index=frozenset([sid])), sink=events.append)
    return [e.indexValue for e in events if e.indexValue is not None]


def test_zero_iteration_loop_stays_empty():
    prog = loop_program("int i = 10; i < 3; i++")
    assert _indices(LF.flip_loop(prog, "0/0/1").program) == []


@settings(max_examples=200, deadline=None)
@given(
    st.integers(-12, 12), st.integers(-12, 12), st.integers(1, 5), st.sampled_from(["<", "<=", ">", ">="]),
)
def test_flip_visits_same_indices_reversed(i0, iend, step, comp):
    op = "+" if comp in ("<", "<=") else "-"
    prog = loop_program(f"int i = {i0}; i {comp} {iend}; i = i {op} {step}")
    original = _indices(prog)
    flipped = _indices(LF.flip_loop(prog, "0/0/1").program)
    assert flipped == original[::-1]
