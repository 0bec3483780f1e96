from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CORPUS_FILES
from nvgen.interpreter import (
    ERROR,
    FAIL,
    FUEL_EXHAUSTED,
    PASS,
    ProbeConfig,
    ProbeEvent,
    UnknownTest,
    compute_coverage,
    dump_jsonl,
    load_jsonl,
    run_suite,
    run_test,
)
from nvgen.interpreter.values import key_hash, wrap32
from nvgen.minilang import parse


def program(body: str, classes: str = "") -> object:
    return parse(f"{classes}\ntest t {{\n{body}\n}}\n")


def status(body: str, classes: str = "", fuel: int = 10**6) -> str:
    return run_test(program(body, classes), "t", fuel=fuel).status


def test_arithmetic_passes():
    assert status("assertEquals(1 + 1, 2);") == PASS


def test_failed_assertion():
    assert status("assertEquals(1 + 1, 3);") == FAIL


def test_uncaught_throw_is_error():
    assert status('throw "boom";') == ERROR


def test_division_by_zero_is_error():
    assert status("int z = 0; int q = 4 / z;") == ERROR


def test_null_receiver_is_error():
    assert status("string s = null; int n = s.length();") == ERROR


def test_infinite_loop_exhausts_fuel():
    outcome = run_test(program("int i = 0; while (true) { i = i + 1; }"), "t", fuel=500)
    assert outcome.status == FUEL_EXHAUSTED
    assert not outcome.passed
    assert outcome.steps_used <= 500


def test_runaway_recursion_is_error():
    classes = "class R { public static int down(int n) { return R.down(n + 1); } }"
    assert status("int x = R.down(0);", classes) == ERROR


def test_unknown_test():
    with pytest.raises(UnknownTest):
        run_test(program("assertTrue(true);"), "missing")


def test_int_overflow_wraps():
    assert status("int big = 2147483647; assertEquals(big + 1, -2147483648);") == PASS
    assert wrap32(2**31) == -(2**31)


def test_java_division_and_remainder_truncate():
    assert status("assertEquals(-7 / 2, -3); assertEquals(-7 % 2, -1); assertEquals(7 % -2, 1);") == PASS


def test_string_concatenation_with_int():
    assert status('string s = "n=" + 3; assertEquals(s, "n=3");') == PASS


def test_caught_exception_continues():
    assert status('int r = 0; try { throw "x"; } catch (e) { r = 1; } assertEquals(r, 1);') == PASS


def test_dynamic_dispatch_through_interface():
    classes = """
interface Shape { int area(); }
class Sq implements Shape { private int s; public Sq(int v) { s = v; } public int area() { return s * s; } }
class Tri implements Shape { public int area() { return 1; } }
"""
    body = "Shape a = new Sq(3); Shape b = new Tri(); assertEquals(a.area() + b.area(), 10);"
    assert status(body, classes) == PASS


# ---------------------------------------------------------------- collection order


def order_is(impl: str, keys: list[int], expected: list[int], kind: str = "Set") -> bool:
    """Run a test asserting that iterating ``impl`` filled with ``keys`` yields ``expected``."""
    adds = " ".join(f"c.add({k});" if kind == "Set" else f"c.put({k}, 0);" for k in keys)
    decl = f"Set<int> c = new {impl}<int>();" if kind == "Set" else f"Map<int, int> c = new {impl}<int, int>();"
    source = "c" if kind == "Set" else "c.keys()"
    want = "".join(f"{k}," for k in expected)
    body = f'{decl} {adds} string s = ""; for (int k : {source}) {{ s = s + k + ","; }} assertEquals(s, "{want}");'
    return status(body) == PASS


KEYS = [5, -3, 17, 0, 1000, 2, 17]
DISTINCT = list(dict.fromkeys(KEYS))


def test_hash_set_order_is_ascending_hash():
    assert order_is("HashSetImpl", KEYS, sorted(DISTINCT, key=key_hash))
    assert not order_is("HashSetImpl", KEYS, DISTINCT)


def test_tree_set_order_is_ascending():
    assert order_is("TreeSetImpl", KEYS, sorted(DISTINCT))


def test_linked_map_keeps_insertion_order():
    assert order_is("LinkedMapImpl", KEYS, DISTINCT, "Map")


def test_hash_map_orders_keys_by_hash():
    assert order_is("HashMapImpl", KEYS, sorted(DISTINCT, key=key_hash), "Map")


def test_tree_map_orders_keys_ascending():
    assert order_is("TreeMapImpl", KEYS, sorted(DISTINCT), "Map")


def test_documented_hashes():
    assert key_hash(1) == 2654435761
    assert key_hash("ab") == 31 * ord("a") + ord("b")
    assert key_hash(-1) == (0xFFFFFFFF * 2654435761) % 2**32


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-1000, 1000), max_size=10))
def test_tree_set_sorted_property(keys):
    assert order_is("TreeSetImpl", keys, sorted(set(keys)))


# ---------------------------------------------------------------- suites and coverage


def test_empty_suite_is_degenerate():
    result = run_suite(parse("class A { }"))
    assert result.passed and result.degenerate


def test_one_failing_test_fails_suite():
    prog = parse("test good { assertTrue(true); }\ntest bad { assertTrue(false); }")
    result = run_suite(prog)
    assert not result.passed
    assert result.failing() == ["bad"]


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: Path(p).name)
def test_corpus_suites_pass(path):
    result = run_suite(parse(Path(path).read_text()))
    assert result.passed and not result.degenerate


COVERAGE_SRC = """
class M {
  public static int inc(int v) {
    int w = v + 1;
    return w;
  }
  public static int never(int v) {
    return v;
  }
}
test a { assertEquals(M.inc(1), 2); }
test b { assertEquals(M.inc(2), 3); }
test c { assertEquals(M.inc(3), 4); }
test d { assertTrue(true); }
"""


def test_coverage_sets():
    cov = compute_coverage(parse(COVERAGE_SRC))
    assert cov.tests_covering("0/0/0") == frozenset({"a", "b", "c"})
    assert cov.tc("0/0/1") == 3
    assert "0/1/0" not in cov.per_statement
    assert cov.tests_covering("0/1/0") == frozenset()


# ---------------------------------------------------------------- determinism and probes


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: Path(p).name)
def test_traces_replay_identically(path):
    prog = parse(Path(path).read_text())
    probes = ProbeConfig(calls=True, branches=True, builtin_calls=True)
    for t in prog.tests:
        first = run_test(prog, t.name, probes)
        second = run_test(prog, t.name, probes)
        assert dump_jsonl(first.trace) == dump_jsonl(second.trace)
        assert first.steps_used == second.steps_used


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: Path(p).name)
def test_probes_do_not_change_status(path):
    prog = parse(Path(path).read_text())
    full = ProbeConfig(calls=True, branches=True, builtin_calls=True)
    for t in prog.tests:
        assert run_test(prog, t.name).status == run_test(prog, t.name, full).status


def test_call_probe_shape():
    prog = parse(COVERAGE_SRC)
    events = run_test(prog, "a", ProbeConfig(calls=True)).trace
    assert events[0] == ProbeEvent("call", "test:a", "M.inc", None, None)
    assert events[-1].kind == "return"


def test_jsonl_round_trip():
    events = [ProbeEvent("call", "a", "b", None, None), ProbeEvent("loopIndex", None, None, "0/0/1", 4)]
    assert list(load_jsonl(dump_jsonl(events))) == events


def test_probe_key():
    cfg = ProbeConfig(calls=True, loop_index=frozenset(["0/0/2", "0/0/1"]))
    assert cfg.key() == "c1b0x0l[0/0/1,0/0/2]"
    assert ProbeConfig.for_transformation("ami") == ProbeConfig(calls=True)
    assert ProbeConfig.for_transformation("loopFlip", "0/0/1").loop_index == frozenset(["0/0/1"])
