from __future__ import annotations

import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as O
from conftest import CORPUS_FILES
from nvgen.campaign import load_subject
from nvgen.interpreter import ProbeConfig, ProbeEvent, run_test
from nvgen.minilang import parse
from nvgen.trace.analysis import (
    MissingProbe,
    ProbeConfigMismatch,
    UnbalancedTrace,
    build_call_matrix,
    build_call_tree,
    call_tree_dot,
    compare_index_traces,
    detect_divergence,
    diff_call_matrices,
    tree_edge_counts,
)
from nvgen.trace.cache import TraceCache, trace_key
from nvgen.transform import ami as AMI
from nvgen.transform import loopflip as LF
from nvgen.transform.base import make_location


def call(a, b):
    return ProbeEvent("call", a, b, None, None)


def ret(a, b):
    return ProbeEvent("return", a, b, None, None)


def idx(sid, v):
    return ProbeEvent("loopIndex", None, None, sid, v)


def test_empty_trace_matrix():
    m = build_call_matrix([])
    assert m.methods == [] and m.dense() == []


TWELVE = """
class W {
  public static int f(int v) { return v + 1; }
  public static int m() {
    int s = 0;
    for (int i = 0; i < 12; i++) { s = W.f(s); }
    return s;
  }
}
test once { assertEquals(W.m(), 12); }
"""


def test_twelve_calls_counted():
    events = run_test(parse(TWELVE), "once", ProbeConfig(calls=True)).trace
    m = build_call_matrix(events)
    assert m.get("W.m", "W.f") == 12
    assert m.get("test:once", "W.m") == 1


def test_unbalanced_trace_rejected():
    with pytest.raises(UnbalancedTrace):
        build_call_matrix([call("a", "b")])
    with pytest.raises(UnbalancedTrace):
        build_call_matrix([call("a", "b"), ret("a", "c")])


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: Path(p).name)
def test_matrix_matches_fold_and_tree(path):
    prog = parse(Path(path).read_text())
    probes = ProbeConfig(calls=True, branches=True, builtin_calls=True)
    for t in prog.tests:
        events = run_test(prog, t.name, probes).trace
        m = build_call_matrix(events)
        assert m.counts == O.fold_call_counts(events)
        assert tree_edge_counts(build_call_tree(events)) == m.counts


balanced = st.recursive(
    st.just([]),
    lambda inner: st.tuples(st.sampled_from("abcd"), st.sampled_from("abcd"), inner, inner).map(
        lambda t: [call(t[0], t[1])] + t[2] + [ret(t[0], t[1])] + t[3]
    ),
    max_leaves=12,
)


@settings(max_examples=100, deadline=None)
@given(balanced, balanced)
def test_delta_algebra(a, b):
    ma, mb = build_call_matrix(a), build_call_matrix(b)
    delta = diff_call_matrices(ma, mb)
    for key in set(ma.counts) | set(mb.counts):
        assert ma.get(*key) + delta.get(key, 0) == mb.get(*key)
    assert diff_call_matrices(ma, ma) == {}


AMI_TWELVE = """
class Helper {
  public int calls;
  public int probe(int v) { return Helper.inner(v); }
  public static int inner(int v) { return v; }
}
class Host {
  public int step(Helper h, int v) {
    int w = v + 1;
    return w;
  }
}
test loop {
  Helper h = new Helper();
  Host host = new Host();
  int s = 0;
  for (int i = 0; i < 12; i++) { s = host.step(h, s); }
  assertEquals(s, 12);
}
"""


def test_ami_delta_is_host_count_plus_closure(write_mini):
    sub = load_subject(write_mini(AMI_TWELVE))
    here = make_location(sub.program, "1/0/0", sub.coverage)
    ref = next(r for r in AMI.accessible_methods(sub.program, here).candidates if r.name == "probe")
    v = AMI.apply_add_method_invocation(sub.program, here, ref, random.Random(0))
    probes = ProbeConfig(calls=True)
    before = build_call_matrix(run_test(sub.program, "loop", probes).trace)
    after = build_call_matrix(run_test(v.program, "loop", probes).trace)
    assert diff_call_matrices(before, after) == {("Host.step", "Helper.probe"): 12, ("Helper.probe", "Helper.inner"): 12}


def test_call_tree_dot():
    events = [call("t", "a"), call("a", "b"), ret("a", "b"), ret("t", "a")]
    dot = call_tree_dot(build_call_tree(events))
    assert dot.startswith("digraph calltree {") and '"b"' in dot and dot.count("->") == 2


# ---------------------------------------------------------------- divergence


def test_identical_program_never_diverges():
    prog = parse(TWELVE)
    probes = ProbeConfig(calls=True, branches=True)
    a = run_test(prog, "once", probes).trace
    b = run_test(prog, "once", probes).trace
    assert not detect_divergence(a, iter(b)).diverged


def test_probe_config_mismatch():
    with pytest.raises(ProbeConfigMismatch):
        detect_divergence([], [], "c1b0x0l[]", "c1b1x0l[]")


def _branch_pattern(pattern: str) -> list[ProbeEvent]:
    return [ProbeEvent("branch", "m", None, "0/0/2", int(ch == "A")) for ch in pattern]


def test_branch_pattern_divergence():
    res = detect_divergence(_branch_pattern("AAABABBB"), iter(_branch_pattern("BBBABAAA")))
    assert res.diverged and res.first_divergence_index == 0
    with_entry = [call("t", "m")] + _branch_pattern("AAABABBB") + [ret("t", "m")]
    flipped = [call("t", "m")] + _branch_pattern("BBBABAAA") + [ret("t", "m")]
    res = detect_divergence(with_entry, iter(flipped))
    assert res.first_divergence_index == 1
    assert "changed event 1" in res.summary


def test_removed_and_added_events():
    a = [call("t", "m"), ret("t", "m")]
    assert detect_divergence(a, iter(a[:1])).summary.startswith("removed event 1")
    assert detect_divergence(a[:1] + [], iter(a)).summary.startswith("added event 1")


def test_neutral_flip_diverges_at_first_index_event():
    sub = load_subject(str(Path(CORPUS_FILES[0]).parent / "bit_codec.mini"))
    sid = "0/0/6"
    probes = ProbeConfig(loop_index=frozenset([sid]))
    v = LF.flip_loop(sub.program, sid)
    test = sorted(sub.coverage.tests_covering(sid))[0]
    a = run_test(sub.program, test, probes).trace
    b = run_test(v.program, test, probes).trace
    first_value = next(k for k, e in enumerate(a) if e.indexValue is not None)
    res = detect_divergence(a, iter(b))
    assert res.diverged and res.first_divergence_index == first_value


# ---------------------------------------------------------------- loop index traces


def test_reversed_index_segments():
    a = [idx("L", None)] + [idx("L", v) for v in range(0, 32, 4)]
    b = [idx("L", None)] + [idx("L", v) for v in range(28, -1, -4)]
    assert compare_index_traces(a, b, "L").reversed_per_entry
    assert not compare_index_traces(a, a, "L").reversed_per_entry


def test_entries_compared_independently():
    a = [idx("L", None), idx("L", 0), idx("L", 1), idx("L", None), idx("L", 5)]
    b = [idx("L", None), idx("L", 1), idx("L", 0), idx("L", None), idx("L", 5)]
    res = compare_index_traces(a, b, "L")
    assert res.reversed_per_entry and res.entries == 2


def test_empty_segments_are_reversed():
    assert compare_index_traces([idx("L", None)], [idx("L", None)], "L").reversed_per_entry
    assert compare_index_traces([], [], "L").reversed_per_entry


def test_extra_variant_entry_is_not_reversed():
    a = [idx("L", None)]
    assert not compare_index_traces(a, a + a, "L").reversed_per_entry


def test_missing_probe():
    with pytest.raises(MissingProbe):
        compare_index_traces([], [], "L", frozenset(["M"]))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(st.integers(-50, 50), max_size=6), max_size=4), st.booleans())
def test_matches_offline_oracle(segments, corrupt):
    def stream(segs):
        out = []
        for seg in segs:
            out.append(idx("L", None))
            out.extend(idx("L", v) for v in seg)
        return out

    variant = [seg[::-1] for seg in segments]
    if corrupt and variant and variant[0]:
        variant[0] = variant[0] + [999]
    a, b = stream(segments), stream(variant)
    assert compare_index_traces(a, b, "L").reversed_per_entry == O.offline_reversed(a, b, "L")


# ---------------------------------------------------------------- cache


def test_trace_cache_round_trip(tmp_path):
    prog = parse(TWELVE)
    probes = ProbeConfig(calls=True)
    first = TraceCache(tmp_path).original(prog, "once", probes, 10**6)
    files = list(tmp_path.rglob("*.jsonl"))
    assert len(files) == 1
    second = TraceCache(tmp_path).original(prog, "once", probes, 10**6)
    assert second.trace == first.trace and second.status == first.status
    assert trace_key("x", "once", probes, 1) != trace_key("x", "once", ProbeConfig(), 1)
