"""Fold probe event streams into call matrices, call trees and loop index traces."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

from nvgen.interpreter.probes import ProbeEvent


class UnbalancedTrace(ValueError):
    pass


class ProbeConfigMismatch(ValueError):
    pass


class MissingProbe(ValueError):
    pass


# ============================================================
# CALL MATRIX
# ============================================================


@dataclass
class CallMatrix:
    methods: list[str]
    counts: dict[tuple[str, str], int]

    def get(self, caller: str, callee: str) -> int:
        return self.counts.get((caller, callee), 0)

    def dense(self) -> list[list[int]]:
        return [[self.get(a, b) for b in self.methods] for a in self.methods]


def _check_balanced(events: Iterable[ProbeEvent]) -> None:
    stack: list[tuple] = []
    for k, e in enumerate(events):
        if e.kind == "call":
            stack.append((e.caller, e.callee))
        elif e.kind == "return":
            if not stack or stack[-1] != (e.caller, e.callee):
                raise UnbalancedTrace(f"return of {e.callee} at event {k} does not match an open call")
            stack.pop()
    if stack:
        raise UnbalancedTrace(f"{len(stack)} calls never returned")


def build_call_matrix(events: list[ProbeEvent]) -> CallMatrix:
    """counts[a][b] = number of times a invoked b."""
    _check_balanced(events)
    methods: list[str] = []
    seen: set[str] = set()
    counts: Counter = Counter()
    for e in events:
        if e.kind != "call":
            continue
        for m in (e.caller, e.callee):
            if m not in seen:
                seen.add(m)
                methods.append(m)
        counts[(e.caller, e.callee)] += 1
    return CallMatrix(methods, dict(counts))


def diff_call_matrices(original: CallMatrix, variant: CallMatrix) -> dict[tuple[str, str], int]:
    """Nonzero entries of variant - original over the union of both method sets."""
    keys = set(original.counts) | set(variant.counts)
    delta = {k: variant.get(*k) - original.get(*k) for k in keys}
    return {k: v for k, v in sorted(delta.items()) if v != 0}


# ============================================================
# CALL TREE
# ============================================================


@dataclass
class CallTreeNode:
    label: str
    children: list["CallTreeNode"] = field(default_factory=list)

    def edges(self) -> Iterable[tuple[str, str]]:
        for c in self.children:
            if not c.label.startswith("branch:"):
                yield self.label, c.label
            yield from c.edges()

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)


def build_call_tree(events: list[ProbeEvent]) -> CallTreeNode:
    """Ordered call tree; branch events become ``branch:<stmt>:<taken>`` leaves."""
    _check_balanced(events)
    first_call = next((e for e in events if e.kind in ("call", "branch")), None)
    root = CallTreeNode(first_call.caller if first_call is not None else "<empty>")
    stack = [root]
    for e in events:
        if e.kind == "call":
            node = CallTreeNode(e.callee)
            stack[-1].children.append(node)
            stack.append(node)
        elif e.kind == "return":
            stack.pop()
        elif e.kind == "branch":
            stack[-1].children.append(CallTreeNode(f"branch:{e.stmtId}:{e.indexValue}"))
    return root


def tree_edge_counts(root: CallTreeNode) -> dict[tuple[str, str], int]:
    return dict(Counter(root.edges()))


def call_tree_dot(root: CallTreeNode, name: str = "calltree") -> str:
    lines = [f"digraph {name} {{", "  node [shape=box];"]
    counter = [0]

    def visit(node: CallTreeNode) -> str:
        ident = f"n{counter[0]}"
        counter[0] += 1
        label = node.label.replace('"', '\\"')
        shape = ", shape=diamond" if node.label.startswith("branch:") else ""
        lines.append(f'  {ident} [label="{label}"{shape}];')
        for c in node.children:
            child = visit(c)
            lines.append(f"  {ident} -> {child};")
        return ident

    visit(root)
    lines.append("}")
    return "\n".join(lines) + "\n"


# ============================================================
# DIVERGENCE
# ============================================================


@dataclass
class DivergenceResult:
    diverged: bool
    first_divergence_index: Optional[int] = None
    summary: str = "identical"

    def to_dict(self) -> dict:
        return {
            "diverged": self.diverged,
            "firstDivergenceIndex": self.first_divergence_index,
            "summary": self.summary,
        }


def _show(e: Optional[ProbeEvent]) -> str:
    if e is None:
        return "<end>"
    parts = [e.kind]
    if e.caller is not None:
        parts.append(e.caller)
    if e.callee is not None:
        parts.append(f"-> {e.callee}")
    if e.stmtId is not None:
        parts.append(f"@{e.stmtId}")
    if e.indexValue is not None:
        parts.append(f"= {e.indexValue}")
    return " ".join(parts)


class DivergenceDetector:
    """Compare a live event stream against a stored one without storing the live stream.

    Feed events one at a time (usable as an interpreter sink); after the first
    mismatch further events are only counted.
    """

    def __init__(self, original: list[ProbeEvent]):
        self.original = original
        self.position = 0
        self.result: Optional[DivergenceResult] = None

    def feed(self, event: ProbeEvent) -> None:
        if self.result is None:
            k = self.position
            if k >= len(self.original):
                self.result = DivergenceResult(True, k, f"added event {k}: {_show(event)}")
            elif self.original[k] != event:
                self.result = DivergenceResult(
                    True, k, f"changed event {k}: {_show(self.original[k])} became {_show(event)}"
                )
        self.position += 1

    __call__ = feed

    def finish(self) -> DivergenceResult:
        if self.result is not None:
            return self.result
        if self.position < len(self.original):
            k = self.position
            return DivergenceResult(True, k, f"removed event {k}: {_show(self.original[k])}")
        return DivergenceResult(False)


def detect_divergence(
    original: list[ProbeEvent],
    variant_events: Iterable[ProbeEvent],
    original_config: Optional[str] = None,
    variant_config: Optional[str] = None,
) -> DivergenceResult:
    if original_config is not None and variant_config is not None and original_config != variant_config:
        raise ProbeConfigMismatch(f"{original_config} vs {variant_config}")
    det = DivergenceDetector(original)
    for e in variant_events:
        det.feed(e)
        if det.result is not None:
            break
    return det.finish()


# ============================================================
# LOOP INDEX TRACES
# ============================================================


def index_segments(events: Iterable[ProbeEvent], loop_sid: str) -> list[list[int]]:
    """Per-entry lists of counter values for one loop (entry markers carry no value)."""
    segments: list[list[int]] = []
    for e in events:
        if e.kind != "loopIndex" or e.stmtId != loop_sid:
            continue
        if e.indexValue is None:
            segments.append([])
        elif not segments:
            raise MissingProbe(f"index value before loop entry at {loop_sid}")
        else:
            segments[-1].append(e.indexValue)
    return segments


@dataclass
class IndexComparison:
    reversed_per_entry: bool
    entries: int
    details: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"reversedPerEntry": self.reversed_per_entry, "entries": self.entries, "details": self.details}


def compare_index_traces(
    original: list[ProbeEvent],
    variant: list[ProbeEvent],
    loop_sid: str,
    probe_loops: Optional[frozenset] = None,
) -> IndexComparison:
    """Check that every entry of the variant loop visits the original indices in reverse.

    Entries are paired in order; entries the variant never reached are reported
    in ``details`` but do not count against reversal.
    """
    if probe_loops is not None and loop_sid not in probe_loops:
        raise MissingProbe(f"no loop index probe at {loop_sid}")
    a = index_segments(original, loop_sid)
    b = index_segments(variant, loop_sid)
    details = []
    ok = True
    if len(b) > len(a):
        ok = False
        details.append(f"loop entered {len(a)} times originally, {len(b)} times in the variant")
    elif len(b) < len(a):
        # the variant run ended early (e.g. a failing assertion); later entries never happened
        details.append(f"variant stopped after {len(b)} of {len(a)} loop entries")
    for k, (sa, sb) in enumerate(zip(a, b)):
        if sb != sa[::-1]:
            ok = False
            details.append(f"entry {k}: {sa} vs {sb}")
    return IndexComparison(ok, len(a), details)
