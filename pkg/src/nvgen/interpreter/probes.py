"""Probe configuration and the events probes emit."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional

EVENT_FIELDS = ("kind", "caller", "callee", "stmtId", "indexValue")


class ProbeEvent(NamedTuple):
    kind: str  # call | return | branch | loopIndex
    caller: Optional[str]
    callee: Optional[str]
    stmtId: Optional[str]
    indexValue: Optional[int]

    def to_json(self) -> str:
        return json.dumps(dict(zip(EVENT_FIELDS, self)), separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "ProbeEvent":
        d = json.loads(line)
        return cls(*(d.get(f) for f in EVENT_FIELDS))


@dataclass(frozen=True)
class ProbeConfig:
    calls: bool = False
    branches: bool = False
    builtin_calls: bool = False  # also report calls into builtin collections
    loop_index: frozenset = frozenset()  # ForCounted statement ids to watch

    @property
    def enabled(self) -> bool:
        return self.calls or self.branches or bool(self.loop_index)

    def key(self) -> str:
        loops = ",".join(sorted(self.loop_index))
        return f"c{int(self.calls)}b{int(self.branches)}x{int(self.builtin_calls)}l[{loops}]"

    @classmethod
    def none(cls) -> "ProbeConfig":
        return cls()

    @classmethod
    def for_transformation(cls, kind: str, loop_sid: Optional[str] = None) -> "ProbeConfig":
        """Default probes per transformation kind."""
        if kind == "ami":
            return cls(calls=True)
        if kind == "loopFlip":
            return cls(loop_index=frozenset([loop_sid]) if loop_sid else frozenset())
        if kind == "swapSubtype":
            return cls(calls=True, builtin_calls=True)
        return cls(calls=True, branches=True)


def dump_jsonl(events: Iterable[ProbeEvent]) -> str:
    return "".join(e.to_json() + "\n" for e in events)


def load_jsonl(text: str) -> Iterator[ProbeEvent]:
    for line in text.splitlines():
        if line.strip():
            yield ProbeEvent.from_json(line)
