"""On-disk cache of original-program traces.

Layout: ``<root>/<hh>/<sha256>.jsonl`` where the hash covers the printed
program, the test name, the probe configuration and the fuel. The first line
is a header ``{"status": ..., "steps": ...}``; the remaining lines are events
in the JSON-lines dump format.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Optional

from nvgen.minilang import ast as A
from nvgen.minilang.printer import pretty
from nvgen.interpreter.harness import TestOutcome, run_test
from nvgen.interpreter.probes import ProbeConfig, dump_jsonl, load_jsonl

ENV_VAR = "NVGEN_TRACE_CACHE"


def default_cache_dir() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "nvgen" / "traces"


def trace_key(source: str, test: str, probes: ProbeConfig, fuel: int) -> str:
    h = hashlib.sha256()
    for part in (source, test, probes.key(), str(fuel)):
        h.update(part.encode("utf-8"))
        h.update(b"\0")
    return h.hexdigest()


class TraceCache:
    def __init__(self, root: Optional[Path | str] = None):
        self.root = Path(root) if root is not None else default_cache_dir()
        self._memory: dict[str, TestOutcome] = {}

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.jsonl"

    def original(self, program: A.Program, test: str, probes: ProbeConfig, fuel: int, source: Optional[str] = None) -> TestOutcome:
        """Traced outcome of ``test`` on the original program, computed at most once."""
        key = trace_key(source if source is not None else pretty(program), test, probes, fuel)
        hit = self._memory.get(key)
        if hit is not None:
            return hit
        path = self._path(key)
        if path.exists():
            lines = path.read_text(encoding="utf-8").split("\n", 1)
            head = json.loads(lines[0])
            events = list(load_jsonl(lines[1] if len(lines) > 1 else ""))
            outcome = TestOutcome(test, head["status"], head["steps"], events)
        else:
            outcome = run_test(program, test, probes, fuel)
            events = outcome.trace or []
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(f".tmp{os.getpid()}")
            header = json.dumps({"status": outcome.status, "steps": outcome.steps_used})
            tmp.write_text(header + "\n" + dump_jsonl(events), encoding="utf-8")
            os.replace(tmp, path)
            outcome = TestOutcome(test, outcome.status, outcome.steps_used, events)
        self._memory[key] = outcome
        return outcome
