"""Shared vocabulary of all transformations: locations, variants, errors."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Optional

from nvgen.minilang import ast as A
from nvgen.minilang.analysis import Scope, locate, scope_at
from nvgen.interpreter.harness import CoverageMap

TRANSFO_KINDS = ("add", "delete", "replace", "ami", "swapSubtype", "loopFlip")


class NotApplicable(Exception):
    """The transformation cannot be applied here; the attempt emits no variant."""

    reason = "NotApplicable"

    def __init__(self, message: str = "", reason: Optional[str] = None):
        super().__init__(message or self.reason)
        if reason is not None:
            self.reason = reason


class NoCoveredStatements(NotApplicable):
    reason = "NoCoveredStatements"


class WouldBreakScope(NotApplicable):
    reason = "WouldBreakScope"


class PreconditionViolated(NotApplicable):
    reason = "PreconditionViolated"


class NoBinding(NotApplicable):
    reason = "NoBinding"


class NoReceiver(NotApplicable):
    reason = "NoReceiver"


class NoArgBinding(NotApplicable):
    reason = "NoArgBinding"


class NotInRegistry(NotApplicable):
    reason = "NotInRegistry"


class NotCounted(NotApplicable):
    reason = "NotCounted"


@dataclass
class Location:
    sid: str
    kind: str
    scope: Scope
    covering_tests: frozenset
    host_method: str
    host_class: str
    static: bool

    def __post_init__(self):
        if not self.covering_tests:
            raise NoCoveredStatements(f"statement {self.sid} is not covered by any test")


def make_location(program: A.Program, sid: str, coverage: CoverageMap) -> Location:
    path = locate(program, sid)
    return Location(
        sid=sid,
        kind=path.stmt.kind,
        scope=scope_at(program, sid),
        covering_tests=coverage.tests_covering(sid),
        host_method=path.method.name,
        host_class=path.cls.name,
        static=path.method.static,
    )


@dataclass
class Variant:
    program: A.Program
    kind: str
    location: str  # statement id in the original program
    node_kind: str  # statement kind used for per-node-type statistics
    description: str
    transplant: Optional[str] = None  # source statement id (add/replace)
    details: dict[str, Any] = field(default_factory=dict)
    verdict: Optional[str] = None


def clone(program: A.Program) -> A.Program:
    return copy.deepcopy(program)


def finish(program: A.Program) -> A.Program:
    """Variants keep the ids of carried-over statements so traces stay comparable."""
    return program


def mark_inserted(stmt: A.Stmt, anchor: str) -> A.Stmt:
    """Give an inserted subtree ids ``<anchor>+<k>`` that cannot clash with original ids."""
    for k, s in enumerate(A.iter_body([stmt])):
        s.sid = f"{anchor}+{k}"
    return stmt
