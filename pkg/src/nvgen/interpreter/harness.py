"""Test harness: run tests, collect outcomes, traces and statement coverage."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from nvgen.minilang import ast as A
from nvgen.interpreter.evaluator import (
    DEFAULT_FUEL,
    AssertionFailure,
    FuelExhausted,
    Interpreter,
    StackOverflow,
)
from nvgen.interpreter.probes import ProbeConfig, ProbeEvent
from nvgen.interpreter.values import SubjectException

PASS = "Pass"
FAIL = "Fail"
ERROR = "Error"
FUEL_EXHAUSTED = "FuelExhausted"


class UnknownTest(KeyError):
    pass


@dataclass
class TestOutcome:
    __test__ = False  # keep pytest from collecting this class

    test_name: str
    status: str
    steps_used: int
    trace: Optional[list[ProbeEvent]] = None
    message: str = ""
    covered: frozenset = frozenset()

    @property
    def passed(self) -> bool:
        return self.status == PASS


@dataclass
class SuiteResult:
    outcomes: list[TestOutcome]

    @property
    def passed(self) -> bool:
        return all(o.passed for o in self.outcomes)

    @property
    def degenerate(self) -> bool:
        """An empty suite passes vacuously; callers should treat that with suspicion."""
        return not self.outcomes

    def failing(self) -> list[str]:
        return [o.test_name for o in self.outcomes if not o.passed]


@dataclass
class CoverageMap:
    per_statement: dict[str, frozenset] = field(default_factory=dict)

    def tests_covering(self, sid: str) -> frozenset:
        return self.per_statement.get(sid, frozenset())

    def tc(self, sid: str) -> int:
        return len(self.tests_covering(sid))

    def covered_statements(self) -> list[str]:
        return sorted(self.per_statement, key=_sid_sort_key)


def _sid_sort_key(sid: str):
    return tuple(int(p) for p in sid.split("/"))


def run_test(
    program: A.Program,
    test_name: str,
    probes: Optional[ProbeConfig] = None,
    fuel: int = DEFAULT_FUEL,
    sink: Optional[Callable[[ProbeEvent], None]] = None,
) -> TestOutcome:
    """Run one test. A trace is recorded iff probes are enabled and no sink is given."""
    test = program.test(test_name)
    if test is None:
        raise UnknownTest(test_name)
    probes = probes or ProbeConfig()
    events: Optional[list[ProbeEvent]] = None
    if sink is None and probes.enabled:
        events = []
        sink = events.append
    interp = Interpreter(program, fuel=fuel, probes=probes, sink=sink)
    status, message = PASS, ""
    try:
        interp.run_test_body(test)
    except AssertionFailure as exc:
        status, message = FAIL, str(exc)
    except SubjectException as exc:
        status, message = ERROR, f"uncaught exception: {exc.message}"
    except FuelExhausted:
        status, message = FUEL_EXHAUSTED, f"fuel of {fuel} steps exhausted"
    except (StackOverflow, RecursionError) as exc:
        status, message = ERROR, f"stack overflow in {exc}"
    covered = frozenset(s for s in interp.covered if not s.startswith("test:"))
    return TestOutcome(test_name, status, interp.steps, events, message, covered)


def run_suite(
    program: A.Program,
    probes: Optional[ProbeConfig] = None,
    fuel: int = DEFAULT_FUEL,
    tests: Optional[list[str]] = None,
    stop_on_failure: bool = False,
) -> SuiteResult:
    names = [t.name for t in program.tests] if tests is None else tests
    outcomes = []
    for name in names:
        outcome = run_test(program, name, probes, fuel)
        outcomes.append(outcome)
        if stop_on_failure and not outcome.passed:
            break
    return SuiteResult(outcomes)


def coverage_of(outcomes: list[TestOutcome]) -> CoverageMap:
    per: dict[str, set] = {}
    for o in outcomes:
        for sid in o.covered:
            per.setdefault(sid, set()).add(o.test_name)
    return CoverageMap({sid: frozenset(v) for sid, v in per.items()})


def compute_coverage(program: A.Program, fuel: int = DEFAULT_FUEL) -> CoverageMap:
    return coverage_of(run_suite(program, fuel=fuel).outcomes)
