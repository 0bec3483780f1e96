from nvgen.interpreter.evaluator import DEFAULT_FUEL, Interpreter
from nvgen.interpreter.harness import (
    ERROR,
    FAIL,
    FUEL_EXHAUSTED,
    PASS,
    CoverageMap,
    SuiteResult,
    TestOutcome,
    UnknownTest,
    compute_coverage,
    coverage_of,
    run_suite,
    run_test,
)
from nvgen.interpreter.probes import ProbeConfig, ProbeEvent, dump_jsonl, load_jsonl

__all__ = [
    "DEFAULT_FUEL", "Interpreter", "ERROR", "FAIL", "FUEL_EXHAUSTED", "PASS",
    "CoverageMap", "SuiteResult", "TestOutcome", "UnknownTest", "compute_coverage",
    "coverage_of", "run_suite", "run_test", "ProbeConfig", "ProbeEvent", "dump_jsonl",
    "load_jsonl",
]
