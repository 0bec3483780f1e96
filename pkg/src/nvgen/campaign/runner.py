"""Transformation campaigns: plan attempts, synthesize variants, classify them.

Attempts are planned up front in the parent process, evaluated (optionally in
a process pool), and reduced in attempt order, so the worker count never
changes the report.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from nvgen.minilang import ast as A
from nvgen.minilang.parser import parse
from nvgen.minilang.printer import pretty
from nvgen.minilang.typecheck import type_check
from nvgen.interpreter.evaluator import DEFAULT_FUEL
from nvgen.interpreter.harness import CoverageMap, TestOutcome, coverage_of, run_suite, run_test
from nvgen.interpreter.probes import ProbeConfig
from nvgen.trace.analysis import (
    DivergenceDetector,
    build_call_matrix,
    compare_index_traces,
    diff_call_matrices,
)
from nvgen.trace.cache import TraceCache
from nvgen.transform import ami as AMI
from nvgen.transform import generic as G
from nvgen.transform import loopflip as LF
from nvgen.transform import swap as SW
from nvgen.transform.base import NotApplicable, Variant, make_location

NON_COMPILING = "NonCompiling"
TEST_FAILING = "TestFailing"
NEUTRAL = "Neutral"
NOT_APPLICABLE = "NotApplicable"

GENERIC_KINDS = ("add", "delete", "replace")
TARGETED_KINDS = ("ami", "swapSubtype", "loopFlip")
ALL_KINDS = GENERIC_KINDS + TARGETED_KINDS


class CorpusSanityFailure(RuntimeError):
    pass


@dataclass
class CampaignConfig:
    corpus_paths: list[str]
    transfo_kinds: list[str]
    seed: int
    budget: int = 200  # max attempts per transformation family (generic pooled, ami, swap, flip)
    fuel: int = DEFAULT_FUEL
    ami_cap: int = AMI.DEFAULT_CAP
    ci_level: float = 0.95
    bin_min: int = 4000
    min_trials: int = 25
    workers: int = 1
    cache_dir: Optional[str] = None
    swap_registry: Optional[str] = None  # JSON file extending the swap registry

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        if self.ami_cap < 1:
            raise ValueError("ami cap must be >= 1")
        unknown = set(self.transfo_kinds) - set(ALL_KINDS)
        if unknown:
            raise ValueError(f"unknown transformation kinds {sorted(unknown)}")

    def public(self) -> dict:
        """Settings that determine the report (worker count and cache location do not)."""
        return {
            "corpus": [Path(p).name for p in self.corpus_paths],
            "transfoKinds": list(self.transfo_kinds),
            "seed": self.seed,
            "budget": self.budget,
            "fuel": self.fuel,
            "amiCap": self.ami_cap,
            "ciLevel": self.ci_level,
            "binMin": self.bin_min,
            "minTrials": self.min_trials,
        }


# ============================================================
# SUBJECTS
# ============================================================


@dataclass
class Subject:
    name: str
    source: str
    program: A.Program
    coverage: CoverageMap
    outcomes: list[TestOutcome]
    _prepared: Optional[list] = field(default=None, repr=False)

    @property
    def prepared(self) -> list:
        if self._prepared is None:
            self._prepared = G.prepare_all(self.program)
        return self._prepared


def load_subject(path: str, fuel: int = DEFAULT_FUEL) -> Subject:
    source = Path(path).read_text(encoding="utf-8")
    program = parse(source)
    outcomes = run_suite(program, fuel=fuel).outcomes if type_check(program).ok else []
    return Subject(Path(path).name, pretty(program), program, coverage_of(outcomes), outcomes)


def sanity_problems(path: str, fuel: int = DEFAULT_FUEL) -> list[str]:
    """Reasons a corpus program is unusable (empty when it typechecks and its suite passes)."""
    program = parse(Path(path).read_text(encoding="utf-8"))
    check = type_check(program)
    if not check.ok:
        return [str(e) for e in check.errors]
    suite = run_suite(program, fuel=fuel)
    if suite.degenerate:
        return ["empty test suite"]
    return [f"test {o.test_name}: {o.status} {o.message}".strip() for o in suite.outcomes if not o.passed]


# ============================================================
# PLANNING
# ============================================================


@dataclass(frozen=True)
class Attempt:
    index: int
    subject: int  # index into the corpus list
    kind: str
    rng_key: str
    payload: Any = None


def _rng(seed: int, key: str) -> random.Random:
    return random.Random(f"{seed}:{key}")


def plan_attempts(config: CampaignConfig, subjects: list[Subject]) -> list[Attempt]:
    plan: list[Attempt] = []
    kinds = set(config.transfo_kinds)

    def push(subject: int, kind: str, key: str, payload=None):
        plan.append(Attempt(len(plan), subject, kind, key, payload))

    generic = [k for k in GENERIC_KINDS if k in kinds]
    if generic and subjects:
        for k in range(config.budget):
            s = k % len(subjects)
            kind = generic[(k // len(subjects)) % len(generic)]
            push(s, kind, f"generic:{k}")

    if "ami" in kinds:
        n = 0
        for si, sub in enumerate(subjects):
            for sid in sub.coverage.covered_statements():
                loc = make_location(sub.program, sid, sub.coverage)
                cands = AMI.accessible_methods(sub.program, loc)
                picked = AMI.sample_methods(cands, _rng(config.seed, f"ami-sample:{sub.name}:{sid}"), config.ami_cap)
                for ref in picked:
                    if n < config.budget:
                        push(si, "ami", f"ami:{n}", (sid, ref))
                    n += 1

    if "swapSubtype" in kinds:
        n = 0
        for si, sub in enumerate(subjects):
            registry = _registry(sub.program, config)
            for cand in SW.enumerate_swap_candidates(sub.program):
                for target in registry.alternatives(cand.interface, cand.current):
                    if n < config.budget:
                        push(si, "swapSubtype", f"swap:{n}", (cand, target))
                    n += 1

    if "loopFlip" in kinds:
        n = 0
        for si, sub in enumerate(subjects):
            for sid, _header in LF.enumerate_counted_loops(sub.program):
                if n < config.budget:
                    push(si, "loopFlip", f"flip:{n}", sid)
                n += 1
    return plan


def _registry(program: A.Program, config: CampaignConfig) -> SW.SwapRegistry:
    extra = SW.SwapRegistry.load_extension(config.swap_registry) if config.swap_registry else None
    return SW.SwapRegistry.for_program(program, extra)


# ============================================================
# EVALUATION
# ============================================================


def synthesize(config: CampaignConfig, sub: Subject, attempt: Attempt) -> Variant:
    rng = _rng(config.seed, attempt.rng_key)
    kind = attempt.kind
    if kind in GENERIC_KINDS:
        return G.synthesize(sub.program, sub.coverage, kind, rng, prepared=sub.prepared)
    if kind == "ami":
        sid, ref = attempt.payload
        loc = make_location(sub.program, sid, sub.coverage)
        return AMI.apply_add_method_invocation(sub.program, loc, ref, rng)
    if kind == "swapSubtype":
        cand, target = attempt.payload
        if not sub.coverage.tests_covering(cand.sid):
            raise NotApplicable(f"{cand.sid} is not covered", "NotCovered")
        return SW.apply_swap_subtype(sub.program, cand, target, _registry(sub.program, config))
    if kind == "loopFlip":
        if not sub.coverage.tests_covering(attempt.payload):
            raise NotApplicable(f"{attempt.payload} is not covered", "NotCovered")
        return LF.flip_loop(sub.program, attempt.payload)
    raise ValueError(kind)


def _probe_config(variant: Variant) -> ProbeConfig:
    return ProbeConfig.for_transformation(variant.kind, variant.location if variant.kind == "loopFlip" else None)


def classify_variant(
    sub: Subject,
    variant: Variant,
    fuel: int,
    cache: Optional[TraceCache] = None,
) -> dict:
    """Compile gate, covering tests (traced and compared on the fly), then the rest of the suite."""
    result: dict[str, Any] = {"verdict": None, "failingTests": [], "diverged": None}
    check = type_check(variant.program)
    if not check.ok:
        result["verdict"] = NON_COMPILING
        result["typeErrors"] = sorted({e.kind for e in check.errors})
        return result
    covering = sorted(sub.coverage.tests_covering(variant.location))
    probes = _probe_config(variant)
    cache = cache or TraceCache()
    diverged_tests = []
    extra: dict[str, Any] = {}
    for test in covering:
        original = cache.original(sub.program, test, probes, fuel, sub.source)
        keep = variant.kind in ("loopFlip", "ami")
        detector = DivergenceDetector(original.trace or [])
        events: list = []

        def sink(e, det=detector, events=events, keep=keep):
            det.feed(e)
            if keep:
                events.append(e)

        outcome = run_test(variant.program, test, probes, fuel, sink=sink)
        if detector.finish().diverged:
            diverged_tests.append(test)
        if variant.kind == "loopFlip":
            cmp = compare_index_traces(original.trace or [], events, variant.location, probes.loop_index)
            extra.setdefault("reversedPerEntry", {})[test] = cmp.reversed_per_entry
        if variant.kind == "ami":
            delta = diff_call_matrices(build_call_matrix(original.trace or []), build_call_matrix(events))
            host, callee = variant.details["host"], variant.details["method"]
            extra.setdefault("hostCalleeDelta", {})[test] = delta.get((host, callee), 0)
            extra.setdefault("hostExecutions", {})[test] = sum(
                1 for e in original.trace or [] if e.kind == "call" and e.callee == host
            )
        if not outcome.passed:
            result["verdict"] = TEST_FAILING
            result["failingTests"] = [test]
            result["diverged"] = bool(diverged_tests)
            result.update(extra)
            return result
    result["diverged"] = bool(diverged_tests)
    result["divergedTests"] = diverged_tests
    result.update(extra)
    rest = [t.name for t in sub.program.tests if t.name not in set(covering)]
    for test in rest:
        outcome = run_test(variant.program, test, None, fuel)
        if not outcome.passed:
            result["verdict"] = TEST_FAILING
            result["failingTests"] = [test]
            return result
    result["verdict"] = NEUTRAL
    return result


def evaluate(config: CampaignConfig, sub: Subject, attempt: Attempt, cache: TraceCache) -> dict:
    record: dict[str, Any] = {
        "index": attempt.index,
        "program": sub.name,
        "kind": attempt.kind,
        "rngKey": attempt.rng_key,
    }
    try:
        variant = synthesize(config, sub, attempt)
    except NotApplicable as exc:
        loc = _planned_location(attempt)
        record.update({
            "status": NOT_APPLICABLE, "reason": exc.reason, "message": str(exc),
            "location": loc, "nodeKind": None,
            "tc": sub.coverage.tc(loc) if loc else None,
        })
        return record
    record.update({
        "location": variant.location,
        "nodeKind": variant.node_kind,
        "tc": sub.coverage.tc(variant.location),
        "description": variant.description,
        "transplant": variant.transplant,
        "details": _jsonable(variant.details),
    })
    verdict = classify_variant(sub, variant, config.fuel, cache)
    record["status"] = verdict.pop("verdict")
    record.update(_jsonable(verdict))
    record["_variant"] = variant  # stripped before the report is written
    return record


def _planned_location(attempt: Attempt) -> Optional[str]:
    p = attempt.payload
    if attempt.kind == "ami":
        return p[0]
    if attempt.kind == "swapSubtype":
        return p[0].sid
    if attempt.kind == "loopFlip":
        return p
    return None


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, A.TypeRef):
        return str(value)
    return value


# ---------------------------------------------------------------- worker plumbing

_WORKER: dict[str, Any] = {}


def _worker_init(config: CampaignConfig) -> None:
    _WORKER["config"] = config
    _WORKER["subjects"] = [load_subject(p, config.fuel) for p in config.corpus_paths]
    _WORKER["cache"] = TraceCache(config.cache_dir)


def _worker_eval(attempt: Attempt) -> dict:
    config = _WORKER["config"]
    rec = evaluate(config, _WORKER["subjects"][attempt.subject], attempt, _WORKER["cache"])
    rec.pop("_variant", None)
    return rec


def execute(config: CampaignConfig, subjects: list[Subject], plan: list[Attempt], keep_variants: bool = False) -> list[dict]:
    if config.workers <= 1 or len(plan) < 2:
        cache = TraceCache(config.cache_dir)
        records = []
        for attempt in plan:
            rec = evaluate(config, subjects[attempt.subject], attempt, cache)
            if not keep_variants:
                rec.pop("_variant", None)
            records.append(rec)
        return records
    with ProcessPoolExecutor(max_workers=config.workers, initializer=_worker_init, initargs=(config,)) as pool:
        records = list(pool.map(_worker_eval, plan, chunksize=max(1, len(plan) // (config.workers * 4))))
    if keep_variants:
        # variants are rebuilt in-process; synthesis is deterministic and cheap
        for rec, attempt in zip(records, plan):
            if rec["status"] != NOT_APPLICABLE:
                rec["_variant"] = synthesize(config, subjects[attempt.subject], attempt)
    return sorted(records, key=lambda r: r["index"])


def run_campaign(config: CampaignConfig, variants_dir: Optional[str] = None):
    """Run a campaign and return its report (see ``nvgen.campaign.report``)."""
    from nvgen.campaign.report import build_report, write_variants

    problems = {p: sanity_problems(p, config.fuel) for p in config.corpus_paths}
    bad = {p: v for p, v in problems.items() if v}
    if bad:
        raise CorpusSanityFailure("; ".join(f"{Path(p).name}: {v[0]}" for p, v in bad.items()))
    subjects = [load_subject(p, config.fuel) for p in config.corpus_paths]
    plan = plan_attempts(config, subjects)
    records = execute(config, subjects, plan, keep_variants=variants_dir is not None)
    if variants_dir is not None:
        write_variants(variants_dir, subjects, records)
    for r in records:
        r.pop("_variant", None)
    return build_report(config, subjects, records)
