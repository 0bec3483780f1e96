"""Command-line entry point: ``nvgen campaign | trace-diff | stats | corpus check``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from nvgen.minilang import ast as A
from nvgen.minilang.parser import MiniSyntaxError, parse
from nvgen.interpreter.harness import UnknownTest, run_test
from nvgen.interpreter.probes import ProbeConfig
from nvgen.trace.analysis import detect_divergence
from nvgen.campaign import report as R
from nvgen.campaign.runner import (
    ALL_KINDS,
    CampaignConfig,
    CorpusSanityFailure,
    load_subject,
    run_campaign,
    sanity_problems,
)

EXIT_OK = 0
EXIT_SANITY = 2
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_NO_INPUT = 66

CORPUS_DIR = Path(__file__).parent / "corpus"

TRANSFO_CHOICES = {
    "generic": ["add", "delete", "replace"],
    "add": ["add"],
    "delete": ["delete"],
    "replace": ["replace"],
    "ami": ["ami"],
    "swap": ["swapSubtype"],
    "loopflip": ["loopFlip"],
    "all": list(ALL_KINDS),
}

TALLY_FIELDS = [
    "kind", "attempted", "applicable", "compiled", "neutral", "nvr", "ciLow", "ciHigh", "halfWidth",
    "divergedNeutral", "explorationRate",
]
NODE_FIELDS = ["kind", "nodeKind", "compiled", "neutral", "nvr", "ciLow", "ciHigh", "halfWidth"]
BIN_FIELDS = ["tcLow", "tcHigh", "locations", "compiled", "neutral", "nvr", "halfWidth", "q1", "median", "q3"]
COMPARISON_FIELDS = ["a", "b", "nA", "nB", "nvrA", "nvrB", "rankSum", "pValue", "method"]


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def corpus_files(paths: list[str]) -> list[str]:
    """Expand directories into their ``.mini`` files (sorted); keep files as given."""
    out: list[str] = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            out.extend(str(f) for f in sorted(path.glob("*.mini")))
        elif path.is_file():
            out.append(str(path))
        else:
            raise FileNotFoundError(p)
    if not out:
        raise FileNotFoundError(f"no .mini files in {paths}")
    return out


def all_statements(program: A.Program):
    for _c, _m, _cls, method in A.method_bodies(program):
        yield from A.iter_body(method.body)
    for test in program.tests:
        yield from A.iter_body(test.body)


def parse_probes(text: Optional[str], program: A.Program) -> ProbeConfig:
    """``calls,branches,builtin,loops`` or ``loop=<stmtId>``; ``loops`` watches every counted loop."""
    if not text:
        text = "calls,branches,loops"
    calls = branches = builtin = False
    loops: set[str] = set()
    for part in (p.strip() for p in text.split(",") if p.strip()):
        if part == "calls":
            calls = True
        elif part == "branches":
            branches = True
        elif part == "builtin":
            calls = builtin = True
        elif part == "loops":
            loops.update(s.sid for s in all_statements(program) if s.kind == "ForCounted")
        elif part.startswith("loop="):
            loops.add(part[5:])
        else:
            raise UsageError(f"unknown probe {part!r}")
    return ProbeConfig(calls=calls, branches=branches, builtin_calls=builtin, loop_index=frozenset(loops))


# ============================================================
# SUBCOMMANDS
# ============================================================


def cmd_campaign(args) -> int:
    kinds: list[str] = []
    for t in args.transfo:
        kinds.extend(k for k in TRANSFO_CHOICES[t] if k not in kinds)
    try:
        files = corpus_files(args.corpus or [str(CORPUS_DIR)])
    except FileNotFoundError as exc:
        print(f"nvgen: corpus not found: {exc}", file=sys.stderr)
        return EXIT_NO_INPUT
    config = CampaignConfig(
        corpus_paths=files,
        transfo_kinds=[k for k in ALL_KINDS if k in kinds],
        seed=args.seed,
        budget=args.budget,
        fuel=args.fuel,
        ami_cap=args.ami_cap,
        workers=args.workers,
        swap_registry=args.swap_registry,
    )
    out = Path(args.out)
    variants_dir = None if args.no_variants else (args.variants_dir or str(out.with_suffix("")) + "-variants")
    try:
        report = run_campaign(config, variants_dir=variants_dir)
    except CorpusSanityFailure as exc:
        print(f"nvgen: corpus sanity failure: {exc}", file=sys.stderr)
        return EXIT_SANITY
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(R.dumps_report(report), encoding="utf-8")
    for kind, t in report["tallies"].items():
        nvr = "n/a" if t["nvr"] is None else f"{100 * t['nvr']:.2f}% ± {100 * t['halfWidth']:.2f}"
        print(f"{kind:12s} attempted={t['attempted']:5d} compiled={t['compiled']:5d} neutral={t['neutral']:5d} nvr={nvr}")
    return EXIT_OK


def cmd_trace_diff(args) -> int:
    paths = [Path(args.program), Path(args.variant)]
    missing = [str(p) for p in paths if not p.is_file()]
    if missing:
        print(f"nvgen: no such file: {', '.join(missing)}", file=sys.stderr)
        return EXIT_NO_INPUT
    try:
        original = parse(paths[0].read_text(encoding="utf-8"))
        variant = parse(paths[1].read_text(encoding="utf-8"))
    except MiniSyntaxError as exc:
        print(f"nvgen: {exc}", file=sys.stderr)
        return EXIT_DATA
    probes = parse_probes(args.probes, original)
    try:
        a = run_test(original, args.test, probes, args.fuel)
        b = run_test(variant, args.test, probes, args.fuel)
    except UnknownTest as exc:
        print(f"nvgen: unknown test {exc}", file=sys.stderr)
        return EXIT_USAGE
    result = detect_divergence(a.trace or [], b.trace or [])
    payload = {
        **result.to_dict(),
        "test": args.test,
        "probes": probes.key(),
        "originalStatus": a.status,
        "variantStatus": b.status,
        "originalEvents": len(a.trace or []),
        "variantEvents": len(b.trace or []),
    }
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def stats_tables(report: dict, level: float, min_trials: int, bin_min: int, ci_method: str) -> dict[str, str]:
    """CSV tables recomputed from the report's records."""
    records = report["records"]
    by_kind: dict[str, list] = {}
    for r in records:
        by_kind.setdefault(r["kind"], []).append(r)
    groups = sorted(by_kind.items())
    generic = [r for k in R.GENERIC_KINDS for r in by_kind.get(k, [])]
    if generic:
        groups.append(("generic", generic))
    covered = sum(c["coveredStatements"] for c in report.get("corpus", []))
    tallies = []
    for kind, recs in groups:
        t = R.tally(recs, level, ci_method)
        locs = {(r["program"], r["location"]) for r in recs if r.get("location")}
        t["explorationRate"] = len(locs) / covered if covered else 0.0
        tallies.append({"kind": kind, **t})
    nodes = R.nvr_by_node_type(records, min_trials, level)
    return {
        "nvr.csv": R.rows_csv(tallies, TALLY_FIELDS),
        "nvr_by_node_type.csv": R.rows_csv(nodes["rows"], NODE_FIELDS),
        "nvr_by_coverage_bin.csv": R.rows_csv(R.nvr_by_coverage_bin(records, bin_min, level), BIN_FIELDS),
        "wilcoxon.csv": R.rows_csv(R.comparisons(records), COMPARISON_FIELDS),
        "records.csv": R.records_csv(records),
    }


def cmd_stats(args) -> int:
    path = Path(args.report)
    if not path.is_file():
        print(f"nvgen: no such file: {path}", file=sys.stderr)
        return EXIT_NO_INPUT
    try:
        report = R.load_report(path)
    except R.SchemaVersionMismatch as exc:
        print(f"nvgen: {exc}", file=sys.stderr)
        return EXIT_DATA
    cfg = report.get("config", {})
    level = args.ci if args.ci is not None else cfg.get("ciLevel", 0.95)
    min_trials = args.min_trials if args.min_trials is not None else cfg.get("minTrials", 25)
    bin_min = args.bin_min if args.bin_min is not None else cfg.get("binMin", 4000)
    tables = stats_tables(report, level, min_trials, bin_min, "wilson" if args.wilson else "wald")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in tables.items():
        (out / name).write_text(text, encoding="utf-8")
        print(out / name)
    return EXIT_OK


def cmd_corpus_check(args) -> int:
    try:
        files = corpus_files(args.corpus or [str(CORPUS_DIR)])
    except FileNotFoundError as exc:
        print(f"nvgen: corpus not found: {exc}", file=sys.stderr)
        return EXIT_NO_INPUT
    manifest = load_manifest(Path(files[0]).parent)
    failures = 0
    for f in files:
        problems = sanity_problems(f, args.fuel)
        name = Path(f).name
        if not problems and name in manifest:
            problems = manifest_mismatches(f, manifest[name], args.fuel)
        status = "ok" if not problems else "FAIL"
        print(f"{status:4s} {name}" + ("" if not problems else f": {problems[0]}"))
        failures += bool(problems)
    return EXIT_OK if not failures else EXIT_SANITY


# ============================================================
# MANIFEST
# ============================================================


def load_manifest(directory: Path) -> dict[str, dict]:
    path = directory / "manifest.json"
    if not path.is_file():
        return {}
    data = json.loads(path.read_text(encoding="utf-8"))
    return {p["path"]: p for p in data["programs"]}


def program_stats(path: str, fuel: int) -> dict:
    sub = load_subject(path, fuel)
    statements = sum(1 for _c, _m, _cls, m in A.method_bodies(sub.program) for _ in A.iter_body(m.body))
    return {
        "path": Path(path).name,
        "classCount": len(sub.program.classes),
        "statementCount": statements,
        "testCount": len(sub.program.tests),
        "coveredStatements": len(sub.coverage.per_statement),
    }


def manifest_mismatches(path: str, entry: dict, fuel: int) -> list[str]:
    actual = program_stats(path, fuel)
    return [f"{k}: manifest {entry.get(k)} != actual {v}" for k, v in actual.items() if entry.get(k) != v]


# ============================================================
# ARGUMENTS
# ============================================================


def build_parser() -> Parser:
    p = Parser(prog="nvgen", description="Synthesize and classify neutral program variants of MiniLang programs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    c = sub.add_parser("campaign", help="run a transformation campaign and write report.json")
    c.add_argument("--corpus", nargs="+", help="corpus directories or .mini files (default: bundled corpus)")
    c.add_argument("--transfo", nargs="+", choices=sorted(TRANSFO_CHOICES), default=["all"],
                   help="transformation families (default: all)")
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--budget", type=int, default=200, help="max attempts per family (default: 200)")
    c.add_argument("--fuel", type=int, default=1_000_000, help="interpreter steps per test (default: 1000000)")
    c.add_argument("--ami-cap", type=int, default=10, help="methods sampled per AMI location (default: 10)")
    c.add_argument("--workers", type=int, default=1, help="worker processes (default: 1)")
    c.add_argument("--out", default="report.json", help="report path (default: report.json)")
    c.add_argument("--variants-dir", help="where variants are written (default: <out>-variants)")
    c.add_argument("--no-variants", action="store_true", help="do not write variant files")
    c.add_argument("--swap-registry", help="JSON file mapping extra interfaces to implementations")
    c.set_defaults(func=cmd_campaign)

    t = sub.add_parser("trace-diff", help="compare one test's traces on a program and a variant")
    t.add_argument("--program", required=True)
    t.add_argument("--variant", required=True)
    t.add_argument("--test", required=True)
    t.add_argument("--probes", help="comma list of calls, branches, builtin, loops, loop=<stmtId> "
                                    "(default: calls,branches,loops)")
    t.add_argument("--fuel", type=int, default=1_000_000)
    t.add_argument("--out", help="output JSON path (default: stdout)")
    t.set_defaults(func=cmd_trace_diff)

    s = sub.add_parser("stats", help="write CSV tables from a campaign report")
    s.add_argument("--report", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--ci", type=float, help="confidence level (default: from report)")
    s.add_argument("--min-trials", type=int, help="minimum compiled variants per node-type row")
    s.add_argument("--bin-min", type=int, help="minimum compiled variants per coverage bin")
    s.add_argument("--wilson", action="store_true", help="Wilson score intervals instead of Wald")
    s.set_defaults(func=cmd_stats)

    k = sub.add_parser("corpus", help="corpus utilities")
    ksub = k.add_subparsers(dest="corpus_command", required=True, parser_class=Parser)
    kc = ksub.add_parser("check", help="typecheck every program and run its suite")
    kc.add_argument("--corpus", nargs="+", help="corpus directories or .mini files (default: bundled corpus)")
    kc.add_argument("--fuel", type=int, default=1_000_000)
    kc.set_defaults(func=cmd_corpus_check)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"nvgen: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"nvgen: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
