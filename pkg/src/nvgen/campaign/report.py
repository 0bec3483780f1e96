"""Campaign reports: tallies, rates with intervals, stratified breakdowns, exports."""

from __future__ import annotations

import csv
import difflib
import io
import json
from collections import defaultdict
from pathlib import Path
from statistics import quantiles
from typing import Iterable, Optional

from nvgen.minilang.printer import pretty
from nvgen.campaign.stats import binomial_ci, compute_nvr, wilcoxon_rank_sum

SCHEMA_VERSION = 1

NEUTRAL = "Neutral"
TEST_FAILING = "TestFailing"
NON_COMPILING = "NonCompiling"
NOT_APPLICABLE = "NotApplicable"
GENERIC_KINDS = ("add", "delete", "replace")

CSV_FIELDS = [
    "index", "program", "kind", "location", "nodeKind", "tc", "status", "reason",
    "diverged", "transplant", "description",
]


class SchemaVersionMismatch(ValueError):
    pass


def compiled(records: Iterable[dict]) -> list[dict]:
    return [r for r in records if r["status"] in (NEUTRAL, TEST_FAILING)]


def tally(records: list[dict], level: float = 0.95, ci_method: str = "wald") -> dict:
    attempted = len(records)
    applicable = sum(1 for r in records if r["status"] != NOT_APPLICABLE)
    comp = compiled(records)
    neutral = sum(1 for r in comp if r["status"] == NEUTRAL)
    out = {
        "attempted": attempted,
        "applicable": applicable,
        "compiled": len(comp),
        "neutral": neutral,
        "nvr": None,
        "ciLow": None,
        "ciHigh": None,
        "halfWidth": None,
        "divergedNeutral": sum(1 for r in comp if r["status"] == NEUTRAL and r.get("diverged")),
    }
    if comp:
        ci = binomial_ci(neutral, len(comp), level, ci_method)
        out.update({"nvr": compute_nvr(neutral, len(comp)), "ciLow": ci.low, "ciHigh": ci.high, "halfWidth": ci.half_width})
    return out


def outcome_sample(records: list[dict]) -> list[int]:
    """Per-variant 1 (neutral) / 0 (test failing) outcomes among compiled variants."""
    return [1 if r["status"] == NEUTRAL else 0 for r in compiled(records)]


def nvr_by_node_type(records: list[dict], min_trials: int = 25, level: float = 0.95) -> dict:
    """Rate per (transformation, statement kind) for strata with at least ``min_trials`` compiled variants."""
    strata: dict[tuple[str, str], list[dict]] = defaultdict(list)
    for r in compiled(records):
        strata[(r["kind"], r["nodeKind"])].append(r)
    rows, omitted = [], []
    for (kind, node), recs in sorted(strata.items()):
        t = tally(recs, level)
        if t["compiled"] < min_trials:
            omitted.append({"kind": kind, "nodeKind": node, "compiled": t["compiled"],
                            "reason": f"fewer than {min_trials} compiled variants"})
            continue
        rows.append({"kind": kind, "nodeKind": node, **t})
    return {"rows": rows, "omitted": omitted}


def nvr_by_coverage_bin(records: list[dict], bin_min: int, level: float = 0.95) -> list[dict]:
    """Greedy bins over ascending test-case coverage, each holding >= ``bin_min`` compiled variants.

    A final bin short of the threshold is merged into the previous one.
    """
    comp = compiled(records)
    by_tc: dict[int, list[dict]] = defaultdict(list)
    for r in comp:
        by_tc[r["tc"]].append(r)
    bins: list[list[int]] = []
    current: list[int] = []
    count = 0
    for tc in sorted(by_tc):
        current.append(tc)
        count += len(by_tc[tc])
        if count >= bin_min:
            bins.append(current)
            current, count = [], 0
    if current:
        if bins:
            bins[-1].extend(current)
        else:
            bins.append(current)
    out = []
    for tcs in bins:
        recs = [r for tc in tcs for r in by_tc[tc]]
        per_loc: dict[tuple, list[int]] = defaultdict(list)
        for r in recs:
            per_loc[(r["program"], r["location"])].append(1 if r["status"] == NEUTRAL else 0)
        loc_rates = [sum(v) / len(v) for _k, v in sorted(per_loc.items())]
        if len(loc_rates) >= 2:
            q1, q2, q3 = quantiles(loc_rates, n=4, method="inclusive")
        else:
            q1 = q2 = q3 = loc_rates[0]
        t = tally(recs, level)
        out.append({
            "tcLow": min(tcs), "tcHigh": max(tcs), "locations": len(loc_rates),
            "compiled": t["compiled"], "neutral": t["neutral"], "nvr": t["nvr"],
            "halfWidth": t["halfWidth"], "q1": q1, "median": q2, "q3": q3,
        })
    return out


def comparisons(records: list[dict]) -> list[dict]:
    """Rank-sum tests of targeted transformations against the generic ones."""
    by_kind = defaultdict(list)
    for r in records:
        by_kind[r["kind"]].append(r)
    generic = [r for k in GENERIC_KINDS for r in by_kind.get(k, [])]
    pairs = [
        ("loopFlip", "generic", by_kind.get("loopFlip", []), generic),
        ("ami", "add", by_kind.get("ami", []), by_kind.get("add", [])),
        ("swapSubtype", "generic", by_kind.get("swapSubtype", []), generic),
    ]
    out = []
    for a_name, b_name, a, b in pairs:
        sa, sb = outcome_sample(a), outcome_sample(b)
        if not sa or not sb:
            continue
        res = wilcoxon_rank_sum(sa, sb)
        out.append({
            "a": a_name, "b": b_name, "nvrA": sum(sa) / len(sa), "nvrB": sum(sb) / len(sb),
            "nA": len(sa), "nB": len(sb), "rankSum": res.statistic, "pValue": res.p_value, "method": res.method,
        })
    return out


def build_report(config, subjects, records: list[dict]) -> dict:
    level = config.ci_level
    by_kind: dict[str, list[dict]] = defaultdict(list)
    for r in records:
        by_kind[r["kind"]].append(r)
    total_covered = sum(len(s.coverage.per_statement) for s in subjects)
    tallies = {}
    for kind, recs in sorted(by_kind.items()):
        t = tally(recs, level)
        locs = {(r["program"], r["location"]) for r in recs if r.get("location")}
        t["explorationRate"] = len(locs) / total_covered if total_covered else 0.0
        tallies[kind] = t
    generic = [r for k in GENERIC_KINDS for r in by_kind.get(k, [])]
    if generic:
        t = tally(generic, level)
        locs = {(r["program"], r["location"]) for r in generic if r.get("location")}
        t["explorationRate"] = len(locs) / total_covered if total_covered else 0.0
        tallies["generic"] = t
    return {
        "schemaVersion": SCHEMA_VERSION,
        "config": config.public(),
        "corpus": [
            {"program": s.name, "tests": len(s.program.tests), "coveredStatements": len(s.coverage.per_statement)}
            for s in subjects
        ],
        "tallies": tallies,
        "byNodeType": nvr_by_node_type(records, config.min_trials, level),
        "byCoverageBin": nvr_by_coverage_bin(records, config.bin_min, level),
        "comparisons": comparisons(records),
        "records": records,
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def load_report(path: str | Path) -> dict:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("schemaVersion") != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"report schema {data.get('schemaVersion')!r}, expected {SCHEMA_VERSION}")
    return data


def records_csv(records: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in CSV_FIELDS})
    return buf.getvalue()


def rows_csv(rows: list[dict], fields: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in fields})
    return buf.getvalue()


def write_variants(out_dir: str | Path, subjects, records: list[dict]) -> None:
    """One ``.mini`` file, unified diff and provenance JSON per emitted variant."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    by_name = {s.name: s for s in subjects}
    for r in records:
        variant = r.get("_variant")
        if variant is None:
            continue
        stem = f"{r['index']:05d}-{r['kind']}"
        text = pretty(variant.program)
        original = by_name[r["program"]].source
        diff = difflib.unified_diff(
            original.splitlines(keepends=True), text.splitlines(keepends=True),
            fromfile=r["program"], tofile=f"{stem}.mini",
        )
        (root / f"{stem}.mini").write_text(text, encoding="utf-8")
        (root / f"{stem}.diff").write_text("".join(diff), encoding="utf-8")
        provenance = {k: v for k, v in r.items() if not k.startswith("_")}
        (root / f"{stem}.json").write_text(json.dumps(provenance, sort_keys=True, indent=2) + "\n", encoding="utf-8")
