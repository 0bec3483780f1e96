from __future__ import annotations

import csv
import json
import shutil
from pathlib import Path

import pytest

from conftest import CORPUS_FILES
from nvgen.cli import CORPUS_DIR, EXIT_DATA, EXIT_NO_INPUT, EXIT_OK, EXIT_SANITY, EXIT_USAGE, main
from nvgen.minilang import parse, pretty
from nvgen.transform import loopflip as LF

BIT_CODEC = str(Path(CORPUS_DIR) / "bit_codec.mini")


def test_flip_campaign_is_exhaustive(tmp_path):
    out = tmp_path / "r.json"
    assert main(["campaign", "--transfo", "loopflip", "--seed", "7", "--out", str(out), "--no-variants"]) == EXIT_OK
    report = json.loads(out.read_text())
    loops = sum(len(LF.enumerate_counted_loops(parse(Path(p).read_text()))) for p in CORPUS_FILES)
    assert len(report["records"]) == loops
    assert {r["kind"] for r in report["records"]} == {"loopFlip"}


def test_generic_budget(tmp_path, capsys):
    out = tmp_path / "g.json"
    code = main(["campaign", "--corpus", str(CORPUS_DIR), "--transfo", "generic", "--budget", "30",
                 "--seed", "5", "--out", str(out)])
    assert code == EXIT_OK
    report = json.loads(out.read_text())
    assert len(report["records"]) <= 30
    assert "generic" in capsys.readouterr().out
    variants = tmp_path / "g-variants"
    assert any(p.suffix == ".mini" for p in variants.iterdir())


def test_same_flags_same_bytes(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / f"{name}.json"
        assert main(["campaign", "--transfo", "ami", "swap", "--budget", "25", "--seed", "9",
                     "--out", str(out), "--no-variants"]) == EXIT_OK
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_missing_seed_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["campaign"])
    assert info.value.code == EXIT_USAGE


def test_bad_budget_is_usage_error(tmp_path):
    assert main(["campaign", "--seed", "1", "--budget", "-2", "--out", str(tmp_path / "x.json")]) == EXIT_USAGE


def test_missing_corpus(tmp_path):
    assert main(["campaign", "--seed", "1", "--corpus", str(tmp_path / "nope"), "--out", str(tmp_path / "x.json")]) == EXIT_NO_INPUT


def test_insane_corpus_refused(tmp_path):
    bad = tmp_path / "bad.mini"
    bad.write_text("test t { assertTrue(false); }")
    assert main(["campaign", "--seed", "1", "--corpus", str(bad), "--out", str(tmp_path / "x.json")]) == EXIT_SANITY
    assert main(["corpus", "check", "--corpus", str(bad)]) == EXIT_SANITY


def test_corpus_check(capsys):
    assert main(["corpus", "check"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == len(CORPUS_FILES) and all(line.startswith("ok") for line in lines)


def test_corpus_check_detects_manifest_drift(tmp_path):
    for p in CORPUS_FILES + [str(Path(CORPUS_DIR) / "manifest.json")]:
        shutil.copy(p, tmp_path)
    target = tmp_path / "bank.mini"
    target.write_text(target.read_text() + "\ntest extra { assertTrue(true); }\n")
    assert main(["corpus", "check", "--corpus", str(tmp_path)]) == EXIT_SANITY


def test_trace_diff_identical(tmp_path, capsys):
    assert main(["trace-diff", "--program", BIT_CODEC, "--variant", BIT_CODEC, "--test", "encodeByte"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["diverged"] is False and payload["firstDivergenceIndex"] is None


def test_trace_diff_flip(tmp_path):
    prog = parse(Path(BIT_CODEC).read_text())
    variant = tmp_path / "v.mini"
    variant.write_text(pretty(LF.flip_loop(prog, "0/0/6").program))
    out = tmp_path / "d.json"
    code = main(["trace-diff", "--program", BIT_CODEC, "--variant", str(variant), "--test", "encodeByte",
                 "--probes", "loop=0/0/6", "--out", str(out)])
    assert code == EXIT_OK
    payload = json.loads(out.read_text())
    assert payload["diverged"] and payload["probes"] == "c0b0x0l[0/0/6]"
    assert payload["originalStatus"] == payload["variantStatus"] == "Pass"


def test_trace_diff_errors(tmp_path):
    assert main(["trace-diff", "--program", "nope.mini", "--variant", BIT_CODEC, "--test", "x"]) == EXIT_NO_INPUT
    assert main(["trace-diff", "--program", BIT_CODEC, "--variant", BIT_CODEC, "--test", "nope"]) == EXIT_USAGE
    assert main(["trace-diff", "--program", BIT_CODEC, "--variant", BIT_CODEC, "--test", "encodeByte",
                 "--probes", "bogus"]) == EXIT_USAGE
    broken = tmp_path / "broken.mini"
    broken.write_text("class {")
    assert main(["trace-diff", "--program", BIT_CODEC, "--variant", str(broken), "--test", "encodeByte"]) == EXIT_DATA


@pytest.fixture(scope="module")
def small_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("stats") / "r.json"
    assert main(["campaign", "--budget", "40", "--seed", "3", "--out", str(out), "--no-variants"]) == EXIT_OK
    return out


def test_stats_tables(small_report, tmp_path):
    out_dir = tmp_path / "tables"
    assert main(["stats", "--report", str(small_report), "--out-dir", str(out_dir), "--bin-min", "10",
                 "--min-trials", "5"]) == EXIT_OK
    names = sorted(p.name for p in out_dir.iterdir())
    assert names == ["nvr.csv", "nvr_by_coverage_bin.csv", "nvr_by_node_type.csv", "records.csv", "wilcoxon.csv"]
    report = json.loads(small_report.read_text())
    with open(out_dir / "nvr.csv", newline="") as fh:
        rows = {r["kind"]: r for r in csv.DictReader(fh)}
    for kind, t in report["tallies"].items():
        assert int(rows[kind]["neutral"]) == t["neutral"]
        assert int(rows[kind]["compiled"]) == t["compiled"]
    with open(out_dir / "records.csv", newline="") as fh:
        assert len(list(csv.DictReader(fh))) == len(report["records"])


def test_stats_wilson_differs(small_report, tmp_path):
    assert main(["stats", "--report", str(small_report), "--out-dir", str(tmp_path / "a")]) == EXIT_OK
    assert main(["stats", "--report", str(small_report), "--out-dir", str(tmp_path / "b"), "--wilson"]) == EXIT_OK
    assert (tmp_path / "a" / "nvr.csv").read_text() != (tmp_path / "b" / "nvr.csv").read_text()


def test_stats_errors(small_report, tmp_path):
    assert main(["stats", "--report", str(tmp_path / "none.json"), "--out-dir", str(tmp_path)]) == EXIT_NO_INPUT
    data = json.loads(small_report.read_text())
    data["schemaVersion"] = 0
    old = tmp_path / "old.json"
    old.write_text(json.dumps(data))
    assert main(["stats", "--report", str(old), "--out-dir", str(tmp_path)]) == EXIT_DATA
