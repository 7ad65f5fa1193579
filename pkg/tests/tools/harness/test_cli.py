from __future__ import annotations

import json
from pathlib import Path

from click.testing import CliRunner

from failsafe_channels.main import main

SCENARIOS = Path(__file__).resolve().parents[3] / "scenarios"


def test_run_writes_trace_and_metrics(tmp_path, isolated_config):
    """A passing scenario exits 0 and leaves both files behind"""
    trace = tmp_path / "out.jsonl"
    metrics = tmp_path / "metrics.json"

    result = CliRunner().invoke(
        main,
        ["harness", "run", str(SCENARIOS / "honest_close.json"), "--trace", str(trace), "--metrics", str(metrics)],
    )

    assert result.exit_code == 0, result.output
    lines = trace.read_text().splitlines()
    assert json.loads(lines[0])["height"] == 1
    report = json.loads(metrics.read_text())
    assert report["ok"] is True
    assert report["scenario"] == "honest_close"


def test_top_level_run_alias(isolated_config):
    """`run` is the same command as `harness run`"""
    result = CliRunner().invoke(main, ["-q", "run", str(SCENARIOS / "short_lived_fresh.json")])

    assert result.exit_code == 0, result.output


def test_seed_override_changes_trace(tmp_path, isolated_config):
    """--seed replaces the scenario seed"""
    runner = CliRunner()
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    path = str(SCENARIOS / "honest_close.json")

    runner.invoke(main, ["run", path, "--trace", str(first)])
    runner.invoke(main, ["run", path, "--seed", "42", "--trace", str(second)])

    assert first.read_text() != second.read_text()


def test_invalid_scenario_exits_non_zero(tmp_path, isolated_config):
    """Validation errors are reported, not raised"""
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"t": 16, "T": 64, "period": 32, "close": {"by": "A"}}))

    result = CliRunner().invoke(main, ["run", str(bad)])

    assert result.exit_code == 1


def test_verify_formats_command():
    """All golden vectors match"""
    result = CliRunner().invoke(main, ["verify-formats"])

    assert result.exit_code == 0, result.output


def test_bench_throughput_command():
    """A tiny benchmark prints its table"""
    result = CliRunner().invoke(main, ["bench-throughput", "--payments", "2"])

    assert result.exit_code == 0, result.output
    assert "Off-chain throughput" in result.output


def test_bench_throughput_rejects_zero():
    """click enforces at least one payment"""
    result = CliRunner().invoke(main, ["bench-throughput", "--payments", "0"])

    assert result.exit_code == 2
