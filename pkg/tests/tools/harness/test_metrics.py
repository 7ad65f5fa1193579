from __future__ import annotations

import pytest

from failsafe_channels.shared.config import Config
from failsafe_channels.tools.harness.metrics import metrics_report, payout_distribution, update_summary
from failsafe_channels.tools.harness.runner import run_scenario
from failsafe_channels.tools.harness.scenario import (
    ChannelOutcome,
    CheckResult,
    RunTrace,
    ScenarioConfig,
    UpdateRecord,
)
from failsafe_channels.tools.watchtower.snapshot import encoded_size


def _trace() -> RunTrace:
    return RunTrace(
        config=ScenarioConfig(name="m", seed=3, period=4),
        blocks=[{"height": 1}, {"height": 2}],
        channels=[
            ChannelOutcome("aa", 2, close_height=5, payout_height=6),
            ChannelOutcome("bb", 2, close_height=5, payout_height=8),
            ChannelOutcome("cc", 2, close_height=5, payout_height=6),
            ChannelOutcome("dd", 0),
        ],
        records=3,
        storage_bytes=3 * encoded_size(),
        updates=[UpdateRecord(6, 2, 1, True), UpdateRecord(7, 1, 1, False), UpdateRecord(12, 0, 0, True)],
        balances={"B0": 6, "A0": 4},
        checks=[CheckResult("conservation", True)],
    )


def test_payout_distribution():
    """Gaps of finished channels only, with a histogram"""
    dist = payout_distribution(_trace())

    assert dist == {"count": 3, "min": 1, "max": 3, "median": 1, "histogram": {"1": 2, "3": 1}}


def test_payout_distribution_empty():
    """No payouts, no numbers"""
    assert payout_distribution(RunTrace(config=ScenarioConfig()))["count"] == 0


def test_update_summary_counts_per_period():
    """Two updates in the period starting at height 4"""
    summary = update_summary(_trace())

    assert summary["count"] == 3
    assert summary["ok"] == 2
    assert summary["max_per_period"] == 2
    assert summary["closures"] == [2, 1, 0]


def test_metrics_report_shape():
    """The report names the run and pins the trace digest"""
    trace = _trace()
    report = metrics_report(trace)

    assert report["scenario"] == "m"
    assert report["final_height"] == 2
    assert report["watchtower"] == {"records": 3, "storage_bytes": 3 * encoded_size(), "record_bytes": encoded_size()}
    assert list(report["balances"]) == ["A0", "B0"]
    assert report["ok"] is True
    assert report["trace_sha256"] == trace.digest()
    assert report["channels"][0]["blocks_to_payout"] == 1


@pytest.mark.slow
def test_watchtower_storage_for_a_thousand_channels():
    """10^3 live channels cost the watchtower at most two submissions' worth each"""
    config = ScenarioConfig.model_validate(
        {
            "seed": 11,
            "t": 16,
            "T": 64,
            "period": 1,
            "deposits": {"A": 10, "B": 5},
            "payments": [{"payer": "A", "amount": 1}],
            "channels": 1000,
        }
    )

    report = metrics_report(run_scenario(config, Config()))

    assert report["ok"], [check for check in report["checks"] if not check["passed"]]
    assert report["watchtower"]["records"] == 1000
    assert 0 < report["watchtower"]["storage_bytes"] <= 2 * 198 * 1000
