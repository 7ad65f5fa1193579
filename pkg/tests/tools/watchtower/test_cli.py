from __future__ import annotations

from pathlib import Path

from click.testing import CliRunner

from failsafe_channels.main import main
from failsafe_channels.tools.watchtower.snapshot import SnapshotStore

SCENARIOS = Path(__file__).resolve().parents[3] / "scenarios"


def test_run_with_snapshot_then_inspect(tmp_path, isolated_config):
    """The daemon persists its records and inspect lists them"""
    snapshot = tmp_path / "wt.snap"
    runner = CliRunner()

    result = runner.invoke(
        main,
        ["watchtower", "run", str(SCENARIOS / "honest_close.json"), "--snapshot-path", str(snapshot)],
    )
    assert result.exit_code == 0, result.output
    assert len(SnapshotStore(snapshot).load()) == 1

    shown = runner.invoke(main, ["watchtower", "inspect", "--snapshot-path", str(snapshot)])
    assert shown.exit_code == 0, shown.output
    assert "Watchtower snapshot" in shown.output


def test_offline_window_forces_party_payout(tmp_path, isolated_config):
    """Taking the watchtower down over the close leaves the payout to the parties"""
    metrics = tmp_path / "m.json"

    result = CliRunner().invoke(
        main,
        [
            "watchtower",
            "run",
            str(SCENARIOS / "honest_close.json"),
            "--offline-from",
            "4",
            "--offline-until",
            "300",
            "--metrics",
            str(metrics),
        ],
    )

    assert result.exit_code == 0, result.output
    assert '"finalized_by": "party"' in metrics.read_text()


def test_offline_bounds_go_together(isolated_config):
    """One bound without the other is an error"""
    result = CliRunner().invoke(
        main, ["watchtower", "run", str(SCENARIOS / "honest_close.json"), "--offline-from", "4"]
    )

    assert result.exit_code == 1


def test_period_override_must_fit_t(isolated_config):
    """A period as long as t fails the assumption check"""
    result = CliRunner().invoke(
        main, ["watchtower", "run", str(SCENARIOS / "honest_close.json"), "--period-blocks", "16"]
    )

    assert result.exit_code == 1


def test_inspect_empty_snapshot(tmp_path):
    """A header-only snapshot prints a warning and exits 0"""
    snapshot = tmp_path / "empty.snap"
    SnapshotStore(snapshot).reset()

    result = CliRunner().invoke(main, ["watchtower", "inspect", "--snapshot-path", str(snapshot)])

    assert result.exit_code == 0
    assert "no records" in result.output
