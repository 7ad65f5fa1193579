from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

import pytest

from failsafe_channels.shared.config import Config
from failsafe_channels.tools.harness.runner import ScenarioRunner, run_scenario
from failsafe_channels.tools.harness.scenario import (
    PAYMENT_START,
    ScenarioConfig,
    ScenarioConfigError,
    Strategy,
    load_scenario,
)
from failsafe_channels.tools.watchtower.snapshot import SnapshotStore

SCENARIOS = Path(__file__).resolve().parents[3] / "scenarios"


def _run(name: str, config: Config | None = None):
    return run_scenario(load_scenario(SCENARIOS / f"{name}.json"), config or Config())


def _check(trace, name: str):
    return next(check for check in trace.checks if check.name == name)


def _random_script(rng: random.Random, deposit_a: int = 10, deposit_b: int = 5) -> list[dict]:
    bal = {"A": deposit_a, "B": deposit_b}
    payments = []
    for _ in range(rng.randint(0, 6)):
        payer = rng.choice("AB")
        if bal[payer] == 0:
            continue
        amount = rng.randint(1, bal[payer])
        bal[payer] -= amount
        bal["B" if payer == "A" else "A"] += amount
        payments.append({"payer": payer, "amount": amount})
    return payments


def test_honest_close_walkthrough():
    """Two payments of 3, A closes with (4,6,2), the watchtower confirms next block"""
    trace = _run("honest_close")
    channel = trace.channels[0]

    assert trace.ok, trace.failed_checks
    assert channel.final_state == [4, 6, 2]
    assert channel.blocks_to_payout == 1
    assert channel.finalized_by == "watchtower"
    assert trace.balances["A0"] == 4 and trace.balances["B0"] == 6


def test_stale_close_is_disputed():
    """A closes with idx 1; B disputes with idx 2 and the next update pays (4,6,2)"""
    trace = _run("stale_close")
    channel = trace.channels[0]

    assert trace.ok, trace.failed_checks
    assert channel.close_idx == 1
    assert channel.final_state == [4, 6, 2]
    assert channel.blocks_to_payout == 3
    assert channel.adversary_gain == 0


def test_offline_watchtower_falls_back_to_party_payout():
    """With the watchtower gone, B is paid at end + 1 and A takes the whole deposit"""
    trace = _run("wt_offline")
    channel = trace.channels[0]

    assert trace.ok, trace.failed_checks
    assert channel.final_state == [7, 8, 2]
    assert channel.finalized_by == "party"
    assert channel.blocks_to_payout == 16 + 64 + 1
    assert channel.refund == 100


def test_silent_watchtower_pays_linear_penalty():
    """Responding at ddl + T/2 costs the watchtower half its deposit"""
    trace = _run("silent_wt")
    channel = trace.channels[0]

    assert trace.ok, trace.failed_checks
    assert Fraction(channel.perc) == Fraction(1, 2)
    assert channel.refund == 50
    assert channel.final_state == [8, 2, 1]


def test_corrupt_watchtower_is_outpaid_by_refund():
    """A colluding watchtower confirms a stale close; the victim's refund exceeds the theft"""
    trace = _run("corrupt_wt")
    channel = trace.channels[0]

    assert trace.ok, trace.failed_checks
    assert channel.final_state == [7, 3, 1]
    assert channel.adversary_gain == 3
    assert channel.refund == 100
    assert "latest-state" not in [check.name for check in trace.checks]


def test_forged_update_reverts():
    """Updates from anyone but the watchtower key revert"""
    trace = _run("confs_tamperer")

    assert trace.ok, trace.failed_checks
    assert _check(trace, "confs-tamper-reverted").passed
    assert trace.channels[0].final_state == [5, 5, 1]


def test_tampered_submissions_never_accepted():
    """Every altered submission is rejected; replays are stale"""
    trace = _run("replay_mitm")

    assert trace.ok, trace.failed_checks
    assert _check(trace, "mitm-rejected").passed
    assert trace.channels[0].final_state == [7, 3, 3]


def test_short_lived_fresh_close():
    """A fresh assertion pays out t_fast blocks after the close"""
    trace = _run("short_lived_fresh")
    channel = trace.channels[0]

    assert trace.ok, trace.failed_checks
    assert channel.fast_path is True
    assert channel.blocks_to_payout == 2
    assert channel.final_state == [4, 6, 2]
    assert trace.storage_bytes == 0


def test_short_lived_stale_close():
    """A stale assertion waits the full T and is replaced by the newer state"""
    trace = _run("short_lived_stale")
    channel = trace.channels[0]

    assert trace.ok, trace.failed_checks
    assert channel.fast_path is False
    assert channel.blocks_to_payout == 64
    assert channel.final_state == [4, 6, 2]


def test_runs_are_deterministic():
    """Same config and seed, byte-identical trace; another seed differs"""
    config = load_scenario(SCENARIOS / "stale_close.json")

    first = run_scenario(config, Config())
    second = run_scenario(config, Config())
    other = run_scenario(config.model_copy(update={"seed": 99}), Config())

    assert first.to_jsonl() == second.to_jsonl()
    assert first.digest() != other.digest()


def test_trace_blocks_are_complete():
    """Every block line carries hashes, txs, receipts, events and actions"""
    trace = _run("honest_close")

    heights = [block["height"] for block in trace.blocks]
    assert heights == list(range(1, trace.final_height + 1))
    for block in trace.blocks:
        assert {"schema", "hash", "parent_hash", "txs", "receipts", "events", "actions"} <= set(block)
    assert trace.blocks[1]["parent_hash"] == trace.blocks[0]["hash"]


def test_invalid_config_fails_before_mining():
    """Assumption violations surface as ScenarioConfigError"""
    with pytest.raises(ScenarioConfigError):
        ScenarioRunner(ScenarioConfig(t=16, T=64, period=20), Config())


def test_no_close_stops_when_idle():
    """Without a close the run ends once the script is done"""
    trace = run_scenario(ScenarioConfig(t=16, T=64, payments=[{"amount": 2}]), Config())

    assert trace.ok, trace.failed_checks
    assert trace.channels[0].final_state is None
    assert trace.records == 1


def test_many_channels_share_updates():
    """Channels closing in one round are answered by one update"""
    config = load_scenario(SCENARIOS / "honest_close.json").model_copy(update={"channels": 3})

    trace = run_scenario(config, Config())

    assert trace.ok, trace.failed_checks
    assert [update.m for update in trace.updates if update.m] == [3]
    assert all(ch.blocks_to_payout == 1 for ch in trace.channels)


def test_snapshot_written_during_run(tmp_path):
    """A configured snapshot path receives the watchtower's records"""
    config = Config()
    config.watchtower.snapshot_path = str(tmp_path / "wt.snap")

    _run("honest_close", config)

    records = SnapshotStore(tmp_path / "wt.snap").load()
    assert len(records) == 1
    assert next(iter(records.values())).idx == 2


@pytest.mark.slow
def test_honest_sweep_pays_within_two_blocks():
    """100 random honest scenarios all pay out within two blocks of the close"""
    for seed in range(100):
        rng = random.Random(seed)
        config = ScenarioConfig.model_validate(
            {
                "seed": seed,
                "t": 16,
                "T": 64,
                "period": 1,
                "deposits": {"A": 10, "B": 5},
                "payments": _random_script(rng),
                "close": {"by": rng.choice("AB")},
            }
        )
        trace = run_scenario(config, Config())

        assert trace.ok, (seed, trace.failed_checks)
        assert trace.channels[0].blocks_to_payout <= 2, seed


@pytest.mark.slow
def test_conservation_fuzz():
    """Balances are conserved across a thousand mixed scenarios"""
    strategies = [Strategy.NONE, Strategy.STALE_CLOSER, Strategy.REPLAY_MITM, Strategy.CONFS_TAMPERER]
    for seed in range(1000):
        rng = random.Random(seed)
        config = ScenarioConfig.model_validate(
            {
                "seed": seed,
                "t": 8,
                "T": 32,
                "period": rng.randint(1, 4),
                "deposits": {"A": 10, "B": 5},
                "payments": _random_script(rng),
                "close": {"by": rng.choice("AB")},
                "adversary": rng.choice(strategies).value,
            }
        )
        trace = run_scenario(config, Config())

        for name in ("conservation", "latest-state", "no-unearned-income"):
            check = next((c for c in trace.checks if c.name == name), None)
            if check is not None:
                assert check.passed, (seed, name, check.detail)
        assert _check(trace, "conservation").passed, seed
        assert sum(trace.balances.values()) == 10 + 5 + config.tower_deposit


@pytest.mark.slow
def test_offline_watchtower_sweep_falls_back_to_parties():
    """100 random outages over the close: nothing pays before end, a party pays at end + 1"""
    for seed in range(100):
        rng = random.Random(seed)
        t, T = rng.randint(4, 16), rng.randint(8, 64)
        close_at = rng.randint(12, 20)
        start = rng.randint(PAYMENT_START, close_at)
        until = close_at + 1 + t + T + rng.randint(1, 20)
        config = ScenarioConfig.model_validate(
            {
                "seed": seed,
                "t": t,
                "T": T,
                "period": rng.randint(1, t - 1),
                "deposits": {"A": 10, "B": 5},
                "payments": _random_script(rng),
                "close": {"by": rng.choice("AB"), "at": close_at},
                "availability": {"watchtower": [{"start": start, "until": until}]},
            }
        )
        trace = run_scenario(config, Config())
        channel = trace.channels[0]

        assert trace.ok, (seed, trace.failed_checks)
        assert channel.finalized_by == "party", seed
        assert channel.payout_height == channel.close_height + t + T + 1, seed
        assert channel.final_state[2] == channel.latest_idx, seed
