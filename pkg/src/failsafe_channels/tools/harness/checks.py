"""In-run assertions evaluated once a scenario stops.

Each check returns a CheckResult; `run` exits non-zero when any of them fails.
Checks that do not apply to a scenario are left out of the trace.
"""

from __future__ import annotations

from collections.abc import Callable
from fractions import Fraction
from typing import TYPE_CHECKING

from .scenario import CheckResult, Mode, Strategy

if TYPE_CHECKING:
    from .runner import ScenarioRunner

# blocks between `end` and the party payout landing: one round to see it, one to mine it
FAIL_SAFE_SLACK = 2


def conservation(runner: ScenarioRunner) -> CheckResult:
    chain = runner.chain
    problems: list[str] = []
    total = sum(chain.balances.values())
    if total != chain.total_minted:
        problems.append(f"{total} tokens held, {chain.total_minted} minted")
    negative = [account.hex()[:12] for account, bal in chain.balances.items() if bal < 0]
    if negative:
        problems.append(f"negative balances: {negative}")
    capacity = runner.config.deposits.A + runner.config.deposits.B
    for ch in runner.channels:
        if not ch.finalized:
            continue
        final = ch.outcome.final_state
        assert final is not None
        if final[0] + final[1] != capacity:
            problems.append(f"channel {ch.index} paid {final[0] + final[1]} of {capacity}")
        if chain.balance_of(ch.cid) != 0:
            problems.append(f"channel {ch.index} still holds {chain.balance_of(ch.cid)}")
    return CheckResult("conservation", not problems, "; ".join(problems))


def privacy(runner: ScenarioRunner) -> CheckResult:
    violations = runner.bus.privacy_violations
    detail = "; ".join(violations[:3]) if violations else f"{runner.bus.boundary_checks} messages checked"
    return CheckResult("privacy", not violations, detail)


def latest_state(runner: ScenarioRunner) -> CheckResult:
    wrong = [
        f"channel {ch.index} closed at idx {ch.outcome.final_state[2]}, latest {ch.outcome.latest_idx}"
        for ch in runner.channels
        if ch.finalized and ch.outcome.final_state is not None
        and ch.outcome.final_state[2] != ch.outcome.latest_idx
    ]
    return CheckResult("latest-state", not wrong, "; ".join(wrong))


def no_unearned_income(runner: ScenarioRunner) -> CheckResult:
    problems: list[str] = []
    for ch in runner.channels:
        gain = ch.outcome.adversary_gain
        if gain <= 0:
            continue
        if runner.config.adversary is Strategy.CORRUPT_WT and ch.outcome.refund >= gain:
            continue
        problems.append(f"channel {ch.index}: adversary gained {gain}, refund {ch.outcome.refund}")
    return CheckResult("no-unearned-income", not problems, "; ".join(problems))


def fail_safe_bound(runner: ScenarioRunner) -> CheckResult:
    """A close the watchtower knew about finalizes by close + t + T + slack."""
    cfg = runner.config
    assert cfg.t is not None and cfg.T is not None
    limit = cfg.t + cfg.T + FAIL_SAFE_SLACK
    problems: list[str] = []
    for ch in runner.channels:
        out = ch.outcome
        if not ch.finalized or out.final_state is None or out.close_idx != out.final_state[2]:
            continue
        if ch.wt_record_idx != out.close_idx:
            continue
        gap = out.blocks_to_payout
        if gap is not None and gap > limit:
            problems.append(f"channel {ch.index} took {gap} blocks (limit {limit})")
    return CheckResult("fail-safe-bound", not problems, "; ".join(problems))


def mitm_rejected(runner: ScenarioRunner) -> CheckResult:
    adversary = runner.adversary
    passed = adversary.tampered_accepted == 0 and adversary.tampered_rejected == adversary.tampered_sent
    return CheckResult(
        "mitm-rejected",
        passed,
        f"{adversary.tampered_rejected}/{adversary.tampered_sent} tampered submissions rejected",
    )


def confs_tamper_reverted(runner: ScenarioRunner) -> CheckResult:
    adversary = runner.adversary
    return CheckResult(
        "confs-tamper-reverted",
        adversary.forged_updates_reverted(runner),
        f"{len(adversary.update_txs)} forged updates",
    )


def challenge_refund(runner: ScenarioRunner) -> CheckResult:
    problems = [
        f"channel {ch.index}: refund {ch.outcome.refund}, expected {ch.expected_refund}"
        for ch in runner.channels
        if ch.expected_refund is not None and ch.outcome.refund != ch.expected_refund
    ]
    return CheckResult("challenge-refund", not problems, "; ".join(problems))


def fast_path_timing(runner: ScenarioRunner) -> CheckResult:
    """Fresh closes wait at least t_fast blocks, stale ones at least T."""
    cfg = runner.config
    assert cfg.t_fast is not None and cfg.T is not None
    problems: list[str] = []
    for ch in runner.channels:
        gap = ch.outcome.blocks_to_payout
        if gap is None:
            continue
        floor = cfg.t_fast if ch.outcome.fast_path else cfg.T
        if gap < floor:
            problems.append(f"channel {ch.index} paid after {gap} blocks, floor {floor}")
    return CheckResult("fast-path-timing", not problems, "; ".join(problems))


def honest_promptness(runner: ScenarioRunner) -> CheckResult:
    late = [
        f"channel {ch.index}: perc {ch.outcome.perc}"
        for ch in runner.channels
        if ch.finalized and Fraction(ch.outcome.perc) != 0
    ]
    return CheckResult("honest-promptness", not late, "; ".join(late))


def completed(runner: ScenarioRunner) -> CheckResult:
    close_scheduled = runner.config.close is not None
    open_channels = [ch.index for ch in runner.channels if not ch.settled(close_scheduled)]
    detail = f"stopped at height {runner.chain.height}"
    if open_channels:
        detail += f"; unsettled channels {open_channels}"
    return CheckResult("completed", not open_channels, detail)


def applicable(runner: ScenarioRunner) -> list[Callable[[ScenarioRunner], CheckResult]]:
    cfg = runner.config
    selected: list[Callable[[ScenarioRunner], CheckResult]] = [conservation]
    if cfg.adversary is not Strategy.CORRUPT_WT:
        selected.append(latest_state)
    selected.append(no_unearned_income)
    if cfg.mode is Mode.SHORT_LIVED:
        selected.append(fast_path_timing)
    else:
        selected += [privacy, fail_safe_bound, challenge_refund]
        if cfg.adversary is Strategy.REPLAY_MITM:
            selected.append(mitm_rejected)
        if cfg.adversary is Strategy.CONFS_TAMPERER:
            selected.append(confs_tamper_reverted)
        if runner.watchtower_always_online() and cfg.adversary not in (
            Strategy.SILENT_WT,
            Strategy.CORRUPT_WT,
        ):
            selected.append(honest_promptness)
    selected.append(completed)
    return selected


def run_checks(runner: ScenarioRunner) -> list[CheckResult]:
    return [check(runner) for check in applicable(runner)]
