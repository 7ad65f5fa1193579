"""Per-channel bookkeeping the runner keeps on behalf of both parties."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Literal

from ...protocol.assertions import AssertionLedger
from ...protocol.crypto import KeyPair
from ...protocol.offchain import PartyLedger
from ...protocol.types import ChannelState, Cid
from .scenario import ChannelOutcome, Party, Payment

ROLES: tuple[Party, Party] = ("A", "B")

TxSlot = Literal["close_tx", "dispute_tx", "payout_tx", "challenge_tx"]


def peer_of(role: str) -> Party:
    return "B" if role == "A" else "A"


@dataclass(frozen=True)
class ScheduledPayment:
    at: int
    payment: Payment


@dataclass
class ChannelRun:
    index: int
    cid: Cid
    keys: dict[str, KeyPair]
    outcome: ChannelOutcome
    script: deque[ScheduledPayment] = field(default_factory=deque)
    ledgers: dict[str, PartyLedger] = field(default_factory=dict)
    assertion_ledgers: dict[str, AssertionLedger] = field(default_factory=dict)
    close_tx: int | None = None
    dispute_tx: int | None = None
    payout_tx: int | None = None
    challenge_tx: int | None = None
    closing: bool = False
    finalized: bool = False
    awaiting_challenge: bool = False
    expected_refund: int | None = None
    deposit_before_challenge: int = 0
    wt_record_idx: int | None = None
    payments_made: int = 0
    payments_dropped: int = 0

    @property
    def opened(self) -> bool:
        return bool(self.ledgers or self.assertion_ledgers)

    def state_of(self, role: str) -> ChannelState:
        if self.ledgers:
            return self.ledgers[role].state
        return self.assertion_ledgers[role].state

    def latest_state(self) -> ChannelState:
        return max((self.state_of(role) for role in ROLES), key=lambda s: s.idx)

    def latest_idx(self) -> int:
        return self.latest_state().idx if self.opened else 0

    def idle(self) -> bool:
        """No exchange in flight: both parties hold the same state and nothing is pending."""
        if not self.opened:
            return False
        if any(ledger.pending is not None for ledger in self.ledgers.values()):
            return False
        return self.state_of("A") == self.state_of("B")

    def settled(self, close_scheduled: bool) -> bool:
        if self.script:
            return False
        if not close_scheduled:
            return self.idle()
        return self.finalized and not self.awaiting_challenge and self.challenge_tx is None
