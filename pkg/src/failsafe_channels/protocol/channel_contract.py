"""Per-channel on-chain state machine with watchtower-gated payout."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction
from typing import Any

from . import crypto
from .chain import Contract, EventKind, Msg, SimChain, external
from .errors import RevertReason, require
from .types import ChannelState, Cid, Nonce, PublicKey, Signature, short_hex

logger = logging.getLogger(__name__)


class Flag(StrEnum):
    NONE = "NONE"
    OK = "OK"
    DISPUTE = "DISPUTE"


@dataclass(frozen=True)
class Timeouts:
    """Tolerance window t and fail-safe window T, both in blocks."""

    t: int
    T: int

    def __post_init__(self) -> None:
        if self.t < 1 or self.T < 1:
            raise ValueError(f"timeouts must be positive, got t={self.t} T={self.T}")


class ChannelContract(Contract):
    kind = "channel"

    def __init__(self, chain: SimChain, address: Cid, timeouts: Timeouts) -> None:
        super().__init__(chain, address)
        self.timeouts = timeouts
        self.flag = Flag.NONE
        self.pk_a: PublicKey | None = None
        self.pk_b: PublicKey | None = None
        self.bal_a = 0
        self.bal_b = 0
        self.pk_wt: PublicKey | None = None
        self.tower: Cid | None = None
        self.state: ChannelState | None = None
        self.ddl = 0
        self.end = 0
        self.is_rspd: bool | None = None
        self.perc = Fraction(0)
        self.challenged = False

    @property
    def capacity(self) -> int:
        return self.bal_a + self.bal_b

    def _verify_pair(self, state: ChannelState, r: Nonce, sig_a: bytes, sig_b: bytes) -> None:
        payload = crypto.payment_payload(self.address, state.idx, crypto.hash_commit(state, r))
        assert self.pk_a is not None
        require(crypto.verify(self.pk_a, payload, sig_a), RevertReason.BAD_SIGNATURE, "sigma_a")
        if self.pk_b is None:
            # counterparty never deposited: A alone may reclaim its funds
            require(state.bal_b == 0, RevertReason.NO_COUNTERPARTY)
            return
        require(crypto.verify(self.pk_b, payload, sig_b), RevertReason.BAD_SIGNATURE, "sigma_b")

    def _release(self, state: ChannelState) -> None:
        require(state == self.state, RevertReason.STATE_MISMATCH)
        require(self.capacity >= state.capacity, RevertReason.INSUFFICIENT_FUNDS)
        assert self.pk_a is not None
        self.chain.transfer(self.address, self.pk_a, state.bal_a)
        if state.bal_b:
            assert self.pk_b is not None
            self.chain.transfer(self.address, self.pk_b, state.bal_b)
        self.flag = Flag.NONE
        logger.debug("channel %s paid out at idx %d", short_hex(self.address), state.idx)

    @external
    def setup(self, msg: Msg, tower: Cid, pk_wt: PublicKey) -> None:
        require(self.flag is Flag.NONE, RevertReason.BAD_FLAG, f"flag={self.flag}")
        self.pk_a = PublicKey(msg.sender)
        self.bal_a = msg.value
        self.pk_b = None
        self.bal_b = 0
        self.pk_wt = pk_wt
        self.tower = tower
        self.state = None
        self.ddl = self.end = 0
        self.is_rspd = None
        self.perc = Fraction(0)
        self.challenged = False
        self.flag = Flag.OK

    @external
    def deposit(self, msg: Msg) -> None:
        require(self.flag is Flag.OK, RevertReason.BAD_FLAG, f"flag={self.flag}")
        require(self.pk_b is None, RevertReason.COUNTERPARTY_REGISTERED)
        self.pk_b = PublicKey(msg.sender)
        self.bal_b = msg.value

    @external
    def close(self, msg: Msg, state: ChannelState, r: Nonce, sig_a: Signature, sig_b: Signature) -> None:
        require(self.flag is Flag.OK, RevertReason.BAD_FLAG, f"flag={self.flag}")
        self._verify_pair(state, r, sig_a, sig_b)
        self.flag = Flag.DISPUTE
        self.state = state
        self.ddl = self.now + self.timeouts.t
        self.end = self.ddl + self.timeouts.T
        self.is_rspd = False
        self.perc = Fraction(0)
        self.challenged = False
        assert self.tower is not None
        self.chain.call(self.address, self.tower, "close", self.address, state)
        self.emit(EventKind.CLOSURE, state, r)

    @external
    def dispute(self, msg: Msg, state: ChannelState, r: Nonce, sig_a: Signature, sig_b: Signature) -> None:
        require(self.flag is Flag.DISPUTE, RevertReason.BAD_FLAG, f"flag={self.flag}")
        require(self.now < self.end, RevertReason.DISPUTE_CLOSED)
        assert self.state is not None
        require(state.idx > self.state.idx, RevertReason.STALE_STATE, f"{state.idx} <= {self.state.idx}")
        self._verify_pair(state, r, sig_a, sig_b)
        self.state = state
        assert self.tower is not None
        self.chain.call(self.address, self.tower, "close", self.address, state)
        self.emit(EventKind.DISPUTE, state, r)

    @external
    def payout(self, msg: Msg, state: ChannelState, is_pay: bool) -> None:
        require(self.flag is Flag.DISPUTE, RevertReason.BAD_FLAG, f"flag={self.flag}")
        now = self.now
        if msg.sender == self.tower:
            if is_pay:
                require(state == self.state, RevertReason.STATE_MISMATCH)
                require(self.capacity >= state.capacity, RevertReason.INSUFFICIENT_FUNDS)
            if now > self.ddl and not self.is_rspd:
                self.perc = min(Fraction(1), Fraction(now - self.ddl, self.timeouts.T))
            self.is_rspd = True
            if is_pay:
                self._release(state)
            else:
                self.end = max(self.end, now + self.timeouts.T)
            return
        require(msg.sender in (self.pk_a, self.pk_b), RevertReason.UNAUTHORIZED_CALLER)
        require(now > self.end, RevertReason.TOO_EARLY, f"now={now} end={self.end}")
        self._release(state)

    @external
    def challenge(self, msg: Msg, state: ChannelState, r: Nonce, sig_wt: Signature) -> None:
        assert self.pk_wt is not None
        payload = crypto.receipt_payload(self.address, state.idx, crypto.hash_commit(state, r))
        require(crypto.verify(self.pk_wt, payload, sig_wt), RevertReason.BAD_SIGNATURE, "sigma_wt")
        require(self.now > self.end, RevertReason.TOO_EARLY, f"now={self.now} end={self.end}")
        require(not self.challenged, RevertReason.ALREADY_CHALLENGED)
        assert self.tower is not None
        wrongly_closed = (
            self.flag is Flag.NONE and self.state is not None and state.idx > self.state.idx
        )
        withdrew = False
        if wrongly_closed or self.is_rspd is False:
            self.chain.call(self.address, self.tower, "withdraw", self.address, msg.sender, Fraction(1))
            withdrew = True
        if self.perc > 0:
            self.chain.call(self.address, self.tower, "withdraw", self.address, msg.sender, self.perc)
            withdrew = True
        self.challenged = withdrew

    def view(self) -> dict[str, Any]:
        return {
            "flag": self.flag.value,
            "state": self.state.to_json() if self.state is not None else None,
            "ddl": self.ddl,
            "end": self.end,
            "is_rspd": self.is_rspd,
            "perc": str(self.perc),
            "capacity": self.capacity,
        }
