"""Short-lived assertions: states co-signed with a recent block hash.

The channel contract itself judges freshness against the last n block hashes,
so a fresh state closes on a fast path and a stale one waits the full T.
"""

from __future__ import annotations

import logging
from collections import deque
from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum
from typing import Any

from . import crypto
from .chain import Contract, EventKind, Msg, SimChain, external
from .channel_contract import Flag
from .crypto import KeyPair
from .errors import AssertionRejected, RevertReason, require
from .types import SIGNATURE_LEN, ChannelState, Cid, Digest, PublicKey, Signature, short_hex
from .wire import ShortLivedAssertion

logger = logging.getLogger(__name__)

# the receiver's slot of an offer on the wire
EMPTY_SIGNATURE = Signature(bytes(SIGNATURE_LEN))


class Freshness(StrEnum):
    FRESH = "fresh"
    STALE = "stale"


@dataclass(frozen=True)
class FreshnessPolicy:
    n: int = 4
    t_fast: int = 2
    T: int = 5760

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"freshness limit must be >= 1, got {self.n}")
        if not 1 <= self.t_fast < self.T:
            raise ValueError(f"need 1 <= t_fast < T, got t_fast={self.t_fast} T={self.T}")


def is_fresh(chain: SimChain, anchor: bytes, n: int) -> bool:
    """Scan the n latest mined block hashes for `anchor`."""
    return any(block_hash == anchor for block_hash in chain.recent_block_hashes(n))


def verify_freshness(contract: AssertionChannelContract, assertion: ShortLivedAssertion) -> Freshness:
    if is_fresh(contract.chain, assertion.anchor, contract.policy.n):
        return Freshness.FRESH
    return Freshness.STALE


def economics_check(gamma: int, sum_tx: int) -> bool:
    """True when renting a watchtower (gamma) costs more than the channel's transactions."""
    if gamma < 0 or sum_tx < 0:
        raise ValueError("costs must be non-negative")
    return sum_tx < gamma


class AssertionChannelContract(Contract):
    kind = "assertion-channel"

    def __init__(self, chain: SimChain, address: Cid, policy: FreshnessPolicy) -> None:
        super().__init__(chain, address)
        self.policy = policy
        self.flag = Flag.NONE
        self.pk_a: PublicKey | None = None
        self.pk_b: PublicKey | None = None
        self.bal_a = 0
        self.bal_b = 0
        self.state: ChannelState | None = None
        self.end = 0
        self.fast = False
        self.replacements = 0

    @property
    def capacity(self) -> int:
        return self.bal_a + self.bal_b

    def _verify(self, state: ChannelState, anchor: Digest, sig_a: bytes, sig_b: bytes) -> None:
        payload = crypto.assertion_payload(state, anchor)
        assert self.pk_a is not None
        require(crypto.verify(self.pk_a, payload, sig_a), RevertReason.BAD_SIGNATURE, "sigma_a")
        if self.pk_b is None:
            require(state.bal_b == 0, RevertReason.NO_COUNTERPARTY)
            return
        require(crypto.verify(self.pk_b, payload, sig_b), RevertReason.BAD_SIGNATURE, "sigma_b")

    @external
    def setup(self, msg: Msg) -> None:
        require(self.flag is Flag.NONE, RevertReason.BAD_FLAG, f"flag={self.flag}")
        self.pk_a = PublicKey(msg.sender)
        self.bal_a = msg.value
        self.pk_b = None
        self.bal_b = 0
        self.state = None
        self.end = 0
        self.flag = Flag.OK

    @external
    def deposit(self, msg: Msg) -> None:
        require(self.flag is Flag.OK, RevertReason.BAD_FLAG, f"flag={self.flag}")
        require(self.pk_b is None, RevertReason.COUNTERPARTY_REGISTERED)
        self.pk_b = PublicKey(msg.sender)
        self.bal_b = msg.value

    @external
    def close_with_assertion(
        self, msg: Msg, state: ChannelState, anchor: Digest, sig_a: Signature, sig_b: Signature
    ) -> None:
        require(self.flag is Flag.OK, RevertReason.BAD_FLAG, f"flag={self.flag}")
        self._verify(state, anchor, sig_a, sig_b)
        self.fast = is_fresh(self.chain, anchor, self.policy.n)
        self.end = self.now + (self.policy.t_fast if self.fast else self.policy.T)
        self.state = state
        self.replacements = 0
        self.flag = Flag.DISPUTE
        self.emit(EventKind.CLOSURE, state, None, anchor)
        logger.debug(
            "assertion close on %s (%s path, end=%d)",
            short_hex(self.address),
            "fast" if self.fast else "slow",
            self.end,
        )

    @external
    def dispute_with_assertion(
        self, msg: Msg, state: ChannelState, anchor: Digest, sig_a: Signature, sig_b: Signature
    ) -> None:
        require(self.flag is Flag.DISPUTE, RevertReason.BAD_FLAG, f"flag={self.flag}")
        require(self.now < self.end, RevertReason.DISPUTE_CLOSED)
        assert self.state is not None
        require(state.idx > self.state.idx, RevertReason.STALE_STATE, f"{state.idx} <= {self.state.idx}")
        self._verify(state, anchor, sig_a, sig_b)
        self.state = state
        if self.fast:
            self.replacements += 1
            if self.replacements == 1:
                self.end = self.now + self.policy.t_fast
            else:
                self.fast = False
                self.end = self.now + self.policy.T
        self.emit(EventKind.DISPUTE, state, None, anchor)

    @external
    def payout(self, msg: Msg, state: ChannelState) -> None:
        require(self.flag is Flag.DISPUTE, RevertReason.BAD_FLAG, f"flag={self.flag}")
        require(msg.sender in (self.pk_a, self.pk_b), RevertReason.UNAUTHORIZED_CALLER)
        require(self.now >= self.end, RevertReason.TOO_EARLY, f"now={self.now} end={self.end}")
        require(state == self.state, RevertReason.STATE_MISMATCH)
        require(self.capacity >= state.capacity, RevertReason.INSUFFICIENT_FUNDS)
        assert self.pk_a is not None
        self.chain.transfer(self.address, self.pk_a, state.bal_a)
        if state.bal_b:
            assert self.pk_b is not None
            self.chain.transfer(self.address, self.pk_b, state.bal_b)
        self.flag = Flag.NONE

    def view(self) -> dict[str, Any]:
        return {
            "flag": self.flag.value,
            "state": self.state.to_json() if self.state is not None else None,
            "end": self.end,
            "fast": self.fast,
            "replacements": self.replacements,
            "capacity": self.capacity,
        }


@dataclass(frozen=True)
class AssertionOffer:
    cid: Cid
    state: ChannelState
    anchor: Digest
    signature: Signature

    def to_wire(self, payer_is_a: bool) -> ShortLivedAssertion:
        sig_a, sig_b = (self.signature, EMPTY_SIGNATURE) if payer_is_a else (EMPTY_SIGNATURE, self.signature)
        return ShortLivedAssertion(self.cid, self.state, self.anchor, sig_a, sig_b)

    @classmethod
    def from_wire(cls, assertion: ShortLivedAssertion, payer_is_a: bool) -> AssertionOffer:
        signature = assertion.sig_a if payer_is_a else assertion.sig_b
        return cls(assertion.cid, assertion.state, assertion.anchor, signature)


class AssertionLedger:
    """One party's store of co-signed assertions for one channel."""

    def __init__(
        self,
        keys: KeyPair,
        cid: Cid,
        is_a: bool,
        peer: PublicKey,
        genesis: ShortLivedAssertion,
        recognizes: Callable[[bytes], bool],
        history_limit: int = 1024,
    ) -> None:
        self.keys = keys
        self.cid = cid
        self.is_a = is_a
        self.peer = peer
        self.recognizes = recognizes
        self.latest = genesis
        self.capacity = genesis.state.capacity
        self.history: deque[ShortLivedAssertion] = deque([genesis], maxlen=history_limit)
        self.pending: AssertionOffer | None = None

    @property
    def state(self) -> ChannelState:
        return self.latest.state

    def assertion_at(self, idx: int) -> ShortLivedAssertion | None:
        for entry in self.history:
            if entry.state.idx == idx:
                return entry
        return None

    def _store(self, assertion: ShortLivedAssertion) -> None:
        self.latest = assertion
        self.history.append(assertion)

    def offer(self, amount: int, anchor: Digest) -> AssertionOffer:
        if amount <= 0:
            raise AssertionRejected(f"payment amount must be positive, got {amount}")
        try:
            proposed = self.state.transfer(self.is_a, amount)
        except ValueError as e:
            raise AssertionRejected(f"overdraft: {e}") from e
        signature = crypto.sign(self.keys.secret, crypto.assertion_payload(proposed, anchor))
        # a newer offer replaces one the peer never answered
        self.pending = AssertionOffer(self.cid, proposed, anchor, signature)
        return self.pending

    def countersign(self, offer: AssertionOffer) -> ShortLivedAssertion:
        if offer.cid != self.cid:
            raise AssertionRejected("offer for another channel")
        if not self.recognizes(offer.anchor):
            raise AssertionRejected(f"unknown anchor {short_hex(offer.anchor)}")
        if offer.state.idx != self.state.idx + 1 or offer.state.capacity != self.capacity:
            raise AssertionRejected("offer breaks idx order or capacity")
        own_after = offer.state.bal_a if self.is_a else offer.state.bal_b
        own_now = self.state.bal_a if self.is_a else self.state.bal_b
        if own_after < own_now:
            raise AssertionRejected("offer debits the receiver")
        payload = crypto.assertion_payload(offer.state, offer.anchor)
        if not crypto.verify(self.peer, payload, offer.signature):
            raise AssertionRejected("bad sender signature")
        own = crypto.sign(self.keys.secret, payload)
        sig_a, sig_b = (own, offer.signature) if self.is_a else (offer.signature, own)
        assertion = ShortLivedAssertion(self.cid, offer.state, offer.anchor, sig_a, sig_b)
        self._store(assertion)
        return assertion

    def accept(self, assertion: ShortLivedAssertion) -> None:
        """Store the peer's counter-signature on our own pending offer."""
        offer = self.pending
        if offer is None:
            raise AssertionRejected("no pending offer")
        if (
            assertion.cid != offer.cid
            or assertion.state != offer.state
            or assertion.anchor != offer.anchor
            or assertion.state.idx != self.state.idx + 1
        ):
            raise AssertionRejected("counter-signed assertion does not match the pending offer")
        payload = assertion.payload
        own_sig, peer_sig = (
            (assertion.sig_a, assertion.sig_b) if self.is_a else (assertion.sig_b, assertion.sig_a)
        )
        if not crypto.verify(self.keys.public, payload, own_sig):
            raise AssertionRejected("own signature missing from the counter-signed assertion")
        if not crypto.verify(self.peer, payload, peer_sig):
            raise AssertionRejected("counter-signed assertion does not verify")
        self.pending = None
        self._store(assertion)


def sign_assertion(
    payer: AssertionLedger, payee: AssertionLedger, amount: int, anchor: Digest
) -> ShortLivedAssertion:
    """Run one offer/counter-sign exchange; both ledgers hold the result."""
    assertion = payee.countersign(payer.offer(amount, anchor))
    payer.accept(assertion)
    return assertion


def open_assertion_channel(
    cid: Cid,
    keys_a: KeyPair,
    keys_b: KeyPair,
    deposit_a: int,
    deposit_b: int,
    anchor: Digest,
    recognizes_a: Callable[[bytes], bool],
    recognizes_b: Callable[[bytes], bool],
) -> tuple[AssertionLedger, AssertionLedger]:
    s0 = ChannelState(deposit_a, deposit_b, 0)
    payload = crypto.assertion_payload(s0, anchor)
    genesis = ShortLivedAssertion(
        cid, s0, anchor, crypto.sign(keys_a.secret, payload), crypto.sign(keys_b.secret, payload)
    )
    return (
        AssertionLedger(keys_a, cid, True, keys_b.public, genesis, recognizes_a),
        AssertionLedger(keys_b, cid, False, keys_a.public, genesis, recognizes_b),
    )
