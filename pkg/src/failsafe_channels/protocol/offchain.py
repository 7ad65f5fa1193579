"""Off-chain payment exchange: propose, counter-sign, forward, store receipts."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass

from . import crypto
from .crypto import KeyPair
from .errors import PaymentError
from .types import ChannelState, Cid, Digest, Nonce, NonceSource, PublicKey, Signature, short_hex
from .wire import CounterSignature, PaymentProposal, WatchtowerReceipt, WatchtowerSubmission

logger = logging.getLogger(__name__)

DEFAULT_HISTORY = 1024


@dataclass(frozen=True)
class SignedState:
    """A state both parties signed, with the nonce that opens its commitment."""

    state: ChannelState
    r: Nonce
    sig_a: Signature
    sig_b: Signature

    @property
    def h_s(self) -> Digest:
        return crypto.hash_commit(self.state, self.r)

    def submission(self, cid: Cid) -> WatchtowerSubmission:
        return WatchtowerSubmission(cid, self.h_s, self.state.idx, self.sig_a, self.sig_b)


class PartyLedger:
    """One party's bookkeeping for one channel."""

    def __init__(
        self,
        keys: KeyPair,
        cid: Cid,
        is_a: bool,
        peer: PublicKey,
        pk_wt: PublicKey | None,
        genesis: SignedState,
        nonces: NonceSource,
        history_limit: int = DEFAULT_HISTORY,
    ) -> None:
        self.keys = keys
        self.cid = cid
        self.is_a = is_a
        self.peer = peer
        self.pk_wt = pk_wt
        self.nonces = nonces
        self.latest = genesis
        self.capacity = genesis.state.capacity
        self.history: deque[SignedState] = deque([genesis], maxlen=history_limit)
        self.receipt: WatchtowerReceipt | None = None
        self.pending: PaymentProposal | None = None

    @property
    def state(self) -> ChannelState:
        return self.latest.state

    @property
    def idx(self) -> int:
        return self.latest.state.idx

    @property
    def own_balance(self) -> int:
        return self.state.bal_a if self.is_a else self.state.bal_b

    def submission(self) -> WatchtowerSubmission:
        return self.latest.submission(self.cid)

    def signed_state(self, idx: int) -> SignedState | None:
        for entry in self.history:
            if entry.state.idx == idx:
                return entry
        return None

    def _payload(self, state: ChannelState, r: Nonce) -> bytes:
        return crypto.payment_payload(self.cid, state.idx, crypto.hash_commit(state, r))

    def _pair(self, own: Signature, theirs: Signature) -> tuple[Signature, Signature]:
        return (own, theirs) if self.is_a else (theirs, own)

    def _advance(self, signed: SignedState) -> None:
        self.latest = signed
        self.history.append(signed)
        self.pending = None
        logger.debug("ledger %s advanced to idx %d", short_hex(self.cid), signed.state.idx)

    def propose_payment(self, amount: int) -> PaymentProposal:
        """Sign the next state in which this party pays `amount` to its peer."""
        if self.pending is not None:
            raise PaymentError(f"proposal for idx {self.pending.state.idx} still pending")
        if amount <= 0:
            raise PaymentError(f"payment amount must be positive, got {amount}")
        try:
            proposed = self.state.transfer(self.is_a, amount)
        except ValueError as e:
            raise PaymentError(f"overdraft: {e}") from e
        r = self.nonces.nonce()
        signature = crypto.sign(self.keys.secret, self._payload(proposed, r))
        self.pending = PaymentProposal(self.cid, proposed, r, signature)
        return self.pending

    def accept_payment(self, proposal: PaymentProposal) -> tuple[CounterSignature, WatchtowerSubmission]:
        """Check and counter-sign a peer's proposal; the ledger advances on success."""
        if proposal.cid != self.cid:
            raise PaymentError("proposal for another channel")
        if proposal.state.idx != self.idx + 1:
            raise PaymentError(f"expected idx {self.idx + 1}, got {proposal.state.idx}")
        if proposal.state.capacity != self.capacity:
            raise PaymentError(f"capacity {proposal.state.capacity} != {self.capacity}")
        own_after = proposal.state.bal_a if self.is_a else proposal.state.bal_b
        if own_after < self.own_balance:
            raise PaymentError("proposal debits the receiver")
        payload = self._payload(proposal.state, proposal.r)
        if payload != proposal.payload or not crypto.verify(self.peer, payload, proposal.signature):
            raise PaymentError("bad sender signature")

        own = crypto.sign(self.keys.secret, payload)
        sig_a, sig_b = self._pair(own, proposal.signature)
        signed = SignedState(proposal.state, proposal.r, sig_a, sig_b)
        self._advance(signed)
        return CounterSignature(self.cid, proposal.state, proposal.r, own), signed.submission(self.cid)

    def complete_payment(self, counter: CounterSignature) -> SignedState:
        if self.pending is None:
            raise PaymentError("no pending proposal")
        if counter.state != self.pending.state or counter.r != self.pending.r:
            raise PaymentError("counter-signature does not match the pending proposal")
        payload = self._payload(counter.state, counter.r)
        if not crypto.verify(self.peer, payload, counter.signature):
            raise PaymentError("bad counter-signature")
        sig_a, sig_b = self._pair(self.pending.signature, counter.signature)
        signed = SignedState(counter.state, counter.r, sig_a, sig_b)
        self._advance(signed)
        return signed

    def store_receipt(self, receipt: WatchtowerReceipt) -> None:
        if self.pk_wt is None:
            raise PaymentError("channel has no watchtower")
        if receipt.cid != self.cid or receipt.idx != self.idx:
            raise PaymentError(f"receipt for idx {receipt.idx}, ledger at {self.idx}")
        if receipt.h_s != self.latest.h_s:
            raise PaymentError("receipt commitment does not match the ledger state")
        if not receipt.verify(self.pk_wt):
            raise PaymentError("bad watchtower signature")
        self.receipt = receipt


def open_channel(
    cid: Cid,
    keys_a: KeyPair,
    keys_b: KeyPair,
    deposit_a: int,
    deposit_b: int,
    pk_wt: PublicKey | None,
    nonces_a: NonceSource,
    nonces_b: NonceSource,
    history_limit: int = DEFAULT_HISTORY,
) -> tuple[PartyLedger, PartyLedger]:
    """Both parties sign s_0 = (deposit_a, deposit_b, 0) and start their ledgers."""
    s0 = ChannelState(deposit_a, deposit_b, 0)
    r0 = nonces_a.nonce()
    payload = crypto.payment_payload(cid, 0, crypto.hash_commit(s0, r0))
    genesis = SignedState(s0, r0, crypto.sign(keys_a.secret, payload), crypto.sign(keys_b.secret, payload))
    ledger_a = PartyLedger(keys_a, cid, True, keys_b.public, pk_wt, genesis, nonces_a, history_limit)
    ledger_b = PartyLedger(keys_b, cid, False, keys_a.public, pk_wt, genesis, nonces_b, history_limit)
    return ledger_a, ledger_b
