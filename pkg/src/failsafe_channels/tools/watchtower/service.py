"""The watchtower daemon: record commitments, watch closures, answer with one bitmap per period."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum

from ...protocol import crypto
from ...protocol.chain import Event, EventKind, SimChain
from ...protocol.channel_contract import ChannelContract
from ...protocol.crypto import KeyPair
from ...protocol.errors import ChainError, ProtocolError, WireFormatError
from ...protocol.tower_contract import ConfirmationSet, TowerContract
from ...protocol.types import ZERO_DIGEST, ChannelState, Cid, Digest, Nonce, PublicKey, Signature, short_hex
from ...protocol.wire import WatchtowerReceipt, WatchtowerSubmission
from .snapshot import FLAG_CLOSURE_SEEN, SnapshotRecord, SnapshotStore, encoded_size

logger = logging.getLogger(__name__)


class IngestRejected(ProtocolError):
    def __init__(self, reason: str, current_idx: int | None = None) -> None:
        self.reason = reason
        self.current_idx = current_idx
        suffix = f" (current idx {current_idx})" if current_idx is not None else ""
        super().__init__(f"{reason}{suffix}")


class ConfsOrderError(ProtocolError):
    pass


class FaultMode(StrEnum):
    HONEST = "honest"
    CONFIRM_ALL = "confirm-all"


@dataclass
class WatchtowerRecord:
    cid: Cid
    pk_a: PublicKey
    pk_b: PublicKey | None
    idx: int = -1
    h_s: Digest = ZERO_DIGEST
    sig_a: Signature = Signature(b"")
    sig_b: Signature = Signature(b"")
    closure_seen: bool = False
    receipt: WatchtowerReceipt | None = None

    def to_snapshot(self) -> SnapshotRecord:
        flags = FLAG_CLOSURE_SEEN if self.closure_seen else 0
        return SnapshotRecord(self.cid, self.idx, self.h_s, self.sig_a, self.sig_b, flags)


@dataclass
class UpdateSchedule:
    period: int
    next_due: int = 0

    def __post_init__(self) -> None:
        if self.period < 1:
            raise ValueError(f"period must be >= 1, got {self.period}")

    def due(self, now: int) -> bool:
        return now >= self.next_due

    def advance(self, now: int) -> None:
        """At most one update per period; a quiet tower answers the next closure at once."""
        self.next_due = now + self.period


@dataclass(frozen=True)
class PendingDecision:
    cid: Cid
    state: ChannelState
    bit: int
    event_height: int


@dataclass
class _InflightUpdate:
    tx_id: int
    m: int


class WatchtowerService:
    def __init__(
        self,
        keys: KeyPair,
        chain: SimChain,
        tower: Cid,
        period: int,
        *,
        offline: Sequence[tuple[int, int]] = (),
        min_deposit: int = 1,
        fault: FaultMode = FaultMode.HONEST,
        snapshot: SnapshotStore | None = None,
        submit_empty_updates: bool = False,
    ) -> None:
        self.keys = keys
        self.chain = chain
        self.tower = tower
        self.schedule = UpdateSchedule(period, chain.height)
        self.offline = [tuple(window) for window in offline]
        self.min_deposit = min_deposit
        self.fault = fault
        self.snapshot = snapshot
        self.submit_empty_updates = submit_empty_updates
        self.records: dict[Cid, WatchtowerRecord] = {}
        self.update_txs: list[int] = []
        self.receipts_issued = 0
        self._sequence = 0
        self._scanned_height = chain.height
        self._entry_start = chain.height
        self._inflight: _InflightUpdate | None = None

    @property
    def public_key(self) -> PublicKey:
        return self.keys.public

    def _tower(self) -> TowerContract:
        return self.chain.contract_as(self.tower, TowerContract)

    def is_online(self, height: int) -> bool:
        return not any(start <= height <= until for start, until in self.offline)

    # ---- employment and ingest -----------------------------------------------

    def employ(self, cid: Cid) -> bool:
        """Accept a channel once it names this tower and has paid the deposit."""
        if cid in self.records:
            return True
        try:
            channel = self.chain.contract_as(cid, ChannelContract)
        except ChainError:
            return False
        if channel.pk_wt != self.public_key or channel.tower != self.tower or channel.pk_a is None:
            return False
        if self._tower().deposit_of(cid) < self.min_deposit:
            return False
        self.records[cid] = WatchtowerRecord(cid, channel.pk_a, channel.pk_b)
        logger.info("employed for cid=%s", short_hex(cid))
        return True

    def _sign_receipt(self, record: WatchtowerRecord) -> WatchtowerReceipt:
        self._sequence += 1
        payload = crypto.receipt_payload(record.cid, record.idx, record.h_s)
        return WatchtowerReceipt(
            record.cid,
            record.idx,
            record.h_s,
            crypto.sign(self.keys.secret, payload),
            self.public_key,
            self._sequence,
        )

    def ingest(self, submission: WatchtowerSubmission | bytes) -> WatchtowerReceipt:
        if isinstance(submission, (bytes, bytearray)):
            try:
                submission = WatchtowerSubmission.decode(bytes(submission))
            except WireFormatError as e:
                raise IngestRejected(f"malformed: {e}") from e
        self.observe()
        record = self.records.get(submission.cid)
        if record is None:
            raise IngestRejected("unknown-channel")
        if record.closure_seen:
            raise IngestRejected("channel-closing", record.idx)
        if record.pk_b is None:
            # employed before the counterparty deposited
            record.pk_b = self.chain.contract_as(record.cid, ChannelContract).pk_b
        payload = submission.payload
        sig_b_ok =record.pk_b is not None and crypto.verify(record.pk_b, payload, submission.sig_b)
        if not crypto.verify(record.pk_a, payload, submission.sig_a) or not sig_b_ok:
            raise IngestRejected("bad-signature", record.idx)
        if submission.idx <= record.idx:
            raise IngestRejected("stale-idx", record.idx)

        record.idx = submission.idx
        record.h_s = submission.h_s
        record.sig_a = submission.sig_a
        record.sig_b = submission.sig_b
        record.receipt = self._sign_receipt(record)
        self.receipts_issued += 1
        if self.snapshot is not None:
            self.snapshot.append(record.to_snapshot())
        return record.receipt

    def resend_receipt(self, cid: Cid, idx: int) -> WatchtowerReceipt | None:
        record = self.records.get(cid)
        if record is None or record.receipt is None or record.receipt.idx != idx:
            return None
        return record.receipt

    # ---- chain watching ----------------------------------------------------------

    def observe(self) -> list[Event]:
        """Freeze records of every channel whose closure or dispute is now on chain."""
        if self._scanned_height >= self.chain.height:
            return []
        events = self.chain.read_events(self._scanned_height + 1, self.chain.height)
        self._scanned_height = self.chain.height
        for event in events:
            record = self.records.get(event.cid)
            if record is not None and not record.closure_seen:
                record.closure_seen = True
                logger.debug("closure seen for cid=%s", short_hex(event.cid))
                if self.snapshot is not None and record.idx >= 0:
                    self.snapshot.append(record.to_snapshot())
        return events

    def decide(self, cid: Cid, state: ChannelState, r: Nonce | None) -> int:
        if self.fault is FaultMode.CONFIRM_ALL:
            return 1
        record = self.records.get(cid)
        if record is None or record.idx < 0 or r is None:
            return 0
        if state.idx != record.idx:
            return 0
        return int(crypto.hash_commit(state, r) == record.h_s)

    def scan_and_collect(self, from_height: int) -> list[PendingDecision]:
        """One decision per closing cid, on its latest event, in order of first appearance."""
        if from_height > self.chain.height:
            return []
        latest: dict[Cid, Event] = {}
        for event in self.chain.read_events(
            from_height, self.chain.height, (EventKind.CLOSURE, EventKind.DISPUTE)
        ):
            latest[event.cid] = event
        return [
            PendingDecision(cid, ev.state, self.decide(cid, ev.state, ev.r), ev.block_height)
            for cid, ev in latest.items()
        ]

    def build_confs(self, decisions: Sequence[PendingDecision]) -> ConfirmationSet:
        cids, states = self._tower().pending()
        if [d.cid for d in decisions] != cids:
            raise ConfsOrderError(f"decisions cover {len(decisions)} cids, tower entry holds {len(cids)}")
        for decision, state in zip(decisions, states):
            if decision.state != state:
                raise ConfsOrderError(f"state mismatch for cid={short_hex(decision.cid)}")
        return ConfirmationSet.from_bits(d.bit for d in decisions)

    def _order_like_tower(self, decisions: Iterable[PendingDecision]) -> list[PendingDecision]:
        by_cid = {d.cid: d for d in decisions}
        cids, _ = self._tower().pending()
        return [by_cid[cid] for cid in cids if cid in by_cid]

    def _settle_inflight(self, now: int) -> None:
        if self._inflight is None:
            return
        receipt = self.chain.receipt(self._inflight.tx_id)
        if receipt is None:
            return
        if receipt.ok:
            self._entry_start = receipt.block_height
        else:
            logger.warning("update tx %d reverted (%s), retrying", receipt.tx_id, receipt.reason)
            self.schedule.next_due = now
        self._inflight = None

    def tick(self, now: int) -> int | None:
        """Submit one update for the tower's pending entry when due; returns the tx id."""
        if not self.is_online(now):
            return None
        self.observe()
        self._settle_inflight(now)
        if self._inflight is not None or not self.schedule.due(now):
            return None
        cids, _ = self._tower().pending()
        if not cids and not self.submit_empty_updates:
            return None
        self.schedule.advance(now)
        decisions = self._order_like_tower(self.scan_and_collect(self._entry_start))
        try:
            confs = self.build_confs(decisions)
        except ConfsOrderError as e:
            logger.error("skipping update: %s", e)
            return None
        tx_id = self.chain.submit_tx(self.public_key, self.tower, "update", confs)
        self._inflight = _InflightUpdate(tx_id, len(confs))
        self.update_txs.append(tx_id)
        logger.info("update queued: m=%d bitmap=%dB", len(confs), len(confs.bitmap()))
        return tx_id

    # ---- persistence -------------------------------------------------------------

    def storage_bytes(self) -> int:
        return sum(encoded_size() for record in self.records.values() if record.idx >= 0)

    def restore(self) -> int:
        """Reload records from the snapshot; party keys come from the channel contracts."""
        if self.snapshot is None:
            return 0
        restored = 0
        for cid, saved in self.snapshot.load().items():
            if not self.employ(cid):
                logger.warning("snapshot names cid=%s this tower no longer serves", short_hex(cid))
                continue
            record = self.records[cid]
            record.idx = saved.idx
            record.h_s = saved.h_s
            record.sig_a = saved.sig_a
            record.sig_b = saved.sig_b
            record.closure_seen = saved.closure_seen
            record.receipt = self._sign_receipt(record)
            restored += 1
        return restored
