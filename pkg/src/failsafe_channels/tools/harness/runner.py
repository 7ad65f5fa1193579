"""Round-based scenario runner.

One round per block height h, always in this order: the watchtower ticks,
queued messages are delivered, each party acts on each channel, the
adversary acts, messages are delivered again, and block h + 1 is mined.
Actors only communicate through the message bus; only the runner mines.
"""

from __future__ import annotations

import logging
from collections import deque
from fractions import Fraction
from typing import Any

from ...protocol.assertions import (
    EMPTY_SIGNATURE,
    AssertionChannelContract,
    AssertionOffer,
    FreshnessPolicy,
    open_assertion_channel,
)
from ...protocol.chain import Block, Receipt, SimChain
from ...protocol.channel_contract import ChannelContract, Flag, Timeouts
from ...protocol.crypto import KeyPair
from ...protocol.errors import AssertionRejected, PaymentError, WireFormatError
from ...protocol.offchain import open_channel
from ...protocol.tower_contract import ConfirmationSet, TowerContract
from ...protocol.types import Cid, NonceSource, short_hex
from ...protocol.wire import (
    CounterSignature,
    PaymentProposal,
    ShortLivedAssertion,
    WatchtowerReceipt,
    decode_message,
)
from ...shared.config import Config
from ..watchtower.service import FaultMode, IngestRejected, WatchtowerService
from ..watchtower.snapshot import SnapshotStore
from . import checks
from .actors import ROLES, ChannelRun, ScheduledPayment, TxSlot, peer_of
from .adversary import ADVERSARY, Adversary
from .bus import Edge, Envelope, MessageBus
from .scenario import (
    PAYMENT_START,
    ChannelOutcome,
    Mode,
    RunTrace,
    ScenarioConfig,
    Strategy,
    UpdateRecord,
    is_online,
)

logger = logging.getLogger(__name__)

WATCHTOWER = "WT"


class ScenarioRunner:
    def __init__(self, config: ScenarioConfig, base_config: Config | None = None) -> None:
        self.base = base_config or Config()
        self.config = config.resolve(self.base)
        cfg = self.config
        assert cfg.t is not None and cfg.T is not None and cfg.t_fast is not None
        assert cfg.n is not None and cfg.period is not None and cfg.max_blocks is not None
        self.t, self.T, self.t_fast, self.n = cfg.t, cfg.T, cfg.t_fast, cfg.n
        self.period = cfg.period
        self.max_blocks = cfg.max_blocks

        self.chain = SimChain(cfg.seed)
        self.bus = MessageBus()
        self.adversary = Adversary.for_scenario(cfg)
        self.wt_keys = KeyPair.from_seed(f"watchtower:{cfg.seed}")
        self.wt_windows = list(cfg.availability.watchtower) + self.adversary.watchtower_windows(cfg)
        self.tower: Cid | None = None
        self.service: WatchtowerService | None = None
        self.channels: list[ChannelRun] = []
        self.blocks: list[dict[str, Any]] = []
        self.updates: list[UpdateRecord] = []
        self._by_cid: dict[Cid, ChannelRun] = {}
        self._actions: list[dict[str, Any]] = []
        self.adversary.install(self)

    # ---- actors ----------------------------------------------------------------

    @property
    def watchtower_mode(self) -> bool:
        return self.config.mode is Mode.WATCHTOWER

    def watchtower_always_online(self) -> bool:
        return not self.wt_windows

    def online(self, actor: str, height: int) -> bool:
        if actor == WATCHTOWER:
            return self.service is not None and self.service.is_online(height)
        if actor == ADVERSARY:
            return True
        return is_online(self.config.availability.windows(actor), height)

    def honest(self, role: str) -> bool:
        return role != self.config.adversarial_party()

    def _act(self, actor: str, action: str, ch: ChannelRun | None = None, **fields: Any) -> None:
        record: dict[str, Any] = {"actor": actor, "action": action}
        if ch is not None:
            record["channel"] = ch.index
        record.update(fields)
        self._actions.append(record)

    def _channel_contract(self, ch: ChannelRun) -> ChannelContract:
        return self.chain.contract_as(ch.cid, ChannelContract)

    def _assertion_contract(self, ch: ChannelRun) -> AssertionChannelContract:
        return self.chain.contract_as(ch.cid, AssertionChannelContract)

    def _tower(self) -> TowerContract:
        assert self.tower is not None
        return self.chain.contract_as(self.tower, TowerContract)

    # ---- main loop -------------------------------------------------------------

    def run(self) -> RunTrace:
        logger.info(
            "running %s (seed %d, %s mode, %d channel(s))",
            self.config.name,
            self.config.seed,
            self.config.mode.value,
            self.config.channels,
        )
        while self.chain.height < self.max_blocks:
            self.step()
            if self.done():
                break
        else:
            logger.warning("stopped at max_blocks=%d", self.max_blocks)
        return self.trace()

    def step(self) -> Block:
        h = self.chain.height
        self._actions = []
        if h == 0:
            self._deploy()
        elif h == 1:
            self._register_counterparties()
        elif h == 2:
            self._open_channels()
        if self.service is not None:
            self._watchtower_round(h)
        self._pump(h)
        if h >= PAYMENT_START:
            for ch in self.channels:
                self._party_round(ch, h)
        self._actions.extend(self.adversary.act(self, h))
        self._pump(h)
        block = self.chain.mine_block()
        self._after_block(block)
        return block

    def done(self) -> bool:
        if self.chain.height <= PAYMENT_START:
            return False
        close_scheduled = self.config.close is not None
        return all(ch.settled(close_scheduled) for ch in self.channels)

    # ---- setup -----------------------------------------------------------------

    def _deploy(self) -> None:
        cfg = self.config
        if self.watchtower_mode:
            tower = self.chain.deploy(TowerContract, self.wt_keys.public, self.wt_keys.public)
            self.tower = tower.address
            snapshot = None
            if self.base.watchtower.snapshot_path:
                snapshot = SnapshotStore(self.base.watchtower.snapshot_path)
                snapshot.reset()
            self.service = WatchtowerService(
                self.wt_keys,
                self.chain,
                tower.address,
                self.period,
                offline=[(w.start, w.until) for w in self.wt_windows],
                min_deposit=self.base.watchtower.min_deposit,
                fault=FaultMode.CONFIRM_ALL if cfg.adversary is Strategy.CORRUPT_WT else FaultMode.HONEST,
                snapshot=snapshot,
                submit_empty_updates=self.base.watchtower.submit_empty_updates,
            )

        heights = cfg.payment_heights()
        for i in range(cfg.channels):
            keys = {role: KeyPair.from_seed(f"{cfg.seed}:{role}{i}") for role in ROLES}
            pk_a = keys["A"].public
            self.chain.mint(pk_a, cfg.deposits.A)
            self.chain.mint(keys["B"].public, cfg.deposits.B)
            if self.watchtower_mode:
                assert self.tower is not None
                contract: ChannelContract | AssertionChannelContract = self.chain.deploy(
                    ChannelContract, pk_a, Timeouts(self.t, self.T)
                )
                self.chain.submit_tx(
                    pk_a, contract.address, "setup", self.tower, self.wt_keys.public, value=cfg.deposits.A
                )
                assert cfg.customer is not None
                customer = keys[cfg.customer].public
                self.chain.mint(customer, cfg.tower_deposit)
                self.chain.submit_tx(
                    customer, self.tower, "deposit", contract.address, value=cfg.tower_deposit
                )
            else:
                contract = self.chain.deploy(
                    AssertionChannelContract, pk_a, FreshnessPolicy(self.n, self.t_fast, self.T)
                )
                self.chain.submit_tx(pk_a, contract.address, "setup", value=cfg.deposits.A)
            ch = ChannelRun(
                index=i,
                cid=contract.address,
                keys=keys,
                outcome=ChannelOutcome(contract.address.hex(), 0),
                script=deque(ScheduledPayment(at, p) for at, p in zip(heights, cfg.payments)),
            )
            self.channels.append(ch)
            self._by_cid[ch.cid] = ch
            self._act("A", "setup", ch, cid=ch.cid.hex(), deposit=cfg.deposits.A)

    def _register_counterparties(self) -> None:
        for ch in self.channels:
            self.chain.submit_tx(ch.keys["B"].public, ch.cid, "deposit", value=self.config.deposits.B)
            self._act("B", "deposit", ch, deposit=self.config.deposits.B)

    def _open_channels(self) -> None:
        cfg = self.config
        for ch in self.channels:
            a, b = ch.keys["A"], ch.keys["B"]
            if self.watchtower_mode:
                ledger_a, ledger_b = open_channel(
                    ch.cid,
                    a,
                    b,
                    cfg.deposits.A,
                    cfg.deposits.B,
                    self.wt_keys.public,
                    NonceSource(f"{cfg.seed}:nonce:A{ch.index}"),
                    NonceSource(f"{cfg.seed}:nonce:B{ch.index}"),
                    self.base.harness.history_limit,
                )
                ch.ledgers = {"A": ledger_a, "B": ledger_b}
                genesis = ledger_a.latest
                self.bus.register_secret(genesis.state, genesis.r)
                self.bus.send("A", WATCHTOWER, Edge.P_TO_WT, ledger_a.submission().encode())
            else:
                anchor = self.chain.head.hash
                assertion_a, assertion_b = open_assertion_channel(
                    ch.cid, a, b, cfg.deposits.A, cfg.deposits.B, anchor, self._recognizes, self._recognizes
                )
                ch.assertion_ledgers = {"A": assertion_a, "B": assertion_b}
            self._act("A", "open", ch)

    def _recognizes(self, anchor: bytes) -> bool:
        return self.chain.height_of(anchor) is not None

    # ---- message delivery --------------------------------------------------------

    def _pump(self, h: int) -> None:
        while batch := self.bus.deliverable(lambda actor: self.online(actor, h)):
            for envelope in batch:
                self._deliver(envelope)

    def _deliver(self, envelope: Envelope) -> None:
        if envelope.dst == WATCHTOWER:
            self._watchtower_receive(envelope)
            return
        try:
            message = decode_message(envelope.data)
        except WireFormatError as e:
            logger.warning("%s dropped an undecodable message: %s", envelope.dst, e)
            return
        ch = self._by_cid.get(message.cid)
        if ch is None:
            logger.warning("%s got a message for unknown cid=%s", envelope.dst, short_hex(message.cid))
            return
        role = envelope.dst
        try:
            if isinstance(message, CounterSignature):
                ch.ledgers[role].complete_payment(message)
            elif isinstance(message, PaymentProposal):
                self._accept_payment(ch, role, envelope.src, message)
            elif isinstance(message, WatchtowerReceipt):
                self._store_receipt(ch, role, message)
            elif isinstance(message, ShortLivedAssertion):
                self._receive_assertion(ch, role, envelope.src, message)
        except (PaymentError, AssertionRejected) as e:
            logger.warning("%s rejected a message on cid=%s: %s", role, short_hex(ch.cid), e)
            self._act(role, "reject", ch, reason=str(e))

    def _accept_payment(self, ch: ChannelRun, role: str, src: str, proposal: PaymentProposal) -> None:
        counter, submission = ch.ledgers[role].accept_payment(proposal)
        self.bus.send(role, src, Edge.P_TO_P, counter.encode())
        if self.service is not None:
            self.bus.send(role, WATCHTOWER, Edge.P_TO_WT, submission.encode())

    def _store_receipt(self, ch: ChannelRun, role: str, receipt: WatchtowerReceipt) -> None:
        ledger = ch.ledgers[role]
        if receipt.idx != ledger.idx:
            # superseded while queued; the receipt for the newer state follows
            logger.debug("%s skipped receipt idx %d at ledger idx %d", role, receipt.idx, ledger.idx)
            return
        ledger.store_receipt(receipt)

    def _receive_assertion(self, ch: ChannelRun, role: str, src: str, assertion: ShortLivedAssertion) -> None:
        ledger = ch.assertion_ledgers[role]
        own_slot = assertion.sig_a if role == "A" else assertion.sig_b
        if own_slot == EMPTY_SIGNATURE:
            signed = ledger.countersign(AssertionOffer.from_wire(assertion, payer_is_a=src == "A"))
            self.bus.send(role, src, Edge.ASSERTION, signed.encode())
        else:
            ledger.accept(assertion)

    def _watchtower_receive(self, envelope: Envelope) -> None:
        assert self.service is not None
        try:
            receipt = self.service.ingest(envelope.data)
        except IngestRejected as e:
            accepted = False
            logger.debug("watchtower rejected a submission from %s: %s", envelope.src, e)
            self._act(WATCHTOWER, "reject", reason=e.reason, sender=envelope.src)
        else:
            accepted = True
            encoded = receipt.encode()
            for role in ROLES:
                self.bus.send(WATCHTOWER, role, Edge.WT_TO_P, encoded)
        if envelope.src == ADVERSARY:
            self.adversary.on_ingest_result(envelope.data, accepted)

    # ---- watchtower ----------------------------------------------------------------

    def _watchtower_round(self, h: int) -> None:
        assert self.service is not None
        if not self.service.is_online(h):
            return
        for ch in self.channels:
            if ch.opened and ch.cid not in self.service.records:
                self.service.employ(ch.cid)
        tx_id = self.service.tick(h)
        if tx_id is not None:
            confs = self.chain.transaction(tx_id).args[0]
            self._act(WATCHTOWER, "update", tx=tx_id, m=len(confs))

    # ---- parties ------------------------------------------------------------------

    def _party_round(self, ch: ChannelRun, h: int) -> None:
        if ch.finalized:
            if self.watchtower_mode:
                self._maybe_challenge(ch, h)
            return
        if ch.close_tx is None and not ch.closing:
            self._run_payments(ch, h)
            self._maybe_close(ch, h)
            return
        if ch.closing:
            self._maybe_dispute(ch, h)
            self._maybe_payout(ch, h)

    def _run_payments(self, ch: ChannelRun, h: int) -> None:
        while ch.script and ch.script[0].at <= h:
            payment = ch.script[0].payment
            payee = peer_of(payment.payer)
            if not (self.online(payment.payer, h) and self.online(payee, h) and ch.idle()):
                # postponed to a later round, keeping script order
                return
            ch.script.popleft()
            self._pay(ch, payment.payer, payment.amount)
            self._pump(h)

    def _pay(self, ch: ChannelRun, payer: str, amount: int) -> None:
        payee = peer_of(payer)
        try:
            if self.watchtower_mode:
                proposal = ch.ledgers[payer].propose_payment(amount)
                self.bus.register_secret(proposal.state, proposal.r)
                self.bus.send(payer, payee, Edge.P_TO_P, proposal.encode())
                idx = proposal.state.idx
            else:
                offer = ch.assertion_ledgers[payer].offer(amount, self.chain.head.hash)
                self.bus.send(payer, payee, Edge.ASSERTION, offer.to_wire(payer == "A").encode())
                idx = offer.state.idx
        except (PaymentError, AssertionRejected) as e:
            logger.warning("payment on cid=%s failed: %s", short_hex(ch.cid), e)
            self._act(payer, "payment-failed", ch, reason=str(e))
            return
        ch.payments_made += 1
        self._act(payer, "pay", ch, amount=amount, idx=idx)

    def _close_idx(self, role: str, latest: int) -> int:
        close = self.config.close
        if close is not None and close.idx is not None:
            return min(close.idx, latest)
        if not self.honest(role):
            return self.adversary.choose_close_idx(latest)
        return latest

    def _maybe_close(self, ch: ChannelRun, h: int) -> None:
        close_at = self.config.close_height()
        closer = self.config.closer
        if close_at is None or h < close_at or not self.online(closer, h):
            return
        if ch.script:
            ch.payments_dropped += len(ch.script)
            self._act(closer, "payments-dropped", ch, count=len(ch.script))
            ch.script.clear()
        sender = ch.keys[closer].public
        idx = self._close_idx(closer, ch.state_of(closer).idx)
        if self.watchtower_mode:
            ledger = ch.ledgers[closer]
            signed = ledger.signed_state(idx) or ledger.latest
            ch.close_tx = self.chain.submit_tx(
                sender, ch.cid, "close", signed.state, signed.r, signed.sig_a, signed.sig_b
            )
            state = signed.state
        else:
            assertion_ledger = ch.assertion_ledgers[closer]
            assertion = assertion_ledger.assertion_at(idx) or assertion_ledger.latest
            ch.close_tx = self.chain.submit_tx(
                sender,
                ch.cid,
                "close_with_assertion",
                assertion.state,
                assertion.anchor,
                assertion.sig_a,
                assertion.sig_b,
            )
            state = assertion.state
        ch.outcome.close_idx = state.idx
        self._act(closer, "close", ch, idx=state.idx)

    def _contract_view(self, ch: ChannelRun) -> tuple[Flag, int, int]:
        """(flag, closing idx, end) of either contract kind."""
        contract: ChannelContract | AssertionChannelContract
        if self.watchtower_mode:
            contract = self._channel_contract(ch)
        else:
            contract = self._assertion_contract(ch)
        idx = contract.state.idx if contract.state is not None else -1
        return contract.flag, idx, contract.end

    def _maybe_dispute(self, ch: ChannelRun, h: int) -> None:
        if ch.dispute_tx is not None:
            return
        flag, on_chain_idx, end = self._contract_view(ch)
        # executes at h + 1, which must stay below end
        if flag is not Flag.DISPUTE or h + 1 >= end:
            return
        for role in ROLES:
            if not self.honest(role) or not self.online(role, h):
                continue
            if ch.state_of(role).idx <= on_chain_idx:
                continue
            sender = ch.keys[role].public
            if self.watchtower_mode:
                signed = ch.ledgers[role].latest
                ch.dispute_tx = self.chain.submit_tx(
                    sender, ch.cid, "dispute", signed.state, signed.r, signed.sig_a, signed.sig_b
                )
            else:
                assertion = ch.assertion_ledgers[role].latest
                ch.dispute_tx = self.chain.submit_tx(
                    sender,
                    ch.cid,
                    "dispute_with_assertion",
                    assertion.state,
                    assertion.anchor,
                    assertion.sig_a,
                    assertion.sig_b,
                )
            self._act(role, "dispute", ch, idx=ch.state_of(role).idx)
            return

    def _maybe_payout(self, ch: ChannelRun, h: int) -> None:
        if ch.payout_tx is not None:
            return
        flag, _, end = self._contract_view(ch)
        if flag is not Flag.DISPUTE:
            return
        ready = h + 1 > end if self.watchtower_mode else h + 1 >= end
        if not ready:
            return
        for role in sorted(ROLES, key=lambda r: not self.honest(r)):
            if not self.online(role, h):
                continue
            sender = ch.keys[role].public
            if self.watchtower_mode:
                state = self._channel_contract(ch).state
                ch.payout_tx = self.chain.submit_tx(sender, ch.cid, "payout", state, True)
            else:
                state = self._assertion_contract(ch).state
                ch.payout_tx = self.chain.submit_tx(sender, ch.cid, "payout", state)
            self._act(role, "payout", ch)
            return

    def _maybe_challenge(self, ch: ChannelRun, h: int) -> None:
        if not ch.awaiting_challenge or ch.challenge_tx is not None:
            return
        customer = self.config.customer
        assert customer is not None
        contract = self._channel_contract(ch)
        if not self.online(customer, h) or h + 1 <= contract.end:
            return
        ledger = ch.ledgers[customer]
        receipt = ledger.receipt
        signed = ledger.signed_state(receipt.idx) if receipt is not None else None
        if receipt is None or signed is None:
            ch.awaiting_challenge = False
            return
        ch.deposit_before_challenge = self._tower().deposit_of(ch.cid)
        ch.challenge_tx = self.chain.submit_tx(
            ch.keys[customer].public, ch.cid, "challenge", signed.state, signed.r, receipt.sig_wt
        )
        self._act(customer, "challenge", ch, idx=receipt.idx)

    # ---- after each block ---------------------------------------------------------

    def _after_block(self, block: Block) -> None:
        h = block.height
        receipts = self.chain.receipts_at(h)
        events = self.chain.events_at(h)
        if self.service is not None:
            ours = set(self.service.update_txs)
            for receipt in receipts:
                if receipt.tx_id in ours:
                    confs: ConfirmationSet = self.chain.transaction(receipt.tx_id).args[0]
                    self.updates.append(UpdateRecord(h, len(confs), len(confs.bitmap()), receipt.ok))
        for event in events:
            ch = self._by_cid.get(event.cid)
            if ch is not None and not ch.closing:
                ch.closing = True
                ch.outcome.close_height = h
        for ch in self.channels:
            if ch.closing and not ch.finalized and self._contract_view(ch)[0] is Flag.NONE:
                self._finalize(ch, h, receipts)
            self._settle_txs(ch, receipts)
        self.blocks.append(
            {
                "schema": self.base.harness.trace_schema,
                "height": h,
                "hash": block.hash.hex(),
                "parent_hash": block.parent_hash.hex(),
                "txs": [self.chain.transaction(tx_id).to_json() for tx_id in block.included_tx_ids],
                "receipts": [receipt.to_json() for receipt in receipts],
                "events": [event.to_json() for event in events],
                "actions": self._actions,
            }
        )

    def _settle_txs(self, ch: ChannelRun, receipts: list[Receipt]) -> None:
        by_id = {receipt.tx_id: receipt for receipt in receipts}
        slots: tuple[TxSlot, ...] = ("close_tx", "dispute_tx", "payout_tx")
        for slot in slots:
            tx_id = getattr(ch, slot)
            receipt = by_id.get(tx_id) if tx_id is not None else None
            if receipt is None:
                continue
            if slot != "close_tx" or not receipt.ok:
                setattr(ch, slot, None)
            if not receipt.ok:
                logger.debug("%s on cid=%s reverted: %s", receipt.method, short_hex(ch.cid), receipt.reason)
        if ch.challenge_tx is not None and ch.challenge_tx in by_id:
            receipt = by_id[ch.challenge_tx]
            ch.outcome.refund = ch.deposit_before_challenge - self._tower().deposit_of(ch.cid)
            ch.awaiting_challenge = False
            ch.challenge_tx = None
            if not receipt.ok:
                logger.warning("challenge on cid=%s reverted: %s", short_hex(ch.cid), receipt.reason)

    def _finalize(self, ch: ChannelRun, h: int, receipts: list[Receipt]) -> None:
        ch.finalized = True
        out = ch.outcome
        out.payout_height = h
        out.latest_idx = ch.latest_idx()
        party_paid = any(r.ok and r.tx_id == ch.payout_tx for r in receipts)
        out.finalized_by = "party" if party_paid or not self.watchtower_mode else "watchtower"

        if self.watchtower_mode:
            contract = self._channel_contract(ch)
            out.perc = str(contract.perc)
            assert self.service is not None
            record = self.service.records.get(ch.cid)
            ch.wt_record_idx = record.idx if record is not None else None
            final = contract.state
        else:
            assertion_contract = self._assertion_contract(ch)
            out.fast_path = assertion_contract.fast
            final = assertion_contract.state
        assert final is not None
        out.final_state = final.to_json()

        adversarial = self.config.adversarial_party()
        if adversarial is not None:
            latest = ch.latest_state()
            if adversarial == "A":
                out.adversary_gain = final.bal_a - latest.bal_a
            else:
                out.adversary_gain = final.bal_b - latest.bal_b

        if self.watchtower_mode:
            self._plan_challenge(ch, final.idx)
        logger.info(
            "channel %d finalized at height %d with idx %d (%s)",
            ch.index,
            h,
            final.idx,
            out.finalized_by,
        )

    def _plan_challenge(self, ch: ChannelRun, final_idx: int) -> None:
        """The customer challenges only when the contract would pay it something."""
        customer = self.config.customer
        assert customer is not None
        if not self.honest(customer):
            return
        receipt = ch.ledgers[customer].receipt
        if receipt is None:
            return
        contract = self._channel_contract(ch)
        deposit = self._tower().deposit_of(ch.cid)
        wrongly_closed = receipt.idx > final_idx
        if wrongly_closed or contract.is_rspd is False:
            expected = deposit
        elif contract.perc > 0:
            share = min(contract.perc, Fraction(1))
            expected = deposit * share.numerator // share.denominator
        else:
            return
        ch.awaiting_challenge = True
        ch.expected_refund = expected

    # ---- results -------------------------------------------------------------------

    def balances(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for ch in self.channels:
            out[f"A{ch.index}"] = self.chain.balance_of(ch.keys["A"].public)
            out[f"B{ch.index}"] = self.chain.balance_of(ch.keys["B"].public)
            out[f"channel{ch.index}"] = self.chain.balance_of(ch.cid)
        if self.tower is not None:
            out["tower"] = self.chain.balance_of(self.tower)
        out[ADVERSARY] = self.chain.balance_of(self.adversary.keys.public)
        return out

    def trace(self) -> RunTrace:
        service = self.service
        result = RunTrace(
            config=self.config,
            blocks=self.blocks,
            channels=[ch.outcome for ch in self.channels],
            wire=self.bus.wire_report(),
            storage_bytes=service.storage_bytes() if service is not None else 0,
            records=len(service.records) if service is not None else 0,
            updates=self.updates,
            balances=self.balances(),
        )
        result.checks = checks.run_checks(self)
        for check in result.failed_checks:
            logger.warning("check %s failed: %s", check.name, check.detail)
        return result


def run_scenario(config: ScenarioConfig, base_config: Config | None = None) -> RunTrace:
    """Execute one scenario deterministically; invalid configs raise before any block is mined."""
    return ScenarioRunner(config, base_config).run()
