"""Adversary strategies injected into the message layer or the chain."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

from ...protocol.crypto import KeyPair
from ...protocol.errors import RevertReason
from ...protocol.tower_contract import ConfirmationSet, TowerContract
from .bus import Edge, Envelope
from .scenario import ScenarioConfig, Strategy, Window

if TYPE_CHECKING:
    from .runner import ScenarioRunner

logger = logging.getLogger(__name__)

ADVERSARY = "M"
# h_s starts right after the tagged cid in a submission
_H_S_OFFSET = 20


@dataclass
class Adversary:
    strategy: Strategy
    keys: KeyPair
    intercepted: list[Envelope] = field(default_factory=list)
    forged: set[bytes] = field(default_factory=set)
    tampered_sent: int = 0
    tampered_rejected: int = 0
    tampered_accepted: int = 0
    replays_sent: int = 0
    update_txs: list[int] = field(default_factory=list)
    forged_entries: set[int] = field(default_factory=set)

    @classmethod
    def for_scenario(cls, config: ScenarioConfig) -> Adversary:
        return cls(config.adversary, KeyPair.from_seed(f"mallory:{config.seed}"))

    def install(self, runner: ScenarioRunner) -> None:
        if self.strategy is Strategy.REPLAY_MITM:
            runner.bus.tap(self._intercept)

    def _intercept(self, envelope: Envelope) -> None:
        if envelope.edge is Edge.P_TO_WT and envelope.src != ADVERSARY:
            self.intercepted.append(envelope)

    def watchtower_windows(self, config: ScenarioConfig) -> list[Window]:
        """Silent watchtower: offline from the close until its update lands at ddl + T/2."""
        if self.strategy is not Strategy.SILENT_WT:
            return []
        close = config.close_height()
        if close is None:
            return []
        assert config.t is not None and config.T is not None
        ddl = close + 1 + config.t
        respond_at = ddl + config.T // 2
        # the tick at height h is mined in block h + 1
        return [Window(start=close + 1, until=respond_at - 2)]

    def choose_close_idx(self, latest_idx: int) -> int:
        if self.strategy in (Strategy.STALE_CLOSER, Strategy.CORRUPT_WT):
            return max(0, latest_idx - 1)
        return latest_idx

    def act(self, runner: ScenarioRunner, height: int) -> list[dict[str, Any]]:
        """Play one round of the configured strategy; returns the trace actions."""
        if self.strategy is Strategy.REPLAY_MITM:
            return self._replay(runner)
        if self.strategy is Strategy.CONFS_TAMPERER:
            return self._tamper_confs(runner)
        return []

    def _replay(self, runner: ScenarioRunner) -> list[dict[str, Any]]:
        actions: list[dict[str, Any]] = []
        batch, self.intercepted = self.intercepted, []
        for envelope in batch:
            altered = bytearray(envelope.data)
            altered[_H_S_OFFSET] ^= 0x01
            self.forged.add(bytes(altered))
            runner.bus.send(ADVERSARY, envelope.dst, Edge.P_TO_WT, bytes(altered), tapped=False)
            runner.bus.send(ADVERSARY, envelope.dst, Edge.P_TO_WT, envelope.data, tapped=False)
            self.tampered_sent += 1
            self.replays_sent += 1
            actions.append({"actor": ADVERSARY, "action": "replay", "victim": envelope.src})
        return actions

    def on_ingest_result(self, data: bytes, accepted: bool) -> None:
        """Tally the watchtower's answer to a message this adversary injected."""
        if bytes(data) not in self.forged:
            return
        if accepted:
            self.tampered_accepted += 1
            logger.error("watchtower accepted a tampered submission")
        else:
            self.tampered_rejected += 1

    def _tamper_confs(self, runner: ScenarioRunner) -> list[dict[str, Any]]:
        if runner.tower is None:
            return []
        tower = runner.chain.contract_as(runner.tower, TowerContract)
        cids, _ = tower.pending()
        if not cids or tower.k in self.forged_entries:
            return []
        self.forged_entries.add(tower.k)
        confs = ConfirmationSet.from_bits([1] * len(cids))
        tx_id = runner.chain.submit_tx(self.keys.public, runner.tower, "update", confs)
        self.update_txs.append(tx_id)
        return [{"actor": ADVERSARY, "action": "forge-update", "m": len(cids)}]

    def forged_updates_reverted(self, runner: ScenarioRunner) -> bool:
        for tx_id in self.update_txs:
            receipt = runner.chain.receipt(tx_id)
            if receipt is None or receipt.ok or receipt.reason != RevertReason.UNAUTHORIZED_CALLER.value:
                return False
        return True
