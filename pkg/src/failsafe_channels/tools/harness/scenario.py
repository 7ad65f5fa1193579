"""Scenario files and run traces."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, Field, ValidationError, model_validator

from ...protocol.errors import ProtocolError
from ...shared.config import Config
from ...shared.utils import FileWriter

# block 1: setup and tower deposit, block 2: counterparty deposit
PAYMENT_START = 3


class ScenarioConfigError(ProtocolError):
    pass


class Mode(StrEnum):
    WATCHTOWER = "watchtower"
    SHORT_LIVED = "short-lived"


class Strategy(StrEnum):
    NONE = "none"
    STALE_CLOSER = "stale_closer"
    REPLAY_MITM = "replay_mitm"
    CONFS_TAMPERER = "confs_tamperer"
    SILENT_WT = "silent_wt"
    CORRUPT_WT = "corrupt_wt"


Party = Literal["A", "B"]


class Window(BaseModel):
    """Offline interval of block heights, both ends inclusive."""

    start: int = Field(ge=0)
    until: int = Field(ge=0)

    @model_validator(mode="after")
    def check_order(self) -> Window:
        if self.until < self.start:
            raise ValueError(f"window ends ({self.until}) before it starts ({self.start})")
        return self

    def covers(self, height: int) -> bool:
        return self.start <= height <= self.until


class Availability(BaseModel):
    A: list[Window] = Field(default_factory=list)
    B: list[Window] = Field(default_factory=list)
    watchtower: list[Window] = Field(default_factory=list)

    def windows(self, actor: str) -> list[Window]:
        return list(getattr(self, actor))


def is_online(windows: list[Window], height: int) -> bool:
    return not any(w.covers(height) for w in windows)


class Payment(BaseModel):
    payer: Party = "A"
    amount: int = Field(gt=0)
    at: int | None = Field(default=None, ge=PAYMENT_START)


class CloseSpec(BaseModel):
    by: Party = "A"
    at: int | None = Field(default=None, ge=PAYMENT_START)
    idx: int | None = Field(default=None, ge=0, description="state to close with; latest when unset")


class Deposits(BaseModel):
    A: int = Field(default=10, ge=0)
    B: int = Field(default=0, ge=0)


class ScenarioConfig(BaseModel):
    name: str = "scenario"
    seed: int = 0
    mode: Mode = Mode.WATCHTOWER
    t: int | None = Field(default=None, ge=1)
    T: int | None = Field(default=None, ge=1)
    t_fast: int | None = Field(default=None, ge=1)
    n: int | None = Field(default=None, ge=1)
    period: int | None = Field(default=None, ge=1)
    deposits: Deposits = Field(default_factory=Deposits)
    tower_deposit: int = Field(default=100, ge=1)
    customer: Party | None = None
    payments: list[Payment] = Field(default_factory=list)
    close: CloseSpec | None = None
    availability: Availability = Field(default_factory=Availability)
    adversary: Strategy = Strategy.NONE
    channels: int = Field(default=1, ge=1)
    max_blocks: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def check_script(self) -> ScenarioConfig:
        bal = {"A": self.deposits.A, "B": self.deposits.B}
        for j, payment in enumerate(self.payments):
            payee = "B" if payment.payer == "A" else "A"
            if bal[payment.payer] < payment.amount:
                raise ValueError(f"payment {j} overdraws {payment.payer}")
            bal[payment.payer] -= payment.amount
            bal[payee] += payment.amount
        if self.close is not None and self.close.idx is not None and self.close.idx > len(self.payments):
            raise ValueError(f"close idx {self.close.idx} beyond the {len(self.payments)} scripted payments")
        if self.mode is Mode.SHORT_LIVED and self.adversary in (
            Strategy.REPLAY_MITM,
            Strategy.CONFS_TAMPERER,
            Strategy.SILENT_WT,
            Strategy.CORRUPT_WT,
        ):
            raise ValueError(f"{self.adversary.value} needs a watchtower")
        return self

    def resolve(self, config: Config | None = None) -> ScenarioConfig:
        """Fill unset timing fields from the loaded configuration."""
        config = config or Config()
        t = self.t if self.t is not None else config.protocol.t
        filled = self.model_copy(
            update={
                "t": t,
                "T": self.T if self.T is not None else config.protocol.T,
                "t_fast": self.t_fast if self.t_fast is not None else config.protocol.t_fast,
                "n": self.n if self.n is not None else config.protocol.n,
                "period": self.period if self.period is not None else (
                    config.watchtower.period or max(1, t // 16)
                ),
                "max_blocks": self.max_blocks or config.harness.max_blocks,
                "customer": self.customer or self._default_customer(),
            }
        )
        filled.check_assumptions()
        return filled

    def _default_customer(self) -> Party:
        if self.adversary in (Strategy.STALE_CLOSER, Strategy.CORRUPT_WT) and self.closer == "A":
            return "B"
        return "A"

    @property
    def closer(self) -> Party:
        return self.close.by if self.close is not None else "A"

    def payment_heights(self) -> list[int]:
        heights: list[int] = []
        nxt = PAYMENT_START
        for payment in self.payments:
            at = payment.at if payment.at is not None else nxt
            heights.append(at)
            nxt = max(nxt, at) + 1
        return heights

    def close_height(self) -> int | None:
        if self.close is None:
            return None
        if self.close.at is not None:
            return self.close.at
        heights = self.payment_heights()
        return (max(heights) + 1) if heights else PAYMENT_START

    def adversarial_party(self) -> Party | None:
        if self.adversary in (Strategy.STALE_CLOSER, Strategy.CORRUPT_WT):
            return self.closer
        return None

    def check_assumptions(self) -> None:
        """Reject configs where an honest party sleeps through a whole dispute window."""
        assert self.t is not None and self.T is not None and self.t_fast is not None
        if self.period is not None and self.mode is Mode.WATCHTOWER and self.period >= self.t:
            raise ScenarioConfigError(f"period {self.period} must be shorter than t={self.t}")
        if self.mode is Mode.SHORT_LIVED and self.t_fast >= self.T:
            raise ScenarioConfigError(f"t_fast={self.t_fast} must be smaller than T={self.T}")
        close = self.close_height()
        if close is None:
            return
        if self.mode is Mode.WATCHTOWER:
            last = close + self.t + self.T - 1
        elif self.t_fast >= 2:
            last = close + self.t_fast - 1
        else:
            return
        for party in ("A", "B"):
            if party == self.adversarial_party():
                continue
            windows = self.availability.windows(party)
            if not any(is_online(windows, h) for h in range(close + 1, last + 1)):
                raise ScenarioConfigError(
                    f"party {party} is offline for all of ({close}, {last + 1}]; "
                    "parties must come online at least once per dispute window"
                )


def load_scenario(path: Path | str) -> ScenarioConfig:
    try:
        data = FileWriter.read_json(path)
    except (OSError, json.JSONDecodeError) as e:
        raise ScenarioConfigError(f"cannot read scenario {path}: {e}") from e
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise ScenarioConfigError(str(e)) from e


@dataclass
class ChannelOutcome:
    cid: str
    latest_idx: int
    close_height: int | None = None
    close_idx: int | None = None
    final_state: list[int] | None = None
    payout_height: int | None = None
    finalized_by: str | None = None
    perc: str = "0"
    refund: int = 0
    adversary_gain: int = 0
    fast_path: bool | None = None

    @property
    def blocks_to_payout(self) -> int | None:
        if self.close_height is None or self.payout_height is None:
            return None
        return self.payout_height - self.close_height

    def to_json(self) -> dict[str, Any]:
        return {
            "cid": self.cid,
            "latest_idx": self.latest_idx,
            "close_height": self.close_height,
            "close_idx": self.close_idx,
            "final_state": self.final_state,
            "payout_height": self.payout_height,
            "blocks_to_payout": self.blocks_to_payout,
            "finalized_by": self.finalized_by,
            "perc": self.perc,
            "refund": self.refund,
            "adversary_gain": self.adversary_gain,
            "fast_path": self.fast_path,
        }


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class UpdateRecord:
    height: int
    m: int
    bitmap_bytes: int
    ok: bool


@dataclass
class RunTrace:
    config: ScenarioConfig
    blocks: list[dict[str, Any]] = field(default_factory=list)
    channels: list[ChannelOutcome] = field(default_factory=list)
    wire: dict[str, dict[str, Any]] = field(default_factory=dict)
    storage_bytes: int = 0
    records: int = 0
    updates: list[UpdateRecord] = field(default_factory=list)
    balances: dict[str, int] = field(default_factory=dict)
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failed_checks(self) -> list[CheckResult]:
        return [check for check in self.checks if not check.passed]

    @property
    def final_height(self) -> int:
        return self.blocks[-1]["height"] if self.blocks else 0

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(block, sort_keys=True, separators=(",", ":")) + "\n" for block in self.blocks
        )

    def digest(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode()).hexdigest()

    def write(self, path: Path | str) -> Path:
        return FileWriter.write_jsonl(path, self.blocks)
