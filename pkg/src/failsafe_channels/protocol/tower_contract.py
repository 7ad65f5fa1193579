"""The watchtower's on-chain contract and its confirmation bitmap."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .chain import Contract, Msg, SimChain, external
from .errors import RevertReason, WireFormatError, require
from .types import ChannelState, Cid, PublicKey, short_hex

logger = logging.getLogger(__name__)

CONFS_MAX = 0xFFFF


@dataclass(frozen=True)
class ConfirmationSet:
    """Bit j answers the j-th pending closure; 1 releases funds, 0 extends the wait."""

    bits: tuple[bool, ...] = ()

    def __post_init__(self) -> None:
        if len(self.bits) > CONFS_MAX:
            raise WireFormatError(f"confirmation set too long: {len(self.bits)}")

    @classmethod
    def from_bits(cls, bits: Iterable[int | bool]) -> ConfirmationSet:
        return cls(tuple(bool(b) for b in bits))

    def __len__(self) -> int:
        return len(self.bits)

    def __getitem__(self, j: int) -> bool:
        return self.bits[j]

    def __iter__(self) -> Iterator[bool]:
        return iter(self.bits)

    def bitmap(self) -> bytes:
        out = bytearray((len(self.bits) + 7) // 8)
        for j, bit in enumerate(self.bits):
            if bit:
                out[j // 8] |= 0x80 >> (j % 8)
        return bytes(out)

    def to_bytes(self) -> bytes:
        """2-byte big-endian m ∥ ceil(m/8) bitmap bytes, MSB first"""
        return len(self.bits).to_bytes(2, "big") + self.bitmap()

    @classmethod
    def from_bytes(cls, data: bytes) -> ConfirmationSet:
        if len(data) < 2:
            raise WireFormatError("confirmation set shorter than its length prefix")
        m = int.from_bytes(data[:2], "big")
        body = data[2:]
        if len(body) != (m + 7) // 8:
            raise WireFormatError(f"bitmap for m={m} needs {(m + 7) // 8} bytes, got {len(body)}")
        bits = tuple(bool((body[j // 8] >> (7 - j % 8)) & 1) for j in range(m))
        decoded = cls(bits)
        if decoded.bitmap() != body:
            raise WireFormatError("non-zero padding bits in bitmap")
        return decoded


@dataclass
class CustomerAccount:
    customer: bytes
    deposit: int = 0


@dataclass
class PendingEntry:
    cids: list[Cid] = field(default_factory=list)
    states: list[ChannelState] = field(default_factory=list)
    position: dict[Cid, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.cids)

    def put(self, cid: Cid, state: ChannelState) -> None:
        j = self.position.get(cid)
        if j is None:
            self.position[cid] = len(self.cids)
            self.cids.append(cid)
            self.states.append(state)
        else:
            self.states[j] = state


class TowerContract(Contract):
    kind = "tower"

    def __init__(self, chain: SimChain, address: Cid, owner: PublicKey) -> None:
        super().__init__(chain, address)
        self.owner = owner
        self.balances: dict[Cid, CustomerAccount] = {}
        self.channels: dict[int, PendingEntry] = {}
        self.k = 0

    def pending(self, k: int | None = None) -> tuple[list[Cid], list[ChannelState]]:
        entry = self.channels.get(self.k if k is None else k)
        if entry is None:
            return [], []
        return list(entry.cids), list(entry.states)

    def deposit_of(self, cid: bytes) -> int:
        account = self.balances.get(Cid(bytes(cid)))
        return account.deposit if account else 0

    @external
    def deposit(self, msg: Msg, cid: Cid) -> None:
        require(msg.value > 0, RevertReason.ZERO_DEPOSIT)
        account = self.balances.setdefault(cid, CustomerAccount(msg.sender))
        account.customer = msg.sender
        account.deposit += msg.value

    @external
    def withdraw(self, msg: Msg, cid: Cid, victim: bytes, percentage: Fraction) -> None:
        require(msg.sender == cid, RevertReason.UNAUTHORIZED_CALLER)
        account = self.balances.get(cid)
        require(account is not None and account.customer == victim, RevertReason.VICTIM_MISMATCH)
        assert account is not None
        share = min(Fraction(percentage), Fraction(1))
        amount = account.deposit * share.numerator // share.denominator
        account.deposit -= amount
        self.chain.transfer(self.address, victim, amount)
        logger.debug("withdrew %d for %s (share %s)", amount, short_hex(cid), share)

    @external
    def close(self, msg: Msg, cid: Cid, state: ChannelState) -> None:
        require(msg.sender == cid, RevertReason.UNAUTHORIZED_CALLER)
        self.channels.setdefault(self.k, PendingEntry()).put(cid, state)

    @external
    def update(self, msg: Msg, confs: ConfirmationSet) -> None:
        require(msg.sender == self.owner, RevertReason.UNAUTHORIZED_CALLER)
        entry = self.channels.get(self.k)
        expected = len(entry) if entry else 0
        require(len(confs) == expected, RevertReason.CONFS_LENGTH, f"{len(confs)} != {expected}")
        self.k += 1
        self._respond(confs, self.k - 1)

    def _respond(self, confs: ConfirmationSet, n: int) -> None:
        entry = self.channels.get(n)
        if entry is not None:
            for cid, state, bit in zip(entry.cids, entry.states, confs):
                self.chain.try_call(self.address, cid, "payout", state, bit)
        self.channels.pop(n, None)

    def view(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "pending": len(self.channels.get(self.k) or ()),
            "deposits": {cid.hex(): acct.deposit for cid, acct in self.balances.items()},
        }
