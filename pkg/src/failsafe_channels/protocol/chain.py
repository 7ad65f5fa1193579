"""Deterministic single-chain simulator.

Logical time is block height. Transactions queue FIFO and execute inside
`mine_block`; each one runs atomically against a journal that restores every
touched contract, account balance and event when the call reverts or its
arguments are malformed.
"""

from __future__ import annotations

import copy
import hashlib
import logging
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from enum import StrEnum
from fractions import Fraction
from typing import Any, ClassVar, TypeVar

from .errors import ChainError, ProtocolError, Revert, RevertReason, require
from .types import (
    CID_LEN,
    ChannelState,
    Cid,
    Digest,
    Nonce,
    ZERO_DIGEST,
    encode_state,
    encode_uint128,
    short_hex,
)

logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[..., Any])


def external(fn: F) -> F:
    """Mark a contract method as callable by transactions and other contracts."""
    fn.__external__ = True  # type: ignore[attr-defined]
    return fn


def derive_address(deployer: bytes, nonce: int) -> Cid:
    body = hashlib.sha256(b"contract" + deployer + nonce.to_bytes(8, "big")).digest()
    return Cid(b"\x00" + body[: CID_LEN - 1])


def encode_call_arg(value: Any) -> bytes:
    """Canonical bytes of one call argument (tx roots and calldata sizes)."""
    if isinstance(value, bool):
        return b"\x01" if value else b"\x00"
    if isinstance(value, int):
        return encode_uint128(value)
    if isinstance(value, (bytes, bytearray)):
        return bytes(value)
    if isinstance(value, ChannelState):
        return encode_state(value)
    if isinstance(value, Fraction):
        return encode_uint128(value.numerator) + encode_uint128(value.denominator)
    if isinstance(value, (tuple, list)):
        return b"".join(encode_call_arg(item) for item in value)
    if value is None:
        return b""
    to_bytes = getattr(value, "to_bytes", None)
    if callable(to_bytes):
        return bytes(to_bytes())
    raise ChainError(f"cannot encode call argument of type {type(value).__name__}")


class EventKind(StrEnum):
    CLOSURE = "Closure"
    DISPUTE = "Dispute"


class TxStatus(StrEnum):
    OK = "ok"
    REVERTED = "reverted"


@dataclass(frozen=True)
class Msg:
    sender: bytes
    value: int = 0


@dataclass(frozen=True)
class Transaction:
    tx_id: int
    sender: bytes
    to: Cid
    method: str
    args: tuple[Any, ...]
    value: int = 0

    @property
    def calldata(self) -> bytes:
        return self.method.encode() + b"".join(encode_call_arg(a) for a in self.args)

    def encoded_calldata(self) -> bytes | None:
        """Calldata, or None when an argument has no canonical encoding."""
        try:
            return self.calldata
        except ProtocolError:
            return None

    @property
    def tx_hash(self) -> Digest:
        calldata = self.encoded_calldata()
        return Digest(
            hashlib.sha256(
                self.tx_id.to_bytes(8, "big")
                + self.sender
                + self.to
                + encode_uint128(self.value)
                + (self.method.encode() if calldata is None else calldata)
            ).digest()
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "tx_id": self.tx_id,
            "sender": self.sender.hex(),
            "to": self.to.hex(),
            "method": self.method,
            "value": self.value,
            "calldata_bytes": len(self.encoded_calldata() or b""),
        }


@dataclass(frozen=True)
class Block:
    height: int
    hash: Digest
    parent_hash: Digest
    tx_root: Digest
    included_tx_ids: tuple[int, ...] = ()

    @staticmethod
    def compute_hash(parent_hash: bytes, height: int, tx_root: bytes) -> Digest:
        return Digest(hashlib.sha256(parent_hash + height.to_bytes(8, "big") + tx_root).digest())

    def to_json(self) -> dict[str, Any]:
        return {
            "height": self.height,
            "hash": self.hash.hex(),
            "parent_hash": self.parent_hash.hex(),
            "tx_root": self.tx_root.hex(),
            "txs": list(self.included_tx_ids),
        }


@dataclass(frozen=True)
class Event:
    kind: EventKind
    cid: Cid
    state: ChannelState
    r: Nonce | None
    block_height: int
    index: int
    anchor: Digest | None = None

    def to_json(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "kind": self.kind.value,
            "cid": self.cid.hex(),
            "state": self.state.to_json(),
            "r": self.r.hex() if self.r is not None else None,
            "block_height": self.block_height,
            "index": self.index,
        }
        if self.anchor is not None:
            record["anchor"] = self.anchor.hex()
        return record


@dataclass
class Receipt:
    tx_id: int
    block_height: int
    method: str
    status: TxStatus
    reason: str | None = None
    notes: list[str] = field(default_factory=list)
    calldata_bytes: int = 0

    @property
    def ok(self) -> bool:
        return self.status is TxStatus.OK

    def to_json(self) -> dict[str, Any]:
        return {
            "tx_id": self.tx_id,
            "method": self.method,
            "status": self.status.value,
            "reason": self.reason,
            "notes": list(self.notes),
            "calldata_bytes": self.calldata_bytes,
        }


class Contract:
    """Base class for simulated contracts; state lives in plain attributes."""

    kind: ClassVar[str] = "contract"
    _transient: ClassVar[frozenset[str]] = frozenset({"chain", "address"})

    def __init__(self, chain: SimChain, address: Cid) -> None:
        self.chain = chain
        self.address = address

    @property
    def now(self) -> int:
        return self.chain.now

    def emit(
        self,
        kind: EventKind,
        state: ChannelState,
        r: Nonce | None,
        anchor: Digest | None = None,
    ) -> Event:
        return self.chain._emit(kind, self.address, state, r, anchor)

    def snapshot_state(self) -> dict[str, Any]:
        return copy.deepcopy({k: v for k, v in vars(self).items() if k not in self._transient})

    def restore_state(self, snapshot: dict[str, Any]) -> None:
        vars(self).update(copy.deepcopy(snapshot))


@dataclass
class _Frame:
    events_len: int
    contracts: dict[Cid, dict[str, Any]] = field(default_factory=dict)
    balances: dict[bytes, int | None] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)


C = TypeVar("C", bound=Contract)


class SimChain:
    """Single-owner block producer; all contract mutation happens in `mine_block`."""

    def __init__(self, seed: int = 0) -> None:
        genesis_root = Digest(hashlib.sha256(b"genesis" + seed.to_bytes(8, "big")).digest())
        genesis = Block(
            height=0,
            hash=Block.compute_hash(ZERO_DIGEST, 0, genesis_root),
            parent_hash=ZERO_DIGEST,
            tx_root=genesis_root,
        )
        self.seed = seed
        self.blocks: list[Block] = [genesis]
        self.event_log: list[Event] = []
        self.contracts: dict[Cid, Contract] = {}
        self.balances: dict[bytes, int] = {}
        self._height_by_hash: dict[bytes, int] = {genesis.hash: 0}
        self._queue: list[Transaction] = []
        self._txs: dict[int, Transaction] = {}
        self._receipts: dict[int, Receipt] = {}
        self._next_tx_id = 0
        self._deploy_nonce = 0
        self._executing: int | None = None
        self._frames: list[_Frame] = []
        self._minted = 0

    # ---- time and blocks -------------------------------------------------

    @property
    def height(self) -> int:
        return self.blocks[-1].height

    @property
    def now(self) -> int:
        return self._executing if self._executing is not None else self.height

    @property
    def head(self) -> Block:
        return self.blocks[-1]

    def block_at(self, height: int) -> Block:
        if not 0 <= height <= self.height:
            raise ChainError(f"no block at height {height}")
        return self.blocks[height]

    def height_of(self, block_hash: bytes) -> int | None:
        return self._height_by_hash.get(bytes(block_hash))

    def recent_block_hashes(self, n: int) -> list[Digest]:
        """Hashes of the latest min(n, height+1) mined blocks, newest first."""
        if n < 1:
            raise ChainError(f"n must be >= 1, got {n}")
        return [block.hash for block in reversed(self.blocks[-n:])]

    # ---- setup helpers (outside transaction execution) -------------------

    def deploy(self, contract_cls: type[C], deployer: bytes, *args: Any, **kwargs: Any) -> C:
        address = derive_address(deployer, self._deploy_nonce)
        self._deploy_nonce += 1
        contract = contract_cls(self, address, *args, **kwargs)
        self.contracts[address] = contract
        self.balances.setdefault(address, 0)
        logger.debug("deployed %s at %s", contract_cls.kind, short_hex(address))
        return contract

    def mint(self, account: bytes, amount: int) -> None:
        if amount < 0:
            raise ChainError("cannot mint a negative amount")
        self.balances[account] = self.balances.get(account, 0) + amount
        self._minted += amount

    @property
    def total_minted(self) -> int:
        return self._minted

    def balance_of(self, account: bytes) -> int:
        return self.balances.get(bytes(account), 0)

    def contract(self, address: bytes) -> Contract:
        try:
            return self.contracts[Cid(bytes(address))]
        except KeyError as e:
            raise ChainError(f"no contract at {short_hex(address)}") from e

    def contract_as(self, address: bytes, contract_cls: type[C]) -> C:
        contract = self.contract(address)
        if not isinstance(contract, contract_cls):
            raise ChainError(f"{short_hex(address)} is not a {contract_cls.kind} contract")
        return contract

    # ---- transactions ----------------------------------------------------

    def submit_tx(
        self, sender: bytes, to: bytes, method: str, *args: Any, value: int = 0
    ) -> int:
        if Cid(bytes(to)) not in self.contracts:
            raise ChainError(f"unknown target {short_hex(to)}")
        if not 0 <= value < 1 << 128:
            raise ChainError(f"value out of range: {value}")
        tx = Transaction(self._next_tx_id, bytes(sender), Cid(bytes(to)), method, args, value)
        self._next_tx_id += 1
        self._queue.append(tx)
        self._txs[tx.tx_id] = tx
        return tx.tx_id

    def pending_txs(self) -> list[Transaction]:
        return list(self._queue)

    def transaction(self, tx_id: int) -> Transaction:
        return self._txs[tx_id]

    def receipt(self, tx_id: int) -> Receipt | None:
        return self._receipts.get(tx_id)

    def receipts_at(self, height: int) -> list[Receipt]:
        return [self._receipts[tx_id] for tx_id in self.block_at(height).included_tx_ids]

    def mine_block(self) -> Block:
        height = self.height + 1
        queue, self._queue = self._queue, []
        self._executing = height
        try:
            for tx in queue:
                self._receipts[tx.tx_id] = self._execute(tx, height)
        finally:
            self._executing = None

        tx_root = Digest(hashlib.sha256(b"".join(tx.tx_hash for tx in queue)).digest())
        block = Block(
            height=height,
            hash=Block.compute_hash(self.head.hash, height, tx_root),
            parent_hash=self.head.hash,
            tx_root=tx_root,
            included_tx_ids=tuple(tx.tx_id for tx in queue),
        )
        self.blocks.append(block)
        self._height_by_hash[block.hash] = height
        if queue:
            logger.debug("mined block %d with %d txs", height, len(queue))
        return block

    def _execute(self, tx: Transaction, height: int) -> Receipt:
        frame = self._push_frame()
        receipt = Receipt(tx.tx_id, height, tx.method, TxStatus.OK)
        try:
            receipt.calldata_bytes = len(tx.calldata)
            self.call(tx.sender, tx.to, tx.method, *tx.args, value=tx.value)
        except Revert as e:
            self._unwind(frame)
            receipt.status = TxStatus.REVERTED
            receipt.reason = e.reason.value
            logger.debug("tx %d %s reverted: %s", tx.tx_id, tx.method, e)
        except (ProtocolError, TypeError, AttributeError, ValueError) as e:
            # malformed arguments revert like any failed require
            self._unwind(frame)
            receipt.status = TxStatus.REVERTED
            receipt.reason = RevertReason.BAD_ARGUMENT.value
            logger.debug("tx %d %s rejected: %s: %s", tx.tx_id, tx.method, type(e).__name__, e)
        else:
            self._commit(frame)
        receipt.notes = frame.notes
        return receipt

    # ---- execution primitives used by contracts ---------------------------

    def call(self, sender: bytes, to: bytes, method: str, *args: Any, value: int = 0) -> Any:
        """Synchronous call; a `Revert` propagates to the enclosing frame."""
        if self._executing is None:
            raise ChainError("contract calls only run inside mine_block")
        target = self.contracts.get(Cid(bytes(to)))
        require(target is not None, RevertReason.UNKNOWN_METHOD, f"no contract at {short_hex(to)}")
        assert target is not None
        fn = getattr(target, method, None)
        require(
            callable(fn) and getattr(fn, "__external__", False),
            RevertReason.UNKNOWN_METHOD,
            method,
        )
        self._touch_contract(target)
        if value:
            self.transfer(sender, target.address, value)
        return fn(Msg(bytes(sender), value), *args)  # type: ignore[misc]

    def try_call(
        self, sender: bytes, to: bytes, method: str, *args: Any, value: int = 0
    ) -> Revert | None:
        """Nested call whose revert is contained; returns the revert, if any."""
        frame = self._push_frame()
        try:
            self.call(sender, to, method, *args, value=value)
        except Revert as e:
            self._rollback(frame)
            self.note(f"{method} on {short_hex(to)} reverted: {e.reason.value}")
            return e
        self._commit(frame)
        return None

    def transfer(self, src: bytes, dst: bytes, amount: int) -> None:
        if amount == 0:
            return
        require(amount > 0, RevertReason.INSUFFICIENT_FUNDS, "negative transfer")
        require(
            self.balance_of(src) >= amount,
            RevertReason.INSUFFICIENT_FUNDS,
            f"{short_hex(src)} holds {self.balance_of(src)}, needs {amount}",
        )
        self._touch_balance(src)
        self._touch_balance(dst)
        self.balances[bytes(src)] -= amount
        self.balances[bytes(dst)] = self.balance_of(dst) + amount

    def note(self, text: str) -> None:
        if self._frames:
            self._frames[0].notes.append(text)

    def _emit(
        self,
        kind: EventKind,
        cid: Cid,
        state: ChannelState,
        r: Nonce | None,
        anchor: Digest | None,
    ) -> Event:
        if self._executing is None:
            raise ChainError("events are only emitted during execution")
        event = Event(kind, cid, state, r, self._executing, len(self.event_log), anchor)
        self.event_log.append(event)
        return event

    # ---- journal ----------------------------------------------------------

    def _push_frame(self) -> _Frame:
        frame = _Frame(events_len=len(self.event_log))
        self._frames.append(frame)
        return frame

    def _touch_contract(self, contract: Contract) -> None:
        frame = self._frames[-1]
        if contract.address not in frame.contracts:
            frame.contracts[contract.address] = contract.snapshot_state()

    def _touch_balance(self, account: bytes) -> None:
        frame = self._frames[-1]
        key = bytes(account)
        if key not in frame.balances:
            frame.balances[key] = self.balances.get(key)

    def _rollback(self, frame: _Frame) -> None:
        popped = self._frames.pop()
        assert popped is frame
        for address, snapshot in frame.contracts.items():
            self.contracts[address].restore_state(snapshot)
        for account, previous in frame.balances.items():
            if previous is None:
                self.balances.pop(account, None)
            else:
                self.balances[account] = previous
        del self.event_log[frame.events_len :]

    def _unwind(self, frame: _Frame) -> None:
        """Roll back `frame` and any nested frames an exception left open."""
        while self._frames[-1] is not frame:
            self._rollback(self._frames[-1])
        self._rollback(frame)

    def _commit(self, frame: _Frame) -> None:
        popped = self._frames.pop()
        assert popped is frame
        if not self._frames:
            return
        parent = self._frames[-1]
        for address, snapshot in frame.contracts.items():
            parent.contracts.setdefault(address, snapshot)
        for account, previous in frame.balances.items():
            parent.balances.setdefault(account, previous)

    # ---- reads --------------------------------------------------------------

    def read_events(
        self,
        from_height: int,
        to_height: int | None = None,
        kinds: Iterable[EventKind] | None = None,
    ) -> list[Event]:
        to_height = self.height if to_height is None else to_height
        if from_height > to_height:
            raise ChainError(f"empty range [{from_height}, {to_height}]")
        if to_height > self.height:
            raise ChainError(f"range ends at {to_height}, beyond height {self.height}")
        wanted = set(kinds) if kinds is not None else None
        return [
            event
            for event in self.event_log
            if from_height <= event.block_height <= to_height
            and (wanted is None or event.kind in wanted)
        ]

    def events_at(self, height: int) -> list[Event]:
        return [event for event in self.event_log if event.block_height == height]
