"""Shared value types for channel states, hashes, nonces and signatures."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import NewType

from .errors import EncodingError

CID_LEN = 20
DIGEST_LEN = 32
NONCE_LEN = 32
SIGNATURE_LEN = 65
PUBKEY_LEN = 33
UINT128_BYTES = 16
UINT128_MAX = (1 << 128) - 1
STATE_LEN = 3 * UINT128_BYTES

Cid = NewType("Cid", bytes)
Digest = NewType("Digest", bytes)
Nonce = NewType("Nonce", bytes)
Signature = NewType("Signature", bytes)
PublicKey = NewType("PublicKey", bytes)

ZERO_DIGEST = Digest(bytes(DIGEST_LEN))


def require_length(value: bytes, length: int, name: str) -> bytes:
    if not isinstance(value, (bytes, bytearray)) or len(value) != length:
        size = len(value) if isinstance(value, (bytes, bytearray)) else "non-bytes"
        raise EncodingError(f"{name} must be {length} bytes, got {size}")
    return bytes(value)


def as_cid(value: bytes) -> Cid:
    return Cid(require_length(value, CID_LEN, "cid"))


def as_digest(value: bytes) -> Digest:
    return Digest(require_length(value, DIGEST_LEN, "digest"))


def as_nonce(value: bytes) -> Nonce:
    return Nonce(require_length(value, NONCE_LEN, "nonce"))


def short_hex(value: bytes, width: int = 6) -> str:
    return "0x" + value[:width].hex() + "…"


@dataclass(frozen=True, slots=True)
class ChannelState:
    """Off-chain payment tuple (bal_A, bal_B, idx) covered by every signature."""

    bal_a: int
    bal_b: int
    idx: int

    def __post_init__(self) -> None:
        for name in ("bal_a", "bal_b", "idx"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError(f"{name} must be an integer")
            if value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")

    @property
    def capacity(self) -> int:
        return self.bal_a + self.bal_b

    def transfer(self, payer_is_a: bool, amount: int) -> ChannelState:
        """Next state after the payer moves `amount` to its peer (idx + 1)."""
        delta = amount if payer_is_a else -amount
        bal_a, bal_b = self.bal_a - delta, self.bal_b + delta
        if bal_a < 0 or bal_b < 0:
            raise ValueError(f"overdraft: ({bal_a}, {bal_b})")
        return ChannelState(bal_a, bal_b, self.idx + 1)

    def to_json(self) -> list[int]:
        return [self.bal_a, self.bal_b, self.idx]


def encode_uint128(value: int, name: str = "value") -> bytes:
    if value < 0 or value > UINT128_MAX:
        raise EncodingError(f"{name}={value} does not fit in 16 bytes")
    return value.to_bytes(UINT128_BYTES, "big")


def decode_uint128(data: bytes) -> int:
    return int.from_bytes(require_length(data, UINT128_BYTES, "uint128"), "big")


def encode_state(state: ChannelState) -> bytes:
    """bal_A (16B) ∥ bal_B (16B) ∥ idx (16B), big-endian, 48 bytes"""
    return (
        encode_uint128(state.bal_a, "bal_a")
        + encode_uint128(state.bal_b, "bal_b")
        + encode_uint128(state.idx, "idx")
    )


def decode_state(data: bytes) -> ChannelState:
    data = require_length(data, STATE_LEN, "state")
    return ChannelState(
        decode_uint128(data[0:16]),
        decode_uint128(data[16:32]),
        decode_uint128(data[32:48]),
    )


class NonceSource:
    """Seedable source of 256-bit nonces so runs replay byte-for-byte."""

    def __init__(self, seed: int | str | bytes = 0) -> None:
        self._rng = random.Random(seed)

    def nonce(self) -> Nonce:
        return Nonce(self._rng.getrandbits(8 * NONCE_LEN).to_bytes(NONCE_LEN, "big"))

    def randbytes(self, length: int) -> bytes:
        return self._rng.getrandbits(8 * length).to_bytes(length, "big")
