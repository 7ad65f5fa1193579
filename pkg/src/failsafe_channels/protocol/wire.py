"""Byte-exact wire messages between parties and the watchtower.

Contract addresses always start with 0x00, so the fixed-size messages reuse that
byte as their message tag and decoding restores it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

from . import crypto
from .errors import WireFormatError
from .types import (
    CID_LEN,
    DIGEST_LEN,
    NONCE_LEN,
    PUBKEY_LEN,
    SIGNATURE_LEN,
    STATE_LEN,
    UINT128_BYTES,
    ChannelState,
    Cid,
    Digest,
    Nonce,
    PublicKey,
    Signature,
    as_cid,
    as_digest,
    decode_state,
    decode_uint128,
    encode_state,
    encode_uint128,
    require_length,
)

SUBMISSION_LEN = 198
RECEIPT_LEN = 195
PEER_LEN = 165
ASSERTION_LEN = 231

RECEIPT_SESSION_LEN = 62
_SEQUENCE_LEN = 8
_RECEIPT_PAD = RECEIPT_SESSION_LEN - PUBKEY_LEN - _SEQUENCE_LEN


class WireTag(IntEnum):
    PROPOSAL = 0x01
    RECEIPT = 0x02
    ASSERTION = 0x03
    SUBMISSION = 0x04
    ACCEPTANCE = 0x05


def _fold_tag(tag: WireTag, cid: Cid) -> bytes:
    if cid[0] != 0:
        raise WireFormatError(f"cid must start with 0x00 to carry a tag, got 0x{cid[0]:02x}")
    return bytes([tag]) + cid[1:]


def _unfold_tag(data: bytes, expected: WireTag) -> Cid:
    if data[0] != expected:
        raise WireFormatError(f"expected tag 0x{expected:02x}, got 0x{data[0]:02x}")
    return Cid(b"\x00" + data[1:CID_LEN])


def _check_length(data: bytes, length: int, name: str) -> bytes:
    if not isinstance(data, (bytes, bytearray)) or len(data) != length:
        got = len(data) if isinstance(data, (bytes, bytearray)) else "non-bytes"
        raise WireFormatError(f"{name} must be {length} bytes, got {got}")
    return bytes(data)


class _Reader:
    def __init__(self, data: bytes, offset: int = 0) -> None:
        self._data = data
        self._pos = offset

    def take(self, n: int) -> bytes:
        chunk = self._data[self._pos : self._pos + n]
        self._pos += n
        return chunk


@dataclass(frozen=True)
class WatchtowerSubmission:
    """Party → watchtower: the only per-payment data the watchtower ever sees."""

    cid: Cid
    h_s: Digest
    idx: int
    sig_a: Signature
    sig_b: Signature

    @property
    def payload(self) -> bytes:
        return crypto.payment_payload(self.cid, self.idx, self.h_s)

    def encode(self) -> bytes:
        return (
            _fold_tag(WireTag.SUBMISSION, self.cid)
            + require_length(self.h_s, DIGEST_LEN, "h_s")
            + encode_uint128(self.idx, "idx")
            + require_length(self.sig_a, SIGNATURE_LEN, "sig_a")
            + require_length(self.sig_b, SIGNATURE_LEN, "sig_b")
        )

    @classmethod
    def decode(cls, data: bytes) -> WatchtowerSubmission:
        data = _check_length(data, SUBMISSION_LEN, "submission")
        cid = _unfold_tag(data, WireTag.SUBMISSION)
        reader = _Reader(data, CID_LEN)
        return cls(
            cid=cid,
            h_s=Digest(reader.take(DIGEST_LEN)),
            idx=decode_uint128(reader.take(UINT128_BYTES)),
            sig_a=Signature(reader.take(SIGNATURE_LEN)),
            sig_b=Signature(reader.take(SIGNATURE_LEN)),
        )

    def fields(self) -> dict[str, bytes | int]:
        return {"cid": self.cid, "h_s": self.h_s, "idx": self.idx, "sig_a": self.sig_a, "sig_b": self.sig_b}


@dataclass(frozen=True)
class WatchtowerReceipt:
    cid: Cid
    idx: int
    h_s: Digest
    sig_wt: Signature
    pk_wt: PublicKey
    sequence: int = 0

    @property
    def payload(self) -> bytes:
        return crypto.receipt_payload(self.cid, self.idx, self.h_s)

    def verify(self, pk_wt: bytes | None = None) -> bool:
        return crypto.verify(pk_wt or self.pk_wt, self.payload, self.sig_wt)

    def encode(self) -> bytes:
        return (
            _fold_tag(WireTag.RECEIPT, self.cid)
            + encode_uint128(self.idx, "idx")
            + require_length(self.h_s, DIGEST_LEN, "h_s")
            + require_length(self.sig_wt, SIGNATURE_LEN, "sig_wt")
            + require_length(self.pk_wt, PUBKEY_LEN, "pk_wt")
            + self.sequence.to_bytes(_SEQUENCE_LEN, "big")
            + bytes(_RECEIPT_PAD)
        )

    @classmethod
    def decode(cls, data: bytes) -> WatchtowerReceipt:
        data = _check_length(data, RECEIPT_LEN, "receipt")
        cid = _unfold_tag(data, WireTag.RECEIPT)
        reader = _Reader(data, CID_LEN)
        idx = decode_uint128(reader.take(UINT128_BYTES))
        h_s = Digest(reader.take(DIGEST_LEN))
        sig_wt = Signature(reader.take(SIGNATURE_LEN))
        pk_wt = PublicKey(reader.take(PUBKEY_LEN))
        sequence = int.from_bytes(reader.take(_SEQUENCE_LEN), "big")
        if any(reader.take(_RECEIPT_PAD)):
            raise WireFormatError("receipt padding must be zero")
        return cls(cid, idx, h_s, sig_wt, pk_wt, sequence)


@dataclass(frozen=True)
class PaymentProposal:
    """Party ⇔ party: the full state and nonce with one signature."""

    cid: Cid
    state: ChannelState
    r: Nonce
    signature: Signature

    tag = WireTag.PROPOSAL

    @property
    def h_s(self) -> Digest:
        return crypto.hash_commit(self.state, self.r)

    @property
    def payload(self) -> bytes:
        return crypto.payment_payload(self.cid, self.state.idx, self.h_s)

    def encode(self) -> bytes:
        return (
            _fold_tag(self.tag, self.cid)
            + encode_state(self.state)
            + require_length(self.r, NONCE_LEN, "r")
            + require_length(self.signature, SIGNATURE_LEN, "signature")
        )

    @classmethod
    def decode(cls, data: bytes) -> PaymentProposal:
        data = _check_length(data, PEER_LEN, "peer message")
        cid = _unfold_tag(data, cls.tag)
        reader = _Reader(data, CID_LEN)
        return cls(
            cid=cid,
            state=decode_state(reader.take(STATE_LEN)),
            r=Nonce(reader.take(NONCE_LEN)),
            signature=Signature(reader.take(SIGNATURE_LEN)),
        )


@dataclass(frozen=True)
class CounterSignature(PaymentProposal):
    """Receiver's reply to a proposal; same layout, its own tag."""

    tag = WireTag.ACCEPTANCE


@dataclass(frozen=True)
class ShortLivedAssertion:
    cid: Cid
    state: ChannelState
    anchor: Digest
    sig_a: Signature
    sig_b: Signature

    @property
    def payload(self) -> bytes:
        return crypto.assertion_payload(self.state, self.anchor)

    def encode(self) -> bytes:
        return (
            bytes([WireTag.ASSERTION])
            + as_cid(self.cid)
            + encode_state(self.state)
            + as_digest(self.anchor)
            + require_length(self.sig_a, SIGNATURE_LEN, "sig_a")
            + require_length(self.sig_b, SIGNATURE_LEN, "sig_b")
        )

    @classmethod
    def decode(cls, data: bytes) -> ShortLivedAssertion:
        data = _check_length(data, ASSERTION_LEN, "assertion")
        if data[0] != WireTag.ASSERTION:
            raise WireFormatError(f"expected tag 0x{WireTag.ASSERTION:02x}, got 0x{data[0]:02x}")
        reader = _Reader(data, 1)
        return cls(
            cid=Cid(reader.take(CID_LEN)),
            state=decode_state(reader.take(STATE_LEN)),
            anchor=Digest(reader.take(DIGEST_LEN)),
            sig_a=Signature(reader.take(SIGNATURE_LEN)),
            sig_b=Signature(reader.take(SIGNATURE_LEN)),
        )


WireMessage = WatchtowerSubmission | WatchtowerReceipt | PaymentProposal | ShortLivedAssertion

_DECODERS: dict[int, type] = {
    WireTag.PROPOSAL: PaymentProposal,
    WireTag.ACCEPTANCE: CounterSignature,
    WireTag.RECEIPT: WatchtowerReceipt,
    WireTag.SUBMISSION: WatchtowerSubmission,
    WireTag.ASSERTION: ShortLivedAssertion,
}


def decode_message(data: bytes) -> WireMessage:
    """Dispatch on the leading tag byte."""
    if not data:
        raise WireFormatError("empty message")
    decoder = _DECODERS.get(data[0])
    if decoder is None:
        raise WireFormatError(f"unknown tag 0x{data[0]:02x}")
    message: WireMessage = decoder.decode(data)
    return message
