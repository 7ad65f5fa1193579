"""Golden vectors for every wire format, checked by `verify-formats`.

Field values are fixed fillers so the expected bytes can be read off by eye;
FORMATS.md lists the same vectors.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

from ...protocol import crypto
from ...protocol.crypto import KeyPair
from ...protocol.errors import ProtocolError
from ...protocol.tower_contract import ConfirmationSet
from ...protocol.types import (
    STATE_LEN,
    ChannelState,
    Cid,
    Digest,
    Nonce,
    PublicKey,
    Signature,
    decode_state,
    encode_state,
)
from ...protocol.wire import (
    ASSERTION_LEN,
    PEER_LEN,
    RECEIPT_LEN,
    SUBMISSION_LEN,
    CounterSignature,
    PaymentProposal,
    ShortLivedAssertion,
    WatchtowerReceipt,
    WatchtowerSubmission,
)
from .scenario import CheckResult

CID = Cid(bytes.fromhex("00" + "c1" * 19))
H_S = Digest(bytes.fromhex("5a" * 32))
R = Nonce(bytes.fromhex("7e" * 32))
ANCHOR = Digest(bytes.fromhex("6c" * 32))
SIG_A = Signature(bytes.fromhex("a1" * 64 + "1b"))
SIG_B = Signature(bytes.fromhex("b2" * 64 + "1c"))
SIG_WT = Signature(bytes.fromhex("e3" * 64 + "1b"))
PK_WT = PublicKey(bytes.fromhex("02" + "d4" * 32))

# the payment walkthrough: T1 = (10, 0, 0) -> T2 = (7, 3, 1)
T1 = ChannelState(10, 0, 0)
T2 = ChannelState(7, 3, 1)

_IDX_1 = "00" * 15 + "01"
_T2_HEX = "00" * 15 + "07" + "00" * 15 + "03" + _IDX_1


def _message_bytes(message: Any) -> bytes:
    return bytes(message.encode())


@dataclass(frozen=True)
class GoldenVector:
    name: str
    value: Any
    expected: str
    length: int
    encoder: Callable[[Any], bytes]
    decode: Callable[[bytes], Any]

    def encode(self) -> bytes:
        return bytes(self.encoder(self.value))


def golden_vectors() -> list[GoldenVector]:
    return [
        GoldenVector(
            "state T1",
            T1,
            "00" * 15 + "0a" + "00" * 32,
            STATE_LEN,
            encode_state,
            decode_state,
        ),
        GoldenVector(
            "state T2",
            T2,
            _T2_HEX,
            STATE_LEN,
            encode_state,
            decode_state,
        ),
        GoldenVector(
            "submission P->WT",
            WatchtowerSubmission(CID, H_S, 1, SIG_A, SIG_B),
            "".join(("04", "c1" * 19, "5a" * 32, _IDX_1, "a1" * 64, "1b", "b2" * 64, "1c")),
            SUBMISSION_LEN,
            _message_bytes,
            WatchtowerSubmission.decode,
        ),
        GoldenVector(
            "receipt WT->P",
            WatchtowerReceipt(CID, 1, H_S, SIG_WT, PK_WT, sequence=1),
            "".join(
                ("02", "c1" * 19, _IDX_1, "5a" * 32, "e3" * 64, "1b", "02", "d4" * 32, "00" * 7, "01", "00" * 21)
            ),
            RECEIPT_LEN,
            _message_bytes,
            WatchtowerReceipt.decode,
        ),
        GoldenVector(
            "proposal P<->P",
            PaymentProposal(CID, T2, R, SIG_A),
            "".join(("01", "c1" * 19, _T2_HEX, "7e" * 32, "a1" * 64, "1b")),
            PEER_LEN,
            _message_bytes,
            PaymentProposal.decode,
        ),
        GoldenVector(
            "acceptance P<->P",
            CounterSignature(CID, T2, R, SIG_B),
            "".join(("05", "c1" * 19, _T2_HEX, "7e" * 32, "b2" * 64, "1c")),
            PEER_LEN,
            _message_bytes,
            CounterSignature.decode,
        ),
        GoldenVector(
            "assertion P<->P",
            ShortLivedAssertion(CID, T2, ANCHOR, SIG_A, SIG_B),
            "".join(("03", "00", "c1" * 19, _T2_HEX, "6c" * 32, "a1" * 64, "1b", "b2" * 64, "1c")),
            ASSERTION_LEN,
            _message_bytes,
            ShortLivedAssertion.decode,
        ),
        GoldenVector(
            "confs m=3 [0,1,1]",
            ConfirmationSet.from_bits([0, 1, 1]),
            "0003" + "60",
            3,
            ConfirmationSet.to_bytes,
            ConfirmationSet.from_bytes,
        ),
        GoldenVector(
            "confs m=8 all set",
            ConfirmationSet.from_bits([1] * 8),
            "0008" + "ff",
            3,
            ConfirmationSet.to_bytes,
            ConfirmationSet.from_bytes,
        ),
        GoldenVector(
            "confs m=0",
            ConfirmationSet(),
            "0000",
            2,
            ConfirmationSet.to_bytes,
            ConfirmationSet.from_bytes,
        ),
        GoldenVector(
            "confs m=1000",
            ConfirmationSet.from_bits([1] * 1000),
            "03e8" + "ff" * 125,
            127,
            ConfirmationSet.to_bytes,
            ConfirmationSet.from_bytes,
        ),
    ]


def check_vector(vector: GoldenVector) -> CheckResult:
    try:
        encoded = vector.encode()
        if len(encoded) != vector.length:
            return CheckResult(vector.name, False, f"{len(encoded)} bytes, expected {vector.length}")
        if encoded.hex() != vector.expected:
            return CheckResult(vector.name, False, "encoding differs from the golden vector")
        if vector.decode(bytes.fromhex(vector.expected)) != vector.value:
            return CheckResult(vector.name, False, "decoding the golden vector changed the value")
    except ProtocolError as e:
        return CheckResult(vector.name, False, str(e))
    return CheckResult(vector.name, True, f"{vector.length} bytes")


def check_signature_scheme() -> CheckResult:
    """Deterministic 65-byte signatures that verify and reject a flipped bit."""
    keys = KeyPair.from_seed("formats")
    payload = crypto.payment_payload(CID, T2.idx, crypto.hash_commit(T2, R))
    sig = crypto.sign(keys.secret, payload)
    flipped = bytes([payload[0] ^ 0x01]) + payload[1:]
    ok = (
        len(sig) == 65
        and sig[64] in (27, 28)
        and sig == crypto.sign(keys.secret, payload)
        and crypto.verify(keys.public, payload, sig)
        and not crypto.verify(keys.public, flipped, sig)
        and len(keys.public) == 33
    )
    return CheckResult("signature scheme", ok, "secp256k1, RFC 6979, r||s||v")


def verify_formats() -> list[CheckResult]:
    return [check_vector(vector) for vector in golden_vectors()] + [check_signature_scheme()]
