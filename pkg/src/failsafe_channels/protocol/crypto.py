"""Hashing, commitments and the 65-byte deterministic signature scheme.

Signatures are ECDSA over secp256k1 with SHA-256 and RFC 6979 nonces, laid out
as r (32B) ∥ s (32B) ∥ v (1B) where v = 27 + parity of the nonce point's y, with s kept
in the lower half of the group order. Every signed payload starts with a one-byte domain tag.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import lru_cache

from ecdsa import SECP256k1, BadSignatureError, MalformedPointError, SigningKey, VerifyingKey, rfc6979
from ecdsa.ecdsa import RSZeroError
from ecdsa.util import sigdecode_string, sigencode_string

from .types import (
    Cid,
    ChannelState,
    Digest,
    Nonce,
    PublicKey,
    Signature,
    SIGNATURE_LEN,
    encode_state,
    encode_uint128,
)

TAG_PAYMENT = 0x01
TAG_RECEIPT = 0x02
TAG_ASSERTION = 0x03

_V_BASE = 27
_ORDER = SECP256k1.order
_HALF_ORDER = _ORDER // 2


def digest(data: bytes) -> Digest:
    return Digest(hashlib.sha256(data).digest())


def hash_commit(state: ChannelState, r: Nonce) -> Digest:
    """h_s = H(encode_state(s) ∥ r)"""
    return digest(encode_state(state) + r)


def payment_payload(cid: Cid, idx: int, h_s: Digest) -> bytes:
    return bytes([TAG_PAYMENT]) + cid + encode_uint128(idx, "idx") + h_s


def receipt_payload(cid: Cid, idx: int, h_s: Digest) -> bytes:
    return bytes([TAG_RECEIPT]) + cid + encode_uint128(idx, "idx") + h_s


def assertion_payload(state: ChannelState, anchor: Digest) -> bytes:
    return bytes([TAG_ASSERTION]) + encode_state(state) + anchor


@lru_cache(maxsize=1024)
def _signing_key(secret: bytes) -> SigningKey:
    return SigningKey.from_string(secret, curve=SECP256k1, hashfunc=hashlib.sha256)


@lru_cache(maxsize=4096)
def _verifying_key(public_key: bytes) -> VerifyingKey:
    return VerifyingKey.from_string(public_key, curve=SECP256k1, hashfunc=hashlib.sha256)


@dataclass(frozen=True)
class KeyPair:
    secret: bytes = field(repr=False)
    public: PublicKey

    @classmethod
    def from_seed(cls, seed: bytes | str) -> KeyPair:
        """Derive a key pair deterministically from an arbitrary seed."""
        raw = seed.encode() if isinstance(seed, str) else seed
        secexp = 1 + int.from_bytes(hashlib.sha256(b"keypair" + raw).digest(), "big") % (_ORDER - 1)
        sk = SigningKey.from_secret_exponent(secexp, curve=SECP256k1, hashfunc=hashlib.sha256)
        return cls(secret=sk.to_string(), public=public_key_of(sk.to_string()))


def public_key_of(secret: bytes) -> PublicKey:
    return PublicKey(_signing_key(secret).get_verifying_key().to_string("compressed"))


def sign(secret: bytes, message: bytes) -> Signature:
    sk = _signing_key(secret)
    msg_digest = hashlib.sha256(message).digest()
    retry = 0
    while True:
        k = rfc6979.generate_k(
            _ORDER, sk.privkey.secret_multiplier, hashlib.sha256, msg_digest, retry_gen=retry
        )
        try:
            rs = sk.sign_digest(msg_digest, sigencode=sigencode_string, k=k)
            break
        except RSZeroError:
            retry += 1
    r, s = sigdecode_string(rs, _ORDER)
    parity = (SECP256k1.generator * k).y() & 1
    if s > _HALF_ORDER:
        # (r, n - s) verifies against -R
        s, parity = _ORDER - s, parity ^ 1
    return Signature(sigencode_string(r, s, _ORDER) + bytes([_V_BASE + parity]))


def verify(public_key: bytes, message: bytes, sig: bytes) -> bool:
    """True iff `sig` is the holder of `public_key` signing exactly `message`.

    Only the canonical encoding passes: low s, and v matching the parity of R.
    """
    if not isinstance(sig, (bytes, bytearray)) or len(sig) != SIGNATURE_LEN:
        return False
    if sig[64] not in (_V_BASE, _V_BASE + 1):
        return False
    msg_digest = hashlib.sha256(message).digest()
    try:
        r, s = sigdecode_string(bytes(sig[:64]), _ORDER)
        if not (0 < r < _ORDER and 0 < s <= _HALF_ORDER):
            return False
        vk = _verifying_key(bytes(public_key))
        if not vk.verify_digest(bytes(sig[:64]), msg_digest, sigdecode=sigdecode_string):
            return False
        w = pow(s, -1, _ORDER)
        z = int.from_bytes(msg_digest, "big")
        nonce_point = SECP256k1.generator * (z * w % _ORDER) + vk.pubkey.point * (r * w % _ORDER)
        return sig[64] == _V_BASE + (nonce_point.y() & 1)
    except (BadSignatureError, MalformedPointError, ValueError):
        return False
