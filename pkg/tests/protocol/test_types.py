from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from failsafe_channels.protocol.errors import EncodingError
from failsafe_channels.protocol.types import (
    STATE_LEN,
    UINT128_MAX,
    ChannelState,
    NonceSource,
    as_cid,
    decode_state,
    encode_state,
    encode_uint128,
    short_hex,
)

uint128 = st.integers(min_value=0, max_value=UINT128_MAX)


def test_encode_state_layout():
    """Three big-endian 16-byte fields, 48 bytes total"""
    encoded = encode_state(ChannelState(7, 3, 1))

    assert len(encoded) == STATE_LEN
    assert encoded == (7).to_bytes(16, "big") + (3).to_bytes(16, "big") + (1).to_bytes(16, "big")


@given(uint128, uint128, uint128)
def test_state_encoding_is_injective(bal_a, bal_b, idx):
    """Decoding inverts encoding for every representable state"""
    state = ChannelState(bal_a, bal_b, idx)
    assert decode_state(encode_state(state)) == state


def test_encode_rejects_values_beyond_uint128():
    """Balances past 2^128 - 1 do not fit the wire field"""
    with pytest.raises(EncodingError):
        encode_state(ChannelState(UINT128_MAX + 1, 0, 0))
    with pytest.raises(EncodingError):
        encode_uint128(-1)


def test_decode_rejects_wrong_length():
    """Short buffers are refused"""
    with pytest.raises(EncodingError, match="48 bytes"):
        decode_state(bytes(47))


def test_state_rejects_negative_and_non_int():
    """Balances and idx are non-negative integers"""
    with pytest.raises(ValueError):
        ChannelState(-1, 0, 0)
    with pytest.raises(TypeError):
        ChannelState(True, 0, 0)


def test_transfer_moves_funds_and_bumps_idx():
    """The walkthrough payments: (10,0,0) -> (7,3,1) -> (4,6,2)"""
    t1 = ChannelState(10, 0, 0)
    t2 = t1.transfer(True, 3)
    t3 = t2.transfer(True, 3)

    assert t2 == ChannelState(7, 3, 1)
    assert t3 == ChannelState(4, 6, 2)
    assert t3.capacity == t1.capacity
    assert t3.transfer(False, 1) == ChannelState(5, 5, 3)


def test_transfer_overdraft():
    """Paying more than the payer holds fails"""
    with pytest.raises(ValueError, match="overdraft"):
        ChannelState(2, 0, 0).transfer(True, 3)


def test_nonce_source_is_seeded():
    """Same seed, same nonces; different seeds diverge"""
    a, b, c = NonceSource("s"), NonceSource("s"), NonceSource("t")

    first = a.nonce()
    assert len(first) == 32
    assert first == b.nonce()
    assert first != c.nonce()


def test_as_cid_and_short_hex():
    """Cids are exactly 20 bytes; logs show a short prefix"""
    cid = as_cid(bytes(20))

    assert short_hex(cid) == "0x000000000000…"
    with pytest.raises(EncodingError):
        as_cid(bytes(19))
