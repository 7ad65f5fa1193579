from __future__ import annotations

from fractions import Fraction

import pytest

from failsafe_channels.protocol.chain import SimChain
from failsafe_channels.protocol.crypto import KeyPair
from failsafe_channels.protocol.errors import WireFormatError
from failsafe_channels.protocol.tower_contract import ConfirmationSet, TowerContract
from failsafe_channels.protocol.types import ChannelState, Cid

from tests.conftest import deploy_channel


def _fake_cid(i: int) -> Cid:
    return Cid(b"\x00" + i.to_bytes(19, "big"))


def test_bitmap_is_msb_first():
    """Bit 0 is the top bit of the first byte"""
    confs = ConfirmationSet.from_bits([1, 0, 0, 0, 0, 0, 0, 0, 1])

    assert confs.bitmap() == b"\x80\x80"
    assert confs.to_bytes() == b"\x00\x09\x80\x80"
    assert ConfirmationSet.from_bytes(confs.to_bytes()) == confs


def test_empty_set_encodes_to_length_only():
    """m = 0 has no bitmap bytes"""
    assert ConfirmationSet().to_bytes() == b"\x00\x00"
    assert len(ConfirmationSet.from_bytes(b"\x00\x00")) == 0


def test_from_bytes_rejects_bad_input():
    """Truncated prefixes, wrong bitmap sizes and set padding bits"""
    with pytest.raises(WireFormatError, match="length prefix"):
        ConfirmationSet.from_bytes(b"\x00")
    with pytest.raises(WireFormatError, match="needs 1 bytes"):
        ConfirmationSet.from_bytes(b"\x00\x03")
    with pytest.raises(WireFormatError, match="padding"):
        ConfirmationSet.from_bytes(b"\x00\x03\x01")


def test_deposit_requires_value(deployment):
    """Zero deposits are refused"""
    receipt = deployment.send("A", "deposit", deployment.cid, to=deployment.tower.address)

    assert receipt.reason == "zero-deposit"
    assert deployment.tower.deposit_of(deployment.cid) == 100


def test_update_only_from_owner(deployment):
    """Anyone but the registered watchtower key is refused"""
    deployment.close(ChannelState(10, 0, 0), b"\x00" * 32)

    receipt = deployment.update([1], sender="M")

    assert receipt.reason == "unauthorized-caller"
    assert deployment.tower.k == 0


def test_update_length_must_match_pending(deployment):
    """One bit per pending closure, no more and no less"""
    deployment.close(ChannelState(10, 0, 0), b"\x00" * 32)

    assert deployment.update([1, 1]).reason == "confs-length-mismatch"
    assert deployment.update([]).reason == "confs-length-mismatch"
    assert deployment.update([1]).ok


def test_empty_update_advances_k(deployment):
    """An update with no pending closures still moves to the next index"""
    assert deployment.update([]).ok
    assert deployment.tower.k == 1
    assert deployment.tower.pending() == ([], [])


def test_close_only_from_the_channel(deployment):
    """Channels notify the tower for themselves only"""
    receipt = deployment.send("A", "close", deployment.cid, ChannelState(1, 0, 0), to=deployment.tower.address)

    assert receipt.reason == "unauthorized-caller"


def test_withdraw_checks_victim(deployment):
    """Only the channel may withdraw, and only for the registered customer"""
    tower = deployment.tower.address
    direct = deployment.send("A", "withdraw", deployment.cid, deployment.keys["A"].public, Fraction(1), to=tower)
    assert direct.reason == "unauthorized-caller"

    chain = deployment.chain
    tx_id = chain.submit_tx(deployment.cid, tower, "withdraw", deployment.cid, deployment.keys["B"].public, Fraction(1))
    chain.mine_block()
    assert chain.receipt(tx_id).reason == "victim-mismatch"


def test_dispute_replaces_pending_entry(deployment):
    """A dispute in the same round overwrites the channel's pending state"""
    s1, s2 = ChannelState(7, 3, 1), ChannelState(4, 6, 2)
    deployment.close(s1, b"\x01" * 32)
    deployment.close(s2, b"\x02" * 32, role="B", method="dispute")

    cids, states = deployment.tower.pending()
    assert cids == [deployment.cid]
    assert states == [s2]


@pytest.mark.parametrize("m", [1, 10, 100, 1000])
def test_one_update_answers_every_closure(m):
    """m closures in a round cost one update carrying a ceil(m/8)-byte bitmap"""
    chain = SimChain(seed=m)
    owner = KeyPair.from_seed("tower-owner").public
    tower = chain.deploy(TowerContract, owner, owner)
    for i in range(m):
        cid = _fake_cid(i + 1)
        chain.submit_tx(cid, tower.address, "close", cid, ChannelState(i, 0, 0))
    chain.mine_block()
    assert len(tower.pending()[0]) == m

    tx_id = chain.submit_tx(owner, tower.address, "update", ConfirmationSet.from_bits([1] * m))
    chain.mine_block()
    receipt = chain.receipt(tx_id)

    assert receipt.ok
    assert tower.k == 1
    assert receipt.calldata_bytes == len(b"update") + 2 + (m + 7) // 8


def test_two_channels_share_one_update():
    """Closures of separate channels in one round land in one entry"""
    first = deploy_channel(seed=3)
    first.close(ChannelState(10, 0, 0), b"\x00" * 32)
    second_cid = _fake_cid(99)
    chain = first.chain
    chain.submit_tx(second_cid, first.tower.address, "close", second_cid, ChannelState(1, 0, 0))
    chain.mine_block()

    cids, _ = first.tower.pending()
    assert cids == [first.cid, second_cid]
    receipt = first.update([1, 0])
    assert receipt.ok
    assert first.chain.balance_of(first.keys["A"].public) == 10
