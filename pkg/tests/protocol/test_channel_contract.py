from __future__ import annotations

from fractions import Fraction

import pytest

from failsafe_channels.protocol.channel_contract import Flag, Timeouts
from failsafe_channels.protocol.types import ChannelState, Nonce

from tests.conftest import deploy_channel

S0 = ChannelState(10, 0, 0)
S1 = ChannelState(7, 3, 1)
S2 = ChannelState(4, 6, 2)


def _r(tag: int) -> Nonce:
    return Nonce(bytes([tag]) * 32)


def test_timeouts_must_be_positive():
    """t and T are at least one block"""
    with pytest.raises(ValueError):
        Timeouts(0, 10)


def test_setup_and_deposit(deployment):
    """Setup opens the channel; B registers once"""
    channel = deployment.channel

    assert channel.flag is Flag.OK
    assert channel.pk_b == deployment.keys["B"].public
    assert channel.capacity == 10

    again = deployment.send("M", "deposit")
    assert again.reason == "counterparty-registered"


def test_close_sets_deadlines_and_notifies_tower(deployment):
    """close: ddl = now + t, end = ddl + T, one pending tower entry"""
    receipt = deployment.close(S1, _r(1))
    channel = deployment.channel

    assert receipt.ok
    assert channel.flag is Flag.DISPUTE
    assert channel.ddl == receipt.block_height + 8
    assert channel.end == channel.ddl + 64
    assert channel.is_rspd is False
    cids, states = deployment.tower.pending()
    assert cids == [deployment.cid]
    assert states == [S1]


def test_close_rejects_bad_signature(deployment):
    """Signatures over another state do not close the channel"""
    sig_a, sig_b = deployment.sign_state(S1, _r(1))
    receipt = deployment.send("A", "close", S2, _r(1), sig_a, sig_b)

    assert receipt.reason == "bad-signature"
    assert deployment.channel.flag is Flag.OK


def test_oversized_close_reverts_and_block_still_mines(deployment):
    """A close whose idx does not fit 128 bits reverts; a deposit in the same block lands"""
    chain, keys = deployment.chain, deployment.keys
    huge = ChannelState(10, 0, 2**130)
    sig_a, sig_b = deployment.sign_state(ChannelState(10, 0, 1), _r(1))
    chain.mint(keys["A"].public, 5)
    height = chain.height
    bad = chain.submit_tx(keys["A"].public, deployment.cid, "close", huge, _r(1), sig_a, sig_b)
    good = chain.submit_tx(
        keys["A"].public, deployment.tower.address, "deposit", deployment.cid, value=5
    )
    chain.mine_block()

    assert chain.height == height + 1
    assert chain.receipt(bad).reason == "bad-argument"
    assert chain.receipt(good).ok
    assert deployment.tower.deposit_of(deployment.cid) == 105
    assert deployment.channel.flag is Flag.OK
    assert chain._frames == []


def test_dispute_replaces_with_newer_state(deployment):
    """A newer state replaces the closing one before end"""
    deployment.close(S1, _r(1))
    sig_a, sig_b = deployment.sign_state(S2, _r(2))
    receipt = deployment.send("B", "dispute", S2, _r(2), sig_a, sig_b)

    assert receipt.ok
    assert deployment.channel.state == S2
    stale = deployment.send("A", "dispute", S1, _r(1), *deployment.sign_state(S1, _r(1)))
    assert stale.reason == "stale-state"


def test_dispute_after_end_fails(deployment):
    """Disputes must land strictly before end"""
    deployment.close(S1, _r(1))
    deployment.mine_to(deployment.channel.end - 1)

    receipt = deployment.send("B", "dispute", S2, _r(2), *deployment.sign_state(S2, _r(2)))

    assert receipt.reason == "dispute-window-closed"


def test_party_payout_waits_past_end(deployment):
    """Parties may only pay out once now > end"""
    deployment.close(S2, _r(2))
    end = deployment.channel.end
    deployment.mine_to(end - 1)

    early = deployment.send("A", "payout", S2, True)
    assert early.block_height == end
    assert early.reason == "too-early"

    paid = deployment.send("B", "payout", S2, True)
    assert paid.ok
    assert deployment.chain.balance_of(deployment.keys["A"].public) == 4
    assert deployment.chain.balance_of(deployment.keys["B"].public) == 6
    assert deployment.chain.balance_of(deployment.cid) == 0
    assert deployment.channel.flag is Flag.NONE


def test_outsider_cannot_payout(deployment):
    """Only the parties or the tower may call payout"""
    deployment.close(S1, _r(1))
    deployment.mine_to(deployment.channel.end + 1)

    assert deployment.send("M", "payout", S1, True).reason == "unauthorized-caller"


def test_tower_confirmation_pays_out_at_once(deployment):
    """Bit 1 from the tower releases the closing state immediately"""
    deployment.close(S2, _r(2))
    receipt = deployment.update([1])

    assert receipt.ok
    assert deployment.channel.flag is Flag.NONE
    assert deployment.channel.is_rspd is True
    assert deployment.channel.perc == 0
    assert deployment.chain.balance_of(deployment.keys["B"].public) == 6


def test_tower_denial_extends_end(deployment):
    """Bit 0 keeps the channel in dispute and pushes end to now + T"""
    deployment.close(S1, _r(1))
    deployment.mine_to(deployment.channel.ddl + 4)
    receipt = deployment.update([0])

    assert deployment.channel.flag is Flag.DISPUTE
    assert deployment.channel.end == receipt.block_height + 64
    assert deployment.channel.perc == Fraction(5, 64)


@pytest.mark.parametrize("f", [Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(2)])
def test_linear_rewarding(f):
    """A response at ddl + f*T earns the customer min(1, f) of the deposit"""
    d = deploy_channel(t=8, T=64, tower_deposit=100)
    d.close(S2, _r(2))
    ddl = d.channel.ddl
    respond_at = ddl + int(f * 64)
    d.mine_to(respond_at - 1)

    update = d.update([1])
    assert update.block_height == respond_at
    assert d.channel.perc == min(Fraction(1), f)

    d.mine_to(max(d.chain.height, d.channel.end))
    before = d.chain.balance_of(d.keys["A"].public)
    challenge = d.send("A", "challenge", S2, _r(2), d.receipt_sig(S2, _r(2)))

    assert challenge.ok
    refund = d.chain.balance_of(d.keys["A"].public) - before
    expected = min(Fraction(1), f)
    assert refund == 100 * expected.numerator // expected.denominator
    assert d.tower.deposit_of(d.cid) == 100 - refund


def test_challenge_after_silence_refunds_everything(deployment):
    """No tower response at all: the whole deposit goes to the customer"""
    deployment.close(S2, _r(2))
    deployment.mine_to(deployment.channel.end)
    deployment.send("A", "payout", S2, True)

    receipt = deployment.send("A", "challenge", S2, _r(2), deployment.receipt_sig(S2, _r(2)))

    assert receipt.ok
    assert deployment.tower.deposit_of(deployment.cid) == 0
    assert deployment.chain.balance_of(deployment.keys["A"].public) == 4 + 100


def test_challenge_wrong_close_refunds_everything():
    """A receipt newer than the paid-out state proves a wrongful confirmation"""
    d = deploy_channel(customer="B")
    d.close(S1, _r(1))
    d.update([1])
    d.mine_to(d.channel.end)

    receipt = d.send("B", "challenge", S2, _r(2), d.receipt_sig(S2, _r(2)))

    assert receipt.ok
    assert d.chain.balance_of(d.keys["B"].public) == 3 + 100


def test_challenge_is_one_shot():
    """A second successful challenge reverts"""
    d = deploy_channel(tower_deposit=100)
    d.close(S2, _r(2))
    d.mine_to(d.channel.ddl + 31)
    d.update([1])
    d.mine_to(d.channel.end)

    sig = d.receipt_sig(S2, _r(2))
    assert d.send("A", "challenge", S2, _r(2), sig).ok
    again = d.send("A", "challenge", S2, _r(2), sig)

    assert again.reason == "already-challenged"
    assert d.tower.deposit_of(d.cid) == 50


def test_challenge_rejects_forged_receipt(deployment):
    """Receipts must carry the watchtower's signature"""
    deployment.close(S2, _r(2))
    deployment.mine_to(deployment.channel.end)
    sig_a, _ = deployment.sign_state(S2, _r(2))

    assert deployment.send("A", "challenge", S2, _r(2), sig_a).reason == "bad-signature"


def test_challenge_too_early(deployment):
    """Challenges wait until after end"""
    deployment.close(S2, _r(2))

    receipt = deployment.send("A", "challenge", S2, _r(2), deployment.receipt_sig(S2, _r(2)))

    assert receipt.reason == "too-early"


def test_solo_close_without_counterparty():
    """Before B registers, A alone can reclaim a state with bal_B = 0"""
    d = deploy_channel(register_b=False)
    sig_a, _ = d.sign_state(S0, _r(0))

    assert d.send("A", "close", S0, _r(0), sig_a, sig_a).ok
    bad = deploy_channel(register_b=False, seed=1)
    sig_a, _ = bad.sign_state(S1, _r(1))
    assert bad.send("A", "close", S1, _r(1), sig_a, sig_a).reason == "no-counterparty"
