from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import pytest

from failsafe_channels.protocol import crypto
from failsafe_channels.protocol.chain import Receipt, SimChain
from failsafe_channels.protocol.channel_contract import ChannelContract, Timeouts
from failsafe_channels.protocol.crypto import KeyPair
from failsafe_channels.protocol.tower_contract import ConfirmationSet, TowerContract
from failsafe_channels.protocol.types import ChannelState, Nonce, NonceSource, Signature


@dataclass
class Deployment:
    """A funded channel wired to a tower contract on a fresh chain."""

    chain: SimChain
    keys: dict[str, KeyPair]
    tower: TowerContract
    channel: ChannelContract
    nonces: NonceSource

    @property
    def cid(self):
        return self.channel.address

    def mine_to(self, height: int) -> None:
        while self.chain.height < height:
            self.chain.mine_block()

    def send(self, role: str, method: str, *args, value: int = 0, to=None) -> Receipt:
        """Submit one transaction from `role` and mine it."""
        target = self.cid if to is None else to
        tx_id = self.chain.submit_tx(self.keys[role].public, target, method, *args, value=value)
        self.chain.mine_block()
        receipt = self.chain.receipt(tx_id)
        assert receipt is not None
        return receipt

    def sign_state(self, state: ChannelState, r: Nonce) -> tuple[Signature, Signature]:
        payload = crypto.payment_payload(self.cid, state.idx, crypto.hash_commit(state, r))
        return crypto.sign(self.keys["A"].secret, payload), crypto.sign(self.keys["B"].secret, payload)

    def close(self, state: ChannelState, r: Nonce, role: str = "A", method: str = "close") -> Receipt:
        sig_a, sig_b = self.sign_state(state, r)
        return self.send(role, method, state, r, sig_a, sig_b)

    def receipt_sig(self, state: ChannelState, r: Nonce) -> Signature:
        payload = crypto.receipt_payload(self.cid, state.idx, crypto.hash_commit(state, r))
        return crypto.sign(self.keys["WT"].secret, payload)

    def update(self, bits: list[int], sender: str = "WT") -> Receipt:
        return self.send(sender, "update", ConfirmationSet.from_bits(bits), to=self.tower.address)

    def perc(self) -> Fraction:
        return self.channel.perc


def deploy_channel(
    t: int = 8,
    T: int = 64,
    deposit_a: int = 10,
    deposit_b: int = 0,
    tower_deposit: int = 100,
    seed: int = 0,
    customer: str = "A",
    register_b: bool = True,
) -> Deployment:
    chain = SimChain(seed)
    keys = {role: KeyPair.from_seed(f"test:{role}:{seed}") for role in ("A", "B", "WT", "M")}
    tower = chain.deploy(TowerContract, keys["WT"].public, keys["WT"].public)
    channel = chain.deploy(ChannelContract, keys["A"].public, Timeouts(t, T))
    chain.mint(keys["A"].public, deposit_a)
    chain.mint(keys["B"].public, deposit_b)
    chain.mint(keys[customer].public, tower_deposit)
    chain.submit_tx(keys["A"].public, channel.address, "setup", tower.address, keys["WT"].public, value=deposit_a)
    chain.submit_tx(keys[customer].public, tower.address, "deposit", channel.address, value=tower_deposit)
    chain.mine_block()
    if register_b:
        chain.submit_tx(keys["B"].public, channel.address, "deposit", value=deposit_b)
        chain.mine_block()
    return Deployment(chain, keys, tower, channel, NonceSource(f"test:{seed}"))


@pytest.fixture
def deployment() -> Deployment:
    """t=8, T=64, A deposits 10, B registers with 0, customer A pays 100 to the tower"""
    return deploy_channel()


@pytest.fixture
def isolated_config(tmp_path, monkeypatch):
    """Point the module-level config manager at an empty temporary directory"""
    from failsafe_channels.shared.config import config_manager

    config_dir = tmp_path / ".failsafe-channels"
    monkeypatch.setattr(config_manager, "_config_dir", config_dir)
    monkeypatch.setattr(config_manager, "_config_file", config_dir / "config.yaml")
    monkeypatch.setattr(config_manager, "_config", None)
    return config_manager
