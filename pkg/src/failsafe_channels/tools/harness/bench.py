"""Off-chain exchange throughput: propose, accept, complete, ingest, two receipts.

Informational only; wall-clock numbers depend on the machine and never
appear in traces or metrics files.
"""

from __future__ import annotations

import asyncio
import logging
import time
from collections.abc import Iterable
from dataclasses import dataclass

from ...protocol.channel_contract import ChannelContract, Timeouts
from ...protocol.crypto import KeyPair
from ...protocol.chain import SimChain
from ...protocol.offchain import PartyLedger, open_channel
from ...protocol.tower_contract import TowerContract
from ...protocol.types import NonceSource
from ...protocol.wire import CounterSignature, PaymentProposal, WatchtowerReceipt
from ..watchtower.service import WatchtowerService

logger = logging.getLogger(__name__)

SWEEP_SIZES = (1, 10, 100, 1000, 10000)


@dataclass(frozen=True)
class BenchResult:
    payments: int
    seconds: float
    mode: str = "sequential"
    blocks: int = 0

    @property
    def per_exchange(self) -> float:
        return self.seconds / self.payments if self.payments else 0.0

    @property
    def per_second(self) -> float:
        return self.payments / self.seconds if self.seconds else 0.0


@dataclass
class _BenchChannel:
    chain: SimChain
    service: WatchtowerService
    payer: PartyLedger
    payee: PartyLedger


def _bench_channel(payments: int, seed: int = 0) -> _BenchChannel:
    """One employed channel funded so A can pay B one token per exchange."""
    chain = SimChain(seed)
    wt = KeyPair.from_seed(f"bench:wt:{seed}")
    a = KeyPair.from_seed(f"bench:A:{seed}")
    b = KeyPair.from_seed(f"bench:B:{seed}")
    tower = chain.deploy(TowerContract, wt.public, wt.public)
    channel = chain.deploy(ChannelContract, a.public, Timeouts(256, 5760))
    chain.mint(a.public, payments + 1)
    chain.submit_tx(a.public, channel.address, "setup", tower.address, wt.public, value=payments)
    chain.submit_tx(a.public, tower.address, "deposit", channel.address, value=1)
    chain.submit_tx(b.public, channel.address, "deposit")
    chain.mine_block()

    service = WatchtowerService(wt, chain, tower.address, period=16)
    if not service.employ(channel.address):
        raise RuntimeError("benchmark channel was not employed")
    payer, payee = open_channel(
        channel.address,
        a,
        b,
        payments,
        0,
        wt.public,
        NonceSource(f"bench:nonce:A:{seed}"),
        NonceSource(f"bench:nonce:B:{seed}"),
    )
    service.ingest(payer.submission().encode())
    return _BenchChannel(chain, service, payer, payee)


def bench_throughput(payments: int) -> BenchResult:
    if payments < 1:
        raise ValueError(f"payments must be >= 1, got {payments}")
    bench = _bench_channel(payments)
    payer, payee, service = bench.payer, bench.payee, bench.service

    start = time.perf_counter()
    for _ in range(payments):
        proposal = payer.propose_payment(1)
        counter, submission = payee.accept_payment(PaymentProposal.decode(proposal.encode()))
        payer.complete_payment(CounterSignature.decode(counter.encode()))
        encoded = service.ingest(submission.encode()).encode()
        for ledger in (payer, payee):
            ledger.store_receipt(WatchtowerReceipt.decode(encoded))
    elapsed = time.perf_counter() - start

    logger.debug("%d exchanges in %.3fs", payments, elapsed)
    return BenchResult(payments, elapsed)


def bench_sweep(sizes: Iterable[int] = SWEEP_SIZES) -> list[BenchResult]:
    return [bench_throughput(size) for size in sizes]


async def _realtime(payments: int, block_interval: float) -> BenchResult:
    bench = _bench_channel(payments)
    payer, payee, service, chain = bench.payer, bench.payee, bench.service, bench.chain
    proposals: asyncio.Queue[bytes] = asyncio.Queue()
    counters: asyncio.Queue[bytes] = asyncio.Queue()
    submissions: asyncio.Queue[bytes] = asyncio.Queue()
    receipts = {"A": asyncio.Queue[bytes](), "B": asyncio.Queue[bytes]()}
    finished = asyncio.Event()
    start_height = chain.height

    async def run_payer() -> None:
        for _ in range(payments):
            await proposals.put(payer.propose_payment(1).encode())
            payer.complete_payment(CounterSignature.decode(await counters.get()))
            payer.store_receipt(WatchtowerReceipt.decode(await receipts["A"].get()))
        finished.set()

    async def run_payee() -> None:
        for _ in range(payments):
            counter, submission = payee.accept_payment(PaymentProposal.decode(await proposals.get()))
            await counters.put(counter.encode())
            await submissions.put(submission.encode())
            payee.store_receipt(WatchtowerReceipt.decode(await receipts["B"].get()))

    async def run_watchtower() -> None:
        for _ in range(payments):
            encoded = service.ingest(await submissions.get()).encode()
            for queue in receipts.values():
                await queue.put(encoded)

    async def run_miner() -> None:
        while not finished.is_set():
            await asyncio.sleep(block_interval)
            chain.mine_block()

    start = time.perf_counter()
    await asyncio.gather(run_payer(), run_payee(), run_watchtower(), run_miner())
    elapsed = time.perf_counter() - start
    return BenchResult(payments, elapsed, mode="realtime", blocks=chain.height - start_height)


def bench_realtime(payments: int, block_interval: float = 0.01) -> BenchResult:
    """Actors as concurrent tasks with the chain mined on a timer."""
    if payments < 1:
        raise ValueError(f"payments must be >= 1, got {payments}")
    return asyncio.run(_realtime(payments, block_interval))
