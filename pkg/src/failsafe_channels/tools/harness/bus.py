"""In-memory message layer between actors, with per-edge byte accounting.

Queues are FIFO per (sender, receiver) pair. Every party → watchtower message
passes a boundary check: it must decode to exactly the submission fields and
must not carry a registered balance pair or nonce.
"""

from __future__ import annotations

import logging
from collections import deque
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

from ...protocol.errors import WireFormatError
from ...protocol.types import ChannelState, Nonce, encode_state
from ...protocol.wire import WatchtowerSubmission

logger = logging.getLogger(__name__)

SUBMISSION_FIELDS = frozenset({"cid", "h_s", "idx", "sig_a", "sig_b"})


class Edge(StrEnum):
    P_TO_WT = "P->WT"
    WT_TO_P = "WT->P"
    P_TO_P = "P<->P"
    ASSERTION = "P<->P assertion"


@dataclass(frozen=True)
class Envelope:
    src: str
    dst: str
    edge: Edge
    data: bytes


@dataclass
class EdgeStats:
    messages: int = 0
    bytes: int = 0
    sizes: set[int] = field(default_factory=set)

    def to_json(self) -> dict[str, Any]:
        return {"messages": self.messages, "bytes": self.bytes, "sizes": sorted(self.sizes)}


Tap = Callable[[Envelope], None]


class MessageBus:
    def __init__(self) -> None:
        self._queues: dict[tuple[str, str], deque[Envelope]] = {}
        self.stats: dict[Edge, EdgeStats] = {edge: EdgeStats() for edge in Edge}
        self.privacy_violations: list[str] = []
        self.boundary_checks = 0
        self._secrets: set[bytes] = set()
        self._taps: list[Tap] = []

    def register_secret(self, state: ChannelState, r: Nonce | None = None) -> None:
        """Mark a balance pair (and nonce) that must never reach the watchtower."""
        pair = encode_state(state)[:32]
        if any(pair):
            self._secrets.add(pair)
        if r is not None:
            self._secrets.add(bytes(r))

    def tap(self, fn: Tap) -> None:
        self._taps.append(fn)

    def _check_boundary(self, envelope: Envelope) -> None:
        self.boundary_checks += 1
        try:
            fields = WatchtowerSubmission.decode(envelope.data).fields()
        except WireFormatError as e:
            self.privacy_violations.append(f"{envelope.src}: undecodable P->WT message ({e})")
            return
        if set(fields) != SUBMISSION_FIELDS:
            self.privacy_violations.append(f"{envelope.src}: unexpected fields {sorted(fields)}")
        data = envelope.data
        windows = {data[i : i + 32] for i in range(len(data) - 31)}
        if not windows.isdisjoint(self._secrets):
            self.privacy_violations.append(f"{envelope.src}: balance or nonce bytes leaked")

    def send(self, src: str, dst: str, edge: Edge, data: bytes, *, tapped: bool = True) -> None:
        envelope = Envelope(src, dst, edge, bytes(data))
        stats = self.stats[edge]
        stats.messages += 1
        stats.bytes += len(data)
        stats.sizes.add(len(data))
        if edge is Edge.P_TO_WT:
            self._check_boundary(envelope)
        self._queues.setdefault((src, dst), deque()).append(envelope)
        if tapped:
            for fn in self._taps:
                fn(envelope)

    def pending(self) -> int:
        return sum(len(q) for q in self._queues.values())

    def deliverable(self, online: Callable[[str], bool]) -> list[Envelope]:
        """Pop every queued message whose receiver is online, pair by pair."""
        out: list[Envelope] = []
        for (_, dst), queue in sorted(self._queues.items()):
            if queue and online(dst):
                out.extend(queue)
                queue.clear()
        return out

    def wire_report(self) -> dict[str, dict[str, Any]]:
        return {edge.value: stats.to_json() for edge, stats in self.stats.items()}
