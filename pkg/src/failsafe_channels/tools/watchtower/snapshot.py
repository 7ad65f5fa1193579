"""Append-only record store so a restarted watchtower keeps its commitments.

File layout: b"FSWT" ∥ version (1B), then records, each a 4-byte big-endian
length followed by cid ∥ idx ∥ h_s ∥ sigma_A ∥ sigma_B ∥ flags.
Later records for a cid supersede earlier ones.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator
from dataclasses import dataclass
from pathlib import Path

from ...protocol.errors import ProtocolError
from ...protocol.types import (
    CID_LEN,
    DIGEST_LEN,
    SIGNATURE_LEN,
    UINT128_BYTES,
    Cid,
    Digest,
    Signature,
    decode_uint128,
    encode_uint128,
    require_length,
)

logger = logging.getLogger(__name__)

MAGIC = b"FSWT"
VERSION = 1
HEADER = MAGIC + bytes([VERSION])
LENGTH_PREFIX = 4
RECORD_LEN = CID_LEN + UINT128_BYTES + DIGEST_LEN + 2 * SIGNATURE_LEN + 1

FLAG_CLOSURE_SEEN = 0x01


class SnapshotError(ProtocolError):
    pass


@dataclass(frozen=True)
class SnapshotRecord:
    cid: Cid
    idx: int
    h_s: Digest
    sig_a: Signature
    sig_b: Signature
    flags: int = 0

    @property
    def closure_seen(self) -> bool:
        return bool(self.flags & FLAG_CLOSURE_SEEN)

    def encode(self) -> bytes:
        body = (
            require_length(self.cid, CID_LEN, "cid")
            + encode_uint128(self.idx, "idx")
            + require_length(self.h_s, DIGEST_LEN, "h_s")
            + require_length(self.sig_a, SIGNATURE_LEN, "sig_a")
            + require_length(self.sig_b, SIGNATURE_LEN, "sig_b")
            + bytes([self.flags])
        )
        return len(body).to_bytes(LENGTH_PREFIX, "big") + body

    @classmethod
    def decode(cls, body: bytes) -> SnapshotRecord:
        if len(body) != RECORD_LEN:
            raise SnapshotError(f"record must be {RECORD_LEN} bytes, got {len(body)}")
        pos = 0

        def take(n: int) -> bytes:
            nonlocal pos
            chunk = body[pos : pos + n]
            pos += n
            return chunk

        return cls(
            cid=Cid(take(CID_LEN)),
            idx=decode_uint128(take(UINT128_BYTES)),
            h_s=Digest(take(DIGEST_LEN)),
            sig_a=Signature(take(SIGNATURE_LEN)),
            sig_b=Signature(take(SIGNATURE_LEN)),
            flags=take(1)[0],
        )


def encoded_size() -> int:
    return LENGTH_PREFIX + RECORD_LEN


class SnapshotStore:
    def __init__(self, path: Path | str) -> None:
        self.path = Path(path)

    def _ensure_header(self) -> None:
        if self.path.exists() and self.path.stat().st_size > 0:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "wb") as f:
            f.write(HEADER)

    def reset(self) -> None:
        """Start an empty snapshot, dropping any earlier records at this path."""
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "wb") as f:
            f.write(HEADER)

    def append(self, record: SnapshotRecord) -> None:
        self._ensure_header()
        with open(self.path, "ab") as f:
            f.write(record.encode())

    def iter_records(self) -> Iterator[SnapshotRecord]:
        if not self.path.exists():
            return
        data = self.path.read_bytes()
        if data[: len(MAGIC)] != MAGIC:
            raise SnapshotError(f"{self.path} is not a watchtower snapshot")
        if len(data) < len(HEADER) or data[len(MAGIC)] != VERSION:
            raise SnapshotError(f"unsupported snapshot version in {self.path}")
        pos = len(HEADER)
        while pos < len(data):
            if pos + LENGTH_PREFIX > len(data):
                raise SnapshotError(f"truncated length prefix at offset {pos}")
            length = int.from_bytes(data[pos : pos + LENGTH_PREFIX], "big")
            pos += LENGTH_PREFIX
            if pos + length > len(data):
                raise SnapshotError(f"truncated record at offset {pos}")
            yield SnapshotRecord.decode(data[pos : pos + length])
            pos += length

    def load(self) -> dict[Cid, SnapshotRecord]:
        latest: dict[Cid, SnapshotRecord] = {}
        for record in self.iter_records():
            latest[record.cid] = record
        logger.debug("loaded %d records from %s", len(latest), self.path)
        return latest
