from __future__ import annotations

from enum import StrEnum


class ProtocolError(Exception):
    pass


class EncodingError(ProtocolError):
    pass


class WireFormatError(ProtocolError):
    pass


class ChainError(ProtocolError):
    pass


class PaymentError(ProtocolError):
    pass


class AssertionRejected(ProtocolError):
    pass


class RevertReason(StrEnum):
    """Machine-readable revert reasons, listed in FORMATS.md"""

    BAD_FLAG = "bad-flag"
    BAD_SIGNATURE = "bad-signature"
    STALE_STATE = "stale-state"
    DISPUTE_CLOSED = "dispute-window-closed"
    TOO_EARLY = "too-early"
    STATE_MISMATCH = "state-mismatch"
    INSUFFICIENT_FUNDS = "insufficient-funds"
    UNAUTHORIZED_CALLER = "unauthorized-caller"
    VICTIM_MISMATCH = "victim-mismatch"
    ZERO_DEPOSIT = "zero-deposit"
    CONFS_LENGTH = "confs-length-mismatch"
    COUNTERPARTY_REGISTERED = "counterparty-registered"
    NO_COUNTERPARTY = "no-counterparty"
    ALREADY_CHALLENGED = "already-challenged"
    UNKNOWN_METHOD = "unknown-method"
    BAD_ARGUMENT = "bad-argument"


class Revert(ProtocolError):
    def __init__(self, reason: RevertReason, detail: str = "") -> None:
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)


def require(condition: bool, reason: RevertReason, detail: str = "") -> None:
    if not condition:
        raise Revert(reason, detail)
