"""Deployment-cost metrics derived from a finished run trace."""

from __future__ import annotations

from collections import Counter
from typing import Any

from ..watchtower.snapshot import encoded_size
from .scenario import RunTrace


def payout_distribution(trace: RunTrace) -> dict[str, Any]:
    gaps = sorted(gap for gap in (ch.blocks_to_payout for ch in trace.channels) if gap is not None)
    if not gaps:
        return {"count": 0, "min": None, "max": None, "median": None, "histogram": {}}
    return {
        "count": len(gaps),
        "min": gaps[0],
        "max": gaps[-1],
        "median": gaps[len(gaps) // 2],
        "histogram": {str(gap): n for gap, n in sorted(Counter(gaps).items())},
    }


def update_summary(trace: RunTrace) -> dict[str, Any]:
    period = trace.config.period or 1
    per_period = Counter(update.height // period for update in trace.updates)
    return {
        "count": len(trace.updates),
        "ok": sum(1 for update in trace.updates if update.ok),
        "max_per_period": max(per_period.values(), default=0),
        "closures": [update.m for update in trace.updates],
        "bitmap_bytes": [update.bitmap_bytes for update in trace.updates],
    }


def metrics_report(trace: RunTrace) -> dict[str, Any]:
    """Wire bytes per edge, watchtower storage, update traffic and payout latency."""
    return {
        "scenario": trace.config.name,
        "seed": trace.config.seed,
        "mode": trace.config.mode.value,
        "final_height": trace.final_height,
        "blocks_to_payout": payout_distribution(trace),
        "wire": trace.wire,
        "watchtower": {
            "records": trace.records,
            "storage_bytes": trace.storage_bytes,
            "record_bytes": encoded_size(),
        },
        "updates": update_summary(trace),
        "channels": [ch.to_json() for ch in trace.channels],
        "balances": dict(sorted(trace.balances.items())),
        "checks": [
            {"name": check.name, "passed": check.passed, "detail": check.detail} for check in trace.checks
        ],
        "ok": trace.ok,
        "trace_sha256": trace.digest(),
    }
