from __future__ import annotations

import sys
from pathlib import Path

import click

from ...protocol.errors import ProtocolError
from ...protocol.types import short_hex
from ...shared.config import config_manager
from ...shared.utils import CLIContext, format_size, print_table
from ..harness.cli import execute_scenario
from ..harness.scenario import Window, load_scenario
from .snapshot import SnapshotStore, encoded_size


@click.group(name="watchtower")
@click.pass_context
def watchtower(ctx: click.Context) -> None:
    """🗼 Watchtower daemon

    Run scenarios with watchtower overrides and inspect its persisted records.

    **Examples:**
    ```bash
    # Update every 4 blocks and keep a snapshot on disk
    failsafe-channels watchtower run scenarios/honest_close.json --period-blocks 4 \\
        --snapshot-path wt.snap

    # Take the watchtower down for blocks 10..60
    failsafe-channels watchtower run scenarios/honest_close.json --offline-from 10 --offline-until 60

    # Show what the watchtower stored
    failsafe-channels watchtower inspect --snapshot-path wt.snap
    ```
    """
    pass


@watchtower.command()
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--period-blocks", type=click.IntRange(min=1), help="Blocks between confirmation updates")
@click.option("--offline-from", type=click.IntRange(min=0), help="First block height the watchtower misses")
@click.option("--offline-until", type=click.IntRange(min=0), help="Last block height the watchtower misses")
@click.option(
    "--snapshot-path",
    type=click.Path(dir_okay=False, path_type=Path),
    help="Persist watchtower records here (overrides config)",
)
@click.option("--seed", type=int, help="Seed override")
@click.option("--trace", "trace_file", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--metrics", "metrics_file", type=click.Path(dir_okay=False, path_type=Path))
@click.pass_obj
def run(
    cli_ctx: CLIContext,
    scenario_file: Path,
    period_blocks: int | None,
    offline_from: int | None,
    offline_until: int | None,
    snapshot_path: Path | None,
    seed: int | None,
    trace_file: Path | None,
    metrics_file: Path | None,
) -> None:
    """▶️ Run a scenario with watchtower overrides

    **SCENARIO_FILE**: JSON scenario in watchtower mode
    """
    if (offline_from is None) != (offline_until is None):
        cli_ctx.error("--offline-from and --offline-until go together")
        sys.exit(1)

    try:
        scenario = load_scenario(scenario_file)
        base = config_manager.load_config().model_copy(deep=True)
        updates: dict[str, object] = {}
        if period_blocks is not None:
            updates["period"] = period_blocks
        if seed is not None:
            updates["seed"] = seed
        if offline_from is not None and offline_until is not None:
            window = Window(start=offline_from, until=offline_until)
            availability = scenario.availability.model_copy(
                update={"watchtower": [*scenario.availability.watchtower, window]}
            )
            updates["availability"] = availability
        if snapshot_path is not None:
            base.watchtower.snapshot_path = str(snapshot_path)
        scenario = scenario.model_copy(update=updates)
    except ProtocolError as e:
        cli_ctx.error(str(e))
        sys.exit(1)
    except ValueError as e:
        cli_ctx.error(f"Invalid override: {e}")
        sys.exit(1)

    if base.watchtower.snapshot_path:
        cli_ctx.debug(f"snapshot at {base.watchtower.snapshot_path}")
    execute_scenario(cli_ctx, scenario, trace_file, metrics_file, base)


@watchtower.command()
@click.option(
    "--snapshot-path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    required=True,
)
@click.pass_obj
def inspect(cli_ctx: CLIContext, snapshot_path: Path) -> None:
    """🔎 Show the records in a watchtower snapshot"""
    try:
        records = SnapshotStore(snapshot_path).load()
    except ProtocolError as e:
        cli_ctx.error(str(e))
        sys.exit(1)

    if not records:
        cli_ctx.warning("Snapshot holds no records")
        return

    rows = [
        [
            short_hex(record.cid),
            str(record.idx),
            short_hex(record.h_s),
            "yes" if record.closure_seen else "no",
        ]
        for record in sorted(records.values(), key=lambda r: r.cid)
    ]
    print_table(f"Watchtower snapshot: {snapshot_path.name}", ["Channel", "Idx", "h_s", "Closure seen"], rows)
    cli_ctx.info(f"💾 {len(records)} channel(s), {format_size(len(records) * encoded_size())} live")
