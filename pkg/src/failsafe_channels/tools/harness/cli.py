from __future__ import annotations

import sys
from pathlib import Path

import click

from ...protocol.errors import ProtocolError
from ...shared.config import Config, config_manager
from ...shared.utils import CLIContext, FileWriter, format_duration, print_table
from .bench import SWEEP_SIZES, BenchResult, bench_realtime, bench_sweep, bench_throughput
from .formats import verify_formats
from .metrics import metrics_report
from .runner import run_scenario
from .scenario import RunTrace, ScenarioConfig, load_scenario


@click.group(name="harness")
@click.pass_context
def harness(ctx: click.Context) -> None:
    """🧪 Scenario harness

    Wire parties, a watchtower and an adversary to a deterministic sim-chain
    and run scripted scenarios end to end.

    **Examples:**
    ```bash
    # Run a scenario and keep the per-block trace
    failsafe-channels harness run scenarios/stale_close.json --trace out.jsonl

    # Same scenario, another seed, with a metrics file
    failsafe-channels harness run scenarios/stale_close.json --seed 7 --metrics m.json

    # Check every wire format against its golden vector
    failsafe-channels harness verify-formats

    # Time 1000 complete off-chain exchanges
    failsafe-channels harness bench-throughput --payments 1000
    ```
    """
    pass


def report_trace(cli_ctx: CLIContext, trace: RunTrace) -> None:
    rows = [[check.name, "✅" if check.passed else "❌", check.detail] for check in trace.checks]
    if not cli_ctx.quiet:
        print_table(f"{trace.config.name} (seed {trace.config.seed})", ["Check", "Held", "Detail"], rows)
    for ch in trace.channels:
        if ch.final_state is not None:
            cli_ctx.debug(
                f"channel {ch.cid[:12]}: final {ch.final_state}, {ch.blocks_to_payout} blocks to payout, "
                f"finalized by {ch.finalized_by}"
            )


def execute_scenario(
    cli_ctx: CLIContext,
    scenario: ScenarioConfig,
    trace_file: Path | None,
    metrics_file: Path | None,
    base_config: Config | None = None,
) -> None:
    """Run, write the requested files, report, and exit non-zero on a failed check."""
    try:
        cli_ctx.configure_logging()
        trace = run_scenario(scenario, base_config or config_manager.load_config())

        if trace_file is not None:
            trace.write(trace_file)
            cli_ctx.info(f"📝 Trace saved to: {trace_file}")
        if metrics_file is not None:
            FileWriter.write_json(metrics_file, metrics_report(trace))
            cli_ctx.info(f"📊 Metrics saved to: {metrics_file}")

        report_trace(cli_ctx, trace)
        if not trace.ok:
            failed = ", ".join(check.name for check in trace.failed_checks)
            cli_ctx.error(f"Checks failed: {failed}")
            sys.exit(1)
        cli_ctx.success(f"All checks held after {trace.final_height} blocks")

    except ProtocolError as e:
        cli_ctx.error(str(e))
        sys.exit(1)
    except KeyboardInterrupt:
        cli_ctx.warning("🛑 Run cancelled by user")
        sys.exit(1)
    except Exception as e:
        cli_ctx.error(f"Unexpected error: {str(e)}")
        if cli_ctx.verbose:
            import traceback
            traceback.print_exc()
        sys.exit(1)


@harness.command()
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--seed", type=int, help="Seed for keys, nonces and the chain (overrides the scenario)")
@click.option(
    "--trace", "trace_file",
    type=click.Path(dir_okay=False, path_type=Path),
    help="Write the JSON-lines block trace here",
)
@click.option(
    "--metrics", "metrics_file",
    type=click.Path(dir_okay=False, path_type=Path),
    help="Write the metrics report here",
)
@click.pass_obj
def run(
    cli_ctx: CLIContext,
    scenario_file: Path,
    seed: int | None,
    trace_file: Path | None,
    metrics_file: Path | None,
) -> None:
    """▶️ Run a scenario file

    **SCENARIO_FILE**: JSON scenario (see the scenarios/ directory)

    Exits 0 only if every in-run check held.
    """
    try:
        scenario = load_scenario(scenario_file)
    except ProtocolError as e:
        cli_ctx.error(str(e))
        sys.exit(1)
    if seed is not None:
        scenario = scenario.model_copy(update={"seed": seed})
    execute_scenario(cli_ctx, scenario, trace_file, metrics_file)


@harness.command("verify-formats")
@click.pass_obj
def verify_formats_cmd(cli_ctx: CLIContext) -> None:
    """🔍 Check every wire format against its golden vector"""
    results = verify_formats()
    if not cli_ctx.quiet:
        rows = [[r.name, "✅" if r.passed else "❌", r.detail] for r in results]
        print_table("Wire formats", ["Vector", "Match", "Detail"], rows)

    failed = [r.name for r in results if not r.passed]
    if failed:
        cli_ctx.error(f"Mismatched vectors: {', '.join(failed)}")
        sys.exit(1)
    cli_ctx.success(f"{len(results)} vectors match")


def _bench_rows(results: list[BenchResult]) -> list[list[str]]:
    return [
        [
            str(r.payments),
            r.mode,
            format_duration(r.seconds),
            format_duration(r.per_exchange),
            f"{r.per_second:,.0f}",
        ]
        for r in results
    ]


@harness.command("bench-throughput")
@click.option("--payments", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--sweep", is_flag=True, help=f"Run batch sizes {', '.join(map(str, SWEEP_SIZES))}")
@click.option("--realtime", is_flag=True, help="Run actors as asyncio tasks with a timed miner")
@click.option("--block-interval", type=float, default=0.01, show_default=True, help="Seconds per block in --realtime")
@click.pass_obj
def bench_throughput_cmd(
    cli_ctx: CLIContext,
    payments: int,
    sweep: bool,
    realtime: bool,
    block_interval: float,
) -> None:
    """⏱️ Time complete off-chain exchanges

    Each exchange is propose, accept, complete, watchtower ingest and two
    receipts. Numbers are informational and depend on the machine.
    """
    try:
        cli_ctx.configure_logging()
        if sweep:
            results = bench_sweep()
        elif realtime:
            results = [bench_realtime(payments, block_interval)]
        else:
            results = [bench_throughput(payments)]
    except (ProtocolError, ValueError) as e:
        cli_ctx.error(str(e))
        sys.exit(1)
    except KeyboardInterrupt:
        cli_ctx.warning("🛑 Benchmark cancelled by user")
        sys.exit(1)

    print_table("Off-chain throughput", ["Payments", "Mode", "Total", "Per exchange", "Per second"], _bench_rows(results))
    if realtime and not sweep:
        cli_ctx.info(f"⛏️ {results[0].blocks} blocks mined during the run")
