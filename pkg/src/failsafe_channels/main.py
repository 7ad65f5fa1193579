from __future__ import annotations

import sys
from typing import Any

import click
import rich_click as rich_click

from .shared.config import config_manager
from .shared.utils import CLIContext, print_error, print_table

# Configure rich-click
rich_click.rich_click.USE_RICH_MARKUP = True
rich_click.rich_click.USE_MARKDOWN = True
rich_click.rich_click.SHOW_ARGUMENTS = True
rich_click.rich_click.GROUP_ARGUMENTS_OPTIONS = True


@click.group(
    name="failsafe-channels",
    context_settings={"help_option_names": ["-h", "--help"]},
    invoke_without_command=True,
)
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose output")
@click.option("--quiet", "-q", is_flag=True, help="Suppress all output except errors")
@click.pass_context
def main(ctx: click.Context, verbose: bool, quiet: bool) -> None:
    """⛓️ **Failsafe Channels** - watchtowers that fail safe

    Two-party payment channels guarded by a watchtower whose silence can never
    let a stale close through, plus short-lived assertions that need no
    watchtower at all. Everything runs on a deterministic simulated chain.

    **Available Tools:**
    - `harness`: run scenarios, check wire formats, time exchanges
    - `watchtower`: run with daemon overrides, inspect snapshots

    **Quick Start:**
    ```bash
    # Write a config with the default timeouts
    failsafe-channels config init

    # Run a scenario; exit code 0 means every check held
    failsafe-channels run scenarios/honest_close.json --trace out.jsonl
    ```

    Use `failsafe-channels COMMAND --help` for detailed help on any command.
    """
    cli_ctx = CLIContext()
    cli_ctx.verbose = verbose
    cli_ctx.quiet = quiet
    ctx.obj = cli_ctx

    if ctx.invoked_subcommand is None:
        show_tools_list(cli_ctx)


@main.command()
@click.pass_obj
def list(cli_ctx: CLIContext) -> None:
    """📋 List all available tools and their descriptions"""
    show_tools_list(cli_ctx)


@main.group()
@click.pass_context
def config(ctx: click.Context) -> None:
    """⚙️ Configuration management

    Protocol timeouts, watchtower settings and harness limits, stored in
    ~/.failsafe-channels/config.yaml. Scenario files override them per run.

    **Examples:**
    ```bash
    # Shorter timeouts for quick experiments
    failsafe-channels config set protocol.t 16
    failsafe-channels config set protocol.T 64

    # Show current configuration
    failsafe-channels config show
    ```
    """
    pass


@config.command("set")
@click.argument("key")
@click.argument("value")
@click.pass_obj
def config_set(cli_ctx: CLIContext, key: str, value: str) -> None:
    """✏️ Set a configuration value

    **KEY**: Configuration key (e.g., 'protocol.t', 'watchtower.period')
    **VALUE**: Value to set
    """
    try:
        config_manager.set_config_value(key, value)
        cli_ctx.success(f"Set {key} = {value}")
    except Exception as e:
        cli_ctx.error(f"Failed to set config: {str(e)}")
        sys.exit(1)


@config.command("get")
@click.argument("key")
@click.pass_obj
def config_get(cli_ctx: CLIContext, key: str) -> None:
    """📖 Get a configuration value

    **KEY**: Configuration key to retrieve
    """
    try:
        value = config_manager.get_config_value(key)
        click.echo(value)
    except Exception as e:
        cli_ctx.error(f"Failed to get config: {str(e)}")
        sys.exit(1)


@config.command("show")
@click.option(
    "--format", "-f",
    type=click.Choice(["table", "yaml"]),
    default="table",
    help="Output format",
)
@click.pass_obj
def config_show(cli_ctx: CLIContext, format: str) -> None:
    """👀 Show current configuration"""
    try:
        config_dict = config_manager.show_config()

        if format == "yaml":
            import yaml
            click.echo(yaml.dump(config_dict, default_flow_style=False, indent=2))
        else:
            _print_config_table(config_dict)
    except Exception as e:
        cli_ctx.error(f"Failed to show config: {str(e)}")
        sys.exit(1)


@config.command("init")
@click.option("--t", "t", type=click.IntRange(min=1), help="Tolerance timeout in blocks")
@click.option("--T", "T", type=click.IntRange(min=1), help="Fail-safe timeout in blocks")
@click.option("--snapshot-path", help="Where the watchtower persists its records")
@click.pass_obj
def config_init(cli_ctx: CLIContext, t: int | None, T: int | None, snapshot_path: str | None) -> None:
    """🚀 Write a configuration file with the defaults"""
    cli_ctx.info("🔧 Setting up Failsafe Channels configuration...")

    try:
        config_manager.ensure_config_dir()
        config_manager.save_config(config_manager.load_config())

        if t is not None:
            config_manager.set_config_value("protocol.t", t)
        if T is not None:
            config_manager.set_config_value("protocol.T", T)
        if snapshot_path is not None:
            config_manager.set_config_value("watchtower.snapshot_path", snapshot_path)

        loaded = config_manager.load_config()
        cli_ctx.success("✅ Configuration initialized!")
        cli_ctx.info(
            f"⏱️ t={loaded.protocol.t}, T={loaded.protocol.T}, "
            f"watchtower period={loaded.watchtower_period()} blocks"
        )
        cli_ctx.info(f"📁 Config location: {config_manager.config_file}")

    except Exception as e:
        cli_ctx.error(f"Failed to initialize config: {str(e)}")
        sys.exit(1)


def show_tools_list(cli_ctx: CLIContext) -> None:
    """Display available tools in a formatted table"""
    tools = [
        ["harness", "Run scenarios end to end", "scenario JSON → trace, metrics"],
        ["watchtower", "Watchtower daemon overrides", "period, downtime, snapshots"],
        ["run", "Shortcut for harness run", "scenario JSON"],
        ["verify-formats", "Check golden wire vectors", "198 / 195 / 165 / 231 bytes"],
        ["bench-throughput", "Time off-chain exchanges", "informational"],
        ["config", "Manage configuration", "timeouts, paths"],
    ]

    cli_ctx.info("⛓️ Failsafe Channels - Available Tools:")
    print_table("", ["Tool", "Description", "Scope"], tools, show_header=True)

    cli_ctx.info("\n💡 Quick Start:")
    cli_ctx.info("  1. failsafe-channels config init")
    cli_ctx.info("  2. failsafe-channels run scenarios/honest_close.json")
    cli_ctx.info("\n📖 Use --help with any command for detailed information")


def _print_config_table(config_dict: dict[str, Any]) -> None:
    rows = []

    def flatten_dict(d: dict[str, Any], parent_key: str = "") -> None:
        for key, value in d.items():
            full_key = f"{parent_key}.{key}" if parent_key else key
            if isinstance(value, dict):
                flatten_dict(value, full_key)
            else:
                rows.append([full_key, str(value)])

    flatten_dict(config_dict)
    print_table("Current Configuration", ["Key", "Value"], rows, show_header=True)


def register_tools() -> None:
    """Register all available tools and commands with the main CLI"""
    try:
        from .tools.harness.cli import bench_throughput_cmd, harness, run, verify_formats_cmd
        main.add_command(harness)
        main.add_command(run, name="run")
        main.add_command(verify_formats_cmd, name="verify-formats")
        main.add_command(bench_throughput_cmd, name="bench-throughput")
    except ImportError as e:
        print_error(f"Failed to load harness tool: {e}")

    try:
        from .tools.watchtower.cli import watchtower
        main.add_command(watchtower)
    except ImportError as e:
        print_error(f"Failed to load watchtower tool: {e}")


register_tools()


if __name__ == "__main__":
    main()
