"""Shared plumbing for subcommands: options, dispatch and CSV emission."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable, Optional

import click

from ..config import PRESETS, RunConfig, load_config
from ..data.storage import ResultTable, generate_result_name, get_results_dir, write_csv
from ..errors import ConfigError, SecrecyError
from ..optimizer import PartitionMode, optimize_design
from ..rates import CodeDesign

log = logging.getLogger(__name__)

HANDLERS: dict[str, Callable[[RunConfig], ResultTable]] = {}


def handler(name: str):
    """Register a function that turns a RunConfig into a result table."""

    def register(func):
        HANDLERS[name] = func
        return func

    return register


def usage() -> str:
    return "Usage: bmw-secrecy COMMAND [OPTIONS]\nCommands: " + ", ".join(sorted(HANDLERS))


def resolve_design(config: RunConfig) -> CodeDesign:
    """Explicit design if configured, the single-level design for n = 1, else the optimizer's pick."""
    design = config.explicit_design()
    if design is not None:
        return design
    if config.level_count == 1:
        return CodeDesign.single()
    if config.mode is None:
        raise ConfigError(
            f"n = {config.level_count} needs either thresholds/alphas or an optimizer mode"
        )
    result = optimize_design(
        config.channel, config.level_count, PartitionMode.parse(config.mode), **config.optimizer_kwargs()
    )
    return result.design


def join_levels(levels) -> str:
    return " ".join(str(l) for l in levels)


def emit(table: ResultTable, output: Optional[str], save_name: Optional[str] = None) -> None:
    click.echo(table.to_csv(), nl=False)
    if output:
        path = write_csv(table, Path(output))
        click.echo(f"Results written to: {path}", err=True)
    if save_name:
        path = write_csv(table, get_results_dir() / f"{save_name}.csv")
        click.echo(f"Results saved to: {path}", err=True)


def dispatch(command: str, config: RunConfig, save: bool = False) -> int:
    """
    Run one subcommand and return its exit status.

    Returns:
        0 on success, 2 for an unknown command or configuration problem,
        3 for an invariant violation, 4 for a numerical failure
    """
    func = HANDLERS.get(command)
    if func is None:
        click.echo(f"Unknown command: {command}", err=True)
        click.echo(usage(), err=True)
        return 2
    log.debug("Running %s with %s", command, config.to_dict())
    try:
        table = func(config)
        emit(table, config.output, generate_result_name(command) if save else None)
    except SecrecyError as e:
        click.echo(f"Error: {e}", err=True)
        return e.exit_code
    return 0


_RUN_OPTIONS = [
    click.option("--config", "-c", "config_file", default=None, type=click.Path(dir_okay=False),
                 help="YAML config file (overrides the local .bmw-secrecy.yaml)"),
    click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None,
                 help="Channel preset applied before config files"),
    click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                 help="Override one config key (repeat for multiple)"),
    click.option("--output", "-o", default=None, help="Write the CSV to this file"),
    click.option("--save", is_flag=True, help="Also save the CSV under .bmw-secrecy-results/"),
]


def run_options(func):
    """Options shared by every analysis subcommand."""
    for option in reversed(_RUN_OPTIONS):
        func = option(func)
    return func


def invoke(command: str, config_file, preset, overrides, output, save) -> None:
    """Load the layered config, dispatch, and exit with the command's status."""
    try:
        raw = load_config(config_file, preset, overrides)
        if output:
            raw["output"] = output
        config = RunConfig.from_dict(raw)
    except SecrecyError as e:
        click.echo(f"Error: {e}", err=True)
        raise SystemExit(e.exit_code)
    code = dispatch(command, config, save=save)
    if code:
        raise SystemExit(code)
