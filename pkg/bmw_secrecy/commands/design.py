from __future__ import annotations

import click

from ..config import RunConfig
from ..data.storage import ResultTable
from ..errors import ConfigError
from ..optimizer import PartitionMode, optimize_design, partition_gap, sweep
from .common import handler, invoke, run_options


def _search_mode(config: RunConfig) -> PartitionMode:
    if config.has_explicit_design:
        raise ConfigError("optimize/sweep search the design; drop thresholds/alphas from the config")
    return PartitionMode.parse(config.mode or PartitionMode.UNIFORM)


def _grids(config: RunConfig) -> tuple[list, list]:
    n_list = list(config.n_list) or [config.level_count]
    power_grid = list(config.power_grid) or [config.power_p]
    return n_list, power_grid


@handler("optimize")
def run_optimize(config: RunConfig) -> ResultTable:
    mode = _search_mode(config)
    n = config.level_count
    result = optimize_design(config.channel, n, mode, **config.optimizer_kwargs())
    table = ResultTable(
        ["n", "mode", "secrecy_rate", "evaluations", "converged"]
        + [f"q_{i}" for i in range(1, n)]
        + [f"alpha_{i}" for i in range(1, n)]
    )
    table.add_row(
        [n, mode.value, result.secrecy_rate, result.evaluations, result.converged]
        + list(result.design.thresholds)
        + list(result.design.alphas)
    )
    return table


@handler("sweep")
def run_sweep(config: RunConfig) -> ResultTable:
    mode = _search_mode(config)
    n_list, power_grid = _grids(config)
    return sweep(config.channel, n_list, power_grid, mode, **config.optimizer_kwargs())


@handler("gap")
def run_gap(config: RunConfig) -> ResultTable:
    if config.has_explicit_design:
        raise ConfigError("gap searches the design; drop thresholds/alphas from the config")
    n_list, power_grid = _grids(config)
    return partition_gap(config.channel, n_list, power_grid, **config.optimizer_kwargs())


@click.command("optimize")
@run_options
def optimize(config_file, preset, overrides, output, save):
    """Search thresholds and power splits for one n.

    \b
    Examples:
      bmw-secrecy optimize --preset weak-eve --set n=2 --set mode=Free
    """
    invoke("optimize", config_file, preset, overrides, output, save)


@click.command("sweep")
@run_options
def sweep_command(config_file, preset, overrides, output, save):
    """Optimized secrecy rate over a power grid for each n.

    \b
    Examples:
      bmw-secrecy sweep --preset strong-eve --set "n_list=[1,2,3]" --set "power_grid=[5,10,20,30]" -o strong_eve.csv
    """
    invoke("sweep", config_file, preset, overrides, output, save)


@click.command("gap")
@run_options
def gap(config_file, preset, overrides, output, save):
    """Uniform-partition vs. free-partition secrecy rates over a power grid."""
    invoke("gap", config_file, preset, overrides, output, save)
