"""BMW-Secrecy CLI: secrecy rates against a half-duplex active eavesdropper."""

from __future__ import annotations

import logging
from pathlib import Path

import click

from . import __version__
from .commands import decode_set, game, gap, keyrate, optimize, rate, simulate, sweep_command
from .config import LOCAL_CONFIG_NAME
from .data.storage import get_results_dir, list_results


SAMPLE_CONFIG = """\
# BMW-Secrecy Configuration
# Generated by `bmw-secrecy init`
# Layers: defaults < --preset < this file < --config FILE < --set KEY=VALUE

# Channel
lambda_m: 0.2          # rate parameter of Bob's fading coefficient (1/mean)
lambda_w: 1.5          # rate parameter of Eve's fading coefficient
power_p: 10.0          # Alice's average power
jam_j: 5.0             # Eve's average jamming power
noise_var: 1.0         # noise variance

# Design: either an explicit design ...
# thresholds: [0.5]    # q_1 < ... < q_{n-1}
# alphas: [0.5]        # power-splitting coefficients
# ... or a level count plus an optimizer mode
n: 2
mode: Free             # Uniform or Free

# Optimizer
# budget: 5000         # objective evaluations per search phase
grid_points: 21
min_step: 0.0001
epsilon: 1.0e-9

# Sweeps
n_list: [1, 2]
power_grid: [5, 10, 20, 30]

# Simulation
frames: 100
symbols_per_frame: 10000
# eve_q: [0.5]         # Eve's listening fraction per frame (default: her optimum)
estimation_noise: 0.0
seed: 0

# output: results.csv
"""


@click.group()
@click.version_option(version=__version__)
@click.option("--verbose", "-v", is_flag=True, help="Log debug details to stderr")
@click.option("--log-file", default=None, type=click.Path(dir_okay=False), help="Also write logs to this file")
def cli(verbose, log_file):
    """BMW-Secrecy: Block-Markov Wyner secrecy toolkit for fading channels."""
    handlers = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(asctime)s [%(levelname)s] %(message)s",
        handlers=handlers,
    )


@cli.command()
@click.option("--path", "-p", default=None, help=f"Write config here instead of ./{LOCAL_CONFIG_NAME}")
@click.option("--force", is_flag=True, help="Overwrite existing config file")
def init(path, force):
    """Generate a sample config file to get started."""
    config_path = Path(path) if path else Path(LOCAL_CONFIG_NAME)

    if config_path.exists() and not force:
        click.echo(f"Config already exists: {config_path}")
        click.echo("Use --force to overwrite.")
        return

    config_path.write_text(SAMPLE_CONFIG, encoding="utf-8")
    click.echo(f"Config written to: {config_path}")
    click.echo("Edit the channel and design keys, then run e.g. `bmw-secrecy game`.")


@cli.command()
def results():
    """List result files saved with --save."""
    saved = list_results()

    if not saved:
        click.echo("No saved results found.")
        click.echo(f"Results directory: {get_results_dir()}")
        return

    click.echo(f"Results directory: {get_results_dir()}")
    click.echo(f"\nResults ({len(saved)}):")
    for r in saved:
        click.echo(f"  {r['name']}")
        click.echo(f"    File: {r['file']}, Size: {r['size']} bytes")
        click.echo(f"    Modified: {r['modified']}")


cli.add_command(rate)
cli.add_command(decode_set)
cli.add_command(keyrate)
cli.add_command(game)
cli.add_command(optimize)
cli.add_command(sweep_command)
cli.add_command(gap)
cli.add_command(simulate)


if __name__ == "__main__":
    cli()
