from __future__ import annotations

import click

from ..config import RunConfig
from ..data.storage import ResultTable, format_value
from ..sim.runner import run_protocol, trace_table
from .common import handler, invoke, resolve_design, run_options


@handler("simulate")
def run_simulate(config: RunConfig) -> ResultTable:
    design = resolve_design(config)
    traces, summary = run_protocol(
        config.channel,
        design,
        config.eve_q,
        config.frames,
        config.seed,
        symbols_per_frame=config.symbols_per_frame,
        estimation_noise=config.estimation_noise,
        epsilon=config.epsilon,
    )
    for key, value in summary.to_dict().items():
        click.echo(f"# {key}: {format_value(value)}", err=True)
    return trace_table(traces)


@click.command("simulate")
@run_options
def simulate(config_file, preset, overrides, output, save):
    """Frame-by-frame key ledger of the protocol.

    Eve plays her optimal constant strategy unless eve_q is configured
    (one value, or one per frame).
    """
    invoke("simulate", config_file, preset, overrides, output, save)
