from __future__ import annotations

import click

from ..config import RunConfig
from ..data.storage import ResultTable, format_value
from ..keyrate import solve_game, solve_key_rate
from ..mac import classify_two_level, split_levels
from ..rates import (
    eve_channel_rate,
    forwarding_rate,
    level_rates,
    main_channel_rate,
    wcs_secrecy_rate,
)
from .common import handler, invoke, join_levels, resolve_design, run_options


@handler("rate")
def run_rate(config: RunConfig) -> ResultTable:
    params = config.channel
    design = resolve_design(config)
    levels = level_rates(params, design)
    table = ResultTable(["quantity", "level", "value"])
    table.add_row(["wcs_secrecy_rate", None, wcs_secrecy_rate(params)])
    table.add_row(["main_channel_rate", None, main_channel_rate(params)])
    table.add_row(["eve_channel_rate", None, eve_channel_rate(params)])
    for i, power in enumerate(design.level_powers(params.power_p), start=1):
        table.add_row(["level_power", i, power])
    for i, rate in enumerate(levels, start=1):
        table.add_row(["level_rate", i, rate])
    for i in range(1, design.n + 1):
        table.add_row(["forwarding_rate", i, forwarding_rate(levels, i)])
    return table


@handler("decode-set")
def run_decode_set(config: RunConfig) -> ResultTable:
    params = config.channel
    design = resolve_design(config)
    levels = level_rates(params, design)
    table = ResultTable(
        ["interval", "eve_q", "eve_decodable", "key_capable", "neither", "ordering", "ambiguous", "region"]
    )
    for i in range(1, design.n + 1):
        q = design.q(i)
        split = split_levels(params, q, design, levels, i)
        region = classify_two_level(params, q, design, levels).value if design.n == 2 else None
        table.add_row([
            i, q,
            join_levels(split.eve_decodable),
            join_levels(split.key_capable),
            join_levels(split.neither),
            join_levels(split.ordering),
            split.ambiguous,
            region,
        ])
    return table


@handler("keyrate")
def run_keyrate(config: RunConfig) -> ResultTable:
    params = config.channel
    design = resolve_design(config)
    levels = level_rates(params, design)
    table = ResultTable(["interval", "eve_q", "status", "key_rate", "dummy_rates"])
    for i in range(1, design.n + 1):
        solution = solve_key_rate(params, design, i, config.epsilon, levels=levels)
        dummy = " ".join(f"{l}:{format_value(v)}" for l, v in sorted(solution.dummy_rates.items()))
        table.add_row([i, solution.eve_q, solution.status.value, solution.key_rate, dummy])
    return table


@handler("game")
def run_game(config: RunConfig) -> ResultTable:
    design = resolve_design(config)
    game = solve_game(config.channel, design, config.epsilon)
    table = ResultTable(["n", "secrecy_rate", "optimal_interval", "half_rate_cap", "key_rates"])
    table.add_row([
        design.n,
        game.secrecy_rate,
        game.optimal_interval,
        game.half_rate_cap,
        " ".join(format_value(r) for r in game.per_interval_key_rates),
    ])
    return table


@click.command("rate")
@run_options
def rate(config_file, preset, overrides, output, save):
    """Worst-case baseline and per-level rates of a design."""
    invoke("rate", config_file, preset, overrides, output, save)


@click.command("decode-set")
@run_options
def decode_set(config_file, preset, overrides, output, save):
    """Levels Eve decodes, key-capable levels and the rest, per interval."""
    invoke("decode-set", config_file, preset, overrides, output, save)


@click.command("keyrate")
@run_options
def keyrate(config_file, preset, overrides, output, save):
    """Dummy-rate allocation and secret-key rate per interval."""
    invoke("keyrate", config_file, preset, overrides, output, save)


@click.command("game")
@run_options
def game(config_file, preset, overrides, output, save):
    """Secrecy rate against Eve's most damaging listening fraction.

    \b
    Examples:
      bmw-secrecy game --preset strong-eve --set power_p=10
      bmw-secrecy game --preset weak-eve --set thresholds=[0.5] --set alphas=[0.5]
    """
    invoke("game", config_file, preset, overrides, output, save)
