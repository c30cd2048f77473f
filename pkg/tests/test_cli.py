import csv
import io
from pathlib import Path
from types import SimpleNamespace

import pytest
from click.testing import CliRunner

from bmw_secrecy import __version__
from bmw_secrecy.cli import cli
from bmw_secrecy.commands import dispatch
from bmw_secrecy.config import DEFAULTS, LOCAL_CONFIG_NAME, RunConfig, load_config
from bmw_secrecy.data.storage import read_csv
from bmw_secrecy.optimizer import PartitionMode, sweep
from bmw_secrecy.rates import ChannelParams

DESIGN = ["--set", "thresholds=[0.5]", "--set", "alphas=[0.5]"]


@pytest.fixture
def runner():
    return CliRunner()


def run(runner, args):
    with runner.isolated_filesystem():
        return runner.invoke(cli, args)


def first_row(text):
    lines = [line for line in text.splitlines() if line and not line.startswith(("#", "Results"))]
    return next(csv.DictReader(io.StringIO("\n".join(lines))))


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_game_strong_eve_baseline_is_zero(runner):
    result = run(runner, ["game", "--preset", "strong-eve", "--set", "power_p=10"])
    assert result.exit_code == 0, result.output
    row = first_row(result.stdout)
    assert row["n"] == "1"
    assert float(row["secrecy_rate"]) == 0.0


def test_unknown_subcommand(runner):
    assert run(runner, ["frobnicate"]).exit_code == 2


def test_dispatch_unknown_command():
    assert dispatch("frobnicate", RunConfig.from_dict(dict(DEFAULTS))) == 2


def test_dispatch_maps_error_codes(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert dispatch("game", RunConfig.from_dict(dict(DEFAULTS, n=2))) == 2
    assert dispatch("game", RunConfig.from_dict(dict(DEFAULTS, thresholds=[1.5], alphas=[0.5]))) == 3


@pytest.mark.parametrize(
    "args, code",
    [
        (["game", "--set", "lambda_m=-1"], 3),
        (["game", "--set", "colour=blue"], 2),
        (["game", "--set", "n=2"], 2),
        (["game", "--config", "missing.yaml"], 2),
        (["optimize", *DESIGN], 2),
    ],
)
def test_exit_codes(runner, args, code):
    assert run(runner, args).exit_code == code


def test_solver_failure_exits_with_four(runner, monkeypatch):
    monkeypatch.setattr(
        "bmw_secrecy.keyrate.linprog",
        lambda *args, **kwargs: SimpleNamespace(status=1, message="Iteration limit reached.", x=None),
    )
    result = run(runner, ["game", "--preset", "weak-eve", *DESIGN])
    assert result.exit_code == 4
    assert "Iteration limit" in result.output


def test_analysis_commands(runner):
    expected = {
        "rate": ["quantity", "level", "value"],
        "decode-set": ["interval", "eve_q", "eve_decodable", "key_capable", "neither", "ordering", "ambiguous", "region"],
        "keyrate": ["interval", "eve_q", "status", "key_rate", "dummy_rates"],
    }
    for command, columns in expected.items():
        with runner.isolated_filesystem():
            result = runner.invoke(cli, [command, "--preset", "weak-eve", *DESIGN, "-o", "out.csv"])
            assert result.exit_code == 0, result.output
            table = read_csv(Path("out.csv"))
        assert table.columns == columns
    with runner.isolated_filesystem():
        runner.invoke(cli, ["keyrate", "--preset", "weak-eve", *DESIGN, "-o", "out.csv"])
        assert len(read_csv(Path("out.csv")).rows) == 2


def test_sweep_matches_library(runner):
    args = [
        "sweep", "--preset", "weak-eve",
        "--set", "n_list=[1, 2]", "--set", "power_grid=[5, 10, 15]",
        "--set", "mode=Uniform", "--set", "grid_points=5",
        "-o", "sweep.csv",
    ]
    with runner.isolated_filesystem():
        first = runner.invoke(cli, args)
        assert first.exit_code == 0, first.output
        content = Path("sweep.csv").read_text(encoding="utf-8")
        second = runner.invoke(cli, args)
        assert second.exit_code == 0
        assert Path("sweep.csv").read_text(encoding="utf-8") == content

    params = ChannelParams(0.2, 1.5, DEFAULTS["power_p"], 5.0, 1.0)
    table = sweep(params, [1, 2], [5.0, 10.0, 15.0], PartitionMode.UNIFORM, grid_points=5)
    assert content == table.to_csv()
    assert len(table.rows) == 6


def test_simulate_writes_trace(runner):
    with runner.isolated_filesystem():
        result = runner.invoke(cli, ["simulate", "--preset", "weak-eve", *DESIGN, "--set", "frames=5", "-o", "trace.csv"])
        assert result.exit_code == 0, result.output
        table = read_csv(Path("trace.csv"))
    assert table.columns == ["frame", "q", "interval", "key_bits", "msg_bits", "ledger"]
    assert [row[0] for row in table.rows] == ["1", "2", "3", "4", "5"]


def test_save_and_list_results(runner):
    with runner.isolated_filesystem():
        assert runner.invoke(cli, ["results"]).output.startswith("No saved results")
        result = runner.invoke(cli, ["game", "--preset", "weak-eve", "--save"])
        assert result.exit_code == 0
        listing = runner.invoke(cli, ["results"])
        assert "game_" in listing.output


def test_init_writes_loadable_config(runner):
    with runner.isolated_filesystem():
        result = runner.invoke(cli, ["init"])
        assert result.exit_code == 0
        assert Path(LOCAL_CONFIG_NAME).exists()
        config = RunConfig.from_dict(load_config())
        assert config.level_count == 2
        assert config.mode == "Free"

        again = runner.invoke(cli, ["init"])
        assert "already exists" in again.output
        forced = runner.invoke(cli, ["init", "--force", "--path", "other.yaml"])
        assert Path("other.yaml").exists()
        assert forced.exit_code == 0
