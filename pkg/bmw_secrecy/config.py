"""Run configuration: layered YAML files, presets and command-line overrides."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable, Optional

import yaml

from .errors import ConfigError
from .rates import ChannelParams, CodeDesign

log = logging.getLogger(__name__)

LOCAL_CONFIG_NAME = ".bmw-secrecy.yaml"

DEFAULTS = {
    "lambda_m": 0.2,
    "lambda_w": 1.5,
    "power_p": 10.0,
    "jam_j": 5.0,
    "noise_var": 1.0,
}

PRESETS = {
    "strong-eve": {"lambda_m": 0.3, "lambda_w": 0.8, "jam_j": 5.0, "noise_var": 1.0},
    "weak-eve": {"lambda_m": 0.2, "lambda_w": 1.5, "jam_j": 5.0, "noise_var": 1.0},
}


def get_local_config_file() -> Optional[Path]:
    """Get local config file path if it exists."""
    local_config = Path.cwd() / LOCAL_CONFIG_NAME
    if local_config.exists():
        return local_config
    return None


def load_config_file(path: Path) -> dict:
    """Load one flat YAML mapping.

    Raises:
        ConfigError: If the file is missing, malformed or not a mapping
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse {path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a key: value mapping")
    return data


def parse_override(item: str) -> tuple[str, object]:
    """Split a KEY=VALUE override; the value is read as YAML so lists and numbers work."""
    if "=" not in item:
        raise ConfigError(f"Override must look like key=value, got {item!r}")
    key, raw = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"Override has an empty key: {item!r}")
    try:
        return key, yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse override {item!r}: {e}") from e


def load_config(
    config_file: Optional[Path] = None,
    preset: Optional[str] = None,
    overrides: Iterable[str] = (),
) -> dict:
    """
    Merge every configuration layer into one raw dict.

    Layers, lowest precedence first: built-in defaults, the named preset,
    the local .bmw-secrecy.yaml, ``config_file``, then KEY=VALUE overrides.

    Raises:
        ConfigError: On an unknown preset or any unreadable layer
    """
    merged = dict(DEFAULTS)
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"Unknown preset {preset!r}; available: {', '.join(PRESETS)}")
        merged.update(PRESETS[preset])

    local_path = get_local_config_file()
    if local_path:
        log.debug("Using local config %s", local_path)
        merged.update(load_config_file(local_path))
    if config_file:
        merged.update(load_config_file(Path(config_file)))
    for item in overrides:
        key, value = parse_override(item)
        merged[key] = value
    return merged


def _as_float(key: str, value) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{key} must be a number, got {value!r}") from e


def _as_int(key: str, value) -> int:
    if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    try:
        return int(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{key} must be an integer, got {value!r}") from e


def _as_list(key: str, value, convert) -> tuple:
    if isinstance(value, str):
        value = [v for v in value.replace(",", " ").split()]
    elif not isinstance(value, (list, tuple)):
        value = [value]
    return tuple(convert(key, v) for v in value)


@dataclass(frozen=True)
class RunConfig:
    """Everything one CLI invocation needs."""

    lambda_m: float
    lambda_w: float
    power_p: float
    jam_j: float
    noise_var: float
    n: Optional[int] = None
    thresholds: Optional[tuple] = None
    alphas: Optional[tuple] = None
    mode: Optional[str] = None
    power_grid: tuple = ()
    n_list: tuple = ()
    seed: int = 0
    output: Optional[str] = None
    frames: int = 100
    eve_q: Optional[tuple] = None
    symbols_per_frame: float = 1e4
    estimation_noise: float = 0.0
    epsilon: float = 1e-9
    budget: Optional[int] = None
    grid_points: int = 21
    min_step: float = 1e-4
    channel: ChannelParams = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(
            self,
            "channel",
            ChannelParams(self.lambda_m, self.lambda_w, self.power_p, self.jam_j, self.noise_var),
        )
        explicit = self.thresholds is not None or self.alphas is not None
        if explicit:
            if self.thresholds is None or self.alphas is None:
                raise ConfigError("An explicit design needs both thresholds and alphas")
            if len(self.thresholds) != len(self.alphas):
                raise ConfigError("thresholds and alphas must have the same length")
            if self.n is not None and self.n != len(self.thresholds) + 1:
                raise ConfigError(f"n = {self.n} does not match {len(self.thresholds)} thresholds")
            if self.mode is not None:
                raise ConfigError("Give either an explicit design (thresholds/alphas) or an optimizer mode, not both")
        if self.n is not None and self.n < 1:
            raise ConfigError(f"n must be at least 1, got {self.n}")
        if self.frames < 1:
            raise ConfigError(f"frames must be at least 1, got {self.frames}")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        """Build a RunConfig from a merged raw dict.

        Raises:
            ConfigError: On unknown keys or values of the wrong type
            DomainError: If the channel or design violates its invariants
        """
        known = {f.name for f in fields(cls) if f.init}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")
        missing = [k for k in ("lambda_m", "lambda_w", "power_p", "jam_j", "noise_var") if data.get(k) is None]
        if missing:
            raise ConfigError(f"Missing required config: {', '.join(missing)}")

        kwargs = {k: _as_float(k, data[k]) for k in ("lambda_m", "lambda_w", "power_p", "jam_j", "noise_var")}
        for key in ("symbols_per_frame", "estimation_noise", "epsilon", "min_step"):
            if data.get(key) is not None:
                kwargs[key] = _as_float(key, data[key])
        for key in ("n", "seed", "frames", "budget", "grid_points"):
            if data.get(key) is not None:
                kwargs[key] = _as_int(key, data[key])
        for key in ("thresholds", "alphas", "power_grid", "eve_q"):
            if data.get(key) is not None:
                kwargs[key] = _as_list(key, data[key], _as_float)
        if data.get("n_list") is not None:
            kwargs["n_list"] = _as_list("n_list", data["n_list"], _as_int)
        if data.get("mode") is not None:
            kwargs["mode"] = str(data["mode"])
        if data.get("output") is not None:
            kwargs["output"] = str(data["output"])
        return cls(**kwargs)

    @property
    def has_explicit_design(self) -> bool:
        return self.thresholds is not None

    @property
    def level_count(self) -> int:
        if self.has_explicit_design:
            return len(self.thresholds) + 1
        return self.n or 1

    def explicit_design(self) -> Optional[CodeDesign]:
        if not self.has_explicit_design:
            return None
        return CodeDesign(self.thresholds, self.alphas)

    def optimizer_kwargs(self) -> dict:
        return {
            "budget": self.budget,
            "seed": self.seed,
            "grid_points": self.grid_points,
            "min_step": self.min_step,
            "epsilon": self.epsilon,
        }

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.init}
