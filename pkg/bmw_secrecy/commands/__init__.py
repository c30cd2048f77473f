from .analysis import decode_set, game, keyrate, rate
from .common import HANDLERS, dispatch, usage
from .design import gap, optimize, sweep_command
from .simulate import simulate

__all__ = [
    "HANDLERS",
    "decode_set",
    "dispatch",
    "game",
    "gap",
    "keyrate",
    "optimize",
    "rate",
    "simulate",
    "sweep_command",
    "usage",
]
