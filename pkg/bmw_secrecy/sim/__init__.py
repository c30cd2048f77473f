"""Protocol simulation: frame-level key chaining and toy-codebook binning."""

from .binning import (
    EveModel,
    ToyBinning,
    decode_message,
    distill_key,
    encode_scheme1,
    encode_scheme2,
    expected_equivocation,
    measure_equivocation,
)
from .runner import FrameTrace, ProtocolSummary, interval_of, run_protocol, trace_table

__all__ = [
    "EveModel",
    "FrameTrace",
    "ProtocolSummary",
    "ToyBinning",
    "decode_message",
    "distill_key",
    "encode_scheme1",
    "encode_scheme2",
    "expected_equivocation",
    "interval_of",
    "measure_equivocation",
    "run_protocol",
    "trace_table",
]
