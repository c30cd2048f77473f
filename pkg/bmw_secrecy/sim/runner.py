"""Frame-level simulation of the block-Markov key chain."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from ..data.storage import ResultTable
from ..errors import DomainError
from ..keyrate import DEFAULT_EPSILON, solve_game
from ..rates import ChannelParams, CodeDesign

log = logging.getLogger(__name__)

DEFAULT_SYMBOLS_PER_FRAME = 1e4
TRACE_COLUMNS = ["frame", "q", "interval", "key_bits", "msg_bits", "ledger"]


@dataclass(frozen=True)
class FrameTrace:
    frame_index: int
    eve_q: float
    interval_index: int
    key_generated: float
    message_delivered: float
    ledger_after: float


@dataclass(frozen=True)
class ProtocolSummary:
    frames: int
    secrecy_rate: float
    optimal_interval: int
    total_key_bits: float
    total_message_bits: float
    throughput: float
    relative_gap: float
    feedback_bits: int
    throttled_frames: int
    final_ledger: float

    def to_dict(self) -> dict:
        return asdict(self)


def interval_of(design: CodeDesign, q: float) -> int:
    """Interval i with q in (q_{i-1}, q_i]; q = 0 falls in the first interval."""
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q must lie in [0, 1], got {q!r}")
    return int(np.searchsorted(np.asarray(design.thresholds, dtype=float), q, side="left")) + 1


def feedback_bits(n: int) -> int:
    return math.ceil(math.log2(n)) if n > 1 else 0


def run_protocol(
    params: ChannelParams,
    design: CodeDesign,
    eve_q_sequence: Optional[Sequence[float]] = None,
    frames: int = 1,
    seed: int = 0,
    *,
    symbols_per_frame: float = DEFAULT_SYMBOLS_PER_FRAME,
    estimation_noise: float = 0.0,
    epsilon: float = DEFAULT_EPSILON,
) -> tuple[list[FrameTrace], ProtocolSummary]:
    """
    Simulate ``frames`` frames of key generation and one-time-pad delivery.

    Each frame Bob estimates Eve's listening fraction, feeds back the interval
    index, and both sides distill N * R_{k,i} key bits. The message sent in a
    frame is paid for with key banked in earlier frames, so frame 1 carries
    no message.

    Args:
        params: Channel scenario
        design: Code design shared by Alice and Bob
        eve_q_sequence: Eve's q per frame; defaults to her optimal constant play
        frames: Number of frames
        seed: Seed for the estimation-noise hook
        symbols_per_frame: Channel uses per frame (N)
        estimation_noise: Std-dev of Gaussian noise on Bob's estimate of q

    Returns:
        (per-frame traces, summary)
    """
    if frames < 1:
        raise DomainError(f"frames must be at least 1, got {frames}")
    if symbols_per_frame <= 0:
        raise DomainError(f"symbols_per_frame must be positive, got {symbols_per_frame!r}")
    if estimation_noise < 0:
        raise DomainError(f"estimation_noise must be nonnegative, got {estimation_noise!r}")

    game = solve_game(params, design, epsilon)
    if eve_q_sequence is None:
        eve_qs = [design.q(game.optimal_interval)] * frames
    else:
        eve_qs = [float(q) for q in eve_q_sequence]
        if len(eve_qs) == 1:
            eve_qs = eve_qs * frames
        if len(eve_qs) != frames:
            raise DomainError(f"got {len(eve_qs)} Eve strategies for {frames} frames")

    # single-level designs need no key; their Wyner rate is the message rate
    cap = game.half_rate_cap if design.n > 1 else game.secrecy_rate
    message_budget = symbols_per_frame * cap
    planned = symbols_per_frame * game.secrecy_rate
    rng = np.random.default_rng(seed)

    traces: list[FrameTrace] = []
    ledger = 0.0
    throttled = 0
    for frame, q in enumerate(eve_qs, start=1):
        if not 0.0 <= q <= 1.0:
            raise DomainError(f"frame {frame}: q must lie in [0, 1], got {q!r}")
        estimate = q
        if estimation_noise > 0:
            estimate = float(np.clip(q + rng.normal(0.0, estimation_noise), 0.0, 1.0))
        interval = interval_of(design, estimate)

        message = 0.0 if frame == 1 else min(ledger, message_budget)
        if frame > 1 and ledger < planned:
            throttled += 1
            log.warning(
                "Frame %d: ledger %.6g below planned %.6g bits, message throttled", frame, ledger, planned
            )
        key = symbols_per_frame * game.per_interval_key_rates[interval - 1]
        ledger = ledger - message + key
        traces.append(FrameTrace(frame, q, interval, key, message, ledger))

    total_message = sum(t.message_delivered for t in traces)
    throughput = total_message / (frames * symbols_per_frame)
    gap = (game.secrecy_rate - throughput) / game.secrecy_rate if game.secrecy_rate > 0 else 0.0
    summary = ProtocolSummary(
        frames=frames,
        secrecy_rate=game.secrecy_rate,
        optimal_interval=game.optimal_interval,
        total_key_bits=sum(t.key_generated for t in traces),
        total_message_bits=total_message,
        throughput=throughput,
        relative_gap=gap,
        feedback_bits=feedback_bits(design.n),
        throttled_frames=throttled,
        final_ledger=ledger,
    )
    log.info("Simulated %d frames: throughput %.6g vs secrecy rate %.6g", frames, throughput, game.secrecy_rate)
    return traces, summary


def trace_table(traces: Sequence[FrameTrace]) -> ResultTable:
    table = ResultTable(list(TRACE_COLUMNS))
    for t in traces:
        table.add_row([t.frame_index, t.eve_q, t.interval_index, t.key_generated, t.message_delivered, t.ledger_after])
    return table
