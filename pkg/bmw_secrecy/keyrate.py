"""Secret-key rates per Eve strategy interval and the resulting min-max game value."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Collection, Mapping, Optional

import numpy as np
from scipy.optimize import linprog

from .errors import ConvergenceError, DomainError
from .mac import (
    DecodabilitySplit,
    TwoLevelRegion,
    classify_two_level,
    eve_capacity_term,
    split_levels,
    two_level_capacities,
)
from .rates import ChannelParams, CodeDesign, LevelRates, level_rates, wcs_secrecy_rate

log = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-9
MAX_LP_LEVELS = 12


class KeyStatus(str, Enum):
    FEASIBLE = "Feasible"
    TIME_SHARING = "TimeSharingFallback"
    NO_KEY = "NoKey"


@dataclass(frozen=True)
class KeyRateSolution:
    interval: int
    eve_q: float
    split: DecodabilitySplit
    dummy_rates: dict
    key_rate: float
    status: KeyStatus

    def to_dict(self) -> dict:
        return {
            "interval": self.interval,
            "eve_q": self.eve_q,
            "split": self.split.to_dict(),
            "dummy_rates": dict(self.dummy_rates),
            "key_rate": self.key_rate,
            "status": self.status.value,
        }


@dataclass(frozen=True)
class GameSolution:
    optimal_interval: int
    per_interval_key_rates: tuple
    secrecy_rate: float
    half_rate_cap: float
    levels: LevelRates
    solutions: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class TwoLevelBranch:
    eve_q: float
    region: TwoLevelRegion
    key_rate: float
    value: float


@dataclass(frozen=True)
class TwoLevelBranches:
    levels: LevelRates
    at_threshold: TwoLevelBranch
    always_listening: TwoLevelBranch

    @property
    def secrecy_rate(self) -> float:
        return min(self.at_threshold.value, self.always_listening.value)


def _subsets(members: tuple):
    for size in range(1, len(members) + 1):
        yield from combinations(members, size)


def allocate_dummy_rates(
    rates: Mapping[int, float],
    targets: Mapping[frozenset, float],
    key_capable: Collection[int],
    lower_bounds: Optional[Mapping[int, float]] = None,
) -> Optional[dict]:
    """
    Dummy-rate allocation that leaves the most room for the key.

    Minimizes the dummy rates spent on key-capable levels subject to
    0 <= x_l <= R_l, sum_{l in S} x_l <= target(S) for every subset S, and
    the sum over all levels pinned to target(all).

    Args:
        rates: Level rate R_l for every level that Eve does not decode
        targets: Capacity target for every nonempty subset of those levels
        key_capable: Levels whose unused rate becomes key
        lower_bounds: Optional per-level lower bounds on x_l

    Returns:
        Allocation {level: x_l}, or None if the constraints are infeasible

    Raises:
        ConvergenceError: If the LP solver stops for any reason other than
            optimality or infeasibility
    """
    order = tuple(sorted(rates))
    if not order:
        return {}
    lower_bounds = lower_bounds or {}
    bounds = [(float(lower_bounds.get(l, 0.0)), float(rates[l])) for l in order]
    if any(lo > hi for lo, hi in bounds):
        return None

    key_set = set(key_capable)
    cost = np.array([1.0 if l in key_set else 0.0 for l in order])
    full = frozenset(order)
    rows, rhs = [], []
    for subset in _subsets(order):
        if len(subset) == len(order):
            continue
        rows.append([1.0 if l in subset else 0.0 for l in order])
        rhs.append(targets[frozenset(subset)])

    result = linprog(
        cost,
        A_ub=np.array(rows) if rows else None,
        b_ub=np.array(rhs) if rhs else None,
        A_eq=np.ones((1, len(order))),
        b_eq=np.array([targets[full]]),
        bounds=bounds,
        method="highs-ds",
    )
    # every variable is boxed, so "unbounded or infeasible" from presolve means infeasible
    if result.status == 2 or (result.status == 4 and "infeasible" in result.message.lower()):
        return None
    if result.status != 0:
        raise ConvergenceError(f"Dummy-rate LP did not finish: {result.message}")
    x = np.clip(result.x, [lo for lo, _ in bounds], [hi for _, hi in bounds])
    return {l: float(v) for l, v in zip(order, x)}


def solve_key_rate(
    params: ChannelParams,
    design: CodeDesign,
    interval_index: int,
    epsilon: float = DEFAULT_EPSILON,
    *,
    eve_q: Optional[float] = None,
    split: Optional[DecodabilitySplit] = None,
    levels: Optional[LevelRates] = None,
) -> KeyRateSolution:
    """
    Secret-key rate when Eve listens in interval ``interval_index``.

    Eve is placed at the right end q_i of the interval and Bob decodes levels
    1..i. ``eve_q`` moves Eve inside the interval and ``split`` pins the level
    split instead of recomputing it for that q.
    """
    n = design.n
    if not 1 <= interval_index <= n:
        raise DomainError(f"interval index {interval_index} outside 1..{n}")
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon!r}")

    if levels is None:
        levels = level_rates(params, design)
    q = design.q(interval_index) if eve_q is None else float(eve_q)
    if split is None:
        split = split_levels(params, q, design, levels, interval_index)

    def solution(dummy, key, status):
        return KeyRateSolution(interval_index, q, split, dummy, key, status)

    if not split.key_capable:
        return solution({}, 0.0, KeyStatus.NO_KEY)

    hidden = split.not_eve_decodable
    if len(hidden) > MAX_LP_LEVELS:
        raise DomainError(f"key-rate LP supports at most {MAX_LP_LEVELS} hidden levels, got {len(hidden)}")

    powers = design.level_powers(params.power_p)
    rates = {l: levels[l - 1] for l in hidden}
    targets = {
        frozenset(subset): max(
            eve_capacity_term(params, q, sum(powers[l - 1] for l in subset), 0.0) - epsilon, 0.0
        )
        for subset in _subsets(hidden)
    }
    lower = {1: 0.5 * levels[0]} if 1 in rates else None

    status = KeyStatus.FEASIBLE
    dummy = allocate_dummy_rates(rates, targets, split.key_capable, lower)
    if dummy is None and lower is not None:
        dummy = allocate_dummy_rates(rates, targets, split.key_capable)
        if dummy is not None:
            status = KeyStatus.TIME_SHARING
            log.info(
                "Interval %d: R_E1 >= R_1/2 infeasible, falling back to time sharing", interval_index
            )
    if dummy is None:
        return solution({}, 0.0, KeyStatus.NO_KEY)

    if set(split.key_capable) == set(hidden):
        key = sum(rates[l] for l in split.key_capable) - targets[frozenset(hidden)]
    else:
        key = sum(rates[l] - dummy[l] for l in split.key_capable)
    return solution(dummy, max(key, 0.0), status)


def solve_game(
    params: ChannelParams, design: CodeDesign, epsilon: float = DEFAULT_EPSILON
) -> GameSolution:
    """
    Value of the game between the encoder and Eve's choice of listening interval.

    Single-level designs are scored as the worst-case Wyner baseline, which
    is the only case where the secrecy rate is not capped at R_1 / 2.
    """
    levels = level_rates(params, design)
    half = 0.5 * levels[0]
    if design.n == 1:
        rate = wcs_secrecy_rate(params)
        return GameSolution(1, (rate,), rate, half, levels, ())

    solutions = tuple(
        solve_key_rate(params, design, i, epsilon, levels=levels) for i in range(1, design.n + 1)
    )
    keys = tuple(s.key_rate for s in solutions)
    worst = min(keys)
    optimal = keys.index(worst) + 1 if worst < half else 1
    return GameSolution(optimal, keys, min(half, worst), half, levels, solutions)


def two_level_branches(
    params: ChannelParams, q1: float, alpha1: float, epsilon: float = DEFAULT_EPSILON
) -> TwoLevelBranches:
    """Closed-form walk of the two-level scheme for both of Eve's strategies."""
    design = CodeDesign((q1,), (alpha1,))
    levels = level_rates(params, design)
    r1, r2 = tuple(levels)
    half = 0.5 * r1

    branches = []
    for q in (design.q(1), 1.0):
        caps = two_level_capacities(params, q, design)
        region = classify_two_level(params, q, design, levels)
        t1 = max(caps.c1 - epsilon, 0.0)
        t2 = max(caps.c2 - epsilon, 0.0)
        total = max(caps.c12 - epsilon, 0.0)

        if region is TwoLevelRegion.INSIDE:
            key = 0.0
        elif region is TwoLevelRegion.OMEGA1:
            key = r1 - t1
        elif q < 1.0:
            # Bob only holds level 1 at q_1
            if region is TwoLevelRegion.OMEGA2:
                key = 0.0
            else:
                # level 2 absorbs as much of the sum bound as its box allows,
                # so R_E1 = C12 - C2 above the level-2 face and C12 - R_2 below it
                eve2 = min(r2, t2)
                eve1 = max(total - eve2, 0.0)
                key = r1 - eve1
        elif region is TwoLevelRegion.OMEGA2:
            key = r2 - t2
        else:
            key = sum((r1, r2)) - total

        key = max(key, 0.0)
        branches.append(TwoLevelBranch(q, region, key, min(half, key)))

    return TwoLevelBranches(levels, branches[0], branches[1])


def two_level_solve(
    params: ChannelParams, q1: float, alpha1: float, epsilon: float = DEFAULT_EPSILON
) -> float:
    return two_level_branches(params, q1, alpha1, epsilon).secrecy_rate
