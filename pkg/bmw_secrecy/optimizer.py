"""Design-parameter search: base grid followed by coordinate pattern search."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from enum import Enum
from itertools import combinations, product
from math import comb
from multiprocessing import Pool
from typing import Iterable, Optional, Sequence

import numpy as np

from .data.storage import ResultTable
from .errors import ConfigError, DomainError
from .keyrate import DEFAULT_EPSILON, solve_game
from .rates import ChannelParams, CodeDesign

log = logging.getLogger(__name__)

WORKERS_ENV = "BMW_WORKERS"
DEFAULT_GRID_POINTS = 21
DEFAULT_MIN_STEP = 1e-4
DEFAULT_REFINE_BUDGET = 4000
Q_BOUNDS = (0.01, 0.99)
ALPHA_BOUNDS = (0.0, 1.0)
THRESHOLD_SEPARATION = 1e-9


class PartitionMode(str, Enum):
    UNIFORM = "Uniform"
    FREE = "Free"

    @classmethod
    def parse(cls, value) -> "PartitionMode":
        if isinstance(value, cls):
            return value
        for mode in cls:
            if str(value).strip().lower() == mode.value.lower():
                return mode
        raise ConfigError(f"Unknown partition mode: {value!r} (expected Uniform or Free)")


@dataclass(frozen=True)
class OptimizationResult:
    design: CodeDesign
    secrecy_rate: float
    mode: PartitionMode
    evaluations: int
    converged: bool
    step: float


class _BudgetExhausted(Exception):
    pass


def get_worker_count() -> int:
    """Worker processes for grid evaluation, from the BMW_WORKERS environment variable."""
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        workers = int(raw)
    except ValueError as e:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from e
    return max(workers, 1)


def design_from_vector(x: Sequence[float], n: int, mode: PartitionMode) -> CodeDesign:
    """Map a search vector onto a valid design.

    Uniform vectors hold alphas only. Free vectors hold the n-1 thresholds
    followed by the n-1 alphas; thresholds are sorted and coincident values
    are pulled apart.
    """
    if n == 1:
        return CodeDesign.single()
    x = [float(v) for v in x]
    if mode is PartitionMode.UNIFORM:
        return CodeDesign.uniform(x)
    qs = sorted(x[: n - 1])
    for k in range(1, len(qs)):
        if qs[k] <= qs[k - 1]:
            qs[k] = qs[k - 1] + THRESHOLD_SEPARATION
    return CodeDesign(tuple(qs), tuple(x[n - 1:]))


def vector_from_design(design: CodeDesign, mode: PartitionMode) -> tuple:
    if mode is PartitionMode.UNIFORM:
        return design.alphas
    return design.thresholds + design.alphas


def _search_bounds(n: int, mode: PartitionMode) -> list[tuple[float, float]]:
    alpha_bounds = [ALPHA_BOUNDS] * (n - 1)
    if mode is PartitionMode.UNIFORM:
        return alpha_bounds
    return [Q_BOUNDS] * (n - 1) + alpha_bounds


def base_grid(n: int, mode: PartitionMode, grid_points: int = DEFAULT_GRID_POINTS) -> list[tuple]:
    """Deterministic starting grid; free-mode thresholds are strictly increasing."""
    if n == 1:
        return [()]
    alphas = np.linspace(*ALPHA_BOUNDS, grid_points)
    alpha_grid = list(product(alphas, repeat=n - 1))
    if mode is PartitionMode.UNIFORM:
        return [tuple(float(v) for v in a) for a in alpha_grid]
    qs = np.linspace(*Q_BOUNDS, grid_points)
    return [
        tuple(float(v) for v in q_combo + a)
        for q_combo in combinations(qs, n - 1)
        for a in alpha_grid
    ]


def grid_size(n: int, mode: PartitionMode, grid_points: int = DEFAULT_GRID_POINTS) -> int:
    if n == 1:
        return 1
    size = grid_points ** (n - 1)
    if mode is PartitionMode.FREE:
        size *= comb(grid_points, n - 1)
    return size


def _secrecy_rate(job) -> float:
    params, design, epsilon = job
    return solve_game(params, design, epsilon).secrecy_rate


class _Objective:
    """Memoized secrecy-rate objective with an evaluation budget."""

    def __init__(self, params: ChannelParams, n: int, mode: PartitionMode, budget: int, epsilon: float):
        self.params = params
        self.n = n
        self.mode = mode
        self.budget = budget
        self.epsilon = epsilon
        self.cache: dict = {}
        self.evaluations = 0

    def __call__(self, x: Sequence[float]) -> float:
        design = design_from_vector(x, self.n, self.mode)
        key = design.key()
        if key not in self.cache:
            if self.evaluations >= self.budget:
                raise _BudgetExhausted()
            self.cache[key] = _secrecy_rate((self.params, design, self.epsilon))
            self.evaluations += 1
        return self.cache[key]

    def evaluate_many(self, points: list[tuple], workers: int) -> list[float]:
        designs = [design_from_vector(x, self.n, self.mode) for x in points]
        pending = []
        seen = set()
        for design in designs:
            key = design.key()
            if key not in self.cache and key not in seen:
                seen.add(key)
                pending.append(design)
        if self.evaluations + len(pending) > self.budget:
            raise DomainError(
                f"budget {self.budget} is smaller than the base grid ({self.evaluations + len(pending)} designs)"
            )

        jobs = [(self.params, d, self.epsilon) for d in pending]
        if workers > 1 and len(jobs) > 1:
            with Pool(workers) as pool:
                values = pool.map(_secrecy_rate, jobs, chunksize=max(len(jobs) // (4 * workers), 1))
        else:
            values = [_secrecy_rate(job) for job in jobs]
        for design, value in zip(pending, values):
            self.cache[design.key()] = value
        self.evaluations += len(pending)
        return [self.cache[d.key()] for d in designs]


def pattern_search(
    objective,
    x0: Sequence[float],
    f0: float,
    bounds: Sequence[tuple[float, float]],
    step: float,
    min_step: float = DEFAULT_MIN_STEP,
    order: Optional[Sequence[int]] = None,
) -> tuple[tuple, float, float, bool]:
    """
    Maximize ``objective`` by coordinate moves, then pairwise diagonal moves,
    halving the step when neither improves.

    Steps are relative to each coordinate's bound width. Stops when the step
    drops below ``min_step`` (converged) or the objective runs out of budget.

    Returns:
        (best point, best value, final step, converged)
    """
    x = np.array(x0, dtype=float)
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    width = hi - lo
    order = list(range(x.size)) if order is None else list(order)
    coordinate_moves = [((ii, d),) for ii in order for d in (-1.0, 1.0)]
    # diagonals are polled only after every coordinate move fails
    diagonal_moves = [
        ((ii, di), (jj, dj))
        for a, ii in enumerate(order) for jj in order[a + 1:]
        for di in (-1.0, 1.0) for dj in (-1.0, 1.0)
    ]

    def try_moves(moves) -> bool:
        nonlocal x, f0
        improved = False
        for move in moves:
            trial = x.copy()
            for ii, direction in move:
                trial[ii] = min(max(x[ii] + direction * step * width[ii], lo[ii]), hi[ii])
            if np.array_equal(trial, x):
                continue
            ft = objective(tuple(trial))
            if ft > f0:
                x, f0 = trial, ft
                improved = True
        return improved

    try:
        while step >= min_step:
            changed = try_moves(coordinate_moves)
            if not changed:
                changed = try_moves(diagonal_moves)
            if not changed:
                step /= 2
                log.debug("Pattern search step halved to %g (best %.9g)", step, f0)
    except _BudgetExhausted:
        log.info("Pattern search stopped by budget at step %g", step)
        return tuple(float(v) for v in x), f0, step, False
    return tuple(float(v) for v in x), f0, step, True


def optimize_design(
    params: ChannelParams,
    n: int,
    mode=PartitionMode.UNIFORM,
    budget: Optional[int] = None,
    seed: int = 0,
    *,
    grid_points: int = DEFAULT_GRID_POINTS,
    min_step: float = DEFAULT_MIN_STEP,
    epsilon: float = DEFAULT_EPSILON,
) -> OptimizationResult:
    """
    Search for the design maximizing the game-value secrecy rate.

    A deterministic base grid is evaluated first (in parallel when
    BMW_WORKERS > 1), then a coordinate pattern search refines the best grid
    point. In Free mode the Uniform search is run as well and the refinement
    starts from whichever is better, so a Free result never falls below the
    Uniform one for the same inputs.

    Args:
        params: Channel scenario
        n: Number of encoding levels
        mode: Uniform (alphas only) or Free (thresholds and alphas)
        budget: Objective evaluations allowed per search phase
        seed: Selects the coordinate order of the pattern search
        grid_points: Points per dimension of the base grid
        min_step: Relative step at which the search is considered converged
        epsilon: Slack on Eve's capacity targets

    Raises:
        DomainError: If n < 1, grid_points < 2, or budget is below the base grid size
    """
    mode = PartitionMode.parse(mode)
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    if grid_points < 2:
        raise DomainError(f"grid_points must be at least 2, got {grid_points}")
    size = grid_size(n, mode, grid_points)
    if budget is None:
        budget = size + DEFAULT_REFINE_BUDGET
    if budget < size:
        raise DomainError(f"budget {budget} is smaller than the base grid ({size} designs)")

    if n == 1:
        game = solve_game(params, CodeDesign.single(), epsilon)
        return OptimizationResult(CodeDesign.single(), game.secrecy_rate, mode, 1, True, 0.0)

    objective = _Objective(params, n, mode, budget, epsilon)
    points = base_grid(n, mode, grid_points)
    values = objective.evaluate_many(points, get_worker_count())
    best = int(np.argmax(values))
    start, start_value = points[best], values[best]
    log.info("n=%d %s grid: best %.9g at %s (%d designs)", n, mode.value, start_value, start, len(points))

    if mode is PartitionMode.FREE:
        uniform = optimize_design(
            params, n, PartitionMode.UNIFORM, budget, seed,
            grid_points=grid_points, min_step=min_step, epsilon=epsilon,
        )
        if uniform.secrecy_rate > start_value:
            start = vector_from_design(uniform.design, mode)
            start_value = uniform.secrecy_rate
            objective.cache[uniform.design.key()] = uniform.secrecy_rate

    bounds = _search_bounds(n, mode)
    order = np.random.default_rng(seed).permutation(len(bounds)).tolist()
    x, value, step, converged = pattern_search(
        objective, start, start_value, bounds, 1.0 / (grid_points - 1), min_step, order
    )
    design = design_from_vector(x, n, mode)
    log.info("n=%d %s optimum %.9g (%d evaluations, converged=%s)", n, mode.value, value, objective.evaluations, converged)
    return OptimizationResult(design, value, mode, objective.evaluations, converged, step)


def _sweep_columns(n_max: int) -> list[str]:
    return (
        ["power", "n", "mode", "secrecy_rate"]
        + [f"q_{i}" for i in range(1, n_max)]
        + [f"alpha_{i}" for i in range(1, n_max)]
    )


def sweep(
    params_base: ChannelParams,
    n_list: Iterable[int],
    power_grid: Iterable[float],
    mode=PartitionMode.UNIFORM,
    **kwargs,
) -> ResultTable:
    """Optimized secrecy rate and design parameters for every (power, n) pair."""
    n_list, power_grid = list(n_list), list(power_grid)
    if not n_list or not power_grid:
        raise DomainError("sweep needs a nonempty n_list and power_grid")
    mode = PartitionMode.parse(mode)
    n_max = max(n_list)
    table = ResultTable(_sweep_columns(n_max))
    for power in power_grid:
        params = params_base.with_power(power)
        for n in n_list:
            result = optimize_design(params, n, mode, **kwargs)
            pad = [None] * (n_max - n)
            table.add_row(
                [float(power), n, mode.value, result.secrecy_rate]
                + list(result.design.thresholds) + pad
                + list(result.design.alphas) + pad
            )
    return table


def partition_gap(
    params_base: ChannelParams,
    n_list: Iterable[int],
    power_grid: Iterable[float],
    **kwargs,
) -> ResultTable:
    """Loss from forcing a uniform partition, per (power, n)."""
    table = ResultTable(["power", "n", "uniform_rate", "free_rate", "gap"])
    for power in power_grid:
        params = params_base.with_power(power)
        for n in n_list:
            uniform = optimize_design(params, n, PartitionMode.UNIFORM, **kwargs)
            free = optimize_design(params, n, PartitionMode.FREE, **kwargs)
            table.add_row([float(power), n, uniform.secrecy_rate, free.secrecy_rate,
                           free.secrecy_rate - uniform.secrecy_rate])
    return table
