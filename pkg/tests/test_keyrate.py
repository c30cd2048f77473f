import math
from itertools import combinations
from types import SimpleNamespace

import numpy as np
import pytest

from bmw_secrecy.errors import ConvergenceError, DomainError
from bmw_secrecy.keyrate import (
    DEFAULT_EPSILON,
    KeyStatus,
    allocate_dummy_rates,
    solve_game,
    solve_key_rate,
    two_level_branches,
    two_level_solve,
)
from bmw_secrecy.mac import TwoLevelRegion, build_split, eve_capacity_term, two_level_capacities
from bmw_secrecy.rates import ChannelParams, CodeDesign, level_rates, wcs_secrecy_rate


def polymatroid_targets(levels, weights, scale):
    """Targets from a concave function of a weighted sum, so they are submodular."""
    targets = {}
    for size in range(1, len(levels) + 1):
        for subset in combinations(levels, size):
            targets[frozenset(subset)] = scale * math.log2(1.0 + sum(weights[l] for l in subset))
    return targets


def feasible_mask(points, rates, targets, levels, tol=1e-12):
    mask = np.ones(points[levels[0]].shape, dtype=bool)
    for l in levels:
        mask &= (points[l] >= -tol) & (points[l] <= rates[l] + tol)
    for size in range(1, len(levels)):
        for subset in combinations(levels, size):
            mask &= sum(points[l] for l in subset) <= targets[frozenset(subset)] + tol
    return mask


def random_instance(rng, k):
    levels = tuple(range(1, k + 1))
    rates = {l: float(rng.uniform(0.5, 1.5)) for l in levels}
    weights = {l: float(rng.uniform(0.5, 5.0)) for l in levels}
    targets = polymatroid_targets(levels, weights, 1.0)
    # pin the total below the rate sum so the polytope is nonempty
    full = frozenset(levels)
    targets[full] = min(targets[full], 0.8 * sum(rates.values()))
    return levels, rates, targets


def test_two_level_lp_matches_grid():
    rng = np.random.default_rng(0)
    step = 1e-4
    checked = 0
    for _ in range(50):
        levels, rates, targets = random_instance(rng, 2)
        key_capable = {1}
        x1 = np.arange(0.0, rates[1] + step / 2, step)
        points = {1: x1, 2: targets[frozenset(levels)] - x1}
        mask = feasible_mask(points, rates, targets, levels)
        dummy = allocate_dummy_rates(rates, targets, key_capable)
        if not mask.any():
            continue
        assert dummy is not None
        lp = dummy[1]
        grid = x1[mask].min()
        assert lp <= grid + 1e-7
        assert grid - lp <= 1e-3
        checked += 1
    assert checked >= 20


def pinned_slice_min_cost(rates, targets, cost_levels, step=1e-4, lower=0.0, tol=1e-12):
    """Smallest dummy cost over the pinned-sum plane of a three-level instance.

    The first level is scanned on a grid. For each column the second level
    ranges over an interval fixed by the box and subset caps, the third
    takes what is left of the pinned sum, and the cost is linear along the
    column, so each column is solved exactly at one end of its interval.
    Returns None when no column is feasible.
    """
    a, b, c = sorted(rates)

    def t(*ls):
        return targets[frozenset(ls)]

    total = t(a, b, c)
    x = np.arange(lower, rates[a] + step / 2, step)
    lo = np.max(np.vstack([
        np.zeros_like(x), total - x - rates[c], total - x - t(c), np.full_like(x, total - t(a, c)),
    ]), axis=0)
    hi = np.min(np.vstack([
        np.full_like(x, rates[b]), np.full_like(x, t(b)), total - x, t(a, b) - x,
    ]), axis=0)
    ok = (lo <= hi + tol) & (x <= t(a) + tol) & (total - x <= t(b, c) + tol)
    if not ok.any():
        return None
    wa, wb, wc = (float(l in cost_levels) for l in (a, b, c))
    y = lo if wb > wc else hi
    cost = wa * x + wb * y + wc * (total - x - y)
    return float(cost[ok].min())


def test_three_level_lp_matches_grid():
    rng = np.random.default_rng(1)
    checked = attempts = 0
    while checked < 100 and attempts < 1000:
        attempts += 1
        levels, rates, targets = random_instance(rng, 3)
        key_capable = {1, 2} if rng.uniform() < 0.5 else {1}
        grid = pinned_slice_min_cost(rates, targets, key_capable)
        dummy = allocate_dummy_rates(rates, targets, key_capable)
        if grid is None:
            continue
        assert dummy is not None
        lp = sum(dummy[l] for l in key_capable)
        assert lp <= grid + 1e-6
        assert grid - lp <= 1e-3
        checked += 1
    assert checked == 100


def test_three_level_key_rate_matches_grid_on_channel_instances():
    rng = np.random.default_rng(33)
    checked = attempts = 0
    while checked < 100 and attempts < 2000:
        attempts += 1
        params = ChannelParams(
            lambda_m=rng.uniform(0.1, 1.0),
            lambda_w=rng.uniform(0.3, 5.0),
            power_p=rng.uniform(1.0, 30.0),
            jam_j=rng.uniform(0.0, 10.0),
            noise_var=rng.uniform(0.5, 2.0),
        )
        design = CodeDesign(tuple(np.sort(rng.uniform(0.05, 0.95, 2))), tuple(rng.uniform(0.1, 0.9, 2)))
        interval = int(rng.integers(1, 4))
        solution = solve_key_rate(params, design, interval, split=build_split(set(), 3, interval))

        levels = level_rates(params, design)
        powers = design.level_powers(params.power_p)
        rates = {l: levels[l - 1] for l in (1, 2, 3)}
        targets = {}
        for size in (1, 2, 3):
            for s in combinations((1, 2, 3), size):
                cap = eve_capacity_term(params, solution.eve_q, sum(powers[l - 1] for l in s), 0.0)
                targets[frozenset(s)] = max(cap - DEFAULT_EPSILON, 0.0)
        key_capable = set(range(1, interval + 1))
        bounded = pinned_slice_min_cost(rates, targets, key_capable, lower=0.5 * rates[1])
        free = pinned_slice_min_cost(rates, targets, key_capable)

        if solution.status is KeyStatus.NO_KEY:
            assert free is None
            continue
        if solution.status is KeyStatus.TIME_SHARING:
            assert bounded is None
            grid = free
        else:
            grid = bounded
        if grid is None:
            continue
        best_key = max(sum(rates[l] for l in key_capable) - grid, 0.0)
        assert solution.key_rate >= best_key - 1e-6
        assert solution.key_rate - best_key <= 1e-3
        checked += 1
    assert checked == 100


def test_allocation_respects_constraints():
    rng = np.random.default_rng(2)
    for _ in range(50):
        levels, rates, targets = random_instance(rng, 4)
        dummy = allocate_dummy_rates(rates, targets, {1, 2})
        if dummy is None:
            continue
        for l in levels:
            assert 0.0 <= dummy[l] <= rates[l]
        for size in range(1, 4):
            for subset in combinations(levels, size):
                assert sum(dummy[l] for l in subset) <= targets[frozenset(subset)] + 1e-7
        assert sum(dummy.values()) == pytest.approx(targets[frozenset(levels)], abs=1e-7)


def test_allocation_infeasible_returns_none():
    rates = {1: 0.2, 2: 0.2}
    targets = {frozenset({1}): 1.0, frozenset({2}): 1.0, frozenset({1, 2}): 1.0}
    assert allocate_dummy_rates(rates, targets, {1}) is None
    assert allocate_dummy_rates({}, {}, set()) == {}


def test_lower_bound_above_rate_is_infeasible():
    rates = {1: 1.0}
    targets = {frozenset({1}): 0.5}
    assert allocate_dummy_rates(rates, targets, {1}, {1: 2.0}) is None


def test_no_key_when_eve_decodes_everything(weak_eve):
    design = CodeDesign((0.5,), (0.5,))
    solution = solve_key_rate(weak_eve, design, 2, split=build_split({1, 2}, 2, 2))
    assert solution.status is KeyStatus.NO_KEY
    assert solution.key_rate == 0.0
    assert solution.dummy_rates == {}


def test_hidden_level_two_at_first_threshold(weak_eve):
    design = CodeDesign((0.5,), (0.5,))
    levels = level_rates(weak_eve, design)
    p1, _ = design.level_powers(weak_eve.power_p)
    solution = solve_key_rate(weak_eve, design, 1, split=build_split({2}, 2, 1), levels=levels)
    target = max(eve_capacity_term(weak_eve, 0.5, p1, 0.0) - 1e-9, 0.0)
    assert solution.key_rate == pytest.approx(max(levels[0] - target, 0.0), abs=1e-12)
    assert solution.split.key_capable == (1,)


def test_solve_key_rate_validation(weak_eve):
    design = CodeDesign((0.5,), (0.5,))
    with pytest.raises(DomainError):
        solve_key_rate(weak_eve, design, 3)
    with pytest.raises(DomainError):
        solve_key_rate(weak_eve, design, 1, epsilon=0.0)


def test_key_rate_nonincreasing_inside_interval(weak_eve):
    design = CodeDesign((0.4,), (0.5,))
    levels = level_rates(weak_eve, design)
    split = build_split(set(), 2, 2)
    keys = [
        solve_key_rate(weak_eve, design, 2, eve_q=q, split=split, levels=levels).key_rate
        for q in np.linspace(0.4, 1.0, 25)
    ]
    assert np.all(np.diff(keys) <= 1e-9)


def test_game_is_capped_by_half_first_level():
    rng = np.random.default_rng(3)
    for _ in range(40):
        params = ChannelParams(
            rng.uniform(0.1, 1.0), rng.uniform(0.2, 3.0), rng.uniform(1.0, 30.0), rng.uniform(0.0, 10.0), 1.0
        )
        n = int(rng.integers(2, 4))
        design = CodeDesign(tuple(np.sort(rng.uniform(0.05, 0.95, n - 1))), tuple(rng.uniform(0.0, 1.0, n - 1)))
        game = solve_game(params, design)
        assert 0.0 <= game.secrecy_rate <= game.half_rate_cap
        assert game.secrecy_rate == min(game.half_rate_cap, min(game.per_interval_key_rates))
        assert len(game.per_interval_key_rates) == n
        assert 1 <= game.optimal_interval <= n


def test_single_level_game_is_the_baseline(strong_eve, weak_eve):
    assert solve_game(strong_eve, CodeDesign.single()).secrecy_rate == 0.0
    game = solve_game(weak_eve, CodeDesign.single())
    assert game.secrecy_rate == wcs_secrecy_rate(weak_eve)
    assert game.optimal_interval == 1


def test_negligible_eve_hits_the_cap():
    params = ChannelParams(0.2, 1e3, 10.0, 5.0, 1.0)
    game = solve_game(params, CodeDesign((0.5,), (0.5,)))
    assert game.secrecy_rate == pytest.approx(game.half_rate_cap, rel=1e-9)
    assert game.optimal_interval == 1


def test_two_level_walk_matches_lp():
    rng = np.random.default_rng(2024)
    for _ in range(500):
        params = ChannelParams(
            lambda_m=rng.uniform(0.1, 1.0),
            lambda_w=rng.uniform(0.2, 3.0),
            power_p=rng.uniform(0.5, 30.0),
            jam_j=rng.uniform(0.0, 10.0),
            noise_var=rng.uniform(0.5, 2.0),
        )
        q1 = float(rng.uniform(0.05, 0.95))
        alpha1 = float(rng.uniform(0.0, 1.0))
        lp = solve_game(params, CodeDesign((q1,), (alpha1,))).secrecy_rate
        assert two_level_solve(params, q1, alpha1) == pytest.approx(lp, abs=1e-9)


def test_two_level_without_second_level_has_no_key(weak_eve):
    assert two_level_solve(weak_eve, 0.5, 1.0) == 0.0


def test_inside_region_gives_no_key():
    params = ChannelParams(0.3, 0.05, 10.0, 5.0, 1.0)
    branches = two_level_branches(params, 0.9, 0.5)
    assert branches.at_threshold.region is TwoLevelRegion.INSIDE
    assert branches.at_threshold.key_rate == 0.0
    assert branches.secrecy_rate == 0.0


def test_branch_values_are_capped(weak_eve):
    branches = two_level_branches(weak_eve, 0.5, 0.5)
    half = 0.5 * branches.levels[0]
    for branch in (branches.at_threshold, branches.always_listening):
        assert branch.value == min(half, branch.key_rate)
    assert branches.at_threshold.eve_q == 0.5
    assert branches.always_listening.eve_q == 1.0


def random_channel(rng):
    return ChannelParams(
        lambda_m=rng.uniform(0.1, 1.0),
        lambda_w=rng.uniform(0.2, 3.0),
        power_p=rng.uniform(0.5, 30.0),
        jam_j=rng.uniform(0.0, 10.0),
        noise_var=rng.uniform(0.5, 2.0),
    )


def test_level_one_dummy_rate_above_the_level_two_face():
    """Above Eve's level-2 face, R_E1 = C12 - C2 beats spending C1 on level 1."""
    rng = np.random.default_rng(77)
    gaps = {TwoLevelRegion.OMEGA4: 0, TwoLevelRegion.OMEGA5: 0}
    for _ in range(600):
        params = random_channel(rng)
        q1 = float(rng.uniform(0.05, 0.95))
        alpha1 = float(rng.uniform(0.0, 1.0))
        branch = two_level_branches(params, q1, alpha1).at_threshold
        if branch.region not in gaps:
            continue
        r1, r2 = level_rates(params, CodeDesign((q1,), (alpha1,)))
        caps = two_level_capacities(params, q1, CodeDesign((q1,), (alpha1,)))
        eve1 = caps.c12 - caps.c2
        assert r2 > caps.c2
        assert 0.0 <= eve1 <= r1 + 1e-6
        assert branch.key_rate == pytest.approx(max(r1 - eve1, 0.0), abs=1e-9)

        level_one_cap = caps.c1 - DEFAULT_EPSILON
        if branch.region is TwoLevelRegion.OMEGA4:
            # R_1 fits under C1, so R_E1 = C1 would leave the box 0 <= R_E1 <= R_1
            assert r1 <= caps.c1
            if level_one_cap > r1 + 1e-6:
                gaps[branch.region] += 1
        else:
            assert r1 > caps.c1
            assert r1 - level_one_cap <= branch.key_rate + 1e-7
            if branch.key_rate - (r1 - level_one_cap) > 1e-6:
                gaps[branch.region] += 1
    assert gaps[TwoLevelRegion.OMEGA4] > 0
    assert gaps[TwoLevelRegion.OMEGA5] > 0


def test_time_sharing_when_half_rate_bound_is_infeasible(caplog):
    params = ChannelParams(0.2, 50.0, 10.0, 5.0, 1.0)
    design = CodeDesign((0.5,), (0.5,))
    levels = level_rates(params, design)
    with caplog.at_level("INFO", logger="bmw_secrecy.keyrate"):
        solutions = [solve_key_rate(params, design, i, levels=levels) for i in (1, 2)]
    for solution in solutions:
        assert solution.status is KeyStatus.TIME_SHARING
        assert solution.dummy_rates[1] < 0.5 * levels[0]
        assert solution.key_rate > 0.0
    assert any("time sharing" in r.getMessage() for r in caplog.records)


def test_key_rate_allocations_satisfy_constraints():
    rng = np.random.default_rng(19)
    feasible_with_level_one = 0
    for _ in range(80):
        params = random_channel(rng)
        n = int(rng.integers(2, 4))
        design = CodeDesign(tuple(np.sort(rng.uniform(0.05, 0.95, n - 1))), tuple(rng.uniform(0.1, 0.9, n - 1)))
        levels = level_rates(params, design)
        powers = design.level_powers(params.power_p)
        for i in range(1, n + 1):
            solution = solve_key_rate(params, design, i, levels=levels)
            if solution.status is KeyStatus.NO_KEY:
                continue
            dummy = solution.dummy_rates
            hidden = solution.split.not_eve_decodable
            assert sorted(dummy) == list(hidden)

            def target(subset):
                signal = sum(powers[l - 1] for l in subset)
                return max(eve_capacity_term(params, solution.eve_q, signal, 0.0) - DEFAULT_EPSILON, 0.0)

            for l in hidden:
                assert 0.0 <= dummy[l] <= levels[l - 1]
            for size in range(1, len(hidden)):
                for subset in combinations(hidden, size):
                    assert sum(dummy[l] for l in subset) <= target(subset) + 1e-6
            assert sum(dummy.values()) == pytest.approx(target(hidden), abs=1e-6)

            if solution.status is KeyStatus.FEASIBLE and 1 in hidden:
                assert dummy[1] >= 0.5 * levels[0] - 1e-7
                feasible_with_level_one += 1
    assert feasible_with_level_one >= 5


def test_solver_failure_raises_convergence_error(monkeypatch):
    monkeypatch.setattr(
        "bmw_secrecy.keyrate.linprog",
        lambda *args, **kwargs: SimpleNamespace(status=1, message="Iteration limit reached.", x=None),
    )
    rates = {1: 1.0, 2: 1.0}
    targets = {frozenset({1}): 1.0, frozenset({2}): 1.0, frozenset({1, 2}): 1.5}
    with pytest.raises(ConvergenceError):
        allocate_dummy_rates(rates, targets, {1})
