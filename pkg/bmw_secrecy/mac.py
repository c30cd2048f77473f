"""Eve's equivalent multiple-access view of the encoding levels."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Iterable, Sequence

from .errors import DomainError
from .rates import ChannelParams, CodeDesign, LevelRates, fading_log_rate

log = logging.getLogger(__name__)

MAX_ENUMERATED_LEVELS = 20
BOUNDARY_RTOL = 1e-12


class TwoLevelRegion(str, Enum):
    INSIDE = "InsideCapacity"
    OMEGA1 = "Omega1"
    OMEGA2 = "Omega2"
    OMEGA3 = "Omega3"
    OMEGA4 = "Omega4"
    OMEGA5 = "Omega5"
    OMEGA_N = "OmegaN"


# Region label -> levels Eve decodes.
REGION_DECODABLE = {
    TwoLevelRegion.INSIDE: frozenset({1, 2}),
    TwoLevelRegion.OMEGA2: frozenset({1}),
    TwoLevelRegion.OMEGA1: frozenset({2}),
    TwoLevelRegion.OMEGA3: frozenset(),
    TwoLevelRegion.OMEGA4: frozenset(),
    TwoLevelRegion.OMEGA5: frozenset(),
    TwoLevelRegion.OMEGA_N: frozenset(),
}


@dataclass(frozen=True)
class DecodabilitySplit:
    """Levels decodable by Eve (I_e), key-capable (I_k) and decodable by neither (I_n)."""

    eve_decodable: tuple
    key_capable: tuple
    neither: tuple
    ordering: tuple
    ambiguous: bool = False

    @property
    def not_eve_decodable(self) -> tuple:
        return tuple(sorted(self.key_capable + self.neither))

    @property
    def n(self) -> int:
        return len(self.ordering)

    def to_dict(self) -> dict:
        return {
            "eve_decodable": list(self.eve_decodable),
            "key_capable": list(self.key_capable),
            "neither": list(self.neither),
            "ordering": list(self.ordering),
            "ambiguous": self.ambiguous,
        }


@dataclass(frozen=True)
class TwoLevelCapacities:
    """Corner values of Eve's two-user capacity pentagon."""

    c1: float
    c2: float
    c12: float
    c1_given_2: float
    c2_given_1: float


def eve_capacity_term(
    params: ChannelParams, q: float, signal_power: float, interference_power: float
) -> float:
    """q * E_{h_W} log2(1 + S h_W / (sigma^2 + I h_W))."""
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q must lie in [0, 1], got {q!r}")
    if signal_power < 0 or interference_power < 0:
        raise DomainError("powers must be nonnegative")
    if q == 0.0 or signal_power == 0.0:
        return 0.0
    return q * fading_log_rate(params.lambda_w, signal_power, params.noise_var, interference_power)


def _fits(rate_sum: float, capacity: float) -> bool:
    return rate_sum <= capacity


def is_decodable_set(
    params: ChannelParams,
    q: float,
    powers: Sequence[float],
    rates: Sequence[float],
    candidate: Iterable[int],
) -> bool:
    """Check every subset constraint for Eve jointly decoding ``candidate``.

    Levels outside the candidate are treated as noise. Indices are 1-based.
    """
    members = tuple(sorted(candidate))
    outside = [j for j in range(1, len(powers) + 1) if j not in members]
    interference = sum(powers[j - 1] for j in outside)
    for size in range(1, len(members) + 1):
        for subset in combinations(members, size):
            rate_sum = sum(rates[j - 1] for j in subset)
            signal = sum(powers[j - 1] for j in subset)
            if not _fits(rate_sum, eve_capacity_term(params, q, signal, interference)):
                return False
    return True


def find_eve_decodable(
    params: ChannelParams, q: float, design: CodeDesign, levels: LevelRates
) -> tuple[frozenset, bool]:
    """
    Largest set of levels Eve decodes perfectly, plus an ambiguity flag.

    Candidates are enumerated from the largest size down. Among feasible sets
    of the same size the one with the largest rate sum wins, then the
    lexicographically smallest.

    Returns:
        (levels Eve decodes, True if more than one maximal set existed)

    Raises:
        DomainError: If the design has more than MAX_ENUMERATED_LEVELS levels
    """
    n = design.n
    if n > MAX_ENUMERATED_LEVELS:
        raise DomainError(f"eve_decodable_set supports at most {MAX_ENUMERATED_LEVELS} levels, got {n}")
    if len(levels) != n:
        raise DomainError(f"got {len(levels)} level rates for a {n}-level design")

    powers = design.level_powers(params.power_p)
    rates = tuple(levels)
    for size in range(n, 0, -1):
        feasible = [
            cand for cand in combinations(range(1, n + 1), size)
            if is_decodable_set(params, q, powers, rates, cand)
        ]
        if not feasible:
            continue
        best = min(feasible, key=lambda cand: (-sum(rates[j - 1] for j in cand), cand))
        ambiguous = len(feasible) > 1
        if ambiguous:
            log.warning(
                "Eve-decodable set not unique at q=%g: %d candidates of size %d, picked %s",
                q, len(feasible), size, best,
            )
        return frozenset(best), ambiguous
    return frozenset(), False


def eve_decodable_set(
    params: ChannelParams, q: float, design: CodeDesign, levels: LevelRates
) -> frozenset:
    return find_eve_decodable(params, q, design, levels)[0]


def build_split(
    eve_decodable: Iterable[int], n: int, bob_prefix: int, ambiguous: bool = False
) -> DecodabilitySplit:
    """Partition levels 1..n given Eve's decodable set and Bob's decoded prefix."""
    if not 1 <= bob_prefix <= n:
        raise DomainError(f"bob_prefix {bob_prefix} outside 1..{n}")
    eve = tuple(sorted(set(eve_decodable)))
    if any(not 1 <= j <= n for j in eve):
        raise DomainError(f"eve-decodable levels {eve} outside 1..{n}")
    key_capable = tuple(j for j in range(1, bob_prefix + 1) if j not in eve)
    neither = tuple(j for j in range(1, n + 1) if j not in eve and j not in key_capable)
    return DecodabilitySplit(
        eve_decodable=eve,
        key_capable=key_capable,
        neither=neither,
        ordering=eve + key_capable + neither,
        ambiguous=ambiguous,
    )


def split_levels(
    params: ChannelParams,
    q: float,
    design: CodeDesign,
    levels: LevelRates,
    bob_prefix: int,
) -> DecodabilitySplit:
    eve, ambiguous = find_eve_decodable(params, q, design, levels)
    return build_split(eve, design.n, bob_prefix, ambiguous)


def two_level_capacities(params: ChannelParams, q: float, design: CodeDesign) -> TwoLevelCapacities:
    if design.n != 2:
        raise DomainError(f"two-level analysis needs n = 2, got n = {design.n}")
    p1, p2 = design.level_powers(params.power_p)
    return TwoLevelCapacities(
        c1=eve_capacity_term(params, q, p1, 0.0),
        c2=eve_capacity_term(params, q, p2, 0.0),
        c12=eve_capacity_term(params, q, sum((p1, p2)), 0.0),
        c1_given_2=eve_capacity_term(params, q, p1, p2),
        c2_given_1=eve_capacity_term(params, q, p2, p1),
    )


def classify_two_level(
    params: ChannelParams, q: float, design: CodeDesign, levels: LevelRates
) -> TwoLevelRegion:
    """Place (R_1, R_2) in Eve's two-user capacity picture.

    A rate pair on a face of the pentagon fits that face, which resolves
    boundary points toward the sum-bound branch. Such coincidences are
    logged at INFO.
    """
    caps = two_level_capacities(params, q, design)
    r1, r2 = tuple(levels)
    region = _locate_two_level(r1, r2, caps)

    faces = (
        ("R_1 = C_1", r1, caps.c1),
        ("R_2 = C_2", r2, caps.c2),
        ("R_1 + R_2 = C_12", r1 + r2, caps.c12),
        ("R_1 = C_1|2", r1, caps.c1_given_2),
        ("R_2 = C_2|1", r2, caps.c2_given_1),
    )
    touching = [
        name for name, rate, cap in faces
        if cap > 0.0 and math.isclose(rate, cap, rel_tol=BOUNDARY_RTOL)
    ]
    if touching:
        log.info(
            "Rate pair on the boundary %s at q=%g, resolved to %s",
            ", ".join(touching), q, region.value,
        )
    return region


def _locate_two_level(r1: float, r2: float, caps: TwoLevelCapacities) -> TwoLevelRegion:
    if _fits(r1, caps.c1) and _fits(r2, caps.c2) and _fits(sum((r1, r2)), caps.c12):
        return TwoLevelRegion.INSIDE

    corner1 = _fits(r1, caps.c1_given_2)
    corner2 = _fits(r2, caps.c2_given_1)
    if corner1 and corner2:
        # both single-level corners reachable: same tie-break as the set search
        return TwoLevelRegion.OMEGA2 if r1 >= r2 else TwoLevelRegion.OMEGA1
    if corner1:
        return TwoLevelRegion.OMEGA2
    if corner2:
        return TwoLevelRegion.OMEGA1

    if caps.c12 == 0.0:
        return TwoLevelRegion.OMEGA_N
    above1 = not _fits(r1, caps.c1)
    above2 = not _fits(r2, caps.c2)
    if above2:
        return TwoLevelRegion.OMEGA5 if above1 else TwoLevelRegion.OMEGA4
    if above1:
        return TwoLevelRegion.OMEGA3
    return TwoLevelRegion.OMEGA_N
