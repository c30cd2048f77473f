"""Ergodic rate evaluation over exponentially distributed fading coefficients."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, replace
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DomainError

log = logging.getLogger(__name__)

QUAD_EPSREL = 1e-8
QUAD_LIMIT = 200


@dataclass(frozen=True)
class ChannelParams:
    """Physical scenario: fading rate parameters, power budgets and noise."""

    lambda_m: float
    lambda_w: float
    power_p: float
    jam_j: float
    noise_var: float

    def __post_init__(self):
        for name in ("lambda_m", "lambda_w", "noise_var"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")
        for name in ("power_p", "jam_j"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise DomainError(f"{name} must be nonnegative and finite, got {value!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelParams":
        try:
            return cls(
                lambda_m=float(data["lambda_m"]),
                lambda_w=float(data["lambda_w"]),
                power_p=float(data["power_p"]),
                jam_j=float(data["jam_j"]),
                noise_var=float(data["noise_var"]),
            )
        except KeyError as e:
            raise DomainError(f"Missing channel parameter: {e.args[0]}") from e

    def to_dict(self) -> dict:
        return asdict(self)

    def with_power(self, power_p: float) -> "ChannelParams":
        return replace(self, power_p=float(power_p))

    @property
    def equivalent_main_lambda(self) -> float:
        """Rate parameter of the main coefficient once constant jamming is folded into it."""
        return self.lambda_m * (1.0 + self.jam_j / self.noise_var)


@dataclass(frozen=True)
class CodeDesign:
    """Partition {q_i} of [0, 1] plus power-splitting coefficients {alpha_i}.

    ``thresholds`` holds q_1 < ... < q_{n-1}; q_0 = 0 and q_n = 1 are implicit.
    ``alphas`` holds alpha_1 ... alpha_{n-1}; alpha_n = 0 is implicit.
    """

    thresholds: tuple = ()
    alphas: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(float(q) for q in self.thresholds))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if len(self.thresholds) != len(self.alphas):
            raise DomainError(
                f"thresholds and alphas must have the same length "
                f"({len(self.thresholds)} != {len(self.alphas)})"
            )
        for q in self.thresholds:
            if not 0.0 < q < 1.0:
                raise DomainError(f"threshold {q!r} outside (0, 1)")
        for prev, cur in zip(self.thresholds, self.thresholds[1:]):
            if not cur > prev:
                raise DomainError(f"thresholds must be strictly increasing: {self.thresholds}")
        for a in self.alphas:
            if not 0.0 <= a <= 1.0:
                raise DomainError(f"alpha {a!r} outside [0, 1]")

    @classmethod
    def single(cls) -> "CodeDesign":
        return cls((), ())

    @classmethod
    def uniform(cls, alphas: Sequence[float]) -> "CodeDesign":
        """Design with equally spaced thresholds q_i = i/n."""
        n = len(alphas) + 1
        return cls(tuple(i / n for i in range(1, n)), tuple(alphas))

    @property
    def n(self) -> int:
        return len(self.thresholds) + 1

    def q(self, i: int) -> float:
        if not 0 <= i <= self.n:
            raise DomainError(f"threshold index {i} outside 0..{self.n}")
        if i == 0:
            return 0.0
        if i == self.n:
            return 1.0
        return self.thresholds[i - 1]

    def _split(self, power: float) -> tuple[list[float], list[float]]:
        powers, weaker = [], []
        remaining = float(power)
        for alpha in self.alphas:
            powers.append(remaining * (1.0 - alpha))
            remaining *= alpha
            weaker.append(remaining)
        powers.append(remaining)
        weaker.append(0.0)
        return powers, weaker

    def level_powers(self, power: float) -> list[float]:
        """Per-level powers P_i = (1 - alpha_i) alpha_{i-1} ... alpha_1 P."""
        return self._split(power)[0]

    def interference_powers(self, power: float) -> list[float]:
        """Total power of the levels weaker than level i, for each i."""
        return self._split(power)[1]

    def key(self) -> tuple:
        return self.thresholds + self.alphas

    def to_dict(self) -> dict:
        return {"thresholds": list(self.thresholds), "alphas": list(self.alphas)}


@dataclass(frozen=True)
class LevelRates:
    rates: tuple

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        if not self.rates:
            raise DomainError("LevelRates needs at least one level")
        if any(r < 0 or not math.isfinite(r) for r in self.rates):
            raise DomainError(f"level rates must be nonnegative and finite: {self.rates}")

    @property
    def n(self) -> int:
        return len(self.rates)

    def __len__(self) -> int:
        return len(self.rates)

    def __getitem__(self, index):
        return self.rates[index]

    def __iter__(self):
        return iter(self.rates)


def fading_log_rate(lam: float, a: float, b: float, c: float) -> float:
    """
    Ergodic rate E[log2(1 + a h / (b + c h))] for h ~ Exp(lam).

    The expectation is mapped to (0, 1] with u = exp(-lam h) and integrated
    adaptively. Results are memoized on the exact argument values.

    Args:
        lam: Rate parameter (1/mean) of the fading coefficient
        a: Signal gain
        b: Noise floor
        c: Interference gain

    Returns:
        Rate in bits per channel use

    Raises:
        DomainError: If lam or b is not positive, or a or c is negative
        ConvergenceError: If the quadrature returns a non-finite value
    """
    lam, a, b, c = float(lam), float(a), float(b), float(c)
    if not (math.isfinite(lam) and lam > 0):
        raise DomainError(f"lambda must be positive, got {lam!r}")
    if not (math.isfinite(b) and b > 0):
        raise DomainError(f"b must be positive, got {b!r}")
    if not (math.isfinite(a) and a >= 0):
        raise DomainError(f"a must be nonnegative, got {a!r}")
    if not (math.isfinite(c) and c >= 0):
        raise DomainError(f"c must be nonnegative, got {c!r}")
    if a == 0.0:
        return 0.0
    return _fading_log_rate(lam, a, b, c)


@lru_cache(maxsize=65536)
def _fading_log_rate(lam: float, a: float, b: float, c: float) -> float:
    def integrand(u: float) -> float:
        if u <= 0.0:
            return math.log2(1.0 + a / c) if c > 0 else 0.0
        h = -math.log(u) / lam
        return math.log2(1.0 + a * h / (b + c * h))

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, abserr = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)

    for w in caught:
        if issubclass(w.category, integrate.IntegrationWarning):
            log.warning(
                "Quadrature warning for lambda=%g a=%g b=%g c=%g (abserr=%.3g): %s",
                lam, a, b, c, abserr, str(w.message).splitlines()[0],
            )
    if not math.isfinite(value):
        raise ConvergenceError(f"Non-finite fading rate for lambda={lam}, a={a}, b={b}, c={c}")
    return max(value, 0.0)


def mode_mix_rate(q, x, y):
    """f(q) = q log2(1+x) + (1-q) log2(1 + x/(1 + y/(1-q))), continuous at q = 1.

    Accepts scalars or numpy arrays (broadcast together).
    """
    q_arr, x_arr, y_arr = np.broadcast_arrays(
        np.asarray(q, dtype=float), np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    )
    if np.any((q_arr < 0) | (q_arr > 1) | ~np.isfinite(q_arr)):
        raise DomainError("q must lie in [0, 1]")
    if np.any(~(x_arr > 0) | ~(y_arr > 0) | ~np.isfinite(x_arr) | ~np.isfinite(y_arr)):
        raise DomainError("x and y must be positive and finite")

    open_mask = q_arr < 1.0
    one_minus_q = np.where(open_mask, 1.0 - q_arr, 1.0)
    jammed = np.where(
        open_mask,
        one_minus_q * np.log2(1.0 + x_arr / (1.0 + y_arr / one_minus_q)),
        0.0,
    )
    result = q_arr * np.log2(1.0 + x_arr) + jammed
    if result.ndim == 0:
        return float(result)
    return result


def effective_jam_power(jam_j: float, q: float) -> float:
    """Average power Eve spends per jammed symbol when she listens a fraction q of the time."""
    if not 0.0 <= q < 1.0:
        raise DomainError(f"q must lie in [0, 1), got {q!r}")
    if jam_j < 0:
        raise DomainError(f"jam power must be nonnegative, got {jam_j!r}")
    return jam_j / (1.0 - q)


def main_channel_rate(params: ChannelParams, jam_power: Optional[float] = None) -> float:
    """E log2(1 + h_M P / (sigma^2 + J)) with a constant jamming power J."""
    jam = params.jam_j if jam_power is None else float(jam_power)
    if jam < 0:
        raise DomainError(f"jam_power must be nonnegative, got {jam!r}")
    return fading_log_rate(params.lambda_m, params.power_p, params.noise_var + jam, 0.0)


def eve_channel_rate(params: ChannelParams) -> float:
    return fading_log_rate(params.lambda_w, params.power_p, params.noise_var, 0.0)


def jam_mixture_rate(
    params: ChannelParams, jam_powers: Sequence[float], weights: Sequence[float]
) -> float:
    """Main-channel rate when Eve draws her jamming power from a discrete distribution."""
    jam_arr = np.asarray(jam_powers, dtype=float)
    w = np.asarray(weights, dtype=float)
    if jam_arr.shape != w.shape or jam_arr.ndim != 1 or jam_arr.size == 0:
        raise DomainError("jam_powers and weights must be nonempty 1-D sequences of equal length")
    if np.any(w < 0) or not np.isclose(w.sum(), 1.0):
        raise DomainError("weights must be nonnegative and sum to 1")
    return float(sum(wk * main_channel_rate(params, jk) for jk, wk in zip(jam_arr, w)))


def wcs_is_positive(params: ChannelParams, jam_power: Optional[float] = None) -> bool:
    """Closed-form positivity condition of the worst-case baseline."""
    jam = params.jam_j if jam_power is None else float(jam_power)
    return params.power_p > 0 and params.lambda_w > params.lambda_m * (1.0 + jam / params.noise_var)


def wcs_secrecy_rate(params: ChannelParams, jam_power: Optional[float] = None) -> float:
    """
    Worst-case-scenario Wyner secrecy rate.

    Eve is assumed to jam every symbol of the main channel with power
    ``jam_power`` (default ``params.jam_j``) while also listening on every
    symbol. Pass ``effective_jam_power(params.jam_j, q)`` to evaluate the
    variant that spreads the budget over the jammed fraction only.

    Returns:
        max(main - eve, 0) in bits per channel use
    """
    main = main_channel_rate(params, jam_power)
    eve = eve_channel_rate(params)
    return max(main - eve, 0.0)


def level_rate_at(params: ChannelParams, design: CodeDesign, i: int, q: float) -> float:
    """Rate of level i when Eve listens a fraction q of the frame.

    With q = q_{i-1} this is the level rate used by the code. Evaluating at a
    larger q gives the rate the level would support against a more passive Eve.
    """
    if not 1 <= i <= design.n:
        raise DomainError(f"level index {i} outside 1..{design.n}")
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q must lie in [0, 1], got {q!r}")

    signal = design.level_powers(params.power_p)[i - 1]
    interference = design.interference_powers(params.power_p)[i - 1]
    rate = 0.0
    if q > 0.0:
        rate += q * fading_log_rate(params.lambda_m, signal, params.noise_var, interference)
    if q < 1.0:
        jammed_noise = params.noise_var + params.jam_j / (1.0 - q)
        rate += (1.0 - q) * fading_log_rate(params.lambda_m, signal, jammed_noise, interference)
    return rate


def level_rates(params: ChannelParams, design: CodeDesign) -> LevelRates:
    """Rates R_1 ... R_n of the layered code.

    Level i is decoded by Bob whenever Eve listens at least a fraction q_{i-1}
    of the time, treating the weaker levels as noise.
    """
    return LevelRates(
        tuple(level_rate_at(params, design, i, design.q(i - 1)) for i in range(1, design.n + 1))
    )


def forwarding_rate(levels: Union[LevelRates, Sequence[float]], i: int) -> float:
    """Sum R_1 + ... + R_i of the levels Bob decodes in interval i."""
    rates = tuple(levels)
    if not 1 <= i <= len(rates):
        raise DomainError(f"level index {i} outside 1..{len(rates)}")
    return float(sum(rates[:i]))
