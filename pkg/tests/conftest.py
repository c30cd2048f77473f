import numpy as np
import pytest

from bmw_secrecy.rates import ChannelParams


@pytest.fixture
def strong_eve():
    """Eve's channel stronger than Bob's jammed channel: the baseline rate is zero."""
    return ChannelParams(lambda_m=0.3, lambda_w=0.8, power_p=10.0, jam_j=5.0, noise_var=1.0)


@pytest.fixture
def weak_eve():
    return ChannelParams(lambda_m=0.2, lambda_w=1.5, power_p=10.0, jam_j=5.0, noise_var=1.0)


def mc_log_rate(rng, lam, a, b, c, samples=1_000_000):
    """Monte-Carlo mean and standard error of log2(1 + a h / (b + c h)), h ~ Exp(lam)."""
    h = rng.exponential(1.0 / lam, samples)
    values = np.log2(1.0 + a * h / (b + c * h))
    return values.mean(), values.std(ddof=1) / np.sqrt(samples)
