import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import gibbs_mcid as gm

settings.register_profile(
    "ci",
    deadline=None,
    max_examples=40,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def ex2():
    return gm.builtin_scenario("example2")


@pytest.fixture(scope="session")
def ex2_data(ex2):
    return gm.generate(ex2, 200, 20260808)


def random_dataset(rng, n=None, tie_fraction=0.0):
    """Random labeled sample used across property tests."""
    n = n or int(rng.integers(2, 60))
    x = rng.normal(0, 2, n)
    if tie_fraction and n > 3:
        k = max(1, int(tie_fraction * n))
        x[rng.integers(0, n, k)] = x[rng.integers(0, n, k)]
    y = np.where(rng.random(n) < 0.5, 1, -1)
    if np.all(y == y[0]):
        y[0] = -y[0]
    return gm.Dataset(x, y)
