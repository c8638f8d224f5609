import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def uniform_disk(n, seed=0):
    g = np.random.default_rng(seed)
    ang = g.uniform(0, 2 * np.pi, n)
    rad = np.sqrt(g.uniform(0, 1, n))
    return np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
