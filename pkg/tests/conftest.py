import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def cnormal(rng, *shape):
    """Standard complex normal draws."""
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
