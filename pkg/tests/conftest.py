import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240229)


def make_rng(seed=20240229):
    return np.random.default_rng(seed)
