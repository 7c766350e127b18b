import numpy as np
import pytest

from strongsel.core import MutationModel, PimModel


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def general3():
    return MutationModel(2.0, [[0.2, 0.5, 0.3], [0.3, 0.3, 0.4], [0.5, 0.25, 0.25]])


@pytest.fixture
def pim2():
    return PimModel(1.0, [0.7, 0.3])


def random_irreducible(rng, d, theta=1.0):
    while True:
        m = MutationModel(theta, rng.dirichlet(np.ones(d), size=d))
        if m.irreducible:
            return m
