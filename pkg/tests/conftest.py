import numpy as np
import pytest

from torusflow import make_grid


@pytest.fixture(scope="session")
def grid2():
    return make_grid(2 * np.pi, 16, 2)


@pytest.fixture(scope="session")
def grid3():
    return make_grid(2 * np.pi, 16, 3)


@pytest.fixture(scope="session")
def grid2_rect():
    return make_grid(4.0, 16, 2)
