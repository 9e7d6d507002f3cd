import numpy as np
import pytest

from liemult import HeisenbergGroup, UnipotentGroup


@pytest.fixture(scope="session")
def heis2():
    return HeisenbergGroup(2, 2.0)


@pytest.fixture(scope="session")
def heis3p():
    return HeisenbergGroup(3, 3.0)


@pytest.fixture(scope="session")
def uni3():
    return UnipotentGroup(3)


@pytest.fixture(scope="session")
def uni4():
    return UnipotentGroup(4)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
