import numpy as np
import pytest

from ris_sim import StateSpace, make_model


@pytest.fixture(scope="session")
def quad_model():
    # E(t,u) = (u - t)^2 / 2, no offset: matches the worked examples
    return make_model("quadratic", T=2.0, speed=1.0, energy_offset=0.0)


@pytest.fixture(scope="session")
def quad_space():
    return StateSpace.grid([[-1.0, 2.0]], 1e-3)


@pytest.fixture(scope="session")
def dw_model():
    return make_model("double-well", T=2.0, energy_offset=0.0)


@pytest.fixture(scope="session")
def dw_space():
    return StateSpace.grid([[-2.0, 2.0]], 1e-3)


@pytest.fixture(scope="session")
def dw_space_coarse():
    return StateSpace.grid([[-2.0, 2.0]], 1e-2)
