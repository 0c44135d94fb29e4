import numpy as np
import pytest

from modham import Region, build_harmonic_chain, vacuum_state


@pytest.fixture(scope="session")
def chain8():
    model = build_harmonic_chain(8, 1.0)
    return model, vacuum_state(model)


@pytest.fixture(scope="session")
def chain8_light():
    model = build_harmonic_chain(8, 0.1)
    return model, vacuum_state(model)


@pytest.fixture(scope="session")
def chain2():
    model = build_harmonic_chain(2, 1.0)
    return model, vacuum_state(model)


@pytest.fixture(scope="session")
def center_region():
    return Region([3, 4])


@pytest.fixture()
def rng():
    return np.random.default_rng(42)
