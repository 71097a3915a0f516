import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from exitmeasure import conductivity, geometry


@pytest.fixture(scope="session")
def annulus():
    return geometry.catalog("annulus")


@pytest.fixture(scope="session")
def disc():
    return geometry.catalog("disc")


@pytest.fixture(scope="session")
def square_hole():
    return geometry.catalog("square_hole")


@pytest.fixture(scope="session")
def five_holes():
    return geometry.catalog("disc_five_holes")


@pytest.fixture(scope="session")
def kt2():
    return conductivity.identity_tensor(2)


@pytest.fixture(scope="session")
def kt3():
    return conductivity.identity_tensor(3)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
