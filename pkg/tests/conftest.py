import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nbody_busemann.central import equilateral  # noqa: E402
from nbody_busemann.core import HomotheticMotion, MassSystem, potential  # noqa: E402


@pytest.fixture(scope="session")
def n3():
    return MassSystem((1.0, 1.0, 1.0), 2)


@pytest.fixture(scope="session")
def hm3(n3):
    x0 = equilateral(n3)
    return HomotheticMotion(x0, potential(n3, x0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
