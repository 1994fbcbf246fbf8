import numpy as np
import pytest

from latentforge import SimulatedOracle, default_world
from latentforge.oracle import build_world
from latentforge.search import default_config, run_campaign


@pytest.fixture
def handle():
    """Fresh counter on the shared default world."""
    return SimulatedOracle(default_world())


@pytest.fixture(scope="session")
def world():
    return default_world()


@pytest.fixture(scope="session")
def uniform_world():
    """Uncalibrated three-group world; every label easy to hit."""
    return build_world(groups=("Alpha", "Beta", "Gamma"), dim=8, world_seed=11)


@pytest.fixture(scope="session")
def two_hundred_manifest():
    """200 identities over two groups, reused by the audit tests."""
    w = default_world()
    h = SimulatedOracle(w)
    config = default_config(float(np.mean(w.spreads)), 100, rng_seed=2024)
    return run_campaign(["Caucasian", "African"], config, h), w
