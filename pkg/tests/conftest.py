import sys

import numpy as np
import pytest
from hypothesis import settings

from rangeguard import ScenarioConfig, run_scenario

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@pytest.fixture(scope="session")
def nominal_cfg():
    return ScenarioConfig()


@pytest.fixture(scope="session")
def nominal_log(nominal_cfg):
    return run_scenario(nominal_cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_rotation(rng, max_angle=np.pi - 0.01):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return axis * rng.uniform(0.0, max_angle)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
