# tests/conftest.py

import numpy as np
import pytest

from isacgan.config import SystemConfig


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="slow; use --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def system():
    return SystemConfig()


@pytest.fixture
def tiny_system():
    return SystemConfig(M=2, N=4, K=2)
