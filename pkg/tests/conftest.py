import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(424242)


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="kept for compatibility; slow tests always run")
