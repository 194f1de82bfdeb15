import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.model.params import ModelParams  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size figure reproductions (deselect with -m 'not slow')")


@pytest.fixture
def small_params():
    """n=6 point used by the enumeration and simulation oracles."""
    return ModelParams(n=6, m=2, p=0.3, lambda_e=1.0, lambda_s=1.0, lambda_=1.0)


@pytest.fixture
def sweep_params():
    """The n=60 base point of the capacity and gossip-rate sweeps."""
    return ModelParams(n=60, m=10, p=0.4, lambda_e=1.0, lambda_s=10.0, lambda_=10.0)


@pytest.fixture
def adoption_params():
    """n=200, m=20 point of the adoption-probability approximations (gossip rate set per test)."""
    return ModelParams(n=200, m=20, p=0.2, lambda_e=1.0, lambda_s=2.0, lambda_=1.0)
