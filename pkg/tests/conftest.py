"""Shared fixtures and the opt-in switch for slow calibration runs."""
import pytest

from models import Tensor


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False,
                     help="run calibrated end-to-end GAN trainings")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def tensor():
    """Build a 1-D tensor from a list of values."""
    def make(values, name="w"):
        return Tensor.from_array(name, values)
    return make
