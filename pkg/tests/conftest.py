import pytest

from hems.config import HomeConfig
from hems.params import derive_controller_params


@pytest.fixture
def cfg():
    return HomeConfig()


@pytest.fixture
def params(cfg):
    return derive_controller_params(cfg)[0]


@pytest.fixture
def bounds(cfg):
    return derive_controller_params(cfg)[1]
