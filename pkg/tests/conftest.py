"""
DFF Core: shared test fixtures
"""

import pytest
from numpy.random import default_rng

from dff_core import config
from dff_core.models import ModelConfig
from dff_core.scorenet import ScoreModel


def pytest_addoption(parser):
    parser.addoption(
        '--runslow', action='store_true', default=False,
        help='run slow acceptance tests')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long-running acceptance test')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def quiet_progress():
    saved = config['PROGRESS']
    config['PROGRESS'] = False
    yield
    config['PROGRESS'] = saved


@pytest.fixture
def rng():
    return default_rng(12345)


def tiny_model(**kwargs) -> ScoreModel:
    """Small double-precision model for gradient and determinism checks"""
    fields = dict(n_beads=3, dim=3, n_layers=1, n_features=8, embed_dim=4,
                  L=10, seed=1)
    fields.update(kwargs)
    return ScoreModel(ModelConfig(_set_defaults=True, **fields))


@pytest.fixture
def model():
    return tiny_model()


@pytest.fixture
def model_2d():
    return tiny_model(dim=2)
