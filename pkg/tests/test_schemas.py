"""
DFF Core: config schema and error reporting tests
"""

import pytest

from dff_core import config, json_dumps
from dff_core.errors import DFFError, MissingFieldError, ValidationError
from dff_core.errors.dynamics import SimulationDivergedError
from dff_core.models import Job, LangevinConfig, ModelConfig, TrainConfig
from dff_core.resources.job_plugins.sample_job import SampleJob


def test_defaults_and_overrides():
    cfg = ModelConfig(_set_defaults=True, n_beads=4)
    assert (cfg.n_beads, cfg.dim, cfg.conservative) == (4, 3, True)
    assert ModelConfig().to_dict().get('n_beads') is None


def test_validation_on_assignment():
    cfg = TrainConfig(_set_defaults=True)
    cfg.batch_size = '32'
    assert cfg.batch_size == 32
    with pytest.raises(ValidationError) as e:
        cfg.batch_size = 0
    assert e.value.payload == {'field': 'batch_size'}
    with pytest.raises(ValidationError):
        ModelConfig(dim=4)
    with pytest.raises(ValidationError):
        LangevinConfig(dt=-1)


def test_from_dict():
    cfg = TrainConfig.from_dict({'iterations': 7})
    assert cfg.iterations == 7 and cfg.ema_decay == 0.995
    with pytest.raises(ValidationError) as e:
        TrainConfig.from_dict({'iterations': 7, 'epochs': 3})
    assert 'epochs' in str(e.value)
    with pytest.raises(ValidationError):
        TrainConfig.from_dict([1, 2])


def test_polymorphic_jobs():
    job = Job(type='sample', _set_defaults=True, n=5)
    assert isinstance(job, SampleJob)
    assert job.n == 5 and job.batch_size == 4096
    assert '"type": "sample"' in json_dumps(job)


def test_error_description():
    e = SimulationDivergedError(replica=2, step=150)
    assert e.code == 1 and e.subcode == 400
    assert e.describe() == \
        'SimulationDivergedError: [400] {} (replica=2, step=150)'.format(
            e.message)
    e = MissingFieldError('checkpoint', 'Model checkpoint required')
    assert isinstance(e, ValidationError) and isinstance(e, DFFError)
    assert e.describe() == 'MissingFieldError: [3] Model checkpoint ' \
        'required (field=checkpoint)'


def test_default_options():
    assert config['SPLIT_FRACTIONS'] == (0.7, 0.1, 0.2)
    assert config['HISTOGRAM_BINS'] == 64
    assert config['TICA_LAG'] == 10
    assert config['DIVERGENCE_THRESHOLD'] == 1e6
