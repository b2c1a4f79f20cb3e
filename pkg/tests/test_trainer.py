"""
DFF Core: training tests
"""

import pytest
import torch
from numpy import array, isnan, maximum, minimum, sqrt, zeros
from numpy.random import default_rng
from numpy.testing import assert_allclose, assert_array_equal

from dff_core.errors import ValidationError
from dff_core.errors.trainer import EmptyBatchError, TrainingDivergedError
from dff_core.models import TrainConfig
from dff_core.schedule import make_linear_schedule
from dff_core.scorenet import AnalyticNoiseModel, dff_force
from dff_core.trainer import (
    Trainer, decode_rng_state, denoising_loss, encode_rng_state,
    force_matching_loss, loss_gradient_error, rotate_batch,
    sample_noise_level, score_matching_loss, train, write_loss_history)

from .conftest import tiny_model


def small_config(**kwargs) -> TrainConfig:
    fields = dict(batch_size=16, iterations=10, validation_interval=5,
                  learning_rate=1e-3, seed=3)
    fields.update(kwargs)
    return TrainConfig(_set_defaults=True, **fields)


def test_train_config_defaults():
    cfg = TrainConfig(_set_defaults=True)
    assert cfg.ema_decay == 0.995
    assert cfg.noise_split == 0.1
    assert cfg.loss_weighting == 'unit'
    with pytest.raises(ValidationError):
        TrainConfig(ema_decay=1)
    with pytest.raises(ValidationError):
        TrainConfig(batch_size=0)


def test_noise_level_buckets(rng):
    levels = sample_noise_level(1000, 0.1, rng, 100000)
    assert levels.min() >= 1 and levels.max() <= 1000
    assert abs((levels <= 100).mean() - 0.5) < 0.01
    assert isinstance(sample_noise_level(1000, 0.1, rng), int)


def test_noise_level_two_levels(rng):
    levels = sample_noise_level(2, 0.5, rng, 20000)
    assert set(levels.tolist()) == {1, 2}
    assert abs((levels == 1).mean() - 0.5) < 0.02


@pytest.mark.parametrize('L,split', [(1, 0.5), (10, 0.05), (10, 1.0)])
def test_noise_level_empty_bucket(rng, L, split):
    with pytest.raises(ValidationError):
        sample_noise_level(L, split, rng)


def test_rotate_batch_preserves_distances(rng):
    x = rng.standard_normal((8, 4, 3))
    f = rng.standard_normal((8, 4, 3))
    xr, fr = rotate_batch(x, rng, f)
    assert_allclose(
        ((xr[:, 0] - xr[:, 1])**2).sum(-1), ((x[:, 0] - x[:, 1])**2).sum(-1))
    assert_allclose((xr*fr).sum(-1), (x*f).sum(-1), atol=1e-12)
    one_d = rng.standard_normal((5, 2, 1))
    assert rotate_batch(one_d, rng) is one_d


def test_zero_noise_stub_loss(rng):
    stub = AnalyticNoiseModel(make_linear_schedule(10, 0.01, 0.1), 3, 3)
    loss = denoising_loss(stub, rng.standard_normal((20000, 3, 3)), rng)
    assert isinstance(loss, float)
    assert loss == pytest.approx(9, abs=0.2)


def test_oracle_stub_loss_vanishes(rng):
    schedule = make_linear_schedule(10, 0.01, 0.1)

    def exact(x, levels):
        ab = schedule.alpha_bar(levels).reshape(-1, 1, 1)
        return x/sqrt(1 - ab)

    oracle = AnalyticNoiseModel(schedule, 2, 2, noise_func=exact)
    assert denoising_loss(oracle, zeros((50, 2, 2)), rng) < 1e-20


def test_empty_batch(model, rng):
    with pytest.raises(EmptyBatchError):
        denoising_loss(model, zeros((0, 3, 3)), rng)


def test_loss_objectives_agree(model, rng):
    x0 = rng.standard_normal((100, 3, 3))
    for i in (1, 4, 10):
        l3 = float(denoising_loss(
            model, x0, default_rng([7, i]), levels=i, create_graph=False))
        l4 = score_matching_loss(model, x0, i, default_rng([7, i]))
        assert abs(l3 - l4) < 1e-10


def test_loss_objectives_agree_for_stub(rng):
    stub = AnalyticNoiseModel(make_linear_schedule(10, 0.01, 0.1), 2, 2)
    x0 = rng.standard_normal((10, 2, 2))
    eps = default_rng(5).standard_normal(x0.shape)
    expected = (eps**2).sum((1, 2)).mean()
    assert denoising_loss(stub, x0, default_rng(5), levels=3) == \
        pytest.approx(expected, abs=1e-12)
    assert score_matching_loss(stub, x0, 3, default_rng(5)) == \
        pytest.approx(expected, abs=1e-12)


def test_elbo_weighting(rng):
    stub = AnalyticNoiseModel(make_linear_schedule(10, 0.01, 0.1), 1, 2)
    x0 = rng.standard_normal((10, 1, 2))
    unit = denoising_loss(stub, x0, default_rng(1), levels=4)
    elbo = denoising_loss(stub, x0, default_rng(1), 'elbo', levels=4)
    assert elbo == pytest.approx(
        unit*stub.schedule.elbo_weights()[3], rel=1e-12)
    with pytest.raises(ValidationError):
        denoising_loss(stub, x0, rng, 'bogus')


def test_loss_parameter_gradient():
    model = tiny_model(n_beads=2, dim=2, n_features=2, embed_dim=2)
    assert model.count_parameters() <= 100
    x0 = default_rng(2).standard_normal((4, 2, 2))
    assert loss_gradient_error(model, x0, seed=3) < 1e-4


def test_force_matching_loss(model, rng):
    z = rng.standard_normal((6, 3, 3))
    f = dff_force(model, z, 1, 2.0)
    assert float(force_matching_loss(
        model, z, f, 2.0, create_graph=False)) < 1e-20
    with pytest.raises(ValidationError):
        force_matching_loss(model, z, f[:, :2], 2.0)


def test_force_matching_kt_scaling(rng):
    schedule = make_linear_schedule(10, 0.01, 0.1)
    z = rng.standard_normal((6, 2, 2))
    f = rng.standard_normal((6, 2, 2))
    base = AnalyticNoiseModel(schedule, 2, 2, noise_func=lambda x, l: x)
    scaled = AnalyticNoiseModel(schedule, 2, 2, noise_func=lambda x, l: x/3)
    assert force_matching_loss(scaled, z, f, 3.0) == pytest.approx(
        force_matching_loss(base, z, f, 1.0), rel=1e-12)


def test_rng_state_encoding(rng):
    rng.standard_normal(3)
    rng.integers(0, 10)
    copy = decode_rng_state(encode_rng_state(rng))
    assert (copy.standard_normal(5) == rng.standard_normal(5)).all()


def test_zero_learning_rate_keeps_parameters(model, rng):
    before = model.parameter_arrays()
    trainer = train(model, rng.standard_normal((40, 3, 3)),
                    small_config(learning_rate=0, min_learning_rate=0))
    after = model.parameter_arrays()
    ema = trainer.ema.parameter_arrays()
    for name in before:
        assert (before[name] == after[name]).all()
        assert_allclose(ema[name], before[name], atol=1e-14)


def test_training_is_deterministic(rng):
    data = rng.standard_normal((40, 3, 3))
    a = train(tiny_model(), data, small_config())
    b = train(tiny_model(), data, small_config())
    assert_array_equal(array(a.history), array(b.history))
    assert a.iteration == 10
    pa, pb = a.model.parameter_arrays(), b.model.parameter_arrays()
    assert all((pa[k] == pb[k]).all() for k in pa)


def test_history_and_validation(rng):
    data = rng.standard_normal((40, 3, 3))
    val = rng.standard_normal((10, 3, 3))
    trainer = train(tiny_model(), data, small_config(), val)
    assert [h[0] for h in trainer.history] == list(range(1, 11))
    assert not isnan(trainer.history[4][2])
    assert isnan(trainer.history[3][2])
    assert trainer.validation_loss() == trainer.validation_loss()


def test_ema_is_convex_combination(rng):
    model = tiny_model()
    trainer = Trainer(
        model, rng.standard_normal((40, 3, 3)),
        small_config(learning_rate=1e-2, ema_decay=0.5))
    lo = model.parameter_arrays()
    hi = model.parameter_arrays()
    for _ in range(5):
        trainer.step()
        p = model.parameter_arrays()
        lo = {k: minimum(lo[k], p[k]) for k in p}
        hi = {k: maximum(hi[k], p[k]) for k in p}
    for k, e in trainer.ema.parameter_arrays().items():
        assert (e >= lo[k] - 1e-12).all() and (e <= hi[k] + 1e-12).all()


def test_resume_matches_uninterrupted(rng):
    data = rng.standard_normal((40, 3, 3))
    full_run = train(tiny_model(), data, small_config())

    first = Trainer(tiny_model(), data, small_config())
    for _ in range(4):
        first.step()
    second = Trainer(tiny_model(seed=42), data, small_config())
    second.restore(first.state())
    second.run()
    assert second.iteration == 10
    pa = full_run.model.parameter_arrays()
    pb = second.model.parameter_arrays()
    assert all((pa[k] == pb[k]).all() for k in pa)
    ea, eb = full_run.ema.parameter_arrays(), second.ema.parameter_arrays()
    assert all((ea[k] == eb[k]).all() for k in ea)


def test_early_stopping(rng):
    trainer = Trainer(tiny_model(), rng.standard_normal((10, 3, 3)),
                      small_config(patience=2))
    assert not trainer._check_early_stopping(1.0)
    assert not trainer._check_early_stopping(2.0)
    assert trainer._check_early_stopping(3.0)
    assert trainer.stopped_early


def test_early_stopping_keeps_best_ema(rng):
    trainer = Trainer(tiny_model(), rng.standard_normal((10, 3, 3)),
                      small_config(patience=1))
    best = trainer.ema.parameter_arrays()
    assert not trainer._check_early_stopping(1.0)
    trainer.step()
    moved = trainer.ema.parameter_arrays()
    assert any((moved[k] != best[k]).any() for k in best)
    resumed = Trainer(tiny_model(seed=7), rng.standard_normal((10, 3, 3)),
                      small_config(patience=1))
    resumed.restore(trainer.state())
    for t in (trainer, resumed):
        assert t._check_early_stopping(2.0)
        ema = t.ema.parameter_arrays()
        assert all((ema[k] == best[k]).all() for k in best)


def test_divergence_restores_last_good(model, rng):
    trainer = Trainer(model, rng.standard_normal((10, 3, 3)), small_config())
    with torch.no_grad():
        model.readout.weight.fill_(float('nan'))
    with pytest.raises(TrainingDivergedError):
        trainer.step()
    model.check_finite()
    assert trainer.iteration == 0


def test_force_matching_training(rng):
    model = tiny_model()
    z = rng.standard_normal((30, 3, 3))
    trainer = train(model, z, small_config(iterations=3), forces=-z)
    assert len(trainer.history) == 3
    with pytest.raises(ValidationError):
        Trainer(model, z, small_config(), forces=z[:, :2])


def test_write_loss_history(tmp_path):
    path = tmp_path/'loss.csv'
    write_loss_history(str(path), [(1, 0.5, float('nan')), (2, 0.25, 0.125)])
    assert path.read_text().splitlines() == [
        'iteration,train_loss,val_loss', '1,0.5,', '2,0.25,0.125']


def test_rotation_augmentation_shape(rng):
    x = array([[[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0]]])
    assert rotate_batch(x, rng).shape == (1, 3, 3)
