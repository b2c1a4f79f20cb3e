"""
DFF Core: score network tests
"""

import pytest
import torch
from numpy import array, eye, full, isfinite, ones, zeros
from numpy.linalg import det
from numpy.random import default_rng
from numpy.testing import assert_allclose

from dff_core.errors import ValidationError
from dff_core.errors.schedule import InvalidNoiseLevelError
from dff_core.errors.scorenet import (
    ModelConfigError, NonFiniteInputError, NonFiniteModelError)
from dff_core.models import ModelConfig
from dff_core.schedule import NoiseSchedule, make_linear_schedule
from dff_core.scorenet import (
    AnalyticNoiseModel, ScoreModel, dff_force, energy, energy_gradient_error,
    equivariance_error, jacobian_asymmetry, make_schedule, predict_noise,
    random_rotation, score)

from .conftest import tiny_model


def test_model_config_validation():
    with pytest.raises(ValidationError):
        ModelConfig(dim=4)
    with pytest.raises(ValidationError):
        ModelConfig(n_beads=0)
    cfg = ModelConfig(_set_defaults=True)
    assert (cfg.n_beads, cfg.dim, cfg.L, cfg.n_features) == (1, 3, 1000, 64)
    assert cfg.conservative


def test_make_schedule():
    cfg = ModelConfig(_set_defaults=True, L=20, schedule='linear',
                      beta_min=0.01, beta_max=0.1)
    s = make_schedule(cfg)
    assert s.kind == 'linear' and s.L == 20
    assert s.beta(20) == pytest.approx(0.1)


def test_schedule_mismatch():
    with pytest.raises(ModelConfigError):
        ScoreModel(ModelConfig(_set_defaults=True, L=10),
                   make_linear_schedule(5, 0.01, 0.1))


def test_energy_finite_and_scalar(model, rng):
    e = energy(model, rng.standard_normal((3, 3)), 5)
    assert isinstance(e, float) and isfinite(e)
    assert energy(model, rng.standard_normal((4, 3, 3)), 5).shape == (4,)


def test_energy_translation_invariant(model, rng):
    x = rng.standard_normal((3, 3))
    for c in (1.0, -7.5, 10.0):
        assert energy(model, x + c, 3) == pytest.approx(
            energy(model, x, 3), abs=1e-10)


def test_initialization_is_seeded():
    a = tiny_model(seed=7).parameter_arrays()
    b = tiny_model(seed=7).parameter_arrays()
    c = tiny_model(seed=8).parameter_arrays()
    for name in a:
        assert (a[name] == b[name]).all()
    assert any((a[name] != c[name]).any() for name in a
               if a[name].any())


def test_parameters_double_precision(model):
    assert all(p.dtype == torch.float64 for p in model.parameters())


def test_conservative_noise_sums_to_zero(model, rng):
    eps = predict_noise(model, rng.standard_normal((5, 3, 3)), 4)
    assert abs(eps.sum(1)).max() < 1e-10


def test_noise_is_energy_gradient(model, rng):
    for i in (1, 5, 10):
        assert energy_gradient_error(
            model, rng.standard_normal((3, 3)), i) < 1e-4


def test_jacobian_symmetric(model_2d, rng):
    assert jacobian_asymmetry(model_2d, rng.standard_normal((3, 2)), 2) < 1e-5


def test_direct_head_shape_and_no_energy(rng):
    m = tiny_model(conservative=False)
    x = rng.standard_normal((2, 3, 3))
    assert predict_noise(m, x, 1).shape == (2, 3, 3)
    with pytest.raises(ModelConfigError):
        energy(m, x, 1)


def test_single_bead_unanchored_is_flat(rng):
    m = tiny_model(n_beads=1, dim=1)
    x = rng.standard_normal((6, 1, 1))
    e = energy(m, x, 2)
    assert_allclose(e, e[0], atol=1e-12)
    assert_allclose(predict_noise(m, x, 2), 0, atol=1e-12)


def test_anchored_single_bead_depends_on_position(rng):
    m = tiny_model(n_beads=1, dim=1, anchored=True)
    eps = predict_noise(m, rng.standard_normal((6, 1, 1)), 2)
    assert abs(eps).max() > 0


def test_score_relation(model, rng):
    x = rng.standard_normal((3, 3))
    eps = predict_noise(model, x, 6)
    ab = model.schedule.alpha_bar(6)
    assert_allclose(score(model, x, 6)*(1 - ab)**0.5 + eps, 0, atol=1e-12)


def test_score_of_stub():
    schedule = NoiseSchedule([0.25])
    v = array([[0.3, -1.2]])
    stub = AnalyticNoiseModel(schedule, 1, 2, noise_func=lambda x, l: v[None])
    assert_allclose(score(stub, zeros((1, 2)), 1), -2*v)


def test_dff_force_scaling(model, rng):
    x = rng.standard_normal((3, 3))
    s = score(model, x, 2)
    assert_allclose(dff_force(model, x, 2, 1.0), s)
    assert_allclose(dff_force(model, x, 2, 2.5), 2.5*s)
    with pytest.raises(ValidationError):
        dff_force(model, x, 2, 0)


def test_input_validation(model):
    with pytest.raises(ValidationError):
        predict_noise(model, zeros((2, 3)), 1)
    with pytest.raises(NonFiniteInputError):
        predict_noise(model, full((3, 3), float('nan')), 1)
    with pytest.raises(InvalidNoiseLevelError):
        predict_noise(model, zeros((3, 3)), 11)


def test_non_finite_parameters(model):
    model.check_finite()
    with torch.no_grad():
        model.readout.bias.fill_(float('inf'))
    with pytest.raises(NonFiniteModelError):
        model.check_finite()


def test_parameter_arrays_round_trip(model):
    other = tiny_model(seed=99)
    other.load_parameter_arrays(model.parameter_arrays())
    x = default_rng(1).standard_normal((3, 3))
    assert (predict_noise(other, x, 3) == predict_noise(model, x, 3)).all()
    arrays = model.parameter_arrays()
    del arrays['embeddings']
    with pytest.raises(ModelConfigError):
        other.load_parameter_arrays(arrays)


def test_random_rotation(rng):
    for dim in (2, 3):
        for _ in range(100):
            R = random_rotation(dim, rng)
            assert_allclose(R.T @ R, eye(dim), atol=1e-12)
            assert det(R) == pytest.approx(1, abs=1e-12)
    assert (random_rotation(1, rng) == array([[1.0]])).all()
    with pytest.raises(ValidationError):
        random_rotation(4, rng)


def test_equivariance_error_identity(model, rng):
    x = rng.standard_normal((4, 3, 3))
    assert_allclose(equivariance_error(model, x, 3, eye(3)), 0, atol=1e-20)


def test_equivariance_error_central_force(rng):
    schedule = make_linear_schedule(10, 0.01, 0.1)
    harmonic = AnalyticNoiseModel(schedule, 3, 3, noise_func=lambda x, l: x)
    x = rng.standard_normal((5, 3, 3))
    err = equivariance_error(harmonic, x, 4, random_rotation(3, rng))
    assert err.shape == (5,)
    assert err.max() < 1e-12


def test_equivariance_error_zero_noise_convention(rng):
    zero = AnalyticNoiseModel(make_linear_schedule(10, 0.01, 0.1), 2, 2)
    assert equivariance_error(
        zero, ones((2, 2)), 1, random_rotation(2, rng)) == 0


def test_clone_is_independent(model):
    copy = model.clone()
    with torch.no_grad():
        copy.embeddings.add_(1)
    assert not (copy.embeddings == model.embeddings).all()
