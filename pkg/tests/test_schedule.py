"""
DFF Core: noise schedule tests
"""

import pytest
from numpy import array, diff, isclose
from numpy.testing import assert_allclose

from dff_core.errors import ValidationError
from dff_core.errors.schedule import (
    InvalidNoiseLevelError, InvalidScheduleError)
from dff_core.schedule import (
    NoiseSchedule, diffuse, from_zero_based, make_cosine_schedule,
    make_linear_schedule, to_zero_based)


def test_constant_betas_alpha_bars():
    s = make_linear_schedule(2, 0.1, 0.1)
    assert_allclose(s.alpha_bars, [0.9, 0.81], atol=1e-15)
    assert s.sigma(1) == pytest.approx(0.1**0.5)


def test_linear_schedule_products():
    s = make_linear_schedule(3, 0.1, 0.3)
    assert_allclose(s.betas, [0.1, 0.2, 0.3])
    assert s.alpha_bar(3) == pytest.approx(0.9*0.8*0.7, abs=1e-15)
    assert s.alpha_bar(3) == pytest.approx(0.504, abs=1e-12)


def test_cosine_schedule_endpoints():
    s = make_cosine_schedule(1000)
    assert s.kind == 'cosine'
    assert len(s) == 1000
    assert s.alpha_bar(1) > 0.99
    assert s.alpha_bar(1000) < 0.01
    assert (diff(s.alpha_bars) < 0).all()
    assert (s.betas <= 0.999).all()


def test_cosine_schedule_uses_configured_levels():
    assert make_cosine_schedule().L == 1000


def test_alpha_bars_are_running_products():
    s = make_cosine_schedule(50)
    prod = 1.0
    for i in range(1, 51):
        prod *= 1 - s.beta(i)
        assert isclose(s.alpha_bar(i), prod, rtol=1e-12)


def test_schedule_is_immutable():
    s = make_linear_schedule(3, 0.1, 0.3)
    with pytest.raises(ValueError):
        s.betas[0] = 0.5
    with pytest.raises(ValueError):
        s.alpha_bars[0] = 0.5


@pytest.mark.parametrize('betas', [[], [0.1, 0], [0.5, 1.0], [-0.1]])
def test_invalid_betas(betas):
    with pytest.raises(InvalidScheduleError):
        NoiseSchedule(betas)


def test_invalid_schedule_parameters():
    with pytest.raises(InvalidScheduleError):
        make_cosine_schedule(0)
    with pytest.raises(InvalidScheduleError):
        make_linear_schedule(10, 0.2, 0.1)
    with pytest.raises(InvalidScheduleError):
        make_linear_schedule(10, 0.1, 1.0)


def test_level_range():
    s = make_linear_schedule(3, 0.1, 0.3)
    assert s.check_level(1) == 0
    assert_allclose(s.check_level(array([1, 3])), [0, 2])
    for i in (0, 4, -1):
        with pytest.raises(InvalidNoiseLevelError):
            s.beta(i)
    with pytest.raises(InvalidNoiseLevelError):
        s.alpha_bar(1.5)


def test_level_conventions():
    assert to_zero_based(1) == 0
    assert from_zero_based(19) == 20
    assert_allclose(from_zero_based(to_zero_based(array([1, 5]))), [1, 5])


def test_diffuse():
    s = NoiseSchedule([0.75])
    assert s.alpha_bar(1) == pytest.approx(0.25)
    assert diffuse(s, 1.0, 1, 0.5) == pytest.approx(0.5 + 0.75**0.5*0.5)
    assert diffuse(s, 1.0, 1, 0.5) == pytest.approx(0.93301, abs=1e-5)


def test_diffuse_per_sample_levels():
    s = make_linear_schedule(3, 0.1, 0.3)
    x0 = array([[[1.0, 2.0]], [[1.0, 2.0]]])
    eps = array([[[0.0, 0.0]], [[1.0, 1.0]]])
    out = diffuse(s, x0, array([1, 3]), eps)
    assert_allclose(out[0], 0.9**0.5*x0[0])
    assert_allclose(
        out[1], 0.504**0.5*x0[1] + (1 - 0.504)**0.5*eps[1])


def test_diffuse_shape_mismatch():
    s = make_linear_schedule(3, 0.1, 0.3)
    with pytest.raises(ValidationError):
        diffuse(s, [1.0, 2.0], 1, [1.0])


def test_elbo_weights():
    s = make_linear_schedule(3, 0.1, 0.3)
    w = s.elbo_weights()
    assert_allclose(w, s.betas/(2*s.alphas*(1 - s.alpha_bars)))
    assert (w > 0).all()
