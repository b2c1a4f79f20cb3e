"""
DFF Core: analytic reference system tests
"""

import pytest
from numpy import (
    array, diff, exp, eye, kron, linspace, ones, sqrt, zeros)
from numpy.linalg import inv, lstsq
from numpy.random import default_rng
from numpy.testing import assert_allclose
from scipy.integrate import quad
from scipy.stats import chisquare

from dff_core.errors import ValidationError
from dff_core.errors.toyworlds import (
    EnvelopeViolationError, NoExactSamplerError, UnknownSystemError,
    UnsupportedSystemError)
from dff_core.models import CGMap, ToySystem
from dff_core.schedule import NoiseSchedule, make_linear_schedule
from dff_core.toyworlds import (
    boltzmann_sample, builtin_systems, cg_covariance, cg_mean_force,
    diffused_score_oracle, get_system, oracle_trajectory, projected_forces,
    quadrature_expectation)


def fd_force(system, x, h=1e-6):
    f = zeros(x.shape)
    for j in range(x.shape[-2]):
        for d in range(x.shape[-1]):
            dx = zeros(x.shape)
            dx[..., j, d] = h
            f[..., j, d] = -(system.potential(x + dx) -
                             system.potential(x - dx))/(2*h)
    return f


def test_catalog():
    assert set(builtin_systems()) >= {
        'gaussian_well', 'double_well', 'muller_brown', 'harmonic_chain'}
    with pytest.raises(UnknownSystemError):
        get_system('argon')


def test_system_defaults():
    dw = get_system('double_well')
    assert dw.kT == 0.5 and dw.a == 1 and dw.dim == 1
    assert get_system('double_well', kT=1.0).kT == 1.0
    chain = get_system('harmonic_chain')
    assert chain.cg_map().kept == [0, 2, 4, 6, 8]
    assert chain.model_defaults()['n_beads'] == 5
    mb = get_system('muller_brown')
    assert mb.train_defaults()['augment_rotations'] is False
    with pytest.raises(ValidationError):
        get_system('gaussian_well', sigma=0)


@pytest.mark.parametrize('name,params', [
    ('gaussian_well', dict(dim=3, kT=2.0, sigma=1.5)),
    ('double_well', dict(a=1.5)),
    ('muller_brown', {}),
    ('harmonic_chain', dict(n_beads=4, k=3.0)),
])
def test_force_is_negative_gradient(rng, name, params):
    system = get_system(name, **params)
    x = 0.5*rng.standard_normal((5, system.n_beads, system.dim))
    if name == 'muller_brown':
        x += array([-0.5, 1.0])
    f = system.force(x)
    fd = fd_force(system, x)
    assert abs(f - fd).max() < 1e-6*max(abs(fd).max(), 1)


def test_gaussian_well_force():
    system = get_system('gaussian_well', dim=2, kT=2.0, sigma=0.5)
    x = array([[[1.0, -2.0]]])
    assert_allclose(system.force(x), -2.0*x/0.25)


def test_double_well_landscape():
    system = get_system('double_well')
    x = array([-1.0, 0.0, 1.0]).reshape(3, 1, 1)
    assert_allclose(system.potential(x), [0, 1, 0])
    assert_allclose(system.force(x), 0)


def test_muller_brown_minimum():
    system = get_system('muller_brown')
    assert system.potential_min() == pytest.approx(-146.7, abs=0.05)
    assert system.potential(array([[[-0.558, 1.442]]]))[0] == pytest.approx(
        system.potential_min(), abs=1e-2)


def test_gaussian_sampler_variance(rng):
    x = boltzmann_sample(get_system('gaussian_well'), 100000, rng)
    assert x.shape == (100000, 1, 1)
    stderr = sqrt(2/100000)
    assert abs(x.var() - 1) < 3*stderr


def test_double_well_symmetry(rng):
    x = boltzmann_sample(get_system('double_well'), 100000, rng)
    assert abs((x > 0).mean() - 0.5) < 0.01


def test_double_well_second_moment(rng):
    system = get_system('double_well')
    m2 = quadrature_expectation(system, lambda x: x**2)
    m4 = quadrature_expectation(system, lambda x: x**4)
    x = boltzmann_sample(system, 100000, rng)[:, 0, 0]
    stderr = sqrt((m4 - m2**2)/len(x))
    assert abs((x**2).mean() - m2) < 4*stderr


def test_quadrature_accuracy():
    system = get_system('gaussian_well', sigma=1.5)
    assert quadrature_expectation(system, lambda x: x**2) == pytest.approx(
        2.25, abs=1e-8)
    with pytest.raises(UnsupportedSystemError):
        quadrature_expectation(get_system('muller_brown'), lambda x: x)


def test_double_well_goodness_of_fit(rng):
    system = get_system('double_well')
    (lo, hi), = system.sampling_box()
    edges = linspace(lo, hi, 65)

    def density(x):
        return exp(-system.a*(x**2 - 1)**2/system.kT)

    p = array([quad(density, a, b)[0] for a, b in zip(edges[:-1], edges[1:])])
    p /= p.sum()
    x = boltzmann_sample(system, 100000, rng)[:, 0, 0]
    counts = ((x[:, None] >= edges[:-1]) & (x[:, None] < edges[1:])).sum(0)
    assert counts.sum() == len(x)
    assert chisquare(counts, p*len(x)).pvalue > 0.001


def test_muller_brown_samples_in_box(rng):
    system = get_system('muller_brown')
    x = boltzmann_sample(system, 2000, rng)
    assert x.shape == (2000, 1, 2)
    (x_lo, x_hi), (y_lo, y_hi) = system.sampling_box()
    assert (x[..., 0] >= x_lo).all() and (x[..., 0] <= x_hi).all()
    assert (x[..., 1] >= y_lo).all() and (x[..., 1] <= y_hi).all()


def test_envelope_violation(rng):
    system = get_system('double_well')
    system.potential_min = lambda: 1.0
    with pytest.raises(EnvelopeViolationError):
        boltzmann_sample(system, 100, rng)


def test_no_exact_sampler(rng):
    system = ToySystem(name='custom', _set_defaults=True)
    with pytest.raises(NoExactSamplerError):
        boltzmann_sample(system, 10, rng)


def test_oracle_trajectory(rng):
    system = get_system('double_well')
    traj = oracle_trajectory(system, boltzmann_sample(system, 10, rng))
    assert traj.provenance == 'oracle'
    assert traj.kT == 0.5 and traj.n_frames == 10


def test_chain_cg_covariance():
    chain = get_system('harmonic_chain')
    kept = [0, 2, 4, 6, 8]
    cov = chain.kT*inv(chain.stiffness())
    expected = kron(cov[kept][:, kept], eye(3))
    assert_allclose(cg_covariance(chain), expected, atol=1e-12)


def test_chain_sample_covariance(rng):
    chain = get_system('harmonic_chain')
    z = chain.cg_map().apply(boltzmann_sample(chain, 200000, rng))
    cov = cg_covariance(chain)
    emp = (z.reshape(len(z), -1).T @ z.reshape(len(z), -1))/len(z)
    assert abs(emp - cov).max() < 0.05*abs(cov).max()


def test_diffused_score_limits(rng):
    system = get_system('gaussian_well', dim=2, sigma=2.0)
    x = rng.standard_normal((4, 1, 2))
    sharp = NoiseSchedule([1e-12, 1 - 1e-12])
    assert_allclose(diffused_score_oracle(system, sharp, 1, x), -x/4,
                    rtol=1e-9)
    assert_allclose(diffused_score_oracle(system, sharp, 2, x), -x,
                    rtol=1e-9)
    unit = get_system('gaussian_well', dim=2)
    schedule = make_linear_schedule(10, 0.01, 0.2)
    for i in (1, 5, 10):
        assert_allclose(diffused_score_oracle(unit, schedule, i, x), -x)
    with pytest.raises(UnsupportedSystemError):
        diffused_score_oracle(get_system('double_well'), schedule, 1, x)


def test_diffused_score_matches_kernel_estimate(rng):
    system = get_system('gaussian_well', sigma=2.0)
    schedule = NoiseSchedule([0.5])
    ab = schedule.alpha_bar(1)
    x0 = boltzmann_sample(system, 400000, rng)[:, 0, 0]
    for x in (-1.5, 0.5, 2.0):
        w = exp(-(x - sqrt(ab)*x0)**2/(2*(1 - ab)))
        mc = (w*(-(x - sqrt(ab)*x0)/(1 - ab))).sum()/w.sum()
        exact = diffused_score_oracle(
            system, schedule, 1, array([[[x]]]))[0, 0, 0]
        assert mc == pytest.approx(exact, abs=0.015)


def test_slicing_projected_forces(rng):
    chain = get_system('harmonic_chain')
    r = rng.standard_normal((3, 9, 3))
    z, f = projected_forces(chain, chain.cg_map(), r)
    assert_allclose(z, r[:, ::2])
    assert_allclose(f, chain.force(r)[:, ::2])
    well = get_system('gaussian_well', dim=3)
    _, f0 = projected_forces(well, well.cg_map(), zeros((2, 1, 3)))
    assert (f0 == 0).all()


def test_chain_mean_force(rng):
    chain = get_system('harmonic_chain')
    z, f = projected_forces(
        chain, chain.cg_map(), boltzmann_sample(chain, 100000, rng))
    zf, ff = z.reshape(len(z), -1), f.reshape(len(f), -1)
    coef = lstsq(zf, ff, rcond=None)[0]
    exact = cg_mean_force(chain, eye(15).reshape(15, 5, 3)).reshape(15, 15)
    assert abs(coef - exact).max() < 0.05*abs(exact).max()


def test_cg_map_validation():
    with pytest.raises(ValidationError):
        CGMap(n_fg=3, kept=[0, 3])
    with pytest.raises(ValidationError):
        CGMap(matrix=array([[0.5, 0.6]]))
    avg = CGMap(matrix=array([[0.5, 0.5, 0], [0, 0, 1]]))
    assert avg.n_fg == 3 and avg.n_cg == 2
    r = array([[[0.0, 2.0], [2.0, 0.0], [5.0, 5.0]]])
    assert_allclose(avg.apply(r), [[[1.0, 1.0], [5.0, 5.0]]])
    assert avg.flat_matrix(2).shape == (4, 6)
    identity = CGMap(n_fg=4)
    assert identity.kept == [0, 1, 2, 3]
    assert_allclose(identity.apply_forces(ones((1, 4, 1))), 1)
    assert diff(CGMap(n_fg=9, kept=[0, 4, 8]).kept).tolist() == [4, 4]
