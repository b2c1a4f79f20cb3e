"""
DFF Core: integrator and simulation tests
"""

import pytest
from numpy import array, full, ones, sqrt, zeros
from numpy.random import default_rng
from numpy.testing import assert_allclose

from dff_core.dynamics import (
    AnalyticForce, DFFForce, FunctionForce, LangevinState, ZeroForce,
    brownian_step, diffuse_denoise_step, implicit_timestep, langevin_step,
    Simulation, replica_generators, simulate)
from dff_core.errors import ValidationError
from dff_core.errors.dynamics import (
    AllReplicasDivergedError, SimulationDivergedError)
from dff_core.models import LangevinConfig
from dff_core.schedule import make_linear_schedule
from dff_core.scorenet import AnalyticNoiseModel, dff_force
from dff_core.toyworlds import get_system

from .conftest import tiny_model


def harmonic(k=1.0):
    return FunctionForce(lambda x: -k*x)


def config(**kwargs) -> LangevinConfig:
    return LangevinConfig(_set_defaults=True, **kwargs)


def test_langevin_config_validation():
    with pytest.raises(ValidationError):
        config(dt=0)
    with pytest.raises(ValidationError):
        config(friction=-1)
    assert config(kT=0).kT == 0


def test_langevin_rest_state_unchanged(rng):
    x = rng.standard_normal((3, 2))
    state = langevin_step(LangevinState(x), ZeroForce(), config(kT=0), rng)
    assert (state.x == x).all()
    assert (state.v == 0).all()


def test_langevin_energy_conservation(rng):
    cfg = config(kT=0, friction=1e-12, dt=1e-3)
    state = LangevinState(array([[1.0]]))
    force = harmonic()
    for step in range(10000):
        state = langevin_step(state, force, cfg, rng, step)
    energy = 0.5*state.v[0, 0]**2 + 0.5*state.x[0, 0]**2
    assert abs(energy - 0.5)/0.5 < 1e-6


def test_langevin_divergence(rng):
    with pytest.raises(SimulationDivergedError):
        langevin_step(LangevinState(full((1, 1), 2e6)), ZeroForce(),
                      config(kT=0), rng, 7)


def test_brownian_drift(rng):
    cfg = config(kT=0, dt=0.01, friction=2.0, mass=3.0)
    x = rng.standard_normal((4, 2, 3))
    f = harmonic(2.0)
    assert_allclose(brownian_step(x, f, cfg, rng), x + 0.01*f(x)/6)


def test_brownian_diffusion(rng):
    cfg = config(kT=2.0, dt=0.01, friction=2.0, mass=0.5)
    x = zeros((100000, 1, 1))
    dx = brownian_step(x, ZeroForce(), cfg, rng)
    assert dx.var() == pytest.approx(2*0.01*2.0/1.0, rel=0.02)


def test_diffuse_denoise_zero_stub(rng):
    stub = AnalyticNoiseModel(make_linear_schedule(10, 1e-4, 0.02), 1, 1)
    x = zeros((100000, 1, 1))
    dx = diffuse_denoise_step(stub, x, rng)
    beta = 1e-4
    assert dx.var() == pytest.approx(beta/(1 - beta) + beta, rel=0.02)
    assert dx.var() == pytest.approx(2*beta, rel=0.02)


def test_implicit_timestep():
    schedule = make_linear_schedule(10, 1e-4, 0.02)
    assert implicit_timestep(schedule, 1, 1, 1) == pytest.approx(1e-4)
    assert implicit_timestep(schedule, 12.8, 1, 2.5) == pytest.approx(
        12.8e-4/2.5)
    with pytest.raises(ValidationError):
        implicit_timestep(schedule, 1, 1, 0)


def test_replica_streams_independent():
    a, b = replica_generators(0, 2)
    assert a.standard_normal() != b.standard_normal()
    c = replica_generators(0, 2)[1]
    b2 = replica_generators(0, 2)[1]
    assert c.standard_normal(3).tolist() == b2.standard_normal(3).tolist()


def test_dff_force_provider(model, rng):
    x = rng.standard_normal((4, 3, 3))
    fp = DFFForce(model, 2, 1.5)
    assert_allclose(fp(x), dff_force(model, x, 2, 1.5))
    assert fp(zeros((0, 3, 3))).shape == (0, 3, 3)
    with pytest.raises(ValidationError):
        DFFForce(model, 2, 0)


def test_analytic_force_provider(rng):
    system = get_system('double_well')
    x = rng.standard_normal((5, 1, 1))
    assert_allclose(AnalyticForce(system)(x), -4*x*(x**2 - 1))


def test_zero_steps_keeps_initial_frames(rng):
    initial = rng.standard_normal((4, 2, 2))
    traj = simulate(ZeroForce(), config(n_steps=0, n_replicas=3), 'langevin',
                    initial)
    assert traj.n_frames == 3
    assert traj.segments == [0, 1, 2]
    for frame in traj.frames:
        assert any((abs(frame - x) < 1e-6).all() for x in initial)


@pytest.mark.parametrize('integrator', ['langevin', 'brownian'])
@pytest.mark.parametrize('save_initial', [True, False])
def test_saved_frame_count(rng, integrator, save_initial):
    cfg = config(n_steps=95, save_every=10, n_replicas=3,
                 save_initial=save_initial)
    traj = simulate(harmonic(), cfg, integrator,
                    rng.standard_normal((5, 1, 1)))
    assert traj.n_frames == 3*(9 + save_initial)
    assert len(traj.segment_slices()) == 3
    assert traj.provenance == 'simulation'
    assert traj.dt == cfg.dt and traj.save_every == 10


def test_simulation_is_deterministic(rng):
    initial = rng.standard_normal((5, 2, 2))
    cfg = config(n_steps=50, n_replicas=2, seed=11)
    a = simulate(harmonic(), cfg, 'langevin', initial)
    b = simulate(harmonic(), cfg, 'langevin', initial)
    assert (a.frames == b.frames).all()
    c = simulate(harmonic(), config(n_steps=50, n_replicas=2, seed=12),
                 'langevin', initial)
    assert (a.frames != c.frames).any()


def test_simulate_with_model(rng):
    model = tiny_model()
    cfg = config(n_steps=20, save_every=5, n_replicas=2, noise_level=3)
    traj = simulate(model, cfg, 'langevin', rng.standard_normal((4, 3, 3)))
    assert traj.n_frames == 2*5
    traj = simulate(model, cfg, 'diffuse-denoise',
                    rng.standard_normal((4, 3, 3)))
    assert traj.n_frames == 2*5


def test_simulation_argument_errors(rng):
    x = rng.standard_normal((2, 1, 1))
    with pytest.raises(ValidationError):
        simulate(ZeroForce(), config(), 'verlet', x)
    with pytest.raises(ValidationError):
        simulate(ZeroForce(), config(), 'diffuse-denoise', x)
    with pytest.raises(ValidationError):
        simulate(ZeroForce(), config(), 'langevin', None)
    with pytest.raises(ValidationError):
        simulate(ZeroForce(), config(), 'langevin', zeros((0, 1, 1)))


def test_all_replicas_diverge(rng):
    push = FunctionForce(lambda x: 1e12*ones(x.shape))
    with pytest.raises(AllReplicasDivergedError):
        simulate(push, config(n_steps=10, n_replicas=2), 'brownian',
                 rng.standard_normal((2, 1, 1)))


def test_replicas_diverged_at_start():
    sim = Simulation(harmonic(), config(n_steps=10, n_replicas=3), 'langevin',
                     full((2, 1, 1), 1e7))
    with pytest.raises(AllReplicasDivergedError) as e:
        sim.run()
    assert sim.diverged == {0: 0, 1: 0, 2: 0}
    assert e.value.payload['steps'] == [0, 0, 0]


def test_harmonic_langevin_variance():
    k, kT = 2.0, 0.5
    rng = default_rng(0)
    initial = sqrt(kT/k)*rng.standard_normal((1000, 1, 1))
    cfg = config(kT=kT, friction=1.0, dt=0.1, n_steps=5000, save_every=5,
                 n_replicas=400, save_initial=False)
    traj = simulate(harmonic(k), cfg, 'langevin', initial)
    assert traj.frames.astype(float).var() == pytest.approx(kT/k, rel=0.03)


@pytest.mark.slow
@pytest.mark.parametrize('integrator,dt', [('langevin', 0.05),
                                           ('brownian', 0.01)])
def test_ou_stationary_variance(integrator, dt):
    k, kT = 1.0, 1.0
    cfg = config(kT=kT, friction=1.0, dt=dt, n_steps=200000, save_every=10,
                 n_replicas=50, save_initial=False)
    traj = simulate(harmonic(k), cfg, integrator, zeros((1, 1, 1)))
    assert traj.frames.astype(float).var() == pytest.approx(kT/k, rel=0.03)


@pytest.mark.slow
def test_diffuse_denoise_matches_brownian():
    # Exact score of unit Gaussian data at every level
    schedule = make_linear_schedule(1000, 0.01, 0.02)

    def noise(x, levels):
        return sqrt(1 - schedule.alpha_bar(levels)).reshape(-1, 1, 1)*x

    oracle = AnalyticNoiseModel(schedule, 1, 1, noise_func=noise)
    common = dict(n_steps=100000, save_every=10, n_replicas=50,
                  save_initial=False)
    dd = simulate(oracle, config(**common), 'diffuse-denoise',
                  zeros((1, 1, 1)))
    dt = implicit_timestep(schedule, 1, 1, 1)
    bd = simulate(harmonic(), config(dt=dt, **common), 'brownian',
                  zeros((1, 1, 1)))
    assert dd.frames.astype(float).var() == pytest.approx(
        bd.frames.astype(float).var(), rel=0.05)
