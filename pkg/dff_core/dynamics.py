"""
DFF Core: coarse-grained dynamics with analytic or learned force fields

Integrators:
    langevin: underdamped Langevin dynamics, BAOAB splitting
    brownian: overdamped Langevin dynamics, Euler-Maruyama
    diffuse-denoise: one forward diffusion step to level 1 followed by one
        sampled reverse step; approximates Brownian dynamics with the implicit
        step size M*gamma*beta_1/kT
"""

import sys
from typing import Callable, List as TList, Optional, Union

from numpy import (
    abs as np_abs, asarray, exp, float64, isfinite, ndarray, sqrt, stack,
    where, zeros)
from numpy.random import Generator, Philox, SeedSequence
from tqdm import tqdm

from . import config as dff_config, logger
from .errors import ValidationError
from .errors.dynamics import AllReplicasDivergedError, SimulationDivergedError
from .models import LangevinConfig, ToySystem, Trajectory
from .schedule import NoiseSchedule
from .scorenet import NoiseModel, dff_force


__all__ = [
    'AnalyticForce', 'DFFForce', 'ForceProvider', 'FunctionForce',
    'INTEGRATORS', 'LangevinState', 'Simulation', 'ZeroForce',
    'brownian_step', 'diffuse_denoise_step', 'implicit_timestep',
    'langevin_step', 'replica_generators', 'simulate',
]


INTEGRATORS = ('langevin', 'brownian', 'diffuse-denoise')


class ForceProvider(object):
    """
    Base class of force evaluators x -> F(x)

    Forces are evaluated for batches of configurations of shape
    (n, n_beads, dim); the output has the same shape.
    """
    def __call__(self, x: ndarray) -> ndarray:
        return self.forces(asarray(x, float64))

    def forces(self, x: ndarray) -> ndarray:
        raise NotImplementedError()


class ZeroForce(ForceProvider):
    def forces(self, x: ndarray) -> ndarray:
        return zeros(x.shape)


class FunctionForce(ForceProvider):
    """
    Force given by an arbitrary function of the configuration batch
    """
    def __init__(self, func: Callable[[ndarray], ndarray]):
        self.func = func

    def forces(self, x: ndarray) -> ndarray:
        return asarray(self.func(x), float64)


class AnalyticForce(ForceProvider):
    """
    Exact force -grad U of a toy system
    """
    def __init__(self, system: ToySystem):
        self.system = system

    def forces(self, x: ndarray) -> ndarray:
        return asarray(self.system.force(x), float64)


class DFFForce(ForceProvider):
    """
    Denoising Force Field of a trained model at a fixed noise level
    """
    def __init__(self, model: NoiseModel, noise_level: int, kT: float):
        """
        :param model: trained noise model
        :param noise_level: level i at which the force is evaluated
        :param kT: thermal energy of the training data
        """
        model.schedule.check_level(noise_level)
        if not kT > 0:
            raise ValidationError('kT', 'kT must be positive')
        self.model = model
        self.noise_level = noise_level
        self.kT = kT

    def forces(self, x: ndarray) -> ndarray:
        if not len(x):
            return zeros(x.shape)
        return dff_force(self.model, x, self.noise_level, self.kT)


class LangevinState(object):
    """
    Positions, velocities, and the forces at the current positions
    """
    def __init__(self, x: ndarray, v: Optional[ndarray] = None,
                 forces: Optional[ndarray] = None):
        self.x = asarray(x, float64)
        self.v = zeros(self.x.shape) if v is None else asarray(v, float64)
        self.forces = forces

    def copy(self) -> 'LangevinState':
        return LangevinState(
            self.x.copy(), self.v.copy(),
            None if self.forces is None else self.forces.copy())


def _diverged(x: ndarray) -> ndarray:
    """Per-configuration divergence flags of a batch (n, n_beads, dim)"""
    threshold = dff_config['DIVERGENCE_THRESHOLD']
    finite = isfinite(x)
    return ~finite.all((1, 2)) | \
        (np_abs(where(finite, x, 0)) > threshold).any((1, 2))


def _batch(x: ndarray) -> ndarray:
    x = asarray(x, float64)
    return x if x.ndim == 3 else x[None]


def _noise(rng: Union[Generator, TList[Generator]], shape: tuple) -> ndarray:
    """Standard normal noise; one generator per configuration if a list"""
    if isinstance(rng, Generator):
        return rng.standard_normal(shape)
    return stack([r.standard_normal(shape[1:]) for r in rng])


def _baoab(x: ndarray, v: ndarray, f: ndarray, force_provider: ForceProvider,
           config: LangevinConfig, rng: Union[Generator, TList[Generator]]):
    m, dt = config.mass, config.dt
    c1 = exp(-config.friction*dt)
    c2 = sqrt((1 - c1**2)*config.kT/m)
    v = v + 0.5*dt*f/m
    x = x + 0.5*dt*v
    v = c1*v + c2*_noise(rng, x.shape)
    x = x + 0.5*dt*v
    bad = _diverged(x)
    f = zeros(x.shape)
    if (~bad).any():
        f[~bad] = force_provider(x[~bad])
    v = v + 0.5*dt*f/m
    return x, v, f, bad | _diverged(v)


def langevin_step(state: LangevinState, force_provider: ForceProvider,
                  config: LangevinConfig,
                  rng: Union[Generator, TList[Generator]], step: int = 0) \
        -> LangevinState:
    """
    One BAOAB step of underdamped Langevin dynamics
    M dv = F dt - gamma M v dt + sqrt(2 gamma M kT) dW

    With zero friction or kT = 0 the step is velocity Verlet.

    :param state: current state; a single configuration or a batch
    :param force_provider: force evaluator
    :param config: mass, friction, kT, and dt
    :param rng: random generator, or one generator per configuration
    :param step: step index reported on divergence

    :return: new state
    """
    single = asarray(state.x).ndim == 2
    x, v = _batch(state.x), _batch(state.v)
    f = force_provider(x) if state.forces is None else _batch(state.forces)
    x, v, f, bad = _baoab(x, v, f, force_provider, config, rng)
    if bad.any():
        raise SimulationDivergedError(step=step)
    if single:
        return LangevinState(x[0], v[0], f[0])
    return LangevinState(x, v, f)


def _euler(x: ndarray, force_provider: ForceProvider, config: LangevinConfig,
           rng: Union[Generator, TList[Generator]]):
    eta = config.friction*config.mass
    x = x + config.dt/eta*force_provider(x) + \
        sqrt(2*config.dt*config.kT/eta)*_noise(rng, x.shape)
    return x, _diverged(x)


def brownian_step(x: ndarray, force_provider: ForceProvider,
                  config: LangevinConfig,
                  rng: Union[Generator, TList[Generator]],
                  step: int = 0) -> ndarray:
    """
    One Euler-Maruyama step of overdamped Langevin dynamics
    x' = x + dt F/(gamma M) + sqrt(2 dt kT/(gamma M)) w

    :param x: configuration or batch of configurations
    :param force_provider: force evaluator
    :param config: mass, friction, kT, and dt
    :param rng: random generator, or one generator per configuration
    :param step: step index reported on divergence

    :return: new configuration(s)
    """
    single = asarray(x).ndim == 2
    res, bad = _euler(_batch(x), force_provider, config, rng)
    if bad.any():
        raise SimulationDivergedError(step=step)
    return res[0] if single else res


def _diffuse_denoise(model: NoiseModel, x: ndarray,
                     rng: Union[Generator, TList[Generator]]):
    s = model.schedule
    ab, alpha, beta, sigma = s.alpha_bar(1), s.alpha(1), s.beta(1), s.sigma(1)
    x1 = sqrt(ab)*x + sqrt(1 - ab)*_noise(rng, x.shape)
    eps = model.noise_array(x1, zeros(len(x1), int) + 1) if len(x1) else x1
    x = (x1 - beta/sqrt(1 - ab)*eps)/sqrt(alpha) + sigma*_noise(rng, x.shape)
    return x, _diverged(x)


def diffuse_denoise_step(model: NoiseModel, x: ndarray,
                         rng: Union[Generator, TList[Generator]],
                         step: int = 0) -> ndarray:
    """
    Diffuse to level 1 with q(x_1 | x_0), then sample p_theta(x_0 | x_1)
    including its noise term of standard deviation sigma_1

    :param model: trained noise model
    :param x: configuration or batch of configurations
    :param rng: random generator, or one generator per configuration; two
        standard normal arrays are drawn per step
    :param step: step index reported on divergence

    :return: new configuration(s)
    """
    single = asarray(x).ndim == 2
    res, bad = _diffuse_denoise(model, _batch(x), rng)
    if bad.any():
        raise SimulationDivergedError(step=step)
    return res[0] if single else res


def implicit_timestep(schedule: NoiseSchedule, mass: float, friction: float,
                      kT: float) -> float:
    """
    Brownian time step approximated by one diffuse-denoise step:
    M*gamma*beta_1/kT

    :param schedule: noise schedule
    :param mass: bead mass M
    :param friction: friction gamma
    :param kT: thermal energy

    :return: implied time step
    """
    if not kT > 0:
        raise ValidationError('kT', 'kT must be positive')
    return mass*friction*schedule.beta(1)/kT


def replica_generators(seed: int, n: int) -> TList[Generator]:
    """
    Independent counter-based random streams, one per replica

    :param seed: root seed
    :param n: number of streams

    :return: list of generators
    """
    return [Generator(Philox(ss)) for ss in SeedSequence(seed).spawn(n)]


class Simulation(object):
    """
    Run independent replicas of a CG simulation

    Replicas start from configurations drawn uniformly from `initial` and, for
    Langevin dynamics, Maxwell-Boltzmann velocities; each replica uses its own
    random stream. A diverged replica is stopped and its frames saved so far
    are kept; the run fails only if every replica diverges.

    Attributes::
        diverged: {replica index: step of divergence}
    """
    def __init__(self, forces: Union[ForceProvider, NoiseModel],
                 config: LangevinConfig, integrator: str = 'langevin',
                 initial: Optional[ndarray] = None,
                 force_kT: Optional[float] = None):
        """
        :param forces: force provider, or a trained model whose DFF at
            `config.noise_level` drives the dynamics; the diffuse-denoise
            integrator needs a model
        :param config: simulation settings
        :param integrator: "langevin", "brownian", or "diffuse-denoise"
        :param initial: set of initial configurations (n, n_beads, dim)
        :param force_kT: energy scale of the DFF; defaults to `config.kT`
        """
        if integrator not in INTEGRATORS:
            raise ValidationError(
                'integrator', 'Unknown integrator "{}"; expected one of {}'
                .format(integrator, ', '.join(INTEGRATORS)))
        if not isinstance(config, LangevinConfig):
            config = LangevinConfig(config, _set_defaults=True)
        self.model = None
        if isinstance(forces, NoiseModel):
            self.model = forces
            if integrator != 'diffuse-denoise':
                forces = DFFForce(
                    forces, config.noise_level,
                    force_kT if force_kT is not None else config.kT)
        elif integrator == 'diffuse-denoise':
            raise ValidationError(
                'integrator', 'Diffuse-denoise dynamics needs a trained model')
        if initial is None:
            raise ValidationError('initial', 'Initial configurations required')
        initial = asarray(initial, float64)
        if initial.ndim == 2:
            initial = initial[None]
        if not len(initial) or not isfinite(initial).all():
            raise ValidationError(
                'initial', 'Need a non-empty set of finite initial '
                'configurations')
        self.forces = forces
        self.config = config
        self.integrator = integrator
        self.initial = initial
        self.diverged = {}

    def _step(self, x: ndarray, v: ndarray, f: Optional[ndarray],
              rngs: TList[Generator]):
        if self.integrator == 'langevin':
            return _baoab(x, v, f, self.forces, self.config, rngs)
        if self.integrator == 'brownian':
            x, bad = _euler(x, self.forces, self.config, rngs)
        else:
            x, bad = _diffuse_denoise(self.model, x, rngs)
        return x, v, None, bad

    def run(self) -> Trajectory:
        """
        Integrate all replicas

        :return: saved frames of all replicas as separate trajectory segments
        """
        cfg = self.config
        n = cfg.n_replicas
        rngs = replica_generators(cfg.seed, n)
        x = stack([
            self.initial[r.integers(len(self.initial))] for r in rngs])
        v = stack([
            sqrt(cfg.kT/cfg.mass)*r.standard_normal(x.shape[1:])
            for r in rngs]) if self.integrator == 'langevin' \
            else zeros(x.shape)
        alive = ~_diverged(x)
        for r in (~alive).nonzero()[0]:
            self.diverged[int(r)] = 0
            logger.warning('Replica %d starts outside the allowed range', r)
        f = None
        if self.integrator == 'langevin':
            f = zeros(x.shape)
            if alive.any():
                f[alive] = self.forces(x[alive])
        frames = [[x[r].copy()] if cfg.save_initial and alive[r] else []
                  for r in range(n)]

        logger.info(
            'Simulating %d replica(s) for %d steps with %s dynamics', n,
            cfg.n_steps, self.integrator)
        with tqdm(total=cfg.n_steps, disable=not dff_config['PROGRESS'],
                  file=sys.stderr, desc='simulate') as pbar:
            for step in range(1, cfg.n_steps + 1):
                if not alive.any():
                    break
                idx = alive.nonzero()[0]
                xa, va, fa, bad = self._step(
                    x[idx], v[idx], None if f is None else f[idx],
                    [rngs[r] for r in idx])
                x[idx], v[idx] = xa, va
                if f is not None:
                    f[idx] = fa
                for r in idx[bad]:
                    alive[r] = False
                    self.diverged[int(r)] = step
                    logger.warning('Replica %d diverged at step %d', r, step)
                if step % cfg.save_every == 0:
                    for r in alive.nonzero()[0]:
                        frames[r].append(x[r].copy())
                pbar.update(1)

        if not alive.any() and n:
            raise AllReplicasDivergedError(
                replicas=n, steps=[self.diverged.get(r) for r in range(n)])
        if self.diverged:
            logger.warning(
                '%d of %d replicas diverged', len(self.diverged), n)
        logger.info('Simulation finished')

        shape = x.shape[1:]
        trajs = [Trajectory(
            stack(fr) if fr else zeros((0,) + shape), kT=cfg.kT, dt=cfg.dt,
            save_every=cfg.save_every, provenance='simulation')
            for fr in frames]
        return Trajectory.concatenate(trajs)


def simulate(forces: Union[ForceProvider, NoiseModel],
             config: LangevinConfig, integrator: str = 'langevin',
             initial: Optional[ndarray] = None,
             force_kT: Optional[float] = None) -> Trajectory:
    """
    Run a CG simulation; see :class:`Simulation`

    :param forces: force provider or trained model
    :param config: simulation settings
    :param integrator: "langevin", "brownian", or "diffuse-denoise"
    :param initial: set of initial configurations
    :param force_kT: energy scale of the DFF; defaults to `config.kT`

    :return: trajectory with one segment per replica
    """
    return Simulation(forces, config, integrator, initial, force_kT).run()
