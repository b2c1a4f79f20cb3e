"""
DFF Core: CG simulation job plugin
"""

from typing import List as TList

from marshmallow.fields import Integer, List, Nested, String
from numpy.random import default_rng

from ...dataio import (
    read_checkpoint, read_checkpoint_kt, read_trajectory, write_trajectory)
from ...dynamics import AnalyticForce, Simulation, implicit_timestep
from ...errors import MissingFieldError, ValidationError
from ...models import Job, JobResult, LangevinConfig
from ...sampler import ancestral_sample
from ...schemas import Float
from ...toyworlds import boltzmann_sample, get_system
from ...units import preset_config


__all__ = ['SimulateJob']


class SimulateJobResult(JobResult):
    n_frames: int = Integer(dump_default=0)
    noise_level: int = Integer()
    dt: float = Float()
    implicit_dt: float = Float()
    diverged: TList[int] = List(Integer(), dump_default=list)


class SimulateJob(Job):
    """
    Simulate replicas driven by the Denoising Force Field of a trained model,
    by diffuse-denoise dynamics, or by the exact force of a toy system

    Options left unset take the values of the named preset, if any, and
    otherwise the :class:`LangevinConfig` defaults; kT defaults to the
    training temperature stored in the checkpoint or to the toy system's kT.
    """
    type = 'simulate'
    description = 'Simulate CG Dynamics'

    result: SimulateJobResult = Nested(SimulateJobResult, dump_default={})
    checkpoint: str = String(dump_default=None)
    system: str = String(dump_default=None)
    integrator: str = String(dump_default='langevin')
    noise_level: int = Integer(dump_default=None)
    dt: float = Float(dump_default=None)
    steps: int = Integer(dump_default=None)
    save_every: int = Integer(dump_default=None)
    replicas: int = Integer(dump_default=None)
    seed: int = Integer(dump_default=0)
    kT: float = Float(dump_default=None)
    mass: float = Float(dump_default=None)
    friction: float = Float(dump_default=None)
    preset: str = String(dump_default=None)
    protein: str = String(dump_default=None)
    training_size: int = Integer(dump_default=100000)
    initial: str = String(dump_default=None)
    out: str = String(dump_default='simulation.traj')

    def settings(self, default_kT: float) -> LangevinConfig:
        """
        Assemble the simulation config from the preset and explicit options

        :param default_kT: kT used when neither the option nor the preset
            defines it

        :return: simulation config
        """
        overrides = {
            name: getattr(self, attr)
            for name, attr in (
                ('noise_level', 'noise_level'), ('dt', 'dt'),
                ('n_steps', 'steps'), ('save_every', 'save_every'),
                ('n_replicas', 'replicas'), ('kT', 'kT'), ('mass', 'mass'),
                ('friction', 'friction'))
            if getattr(self, attr, None) is not None}
        overrides['seed'] = self.seed
        if self.preset:
            return preset_config(
                self.preset, self.protein, self.training_size, **overrides)
        overrides.setdefault('kT', default_kT)
        return LangevinConfig(_set_defaults=True, **overrides)

    def run(self) -> None:
        if not self.checkpoint and not self.system:
            raise MissingFieldError(
                'checkpoint', 'Need a model checkpoint or a toy system')
        system = get_system(self.system) if self.system else None
        model = read_checkpoint(self.checkpoint) if self.checkpoint else None

        default_kT = system.kT if system is not None else 1.0
        train_kT = None
        if model is not None:
            train_kT = read_checkpoint_kt(self.checkpoint)
            default_kT = train_kT or default_kT
        cfg = self.settings(default_kT)
        init_rng = default_rng([cfg.seed, 2])

        if self.initial:
            initial = read_trajectory(self.initial).frames
        elif system is not None:
            initial = boltzmann_sample(system, cfg.n_replicas, init_rng)
            if model is not None and model.n_beads != system.n_beads:
                initial = system.cg_map().apply(initial)
        else:
            initial = ancestral_sample(model, cfg.n_replicas, init_rng)
            if not len(initial):
                raise ValidationError(
                    'initial', 'Could not draw initial configurations')

        if model is not None:
            sim = Simulation(
                model, cfg, self.integrator, initial, force_kT=train_kT)
            self.result.implicit_dt = implicit_timestep(
                model.schedule, cfg.mass, cfg.friction, cfg.kT) \
                if cfg.kT > 0 else None
        else:
            sim = Simulation(
                AnalyticForce(system), cfg, self.integrator, initial)
        traj = sim.run()
        self.create_job_file(
            self.out, writer=lambda path: write_trajectory(path, traj))

        self.result.n_frames = traj.n_frames
        self.result.noise_level = cfg.noise_level
        self.result.dt = cfg.dt
        self.result.diverged = sorted(sim.diverged)
        for r, step in sorted(sim.diverged.items()):
            self.add_warning('Replica {} diverged at step {}'.format(r, step))
