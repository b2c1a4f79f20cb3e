"""
DFF Core: ablation study job plugin

Desk-scale versions of the design studies behind the Denoising Force Field:
conservative vs. direct noise heads, the noise level at which the force field
is extracted, rotation augmentation, and network width.
"""

from typing import Dict as TDict, List as TList, Optional

from marshmallow.fields import Dict, Integer, List, Nested, String
from numpy import asarray, nan, ndarray
from numpy.random import default_rng

from ... import logger
from ...analysis import histogram_js, report_name, write_csv
from ...dynamics import simulate
from ...errors import DFFError, ValidationError
from ...errors.dynamics import AllReplicasDivergedError
from ...models import Job, JobResult, LangevinConfig, ModelConfig, TrainConfig
from ...sampler import ancestral_sample, diffused_reference
from ...schemas import Float
from ...scorenet import ScoreModel, equivariance_error, random_rotation
from ...toyworlds import boltzmann_sample, get_system
from ...trainer import train


__all__ = ['AblateJob', 'ABLATION_MODES']


ABLATION_MODES = ('conservative', 'noise-level', 'equivariance', 'features')


def ensemble_js(ref: ndarray, other: ndarray, bins: Optional[int] = None) \
        -> float:
    """
    JS divergence between two ensembles of configurations: joint histogram
    for up to two coordinates, mean per-coordinate divergence otherwise

    :param ref: reference configurations (n, n_beads, dim)
    :param other: compared configurations of the same shape
    :param bins: number of bins per axis

    :return: divergence in nats; NaN if `other` is empty
    """
    a = asarray(ref).reshape(len(ref), -1)
    b = asarray(other).reshape(len(other), -1)
    if not len(b):
        return nan
    if a.shape[1] <= 2:
        return histogram_js(a if a.shape[1] == 2 else a[:, 0],
                            b if b.shape[1] == 2 else b[:, 0], bins)
    return sum(histogram_js(a[:, k], b[:, k], bins)
               for k in range(a.shape[1]))/a.shape[1]


class AblateJobResult(JobResult):
    table: TList[TDict[str, float]] = List(
        Dict(keys=String(), values=Float(allow_nan=True)), dump_default=list)


class AblateJob(Job):
    """
    Run an ablation sweep on a toy system and write a comparison table
    """
    type = 'ablate'
    description = 'Ablation Study'

    result: AblateJobResult = Nested(AblateJobResult, dump_default={})
    mode: str = String(dump_default='conservative')
    system: str = String(dump_default=None)
    n_train: int = Integer(dump_default=20000)
    n_ref: int = Integer(dump_default=20000)
    iterations: int = Integer(dump_default=2000)
    seeds: int = Integer(dump_default=3)
    seed: int = Integer(dump_default=0)
    noise_level: int = Integer(dump_default=1)
    levels: TList[int] = List(
        Integer(), dump_default=lambda: [1, 2, 5, 10, 20, 50, 100])
    features: TList[int] = List(
        Integer(), dump_default=lambda: [16, 32, 64, 128])
    n_steps: int = Integer(dump_default=20000)
    save_every: int = Integer(dump_default=10)
    replicas: int = Integer(dump_default=10)
    dt: float = Float(dump_default=0.01)
    bins: int = Integer(dump_default=None)

    def run(self) -> None:
        if self.mode not in ABLATION_MODES:
            raise ValidationError(
                'mode', 'Unknown ablation mode "{}"; expected one of {}'
                .format(self.mode, ', '.join(ABLATION_MODES)))
        getattr(self, 'ablate_' + self.mode.replace('-', '_'))()
        if self.result.table:
            header = list(self.result.table[0])
            self.create_job_file(
                report_name('ablate', self.mode, 'csv'),
                writer=lambda path: write_csv(
                    path, header,
                    [[row[k] for k in header] for row in self.result.table]))

    def _system(self, default: str, **params):
        return get_system(self.system or default, **params)

    def _train(self, system, data: ndarray, seed: int,
               **overrides) -> ScoreModel:
        model_fields = dict(system.model_defaults(), seed=seed)
        model_fields.update({k: v for k, v in overrides.items()
                             if k in ModelConfig._declared_fields})
        train_fields = dict(
            system.train_defaults(), iterations=self.iterations, seed=seed,
            validation_interval=max(self.iterations, 1))
        train_fields.update({k: v for k, v in overrides.items()
                             if k in TrainConfig._declared_fields})
        model_cfg = ModelConfig(_set_defaults=True, **model_fields)
        trainer = train(
            ScoreModel(model_cfg), data,
            TrainConfig(_set_defaults=True, **train_fields))
        return trainer.ema

    def _simulate_js(self, system, model: ScoreModel, ref: ndarray,
                     level: int, seed: int) -> float:
        cfg = LangevinConfig(
            _set_defaults=True, kT=system.kT, dt=self.dt, n_steps=self.n_steps,
            save_every=self.save_every, n_replicas=self.replicas,
            noise_level=level, seed=seed, save_initial=False)
        try:
            traj = simulate(model, cfg, 'langevin', ref[:self.replicas])
        except AllReplicasDivergedError as e:
            self.add_warning('Level {}, seed {}: {}'.format(level, seed, e))
            return nan
        return ensemble_js(ref, traj.frames, self.bins)

    def _add_row(self, **row) -> None:
        logger.info(
            'Ablation "%s": %s', self.mode,
            ', '.join('{}={:.4g}'.format(k, v) for k, v in row.items()))
        self.result.table.append({k: float(v) for k, v in row.items()})

    def ablate_conservative(self) -> None:
        system = self._system('double_well')
        for n in range(self.seeds):
            seed = self.seed + n
            rng = default_rng([seed, 0])
            data = boltzmann_sample(system, self.n_train, rng)
            ref = boltzmann_sample(system, self.n_ref, rng)
            js = {}
            for conservative in (True, False):
                try:
                    model = self._train(
                        system, data, seed, conservative=conservative)
                    js[conservative] = self._simulate_js(
                        system, model, ref, self.noise_level, seed)
                except DFFError as e:
                    self.add_warning('Seed {}: {}'.format(seed, e))
                    js[conservative] = nan
            self._add_row(seed=seed, conservative_js=js[True],
                          direct_js=js[False])
            self.update_progress((n + 1)/self.seeds*100)

    def ablate_noise_level(self) -> None:
        system = self._system('double_well')
        rng = default_rng([self.seed, 0])
        data = boltzmann_sample(system, self.n_train, rng)
        ref = boltzmann_sample(system, self.n_ref, rng)
        model = self._train(system, data, self.seed)
        for n, level in enumerate(self.levels):
            noised = diffused_reference(model.schedule, ref, level, rng)
            self._add_row(
                level=level,
                simulation_js=self._simulate_js(
                    system, model, ref, level, self.seed),
                diffused_reference_js=ensemble_js(ref, noised, self.bins))
            self.update_progress((n + 1)/len(self.levels)*100)

    def ablate_equivariance(self) -> None:
        system = self._system('gaussian_well', dim=2)
        rng = default_rng([self.seed, 0])
        data = boltzmann_sample(system, self.n_train, rng)
        held_out = boltzmann_sample(system, 1000, rng)
        for n, augment in enumerate((True, False)):
            model = self._train(
                system, data, self.seed, augment_rotations=augment)
            err = equivariance_error(
                model, held_out, self.noise_level,
                random_rotation(system.dim, rng))
            self._add_row(augment_rotations=augment,
                          equivariance_error=float(err.mean()))
            self.update_progress((n + 1)/2*100)

    def ablate_features(self) -> None:
        system = self._system('double_well')
        rng = default_rng([self.seed, 0])
        data = boltzmann_sample(system, self.n_train, rng)
        ref = boltzmann_sample(system, self.n_ref, rng)
        for n, width in enumerate(self.features):
            model = self._train(system, data, self.seed, n_features=width)
            samples = ancestral_sample(model, self.n_ref, rng)
            self._add_row(
                n_features=width, n_parameters=model.count_parameters(),
                iid_js=ensemble_js(ref, samples, self.bins),
                simulation_js=self._simulate_js(
                    system, model, ref, self.noise_level, self.seed))
            self.update_progress((n + 1)/len(self.features)*100)
