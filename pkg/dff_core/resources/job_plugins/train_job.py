"""
DFF Core: score model training job plugin
"""

import json
import os
from typing import Any, Dict as TDict, Optional, Tuple

from marshmallow.fields import Integer, Nested, String

from ... import logger
from ...dataio import (
    read_csv_trajectory, read_trajectory, resume_trainer, split_dataset,
    write_checkpoint)
from ...errors import ValidationError
from ...errors.trainer import TrainingDivergedError
from ...models import Job, JobResult, ModelConfig, TrainConfig, Trajectory
from ...schemas import Boolean, Float
from ...scorenet import ScoreModel
from ...toyworlds import get_system
from ...trainer import Trainer, write_loss_history


__all__ = ['TrainJob', 'load_train_config']


def load_train_config(path: Optional[str]) -> Tuple[TDict[str, Any],
                                                    TDict[str, Any]]:
    """
    Read the training config document {"model": {...}, "train": {...}}

    Field names mirror :class:`ModelConfig` and :class:`TrainConfig`; any
    other key is rejected.

    :param path: JSON file path; None means no overrides

    :return: model and train field dictionaries
    """
    if not path:
        return {}, {}
    try:
        with open(path) as f:
            doc = json.load(f)
    except ValueError as e:
        raise ValidationError('config', 'Invalid JSON in {}: {}'.format(
            path, e))
    if not isinstance(doc, dict):
        raise ValidationError('config', 'Config must be a JSON object')
    unknown = set(doc) - {'model', 'train'}
    if unknown:
        raise ValidationError('config', 'Unknown config section(s): {}'.format(
            ', '.join(sorted(unknown))))
    model, train = dict(doc.get('model') or {}), dict(doc.get('train') or {})
    for section, fields, schema in (('model', model, ModelConfig),
                                    ('train', train, TrainConfig)):
        unknown = set(fields) - set(schema._declared_fields)
        if unknown:
            raise ValidationError(
                section, 'Unknown {} option(s): {}'.format(
                    section, ', '.join(sorted(unknown))))
    return model, train


class TrainJobResult(JobResult):
    iterations: int = Integer(dump_default=0)
    n_parameters: int = Integer()
    n_train: int = Integer()
    n_validation: int = Integer()
    train_loss: float = Float()
    val_loss: float = Float()
    stopped_early: bool = Boolean(dump_default=False)


class TrainJob(Job):
    """
    Train a score model on a trajectory with the denoising loss, or the
    force-matching baseline if projected forces are given
    """
    type = 'train'
    description = 'Train Score Model'

    result: TrainJobResult = Nested(TrainJobResult, dump_default={})
    data: str = String(dump_default=None)
    config: str = String(dump_default=None)
    out_checkpoint: str = String(dump_default='model.ckpt')
    force_matching: str = String(dump_default=None)
    validation: str = String(dump_default=None)
    system: str = String(dump_default=None)
    resume: str = String(dump_default=None)
    loss_csv: str = String(dump_default=None)
    split: bool = Boolean(dump_default=True)
    split_seed: int = Integer(dump_default=0)

    def _read(self, path: str, model_fields: TDict[str, Any]) -> Trajectory:
        if path.lower().endswith('.csv'):
            if 'n_beads' not in model_fields or 'dim' not in model_fields:
                raise ValidationError(
                    'data', 'CSV input needs n_beads and dim in the model '
                    'config')
            return read_csv_trajectory(
                path, model_fields['n_beads'], model_fields['dim'])
        return read_trajectory(path)

    def _single_particle_defaults(self, model_fields: TDict[str, Any],
                                  train_fields: TDict[str, Any]) -> None:
        # Pairwise inputs make the energy of a lone bead constant
        if model_fields.get('anchored') is False:
            raise ValidationError(
                'config', 'A single-bead model must be anchored; otherwise '
                'its force is identically zero')
        model_fields.setdefault('anchored', True)
        train_fields.setdefault('augment_rotations', False)
        self.add_warning(
            'No system given; training an anchored model without rotation '
            'augmentation on single-bead data')

    def run(self) -> None:
        if not self.data:
            raise ValidationError('data', 'Training data file required')
        model_fields, train_fields = load_train_config(self.config)
        if self.system:
            system = get_system(self.system)
            model_fields = dict(system.model_defaults(), **model_fields)
            train_fields = dict(system.train_defaults(), **train_fields)

        data = self._read(self.data, model_fields)
        model_fields.setdefault('n_beads', data.n_beads)
        model_fields.setdefault('dim', data.dim)
        if not self.system and not self.resume:
            train_fields.setdefault('kT', data.kT)
            if model_fields['n_beads'] == 1:
                self._single_particle_defaults(model_fields, train_fields)
        forces = read_trajectory(self.force_matching) \
            if self.force_matching else None
        if forces is not None and forces.frames.shape != data.frames.shape:
            raise ValidationError(
                'force_matching', 'Force shape {} does not match data shape {}'
                .format(forces.frames.shape, data.frames.shape))

        if self.validation:
            train_data, val_data = data, self._read(
                self.validation, model_fields)
        elif self.split:
            split = split_dataset(data, seed=self.split_seed)
            train_data = data.subset(split.train)
            val_data = data.subset(split.validation) \
                if len(split.validation) else None
            if forces is not None:
                forces = forces.subset(split.train)
        else:
            train_data, val_data = data, None
        self.result.n_train = len(train_data)
        self.result.n_validation = 0 if val_data is None else len(val_data)

        if self.resume:
            trainer = resume_trainer(
                self.resume, train_data, val_data, forces, **train_fields)
        else:
            model = ScoreModel(ModelConfig(_set_defaults=True, **model_fields))
            trainer = Trainer(
                model, train_data, TrainConfig(_set_defaults=True,
                                               **train_fields),
                val_data, forces)
        self.result.n_parameters = trainer.model.count_parameters()
        logger.info(
            'Training %d-parameter model on %d frames for %d iterations',
            self.result.n_parameters, len(train_data),
            trainer.config.iterations)

        last_ckpt = [trainer.iteration]
        total = max(trainer.config.iterations, 1)

        def callback(t: Trainer) -> None:
            interval = t.config.checkpoint_interval
            if interval and t.iteration - last_ckpt[0] >= interval:
                write_checkpoint(
                    self.job_file_path(self.out_checkpoint), t.model, t)
                last_ckpt[0] = t.iteration
            self.update_progress(min(t.iteration/total, 1)*100)

        try:
            trainer.run(callback)
        except TrainingDivergedError:
            write_checkpoint(
                self.job_file_path(self.out_checkpoint), trainer.model,
                trainer)
            raise

        self.create_job_file(
            self.out_checkpoint,
            writer=lambda path: write_checkpoint(path, trainer.model, trainer))
        loss_csv = self.loss_csv or \
            os.path.splitext(self.out_checkpoint)[0] + '_loss.csv'
        self.create_job_file(
            loss_csv,
            writer=lambda path: write_loss_history(path, trainer.history))

        self.result.iterations = trainer.iteration
        self.result.stopped_early = trainer.stopped_early
        if trainer.history:
            _, tr, val = trainer.history[-1]
            self.result.train_loss = float(tr)
            vals = [v for _, _, v in trainer.history if v == v]
            if vals:
                self.result.val_loss = float(vals[-1])
