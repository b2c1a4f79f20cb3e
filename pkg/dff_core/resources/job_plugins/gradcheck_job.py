"""
DFF Core: model verification job plugin
"""

from typing import List as TList

from marshmallow.fields import Integer, List, Nested, String
from numpy import abs as np_abs, full
from numpy.random import default_rng

from ...dataio import read_checkpoint
from ...models import Job, JobResult, ModelConfig
from ...schemas import Boolean, DFFSchema, Float
from ...scorenet import (
    ScoreModel, energy_gradient_error, equivariance_error, jacobian_asymmetry,
    predict_noise, random_rotation)
from ...trainer import denoising_loss, loss_gradient_error, score_matching_loss


__all__ = ['GradcheckJob']


class CheckResult(DFFSchema):
    name: str = String()
    value: float = Float(allow_nan=True)
    tolerance: float = Float()
    passed: bool = Boolean()


class GradcheckJobResult(JobResult):
    n_parameters: int = Integer()
    checks: TList[CheckResult] = List(Nested(CheckResult), dump_default=list)


class GradcheckJob(Job):
    """
    Verify a model numerically: input gradients and Jacobian symmetry of a
    conservative model, the autograd parameter gradient of the training loss,
    the equality of the denoising and score-matching objectives, and
    translation invariance of unanchored models; the rotation equivariance
    error is reported as a warning
    """
    type = 'gradcheck'
    description = 'Verify Model Gradients'

    result: GradcheckJobResult = Nested(GradcheckJobResult, dump_default={})
    checkpoint: str = String(dump_default=None)
    fresh: bool = Boolean(dump_default=False)
    tolerance: float = Float(dump_default=1e-4)
    seed: int = Integer(dump_default=0)
    n_beads: int = Integer(dump_default=5)
    dim: int = Integer(dump_default=3)
    n_configs: int = Integer(dump_default=3)
    max_parameters: int = Integer(dump_default=5000)

    def _check(self, name: str, value: float, tolerance: float,
               required: bool = True) -> None:
        passed = bool(value < tolerance)
        self.result.checks.append(CheckResult(
            name=name, value=float(value), tolerance=tolerance,
            passed=passed))
        if not passed:
            report = self.add_error if required else self.add_warning
            report('Check "{}" failed: {:.3g} >= {:.3g}'.format(
                name, value, tolerance))

    def run(self) -> None:
        if self.checkpoint and not self.fresh:
            model = read_checkpoint(self.checkpoint)
        else:
            model = ScoreModel(ModelConfig(
                _set_defaults=True, n_beads=self.n_beads, dim=self.dim,
                n_layers=1, n_features=8, embed_dim=4, seed=self.seed))
        cfg = model.config
        self.result.n_parameters = model.count_parameters()
        rng = default_rng(self.seed)
        x = rng.standard_normal((self.n_configs, cfg.n_beads, cfg.dim))
        levels = [1, max(cfg.L//2, 1), cfg.L]

        if cfg.conservative:
            self._check('energy_gradient', max(
                energy_gradient_error(model, xk, i)
                for xk in x for i in levels), self.tolerance)
            self._check('jacobian_asymmetry', max(
                jacobian_asymmetry(model, xk, i)
                for xk in x for i in levels), self.tolerance/10)
        self.update_progress(25)

        diff = max(
            abs(float(denoising_loss(
                model, x, default_rng([self.seed, i]), levels=i,
                create_graph=False)) -
                score_matching_loss(model, x, i, default_rng([self.seed, i])))
            for i in levels)
        self._check('loss_equivalence', diff, 1e-10)
        self.update_progress(50)

        if self.result.n_parameters <= self.max_parameters:
            self._check('loss_gradient', loss_gradient_error(
                model, x, self.seed), self.tolerance)
        else:
            self.add_warning(
                'Parameter gradient check skipped for a {}-parameter model'
                .format(self.result.n_parameters))
        self.update_progress(75)

        # Only learned through augmentation; reported but never fatal
        R = random_rotation(cfg.dim, rng)
        self._check('equivariance', max(
            float(equivariance_error(model, x, i, R).max()) for i in levels),
            self.tolerance, required=False)
        if not cfg.anchored:
            shift = rng.standard_normal(cfg.dim)
            self._check('translation_invariance', max(
                float(np_abs(predict_noise(model, x + shift, full(len(x), i)) -
                             predict_noise(model, x, full(len(x), i))).max())
                for i in levels), self.tolerance)
