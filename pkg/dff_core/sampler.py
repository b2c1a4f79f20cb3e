"""
DFF Core: i.i.d. sample generation by ancestral sampling of the reverse
diffusion chain
"""

import sys
from typing import Tuple, Union

from numpy import (
    abs as np_abs, asarray, concatenate, float64, isfinite, ndarray, sqrt,
    where, zeros)
from numpy.random import Generator
from tqdm import tqdm

from . import config, logger
from .errors import ValidationError
from .errors.dynamics import SimulationDivergedError
from .models import Trajectory
from .schedule import Level, NoiseSchedule, diffuse
from .scorenet import NoiseModel, _as_batch


__all__ = [
    'ancestral_sample', 'denoise_step', 'diffused_reference', 'iid_trajectory',
]


def _denoise(model: NoiseModel, x: ndarray, levels: ndarray,
             w: ndarray) -> ndarray:
    s = model.schedule
    eps = model.noise_array(x, levels)
    shape = (-1,) + (1,)*(x.ndim - 1)
    alpha = asarray(s.alpha(levels)).reshape(shape)
    beta = asarray(s.beta(levels)).reshape(shape)
    ab = asarray(s.alpha_bar(levels)).reshape(shape)
    sigma = where(levels == 1, 0.0, s.sigma(levels)).reshape(shape)
    return (x - beta/sqrt(1 - ab)*eps)/sqrt(alpha) + sigma*w


def denoise_step(model: NoiseModel, x_i: ndarray, i: Level,
                 rng: Generator) -> ndarray:
    """
    One reverse step x_{i-1} = mu_theta(x_i, i) + sigma_i w with
    mu_theta = (x_i - beta_i/sqrt(1 - alpha_bar_i) eps_theta)/sqrt(alpha_i);
    the noise term is omitted at i = 1

    :param model: noise model
    :param x_i: configuration (n_beads, dim) or batch (n, n_beads, dim)
    :param i: noise level or per-sample levels
    :param rng: random generator; a standard normal array of the batch shape
        is always drawn

    :return: configuration(s) at level i - 1
    """
    if not isfinite(asarray(x_i, float64)).all():
        raise SimulationDivergedError(step=i)
    x, levels, single = _as_batch(model, x_i, i)
    res = _denoise(model, x, levels, rng.standard_normal(x.shape))
    if not isfinite(res).all():
        raise SimulationDivergedError(step=i)
    return res[0] if single else res


def ancestral_sample(model: NoiseModel, n_samples: int, rng: Generator,
                     batch_size: int = 4096, return_failed: bool = False) \
        -> Union[ndarray, Tuple[ndarray, int]]:
    """
    Draw i.i.d. samples: x_L ~ N(0, I) followed by :func:`denoise_step` for
    i = L..1

    A sample whose state becomes non-finite or leaves the divergence
    threshold is dropped and counted; the rest of the batch continues.

    :param model: trained noise model
    :param n_samples: number of samples
    :param rng: random generator
    :param batch_size: number of chains processed together; blocks are run
        sequentially from the same random stream
    :param return_failed: also return the number of dropped samples

    :return: array (n_ok, n_beads, dim) of the successful samples, or a pair
        (samples, n_failed) if `return_failed` is set
    """
    if n_samples < 0:
        raise ValidationError('n_samples', 'Sample count must be non-negative')
    shape = (model.n_beads, model.dim)
    threshold = config['DIVERGENCE_THRESHOLD']
    L = model.schedule.L
    blocks, failed = [], 0
    with tqdm(total=n_samples*L, disable=not config['PROGRESS'],
              file=sys.stderr, desc='sample') as pbar:
        for start in range(0, n_samples, batch_size):
            n = min(batch_size, n_samples - start)
            x = rng.standard_normal((n,) + shape)
            for i in range(L, 0, -1):
                w = rng.standard_normal(x.shape)
                levels = zeros(len(x), int) + i
                if len(x):
                    x = _denoise(model, x, levels, w)
                    ok = isfinite(x).all((1, 2)) & \
                        (np_abs(where(isfinite(x), x, 0)) <= threshold).all(
                            (1, 2))
                    if not ok.all():
                        failed += int((~ok).sum())
                        logger.debug(
                            'Dropped %d diverged samples at level %d',
                            int((~ok).sum()), i)
                        x = x[ok]
                pbar.update(n)
            blocks.append(x)
    if failed:
        logger.warning(
            '%d of %d samples diverged and were dropped', failed, n_samples)
    samples = concatenate(blocks) if blocks else zeros((0,) + shape)
    if return_failed:
        return samples, failed
    return samples


def iid_trajectory(samples: ndarray, kT: float) -> Trajectory:
    """
    Wrap i.i.d. samples as a trajectory with zero time step and save interval

    :param samples: array (n, n_beads, dim)
    :param kT: temperature of the target distribution

    :return: trajectory with "iid" provenance
    """
    return Trajectory(
        samples, kT=kT, dt=0.0, save_every=0, provenance='iid')


def diffused_reference(schedule: NoiseSchedule, data: ndarray, level: int,
                       rng: Generator) -> ndarray:
    """
    Samples of the noised reference distribution q(x_i): reference
    configurations diffused to the given level

    :param schedule: noise schedule
    :param data: reference configurations
    :param level: noise level
    :param rng: random generator

    :return: noised configurations of the same shape
    """
    data = asarray(data, float64)
    return diffuse(schedule, data, level, rng.standard_normal(data.shape))
