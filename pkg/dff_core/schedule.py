"""
DFF Core: forward diffusion noise schedules

All noise levels in the public API are 1-based, i = 1..L. Arrays are stored
0-based internally, so betas[i - 1] is beta_i.
"""

from typing import Optional, Union

from numpy import (
    arange, asarray, clip, cos, cumprod, float64, integer, linspace, ndarray,
    pi, sqrt)

from . import config
from .errors import ValidationError
from .errors.schedule import InvalidNoiseLevelError, InvalidScheduleError


__all__ = [
    'NoiseSchedule', 'diffuse', 'from_zero_based', 'make_cosine_schedule',
    'make_linear_schedule', 'to_zero_based',
]


Level = Union[int, ndarray]


class NoiseSchedule(object):
    """
    Immutable variance schedule of a discrete-time diffusion process

    Attributes::
        L: number of noise levels
        betas: beta_i, i = 1..L
        alphas: alpha_i = 1 - beta_i
        alpha_bars: running products of alphas
        variances: denoising step variances, equal to betas
        sigmas: denoising step standard deviations, sqrt(variances)
        kind: "cosine", "linear", or "custom"
    """
    def __init__(self, betas: ndarray, kind: str = 'custom'):
        """
        Create a schedule from a sequence of betas

        :param betas: beta_1..beta_L, each in (0, 1)
        :param kind: schedule type tag stored in checkpoints
        """
        betas = asarray(betas, float64).ravel()
        if not len(betas):
            raise InvalidScheduleError(reason='At least one noise level needed')
        if (betas <= 0).any() or (betas >= 1).any():
            raise InvalidScheduleError(reason='All betas must be in (0, 1)')
        betas = betas.copy()
        betas.flags.writeable = False
        self.betas = betas
        self.alphas = 1 - betas
        self.alpha_bars = cumprod(self.alphas)
        self.variances = betas
        self.sigmas = sqrt(betas)
        for a in (self.alphas, self.alpha_bars, self.sigmas):
            a.flags.writeable = False
        self.kind = kind

    @property
    def L(self) -> int:
        return len(self.betas)

    def __len__(self) -> int:
        return self.L

    def __repr__(self) -> str:
        return '<NoiseSchedule {} L={}>'.format(self.kind, self.L)

    @classmethod
    def from_betas(cls, betas: ndarray, kind: str = 'custom') \
            -> 'NoiseSchedule':
        """
        Recreate a schedule from its betas, e.g. when loading a checkpoint

        :param betas: beta_1..beta_L
        :param kind: schedule type tag

        :return: new schedule
        """
        return cls(betas, kind)

    def check_level(self, i: Level) -> ndarray:
        """
        Validate 1-based noise level(s) and return the 0-based array index

        :param i: noise level or array of levels

        :return: 0-based index or array of indices
        """
        a = asarray(i)
        if a.dtype.kind not in 'iu' and not (
                a.dtype.kind == 'f' and (a == a.round()).all()):
            raise InvalidNoiseLevelError(level=i, levels=self.L)
        a = a.astype(int)
        if a.size and (a.min() < 1 or a.max() > self.L):
            raise InvalidNoiseLevelError(
                level=int(a.min() if a.min() < 1 else a.max()), levels=self.L)
        return a - 1

    def beta(self, i: Level) -> Union[float, ndarray]:
        return _scalar(self.betas[self.check_level(i)])

    def alpha(self, i: Level) -> Union[float, ndarray]:
        return _scalar(self.alphas[self.check_level(i)])

    def alpha_bar(self, i: Level) -> Union[float, ndarray]:
        return _scalar(self.alpha_bars[self.check_level(i)])

    def sigma(self, i: Level) -> Union[float, ndarray]:
        return _scalar(self.sigmas[self.check_level(i)])

    def elbo_weights(self) -> ndarray:
        """
        Per-level weights K_i = beta_i^2/(2 sigma_i^2 alpha_i (1 - alpha_bar_i))
        of the noise-prediction loss that make it the variational bound

        :return: array of L weights
        """
        return self.betas**2/(
            2*self.variances*self.alphas*(1 - self.alpha_bars))


def _scalar(a: ndarray) -> Union[float, ndarray]:
    if a.ndim == 0:
        return float(a)
    return a


def to_zero_based(i: Level) -> Level:
    """
    Convert 1-based noise level(s) to the 0-based convention

    :param i: 1-based level(s)

    :return: 0-based level(s)
    """
    return i - 1


def from_zero_based(i: Level) -> Level:
    """
    Convert 0-based noise level(s), as quoted in hyperparameter tables, to the
    1-based convention

    :param i: 0-based level(s)

    :return: 1-based level(s)
    """
    return i + 1


def make_cosine_schedule(L: Optional[int] = None,
                         s: Optional[float] = None,
                         max_beta: Optional[float] = None) -> NoiseSchedule:
    """
    Cosine schedule: alpha_bar(t) = f(t)/f(0) with
    f(t) = cos^2(((t/L + s)/(1 + s))*pi/2); betas are clipped to `max_beta`
    and alpha_bars recomputed as running products of the clipped alphas

    :param L: number of noise levels; defaults to SCHEDULE_LEVELS
    :param s: offset; defaults to COSINE_OFFSET
    :param max_beta: upper clip for betas; defaults to MAX_BETA

    :return: new schedule
    """
    if L is None:
        L = config['SCHEDULE_LEVELS']
    if s is None:
        s = config['COSINE_OFFSET']
    if max_beta is None:
        max_beta = config['MAX_BETA']
    if isinstance(L, bool) or not isinstance(L, (int, integer)) or L < 1:
        raise InvalidScheduleError(reason='L must be a positive integer', L=L)

    t = arange(L + 1, dtype=float64)
    f = cos((t/L + s)/(1 + s)*pi/2)**2
    alpha_bars = f/f[0]
    betas = clip(1 - alpha_bars[1:]/alpha_bars[:-1], 0, max_beta)
    return NoiseSchedule(betas, 'cosine')


def make_linear_schedule(L: int, beta_min: float, beta_max: float) \
        -> NoiseSchedule:
    """
    Linear schedule with betas interpolated from `beta_min` to `beta_max`

    :param L: number of noise levels
    :param beta_min: beta_1
    :param beta_max: beta_L

    :return: new schedule
    """
    if isinstance(L, bool) or not isinstance(L, (int, integer)) or L < 1:
        raise InvalidScheduleError(reason='L must be a positive integer', L=L)
    if not 0 < beta_min <= beta_max < 1:
        raise InvalidScheduleError(
            reason='Need 0 < beta_min <= beta_max < 1', beta_min=beta_min,
            beta_max=beta_max)
    return NoiseSchedule(linspace(beta_min, beta_max, L), 'linear')


def diffuse(schedule: NoiseSchedule, x0: ndarray, i: Level, eps: ndarray) \
        -> ndarray:
    """
    Sample q(x_i | x_0) given the standard normal noise:
    sqrt(alpha_bar_i)*x0 + sqrt(1 - alpha_bar_i)*eps

    :param schedule: noise schedule
    :param x0: clean configuration(s); for a 1D array of levels, the first
        axis of `x0` indexes samples
    :param i: noise level or per-sample array of levels
    :param eps: noise of the same shape as `x0`

    :return: noised configuration(s)
    """
    x0 = asarray(x0, float64)
    eps = asarray(eps, float64)
    if x0.shape != eps.shape:
        raise ValidationError(
            'eps', 'Noise shape {} does not match configuration shape {}'
            .format(eps.shape, x0.shape))
    ab = asarray(schedule.alpha_bar(i))
    if ab.ndim:
        ab = ab.reshape(ab.shape + (1,)*(x0.ndim - ab.ndim))
    return sqrt(ab)*x0 + sqrt(1 - ab)*eps
