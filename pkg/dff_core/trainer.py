"""
DFF Core: training of the noise-prediction network

All randomness (batch indices, rotations, noise levels, and noise) comes from
a single numpy generator seeded from TrainConfig.seed, so training is
reproducible bit for bit in single-worker mode and can be resumed from a
checkpoint.
"""

import sys
from typing import Callable, Dict as TDict, List as TList, Optional, Union

import torch
from numpy import (
    array, asarray, einsum, float64, inf, isfinite, isnan, nan, ndarray,
    ones, sqrt as np_sqrt, uint32, zeros)
from numpy.random import Generator, default_rng
from scipy.stats import special_ortho_group
from torch.optim import Adam
from torch.optim.lr_scheduler import CosineAnnealingLR
from tqdm import tqdm

from . import config as dff_config, logger
from .errors import ValidationError
from .errors.trainer import EmptyBatchError, TrainingDivergedError
from .models import TrainConfig, Trajectory
from .schedule import diffuse
from .scorenet import NoiseModel, ScoreModel, _as_batch, score


__all__ = [
    'Trainer', 'decode_rng_state', 'denoising_loss', 'encode_rng_state',
    'force_matching_loss', 'loss_gradient_error', 'rotate_batch',
    'sample_noise_level', 'score_matching_loss', 'train',
    'write_loss_history',
]


Loss = Union[float, torch.Tensor]


def sample_noise_level(L: int, split: float, rng: Generator,
                       size: Optional[int] = None) -> Union[int, ndarray]:
    """
    Draw noise levels favoring low noise: with probability 1/2 uniformly from
    1..floor(L*split), otherwise uniformly from floor(L*split) + 1..L

    :param L: number of noise levels, >= 2
    :param split: fraction of levels in the low bucket
    :param rng: random generator
    :param size: number of levels to draw; a single int if omitted

    :return: 1-based level(s)
    """
    k = int(L*split)
    if L < 2 or k < 1 or k >= L:
        raise ValidationError(
            'noise_split', 'Split {} of {} levels leaves an empty bucket'
            .format(split, L))
    n = 1 if size is None else size
    low = rng.random(n) < 0.5
    levels = rng.integers(k + 1, L + 1, n)
    levels[low] = rng.integers(1, k + 1, int(low.sum()))
    return int(levels[0]) if size is None else levels


def _draw_levels(L: int, split: float, rng: Generator, n: int) -> ndarray:
    if L == 1:
        return ones(n, int)
    return sample_noise_level(L, split, rng, n)


def rotate_batch(x: ndarray, rng: Generator, *others: ndarray) \
        -> Union[ndarray, tuple]:
    """
    Apply an independent uniformly random proper rotation to each
    configuration of a batch

    :param x: configurations (n, n_beads, dim)
    :param rng: random generator
    :param others: optional arrays of the same shape rotated with the same
        matrices (e.g. forces)

    :return: rotated batch, or a tuple of rotated arrays if `others` given
    """
    n, _, dim = x.shape
    if dim == 1 or not n:
        return (x,) + others if others else x
    rots = special_ortho_group.rvs(dim, size=n, random_state=rng)
    rots = asarray(rots).reshape(n, dim, dim)
    res = tuple(einsum('bij,bnj->bni', rots, a) for a in (x,) + others)
    return res if others else res[0]


def _check_batch(model: NoiseModel, x0: ndarray) -> ndarray:
    x0 = asarray(x0, float64)
    if x0.ndim == 2:
        x0 = x0[None]
    if not len(x0):
        raise EmptyBatchError()
    return _as_batch(model, x0, 1)[0]


def _weights(model: NoiseModel, levels: ndarray, weighting: str) -> ndarray:
    if weighting == 'elbo':
        return model.schedule.elbo_weights()[levels - 1]
    if weighting != 'unit':
        raise ValidationError(
            'loss_weighting', 'Unknown loss weighting "{}"'.format(weighting))
    return ones(len(levels))


def denoising_loss(model: NoiseModel, x0_batch: ndarray, rng: Generator,
                   weighting: str = 'unit', split: float = 0.1,
                   levels: Optional[ndarray] = None,
                   create_graph: bool = True) -> Loss:
    """
    Noise-prediction loss mean_b K_i |eps - eps_theta(x_i, i)|^2 with
    x_i = sqrt(alpha_bar_i) x_0 + sqrt(1 - alpha_bar_i) eps

    Levels are drawn with :func:`sample_noise_level` unless given, then
    noise is drawn from `rng` in the batch shape.

    :param model: score model or any :class:`NoiseModel`
    :param x0_batch: clean configurations (n, n_beads, dim)
    :param rng: random generator
    :param weighting: "unit" or "elbo"
    :param split: fraction of levels in the low bucket
    :param levels: optional fixed per-sample (or common) levels
    :param create_graph: for a :class:`ScoreModel`, keep the graph so that
        calling backward() on the loss yields the parameter gradient

    :return: loss; a scalar tensor for a :class:`ScoreModel`, a float
        otherwise
    """
    x0 = _check_batch(model, x0_batch)
    n = len(x0)
    if levels is None:
        levels = _draw_levels(model.schedule.L, split, rng, n)
    else:
        levels = asarray(levels, int)
        if levels.ndim == 0:
            levels = levels.repeat(n)
    model.schedule.check_level(levels)
    eps = rng.standard_normal(x0.shape)
    xi = diffuse(model.schedule, x0, levels, eps)
    weights = _weights(model, levels, weighting)

    if isinstance(model, ScoreModel):
        pred = model.noise_tensor(
            torch.from_numpy(xi), torch.from_numpy(levels.astype(float64)),
            create_graph=create_graph)
        per_sample = ((torch.from_numpy(eps) - pred)**2).sum((1, 2))
        loss = (torch.from_numpy(weights)*per_sample).mean()
        if not create_graph:
            loss = loss.detach()
        return loss

    pred = model.noise_array(xi, levels)
    return float((weights*((eps - pred)**2).sum((1, 2))).mean())


def score_matching_loss(model: NoiseModel, x0_batch: ndarray, i: int,
                        rng: Generator) -> float:
    """
    Denoising score-matching loss at a fixed level, scaled by
    (1 - alpha_bar_i): (1 - alpha_bar_i) mean |s_theta(x_i, i) -
    grad log q(x_i | x_0)|^2 with grad log q(x_i | x_0) =
    -(x_i - sqrt(alpha_bar_i) x_0)/(1 - alpha_bar_i)

    Draws noise from `rng` exactly like :func:`denoising_loss` with fixed
    levels, so both losses can be evaluated on shared randomness.

    :param model: score model or any :class:`NoiseModel`
    :param x0_batch: clean configurations (n, n_beads, dim)
    :param i: noise level
    :param rng: random generator

    :return: loss value
    """
    x0 = _check_batch(model, x0_batch)
    ab = model.schedule.alpha_bar(i)
    eps = rng.standard_normal(x0.shape)
    xi = diffuse(model.schedule, x0, i, eps)
    target = -(xi - np_sqrt(ab)*x0)/(1 - ab)
    s = score(model, xi, i)
    return float((1 - ab)*((s - target)**2).sum((1, 2)).mean())


def force_matching_loss(model: NoiseModel, z_batch: ndarray,
                        f_batch: ndarray, kT: float, level: int = 1,
                        create_graph: bool = True) -> Loss:
    """
    Variational force-matching loss mean |F_DFF(z) - f|^2 of the force field
    extracted at a fixed level against projected instantaneous forces

    :param model: score model or any :class:`NoiseModel`
    :param z_batch: CG configurations (n, n_beads, dim)
    :param f_batch: projected forces of the same shape
    :param kT: thermal energy
    :param level: noise level at which the force field is evaluated
    :param create_graph: see :func:`denoising_loss`

    :return: loss; a scalar tensor for a :class:`ScoreModel`, a float
        otherwise
    """
    z = _check_batch(model, z_batch)
    f = asarray(f_batch, float64)
    if f.ndim == 2:
        f = f[None]
    if f.shape != z.shape:
        raise ValidationError(
            'f_batch', 'Force shape {} does not match configuration shape {}'
            .format(f.shape, z.shape))
    if not kT > 0:
        raise ValidationError('kT', 'kT must be positive')
    scale = -kT/np_sqrt(1 - model.schedule.alpha_bar(level))

    if isinstance(model, ScoreModel):
        pred = scale*model.noise_tensor(
            torch.from_numpy(z), torch.full((len(z),), float(level),
                                            dtype=torch.float64),
            create_graph=create_graph)
        loss = ((pred - torch.from_numpy(f))**2).sum((1, 2)).mean()
        if not create_graph:
            loss = loss.detach()
        return loss

    pred = scale*model.noise_array(z, zeros(len(z), int) + level)
    return float(((pred - f)**2).sum((1, 2)).mean())


def encode_rng_state(rng: Generator) -> ndarray:
    """
    Pack the state of a PCG64 generator into float64 values exactly, splitting
    128-bit integers into 32-bit chunks

    :param rng: random generator

    :return: array of 10 float64 values
    """
    st = rng.bit_generator.state
    if st['bit_generator'] != 'PCG64':
        raise ValidationError(
            'rng', 'Only PCG64 generator state can be stored')
    chunks = []
    for v in (st['state']['state'], st['state']['inc']):
        chunks += [(v >> (32*k)) & 0xFFFFFFFF for k in range(4)]
    chunks += [st['has_uint32'], st['uinteger']]
    return array(chunks, float64)


def decode_rng_state(a: ndarray) -> Generator:
    """
    Recreate a generator from :func:`encode_rng_state` output

    :param a: encoded state

    :return: new generator in the stored state
    """
    c = [int(v) for v in asarray(a, float64)]
    state = sum(c[k] << (32*k) for k in range(4))
    inc = sum(c[4 + k] << (32*k) for k in range(4))
    rng = default_rng()
    rng.bit_generator.state = {
        'bit_generator': 'PCG64',
        'state': {'state': state, 'inc': inc},
        'has_uint32': c[8], 'uinteger': int(uint32(c[9])),
    }
    return rng


class Trainer(object):
    """
    Adam optimization of a score model with cosine learning-rate decay, an
    exponential moving average of the parameters, periodic validation, and
    optional early stopping

    Attributes::
        model: model being optimized (raw parameters)
        ema: copy of the model holding the EMA parameters; used for sampling
            and simulation
        config: training hyperparameters
        iteration: number of completed optimizer steps
        history: rows (iteration, train_loss, val_loss); val_loss is NaN for
            iterations without validation
        stopped_early: set when the patience was exhausted
    """
    def __init__(self, model: ScoreModel, data: Union[ndarray, Trajectory],
                 config: TrainConfig,
                 validation_data: Union[ndarray, Trajectory, None] = None,
                 forces: Union[ndarray, Trajectory, None] = None):
        """
        :param model: model to train
        :param data: training configurations (n, n_beads, dim)
        :param config: training hyperparameters
        :param validation_data: optional validation configurations
        :param forces: projected forces matching `data`; if given, train the
            force-matching baseline instead of the denoising loss
        """
        if not isinstance(config, TrainConfig):
            config = TrainConfig(config, _set_defaults=True)
        self.model = model
        self.config = config
        self.data = _check_batch(model, _frames(data))
        self.validation_data = None if validation_data is None else \
            _check_batch(model, _frames(validation_data))
        self.forces = None
        if forces is not None:
            self.forces = asarray(_frames(forces), float64)
            if self.forces.shape != self.data.shape:
                raise ValidationError(
                    'forces', 'Force shape {} does not match data shape {}'
                    .format(self.forces.shape, self.data.shape))

        self.rng = default_rng(config.seed)
        self.ema = model.clone()
        for p in self.ema.parameters():
            p.requires_grad_(False)
        self.optimizer = Adam(
            model.parameters(), lr=config.learning_rate, betas=(0.9, 0.999),
            eps=1e-8)
        self.scheduler = CosineAnnealingLR(
            self.optimizer, T_max=max(config.iterations, 1),
            eta_min=min(config.min_learning_rate, config.learning_rate))
        self.iteration = 0
        self.history = []
        self.best_val = inf
        self.bad_evals = 0
        self.stopped_early = False
        self.best_ema = None
        self._last_good = self.state()

    @property
    def param_names(self) -> TList[str]:
        return [name for name, _ in self.model.named_parameters()]

    def batch_loss(self) -> torch.Tensor:
        """
        Draw a training batch and return its differentiable loss
        """
        cfg = self.config
        idx = self.rng.integers(0, len(self.data), cfg.batch_size)
        x0 = self.data[idx]
        if self.forces is not None:
            f = self.forces[idx]
            if cfg.augment_rotations:
                x0, f = rotate_batch(x0, self.rng, f)
            return force_matching_loss(
                self.model, x0, f, cfg.kT, cfg.force_matching_level)
        if cfg.augment_rotations:
            x0 = rotate_batch(x0, self.rng)
        return denoising_loss(
            self.model, x0, self.rng, cfg.loss_weighting, cfg.noise_split)

    def step(self) -> float:
        """
        Perform one optimizer step followed by the EMA update

        :return: training loss of the batch
        """
        loss = self.batch_loss()
        value = float(loss.detach())
        if not isfinite(value):
            last = int(self._last_good['iteration'][0])
            self.restore(self._last_good)
            raise TrainingDivergedError(
                iteration=self.iteration + 1, loss=value,
                last_good_iteration=last)
        self.optimizer.zero_grad()
        loss.backward()
        self.optimizer.step()
        self.scheduler.step()
        decay = self.config.ema_decay
        with torch.no_grad():
            for pe, p in zip(self.ema.parameters(), self.model.parameters()):
                pe.mul_(decay).add_(p, alpha=1 - decay)
        self.iteration += 1
        return value

    def validation_loss(self, model: Optional[ScoreModel] = None) -> float:
        """
        Mean denoising loss on the validation set with a fixed random stream,
        so that successive evaluations are comparable

        :param model: model to evaluate; defaults to the EMA model

        :return: validation loss; NaN if there is no validation set
        """
        if self.validation_data is None or not len(self.validation_data):
            return nan
        model = model if model is not None else self.ema
        rng = default_rng([self.config.seed, 1])
        total, n = 0.0, len(self.validation_data)
        bs = self.config.batch_size
        for start in range(0, n, bs):
            x0 = self.validation_data[start:start + bs]
            loss = denoising_loss(
                model, x0, rng, self.config.loss_weighting,
                self.config.noise_split, create_graph=False)
            total += float(loss)*len(x0)
        return total/n

    def run(self, callback: Optional[Callable[['Trainer'], None]] = None) \
            -> TList[tuple]:
        """
        Train until the configured number of iterations or early stop

        :param callback: optional function called after each validation

        :return: loss history
        """
        cfg = self.config
        with tqdm(total=cfg.iterations, initial=self.iteration,
                  disable=not dff_config['PROGRESS'], file=sys.stderr,
                  desc='train') as pbar:
            while self.iteration < cfg.iterations:
                train_loss = self.step()
                pbar.update(1)
                val_loss = nan
                if self.iteration % cfg.validation_interval == 0 or \
                        self.iteration == cfg.iterations:
                    val_loss = self.validation_loss()
                    logger.info(
                        'Iteration %d: train loss %.6g, validation loss %.6g',
                        self.iteration, train_loss, val_loss)
                    self.history.append(
                        (self.iteration, train_loss, val_loss))
                    self._last_good = self.state()
                    if callback is not None:
                        callback(self)
                    if self._check_early_stopping(val_loss):
                        break
                else:
                    self.history.append(
                        (self.iteration, train_loss, val_loss))
        return self.history

    def _check_early_stopping(self, val_loss: float) -> bool:
        if isnan(val_loss):
            return False
        if val_loss < self.best_val:
            self.best_val = val_loss
            self.bad_evals = 0
            if self.config.patience:
                self.best_ema = self._ema_arrays()
            return False
        self.bad_evals += 1
        if self.config.patience and self.bad_evals >= self.config.patience:
            logger.info(
                'Early stopping at iteration %d: no validation improvement '
                'in %d evaluations (best %.6g)', self.iteration,
                self.bad_evals, self.best_val)
            self.stopped_early = True
            if self.best_ema is not None:
                self._load_ema(self.best_ema)
            return True
        return False

    def _ema_arrays(self) -> TDict[str, ndarray]:
        return {name: p.detach().numpy().copy()
                for name, p in zip(self.param_names, self.ema.parameters())}

    def _load_ema(self, arrays: TDict[str, ndarray]) -> None:
        with torch.no_grad():
            for name, p in zip(self.param_names, self.ema.parameters()):
                p.copy_(torch.from_numpy(asarray(arrays[name])))

    def state(self) -> TDict[str, ndarray]:
        """
        Snapshot everything needed to continue training bit for bit

        :return: dictionary of named float64 arrays
        """
        res = {'iteration': array([self.iteration], float64),
               'rng_state': encode_rng_state(self.rng)}
        names = self.param_names
        for name, p in zip(names, self.model.parameters()):
            res['param/' + name] = p.detach().numpy().copy()
        for name, p in zip(names, self.ema.parameters()):
            res['ema/' + name] = p.detach().numpy().copy()
        for name, p in zip(names, self.model.parameters()):
            st = self.optimizer.state.get(p)
            if st:
                res['adam/{}/step'.format(name)] = array(
                    [float(st['step'])], float64)
                res['adam/{}/exp_avg'.format(name)] = \
                    st['exp_avg'].detach().numpy().copy()
                res['adam/{}/exp_avg_sq'.format(name)] = \
                    st['exp_avg_sq'].detach().numpy().copy()
        res['scheduler'] = array([
            self.scheduler.last_epoch, self.optimizer.param_groups[0]['lr'],
            getattr(self.scheduler, '_step_count', 0)], float64)
        res['history'] = array(self.history, float64).reshape(-1, 3)
        res['early_stopping'] = array(
            [self.best_val, self.bad_evals, self.stopped_early], float64)
        if self.best_ema is not None:
            for name, a in self.best_ema.items():
                res['best_ema/' + name] = a.copy()
        return res

    def restore(self, state: TDict[str, ndarray]) -> None:
        """
        Restore a snapshot made by :meth:`state`

        :param state: dictionary of named arrays
        """
        self.iteration = int(state['iteration'][0])
        self.rng = decode_rng_state(state['rng_state'])
        names = self.param_names
        with torch.no_grad():
            for name, p in zip(names, self.model.parameters()):
                p.copy_(torch.from_numpy(asarray(state['param/' + name])))
            for name, p in zip(names, self.ema.parameters()):
                p.copy_(torch.from_numpy(asarray(state['ema/' + name])))

        self.optimizer.state.clear()
        for name, p in zip(names, self.model.parameters()):
            key = 'adam/{}/step'.format(name)
            if key in state:
                self.optimizer.state[p] = {
                    'step': torch.tensor(float(state[key][0])),
                    'exp_avg': torch.from_numpy(asarray(
                        state['adam/{}/exp_avg'.format(name)]).copy()),
                    'exp_avg_sq': torch.from_numpy(asarray(
                        state['adam/{}/exp_avg_sq'.format(name)]).copy()),
                }

        last_epoch, lr, step_count = state['scheduler']
        for group in self.optimizer.param_groups:
            group['lr'] = float(lr)
        self.scheduler.last_epoch = int(last_epoch)
        self.scheduler._step_count = int(step_count)
        self.scheduler._last_lr = [float(lr)]

        self.history = [(int(r[0]), float(r[1]), float(r[2]))
                        for r in asarray(state['history']).reshape(-1, 3)]
        best, bad, stopped = state['early_stopping']
        self.best_val, self.bad_evals = float(best), int(bad)
        self.stopped_early = bool(stopped)
        self.best_ema = None
        if all('best_ema/' + name in state for name in names):
            self.best_ema = {name: asarray(state['best_ema/' + name]).copy()
                             for name in names}
        self._last_good = dict(state)


def _frames(data: Union[ndarray, Trajectory]) -> ndarray:
    if isinstance(data, Trajectory):
        return data.frames.astype(float64)
    return asarray(data, float64)


def train(model: ScoreModel, data: Union[ndarray, Trajectory],
          config: TrainConfig,
          validation_data: Union[ndarray, Trajectory, None] = None,
          forces: Union[ndarray, Trajectory, None] = None,
          callback: Optional[Callable[[Trainer], None]] = None) -> Trainer:
    """
    Train a score model

    :param model: model to train in place
    :param data: training configurations
    :param config: training hyperparameters
    :param validation_data: validation configurations
    :param forces: projected forces for the force-matching baseline
    :param callback: optional function called after each validation

    :return: trainer holding the raw model, the EMA model, and the history
    """
    trainer = Trainer(model, data, config, validation_data, forces)
    trainer.run(callback)
    return trainer


def loss_gradient_error(model: ScoreModel, x0_batch: ndarray, seed: int = 0,
                        h: float = 1e-6, weighting: str = 'unit') -> float:
    """
    Compare the autograd parameter gradient of the denoising loss with central
    finite differences on shared randomness

    :param model: score model (small; one loss evaluation per parameter and
        direction)
    :param x0_batch: clean configurations
    :param seed: seed of the shared random stream
    :param h: finite-difference step
    :param weighting: loss weighting

    :return: max |g - g_fd|/max |g_fd|
    """
    model = model.clone()
    params = list(model.parameters())
    model.zero_grad()
    denoising_loss(model, x0_batch, default_rng(seed), weighting).backward()
    grad = torch.cat([p.grad.reshape(-1) for p in params]).numpy()

    fd = zeros(len(grad))
    k = 0
    with torch.no_grad():
        for p in params:
            flat = p.view(-1)
            for j in range(flat.numel()):
                orig = float(flat[j])
                flat[j] = orig + h
                lp = float(denoising_loss(
                    model, x0_batch, default_rng(seed), weighting,
                    create_graph=False))
                flat[j] = orig - h
                lm = float(denoising_loss(
                    model, x0_batch, default_rng(seed), weighting,
                    create_graph=False))
                flat[j] = orig
                fd[k] = (lp - lm)/(2*h)
                k += 1
    return float(abs(grad - fd).max()/max(abs(fd).max(), 1e-300))


def write_loss_history(path: str, history: TList[tuple]) -> None:
    """
    Write the loss history as CSV with columns iteration, train_loss,
    val_loss; missing validation values are left empty

    :param path: output file path
    :param history: rows (iteration, train_loss, val_loss)
    """
    with open(path, 'w') as f:
        f.write('iteration,train_loss,val_loss\n')
        for it, tr, val in history:
            f.write('{:d},{!r},{}\n'.format(
                int(it), float(tr), '' if isnan(val) else repr(float(val))))

