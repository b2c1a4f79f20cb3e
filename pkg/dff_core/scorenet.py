"""
DFF Core: noise-prediction network and Denoising Force Field

The network nn_theta(x, i) maps a CG configuration and a noise level to a
scalar energy. Node inputs are learned per-bead embeddings concatenated with
the normalized noise level i/L; edge inputs are the pairwise differences
x_j - x_k (plus their squared lengths), so the energy is exactly invariant
under global translations. In conservative mode the predicted noise is the
input gradient of that energy, computed with reverse-mode autograd; training
differentiates through that gradient a second time.

The module-level functions accept and return numpy arrays. A configuration
is an array of shape (n_beads, dim); a batch has shape (n, n_beads, dim).
"""

import copy
from typing import Callable, Dict as TDict, Optional, Tuple, Union

import torch
from numpy import (
    asarray, eye, float64, full, isfinite, ndarray, sqrt as np_sqrt, zeros)
from numpy.random import Generator, default_rng
from scipy.stats import special_ortho_group
from torch import nn

from .errors import ValidationError
from .errors.scorenet import (
    ModelConfigError, NonFiniteInputError, NonFiniteModelError)
from .models import ModelConfig
from .schedule import (
    NoiseSchedule, make_cosine_schedule, make_linear_schedule)


__all__ = [
    'AnalyticNoiseModel', 'NoiseModel', 'PairwiseAttentionLayer',
    'ScoreModel', 'dff_force', 'energy', 'energy_gradient_error',
    'equivariance_error', 'jacobian_asymmetry', 'make_schedule',
    'predict_noise', 'random_rotation', 'score',
]


Level = Union[int, ndarray]


def make_schedule(config: ModelConfig) -> NoiseSchedule:
    """
    Build the noise schedule described by a model configuration

    :param config: model configuration

    :return: noise schedule with config.L levels
    """
    if config.schedule == 'linear':
        return make_linear_schedule(config.L, config.beta_min, config.beta_max)
    return make_cosine_schedule(config.L)


class NoiseModel(object):
    """
    Interface of anything that predicts diffusion noise: trained networks,
    analytic oracles, and test stubs

    Attributes::
        schedule: noise schedule
        n_beads: number of CG beads
        dim: spatial dimension
    """
    schedule: NoiseSchedule = None
    n_beads: int = 1
    dim: int = 1

    def noise_array(self, x: ndarray, levels: ndarray) -> ndarray:
        """
        Predict noise for a batch

        :param x: configurations of shape (n, n_beads, dim)
        :param levels: 1-based noise levels of shape (n,)

        :return: predicted noise of shape (n, n_beads, dim)
        """
        raise NotImplementedError()

    def energy_array(self, x: ndarray, levels: ndarray) -> ndarray:
        """
        Scalar energy nn(x, i) for a batch, if the model defines one

        :param x: configurations of shape (n, n_beads, dim)
        :param levels: 1-based noise levels of shape (n,)

        :return: energies of shape (n,)
        """
        raise ModelConfigError(
            field='conservative', value=False,
            message='Model does not define a scalar energy')


class PairwiseAttentionLayer(nn.Module):
    """
    Single-head attention over all bead pairs with edge-conditioned keys and
    values, followed by a feed-forward block; both sublayers are residual
    with pre-normalization
    """
    def __init__(self, n_features: int, dim: int):
        super().__init__()
        self.scale = 1/float(n_features)**0.5
        self.edge_in = nn.Linear(dim + 1, n_features)
        self.edge_out = nn.Linear(n_features, n_features)
        self.norm1 = nn.LayerNorm(n_features)
        self.query = nn.Linear(n_features, n_features)
        self.key = nn.Linear(n_features, n_features)
        self.value = nn.Linear(n_features, n_features)
        self.out = nn.Linear(n_features, n_features)
        self.norm2 = nn.LayerNorm(n_features)
        self.ff1 = nn.Linear(n_features, n_features)
        self.ff2 = nn.Linear(n_features, n_features)

    def forward(self, h: torch.Tensor, edges: torch.Tensor) -> torch.Tensor:
        """
        :param h: node features (B, N, F)
        :param edges: edge inputs (B, N, N, dim + 1); edges[:, j, k] describes
            x_j - x_k

        :return: updated node features (B, N, F)
        """
        e = self.edge_out(nn.functional.silu(self.edge_in(edges)))
        hn = self.norm1(h)
        q = self.query(hn)
        k = self.key(hn).unsqueeze(1) + e
        v = self.value(hn).unsqueeze(1) + e
        att = torch.softmax((q.unsqueeze(2)*k).sum(-1)*self.scale, dim=-1)
        h = h + self.out((att.unsqueeze(-1)*v).sum(2))
        return h + self.ff2(nn.functional.silu(self.ff1(self.norm2(h))))


class ScoreModel(nn.Module, NoiseModel):
    """
    Noise-prediction network with learned bead embeddings

    Attributes::
        config: architecture and schedule settings
        schedule: noise schedule
        embeddings: learned per-node features h, one row per bead plus one for
            the anchor node of an anchored model
    """
    def __init__(self, config: ModelConfig,
                 schedule: Optional[NoiseSchedule] = None):
        """
        Create a freshly initialized model

        Linear weights are drawn from N(0, 1/fan_in), biases are zero, and
        embeddings are 0.1*N(0, 1), all from a numpy stream seeded with
        config.seed.

        :param config: model configuration
        :param schedule: optional schedule; built from `config` by default
        """
        nn.Module.__init__(self)
        if not isinstance(config, ModelConfig):
            config = ModelConfig(config, _set_defaults=True)
        self.config = config
        self.schedule = schedule if schedule is not None \
            else make_schedule(config)
        if self.schedule.L != config.L:
            raise ModelConfigError(
                field='L', value=config.L,
                message='Schedule has {} levels'.format(self.schedule.L))
        self.n_beads = config.n_beads
        self.dim = config.dim

        n_nodes = config.n_beads + (1 if config.anchored else 0)
        f = config.n_features
        self.embeddings = nn.Parameter(
            torch.zeros(n_nodes, config.embed_dim, dtype=torch.float64))
        self.node_in = nn.Linear(config.embed_dim + 1, f)
        self.layers = nn.ModuleList(
            [PairwiseAttentionLayer(f, config.dim)
             for _ in range(config.n_layers)])
        self.norm = nn.LayerNorm(f)
        self.readout = nn.Linear(f, 1 if config.conservative else config.dim)
        self.double()
        self.reset_parameters()

    def reset_parameters(self) -> None:
        """
        Reinitialize all parameters from config.seed
        """
        rng = default_rng(self.config.seed)
        with torch.no_grad():
            for name, p in self.named_parameters():
                if name == 'embeddings':
                    p.copy_(torch.from_numpy(
                        0.1*rng.standard_normal(tuple(p.shape))))
                elif name.endswith('weight') and p.ndim == 2:
                    p.copy_(torch.from_numpy(
                        rng.standard_normal(tuple(p.shape)) /
                        np_sqrt(p.shape[1])))
                elif name.endswith('weight'):
                    # LayerNorm gain
                    p.fill_(1)
                else:
                    p.zero_()

    def count_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def clone(self) -> 'ScoreModel':
        """
        Return an independent copy with the same configuration and parameters
        """
        return copy.deepcopy(self)

    def parameter_arrays(self) -> TDict[str, ndarray]:
        """
        Return a copy of all parameters as float64 arrays keyed by name
        """
        return {name: p.detach().cpu().numpy().copy()
                for name, p in self.named_parameters()}

    def load_parameter_arrays(self, arrays: TDict[str, ndarray]) -> None:
        """
        Set parameters from arrays keyed by name

        :param arrays: parameter arrays, see :meth:`parameter_arrays`
        """
        params = dict(self.named_parameters())
        missing = sorted(set(params) - set(arrays))
        if missing:
            raise ModelConfigError(
                field='parameters', value=', '.join(missing),
                message='Missing model parameters')
        with torch.no_grad():
            for name, p in params.items():
                a = asarray(arrays[name], float64)
                if a.shape != tuple(p.shape):
                    raise ModelConfigError(
                        field=name, value=a.shape,
                        message='Parameter shape does not match '
                        'configuration, expected {}'.format(tuple(p.shape)))
                p.copy_(torch.from_numpy(a))

    def check_finite(self) -> None:
        """
        Raise NonFiniteModelError if any parameter is NaN or infinite
        """
        for name, p in self.named_parameters():
            if not torch.isfinite(p).all():
                raise NonFiniteModelError(parameter=name)

    def _nodes(self, x: torch.Tensor) -> torch.Tensor:
        if self.config.anchored:
            x = torch.cat([x, x.new_zeros(x.shape[0], 1, x.shape[2])], 1)
        return x

    def node_features(self, x: torch.Tensor, levels: torch.Tensor) \
            -> torch.Tensor:
        """
        Run the attention stack

        :param x: configurations (B, n_beads, dim)
        :param levels: 1-based noise levels (B,)

        :return: final node features (B, n_nodes, F)
        """
        x = self._nodes(x)
        b, n = x.shape[:2]
        diff = x.unsqueeze(2) - x.unsqueeze(1)
        edges = torch.cat([diff, (diff**2).sum(-1, keepdim=True)], -1)
        t = (levels.to(x.dtype)/self.config.L).view(b, 1, 1).expand(b, n, 1)
        h = self.node_in(torch.cat(
            [self.embeddings.unsqueeze(0).expand(b, -1, -1), t], -1))
        for layer in self.layers:
            h = layer(h, edges)
        return self.norm(h)

    def energy_tensor(self, x: torch.Tensor, levels: torch.Tensor) \
            -> torch.Tensor:
        """
        Scalar energy nn_theta(x, i): sum of per-node readouts

        :param x: configurations (B, n_beads, dim)
        :param levels: 1-based noise levels (B,)

        :return: energies (B,)
        """
        if not self.config.conservative:
            raise ModelConfigError(
                field='conservative', value=False,
                message='Non-conservative model does not define an energy')
        return self.readout(self.node_features(x, levels)).sum((1, 2))

    def noise_tensor(self, x: torch.Tensor, levels: torch.Tensor,
                     create_graph: bool = False) -> torch.Tensor:
        """
        Predicted noise eps_theta(x, i)

        :param x: configurations (B, n_beads, dim)
        :param levels: 1-based noise levels (B,)
        :param create_graph: keep the graph of the input gradient so that the
            result can be differentiated w.r.t. parameters (training)

        :return: predicted noise (B, n_beads, dim)
        """
        if not self.config.conservative:
            out = self.readout(self.node_features(x, levels))
            return out[:, :self.n_beads]

        with torch.enable_grad():
            if not x.requires_grad:
                x = x.detach().requires_grad_(True)
            e = self.energy_tensor(x, levels)
            return torch.autograd.grad(
                e.sum(), x, create_graph=create_graph)[0]

    def noise_array(self, x: ndarray, levels: ndarray) -> ndarray:
        xt = torch.from_numpy(asarray(x, float64))
        lt = torch.from_numpy(asarray(levels, float64))
        return self.noise_tensor(xt, lt).detach().numpy()

    def energy_array(self, x: ndarray, levels: ndarray) -> ndarray:
        with torch.no_grad():
            return self.energy_tensor(
                torch.from_numpy(asarray(x, float64)),
                torch.from_numpy(asarray(levels, float64))).numpy()


class AnalyticNoiseModel(NoiseModel):
    """
    Wrap an analytic score function as a noise model:
    eps(x, i) = -sqrt(1 - alpha_bar_i)*s(x, i)

    Used for exact oracles (e.g. the diffused Gaussian score) and for stubs
    such as a zero noise predictor.
    """
    def __init__(self, schedule: NoiseSchedule, n_beads: int, dim: int,
                 score_func: Optional[Callable[[ndarray, ndarray], ndarray]]
                 = None,
                 noise_func: Optional[Callable[[ndarray, ndarray], ndarray]]
                 = None,
                 energy_func: Optional[Callable[[ndarray, ndarray], ndarray]]
                 = None):
        """
        :param schedule: noise schedule
        :param n_beads: number of beads
        :param dim: spatial dimension
        :param score_func: batch score s(x, levels) -> (n, n_beads, dim)
        :param noise_func: alternatively, batch noise eps(x, levels); zero
            noise if neither is given
        :param energy_func: optional batch energy (n,) whose gradient is the
            noise
        """
        self.schedule = schedule
        self.n_beads = n_beads
        self.dim = dim
        self.score_func = score_func
        self.noise_func = noise_func
        self.energy_func = energy_func

    def noise_array(self, x: ndarray, levels: ndarray) -> ndarray:
        x = asarray(x, float64)
        if self.noise_func is not None:
            return asarray(self.noise_func(x, levels), float64)
        if self.score_func is None:
            return zeros(x.shape)
        ab = asarray(self.schedule.alpha_bar(levels)).reshape(-1, 1, 1)
        return -np_sqrt(1 - ab)*asarray(self.score_func(x, levels), float64)

    def energy_array(self, x: ndarray, levels: ndarray) -> ndarray:
        if self.energy_func is None:
            return super().energy_array(x, levels)
        return asarray(self.energy_func(asarray(x, float64), levels), float64)


def _as_batch(model: NoiseModel, x: ndarray, i: Level) \
        -> Tuple[ndarray, ndarray, bool]:
    x = asarray(x, float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.ndim != 3 or x.shape[1:] != (model.n_beads, model.dim):
        raise ValidationError(
            'x', 'Expected configuration shape (..., {}, {}), got {}'.format(
                model.n_beads, model.dim, x.shape))
    if not isfinite(x).all():
        raise NonFiniteInputError(shape=x.shape)
    levels = asarray(i)
    if levels.ndim == 0:
        levels = full(len(x), int(levels))
    model.schedule.check_level(levels)
    return x, levels, single


def energy(model: NoiseModel, x: ndarray, i: Level) -> Union[float, ndarray]:
    """
    Scalar network energy nn_theta(x, i)

    :param model: score model
    :param x: configuration (n_beads, dim) or batch (n, n_beads, dim)
    :param i: noise level or per-configuration levels

    :return: energy or array of energies
    """
    x, levels, single = _as_batch(model, x, i)
    e = model.energy_array(x, levels)
    return float(e[0]) if single else e


def predict_noise(model: NoiseModel, x: ndarray, i: Level) -> ndarray:
    """
    Predicted noise eps_theta(x, i); the exact input gradient of the energy
    for a conservative model

    :param model: score model
    :param x: configuration (n_beads, dim) or batch (n, n_beads, dim)
    :param i: noise level or per-configuration levels

    :return: array of the shape of `x`
    """
    x, levels, single = _as_batch(model, x, i)
    eps = model.noise_array(x, levels)
    return eps[0] if single else eps


def score(model: NoiseModel, x: ndarray, i: Level) -> ndarray:
    """
    Score s_theta(x, i) = -eps_theta(x, i)/sqrt(1 - alpha_bar_i)

    :param model: score model
    :param x: configuration (n_beads, dim) or batch (n, n_beads, dim)
    :param i: noise level or per-configuration levels

    :return: array of the shape of `x`
    """
    x, levels, single = _as_batch(model, x, i)
    ab = asarray(model.schedule.alpha_bar(levels)).reshape(-1, 1, 1)
    s = -model.noise_array(x, levels)/np_sqrt(1 - ab)
    return s[0] if single else s


def dff_force(model: NoiseModel, x: ndarray, i: Level, kT: float) -> ndarray:
    """
    Denoising Force Field -kT*eps_theta(x, i)/sqrt(1 - alpha_bar_i)

    :param model: score model
    :param x: configuration (n_beads, dim) or batch (n, n_beads, dim)
    :param i: noise level
    :param kT: thermal energy, > 0

    :return: force array of the shape of `x`
    """
    if not kT > 0:
        raise ValidationError('kT', 'kT must be positive')
    return kT*score(model, x, i)


def random_rotation(dim: int, rng: Generator) -> ndarray:
    """
    Draw a proper rotation uniformly from SO(dim); reflections are never
    returned

    :param dim: spatial dimension, 1 to 3; the identity is the only rotation
        in 1D
    :param rng: random generator

    :return: (dim x dim) rotation matrix
    """
    if dim == 1:
        return eye(1)
    if dim not in (2, 3):
        raise ValidationError('dim', 'Rotations supported for dim 1-3 only')
    return special_ortho_group.rvs(dim, random_state=rng)


def equivariance_error(model: NoiseModel, x: ndarray, i: Level,
                       R: ndarray) -> Union[float, ndarray]:
    """
    Relative squared error |eps(x) - R^-1 eps(R x)|^2/|eps(x)|^2; zero for an
    exactly rotation-equivariant model and, by convention, for zero eps(x)

    :param model: score model
    :param x: configuration (n_beads, dim) or batch (n, n_beads, dim)
    :param i: noise level
    :param R: rotation matrix

    :return: error or array of per-configuration errors
    """
    R = asarray(R, float64)
    x, levels, single = _as_batch(model, x, i)
    eps = model.noise_array(x, levels)
    # Row vectors: R x_j is x_j @ R.T, and R^-1 v is v @ R
    eps_rot = model.noise_array(x @ R.T, levels) @ R
    num = ((eps - eps_rot)**2).sum((1, 2))
    den = (eps**2).sum((1, 2))
    err = zeros(len(x))
    nz = den > 0
    err[nz] = num[nz]/den[nz]
    return float(err[0]) if single else err


def energy_gradient_error(model: NoiseModel, x: ndarray, i: int,
                          h: float = 1e-5) -> float:
    """
    Compare the predicted noise with central finite differences of the energy

    :param model: conservative model
    :param x: configuration (n_beads, dim)
    :param i: noise level
    :param h: finite-difference step

    :return: max |eps - grad_fd|/max |grad_fd|
    """
    x = asarray(x, float64)
    eps = predict_noise(model, x, i)
    n = x.size
    shifts = eye(n).reshape(n, *x.shape)*h
    ep = energy(model, x[None] + shifts, i)
    em = energy(model, x[None] - shifts, i)
    fd = ((ep - em)/(2*h)).reshape(x.shape)
    scale = max(abs(fd).max(), 1e-300)
    return float(abs(eps - fd).max()/scale)


def jacobian_asymmetry(model: NoiseModel, x: ndarray, i: int,
                       h: float = 1e-5) -> float:
    """
    Largest asymmetry of the finite-difference Jacobian of the predicted
    noise; vanishes up to discretization error for a conservative model

    :param model: score model
    :param x: configuration (n_beads, dim)
    :param i: noise level
    :param h: finite-difference step

    :return: max |J - J^T|
    """
    x = asarray(x, float64)
    n = x.size
    shifts = eye(n).reshape(n, *x.shape)*h
    ep = predict_noise(model, x[None] + shifts, i).reshape(n, n)
    em = predict_noise(model, x[None] - shifts, i).reshape(n, n)
    jac = (ep - em)/(2*h)
    return float(abs(jac - jac.T).max())
