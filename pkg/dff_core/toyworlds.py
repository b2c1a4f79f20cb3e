"""
DFF Core: analytic reference systems

Exact Boltzmann samplers, diffused-score oracles, and coarse-graining helpers
for the toy system plugins in :mod:`dff_core.resources.toy_system_plugins`.
"""

from typing import Callable, Dict as TDict, Optional, Tuple

from numpy import (
    asarray, concatenate, exp, eye, float64, inf, isfinite, ndarray, zeros)
from numpy.linalg import inv, solve
from numpy.random import Generator
from scipy.integrate import quad

from . import logger, plugins
from .errors.toyworlds import (
    EnvelopeViolationError, NoExactSamplerError, UnknownSystemError,
    UnsupportedSystemError)
from .models import CGMap, ToySystem, Trajectory
from .schedule import NoiseSchedule


__all__ = [
    'boltzmann_sample', 'builtin_systems', 'cg_covariance', 'cg_mean_force',
    'diffused_score_oracle', 'get_system', 'oracle_trajectory',
    'projected_forces', 'quadrature_expectation', 'rejection_sample',
]


_systems = None


def builtin_systems() -> TDict[str, ToySystem]:
    """
    Catalog of the registered toy systems with their default parameters

    :return: dictionary {name: system}
    """
    global _systems
    if _systems is None:
        _systems = plugins.load_plugins(
            'toy system', 'resources.toy_system_plugins', ToySystem)
    return _systems


def get_system(name: str, **params) -> ToySystem:
    """
    Create a toy system instance

    :param name: registered system name
    :param params: system parameters overriding the defaults, e.g. kT

    :return: new system instance
    """
    if name not in builtin_systems():
        raise UnknownSystemError(
            name=name, available=', '.join(sorted(builtin_systems())))
    return ToySystem(name=name, _set_defaults=True, **params)


def rejection_sample(system: ToySystem, n: int, rng: Generator,
                     batch_size: int = 16384) -> ndarray:
    """
    Exact Boltzmann samples by rejection from the uniform envelope
    exp(-(U - U_min)/kT) on the system's sampling box

    :param system: toy system with a sampling box
    :param n: number of samples
    :param rng: random generator
    :param batch_size: minimum number of proposals per round

    :return: array (n, n_beads, dim)
    """
    box = asarray(system.sampling_box(), float64)
    u_min = system.potential_min()
    shape = (system.n_beads, system.dim)
    accepted, total, proposed = [], 0, 0
    while total < n:
        m = max(batch_size, 2*(n - total))
        r = box[:, 0] + (box[:, 1] - box[:, 0])*rng.random((m, len(box)))
        r = r.reshape((m,) + shape)
        ratio = exp(-(system.potential(r) - u_min)/system.kT)
        if (ratio > 1 + 1e-9).any():
            raise EnvelopeViolationError(
                name=system.name, ratio=float(ratio.max()))
        keep = r[rng.random(m) < ratio]
        accepted.append(keep)
        total += len(keep)
        proposed += m
    logger.debug(
        'Rejection sampling of %s: acceptance %.3g', system.name,
        total/max(proposed, 1))
    if not accepted:
        return zeros((0,) + shape)
    return concatenate(accepted)[:n]


def boltzmann_sample(system: ToySystem, n: int, rng: Generator) -> ndarray:
    """
    Draw i.i.d. exact samples from exp(-U/kT)

    :param system: toy system
    :param n: number of samples
    :param rng: random generator

    :return: array (n, n_beads, dim)
    """
    if system.exact_sampler == 'direct-gaussian':
        return system.sample(n, rng)
    if system.exact_sampler == 'rejection':
        return rejection_sample(system, n, rng)
    raise NoExactSamplerError(name=system.name)


def oracle_trajectory(system: ToySystem, samples: ndarray) -> Trajectory:
    """
    Wrap exact samples as a trajectory

    :param system: toy system the samples were drawn from
    :param samples: array (n, n_beads, dim)

    :return: trajectory with "oracle" provenance
    """
    return Trajectory(samples, kT=system.kT, provenance='oracle')


def cg_covariance(system: ToySystem, cg_map: Optional[CGMap] = None) \
        -> ndarray:
    """
    Covariance of the CG marginal of a Gaussian system, Xi Sigma Xi^T

    :param system: Gaussian toy system
    :param cg_map: CG map; defaults to the system's own

    :return: (n_cg*dim x n_cg*dim) matrix
    """
    if not system.gaussian:
        raise UnsupportedSystemError(name=system.name, operation='covariance')
    if cg_map is None:
        cg_map = system.cg_map()
    xi = cg_map.flat_matrix(system.dim)
    return xi @ system.covariance() @ xi.T


def cg_mean_force(system: ToySystem, z: ndarray,
                  cg_map: Optional[CGMap] = None) -> ndarray:
    """
    Exact mean force -grad V_CG(z) = -kT Sigma_CG^-1 z of a zero-mean Gaussian
    system

    :param system: Gaussian toy system
    :param z: CG configurations (..., n_cg, dim)
    :param cg_map: CG map; defaults to the system's own

    :return: forces of the shape of `z`
    """
    prec = inv(cg_covariance(system, cg_map))
    z = asarray(z, float64)
    flat = z.reshape(z.shape[:-2] + (-1,))
    return (-system.kT*flat @ prec.T).reshape(z.shape)


def diffused_score_oracle(system: ToySystem, schedule: NoiseSchedule, i: int,
                          x: ndarray, coarse: bool = False) -> ndarray:
    """
    Exact score of a Gaussian system's distribution diffused to level i:
    -(alpha_bar_i Sigma + (1 - alpha_bar_i) I)^-1 x

    :param system: Gaussian toy system
    :param schedule: noise schedule
    :param i: noise level
    :param x: configurations (..., n_beads, dim)
    :param coarse: use the CG marginal covariance instead of the fine one

    :return: scores of the shape of `x`
    """
    if not system.gaussian:
        raise UnsupportedSystemError(
            name=system.name, operation='diffused_score_oracle')
    cov = cg_covariance(system) if coarse else system.covariance()
    ab = schedule.alpha_bar(i)
    cov_i = ab*cov + (1 - ab)*eye(len(cov))
    x = asarray(x, float64)
    flat = x.reshape((-1, len(cov)))
    return -solve(cov_i, flat.T).T.reshape(x.shape)


def projected_forces(system: ToySystem, cg_map: CGMap, fine: ndarray) \
        -> Tuple[ndarray, ndarray]:
    """
    CG configurations and instantaneous CG forces of fine-grained samples,
    (Xi r, Xi_f F(r)), for the force-matching baseline

    :param system: toy system
    :param cg_map: CG map
    :param fine: fine-grained configurations (n, n_fg, dim)

    :return: CG configurations and CG forces, each (n, n_cg, dim)
    """
    fine = asarray(fine, float64)
    return cg_map.apply(fine), cg_map.apply_forces(system.force(fine))


def quadrature_expectation(system: ToySystem,
                           func: Callable[[float], float]) -> float:
    """
    Boltzmann expectation of a function of the single coordinate of a 1D
    system by numerical quadrature

    :param system: toy system with one bead in 1D
    :param func: scalar function of the coordinate

    :return: E[func(x)]
    """
    if system.dim_total != 1:
        raise UnsupportedSystemError(
            name=system.name, operation='quadrature_expectation')

    def density(x: float) -> float:
        return float(exp(system.log_density(asarray([[x]], float64))))

    opts = dict(epsabs=0, epsrel=1e-12, limit=200)
    z = quad(density, -inf, inf, **opts)[0]
    res = quad(lambda x: func(x)*density(x), -inf, inf, **opts)[0]
    if not isfinite(z) or z <= 0:
        raise UnsupportedSystemError(
            name=system.name, operation='quadrature_expectation')
    return res/z
