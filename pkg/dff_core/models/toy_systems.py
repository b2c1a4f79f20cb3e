"""
DFF Core: toy system plugin data model

A toy system plugin must subclass :class:`ToySystem` and implement at least
its potential() and force() methods. Systems with an exact Boltzmann sampler
also implement sample() or declare a rejection sampling box.
"""

from typing import List as TList, Optional, Tuple

from marshmallow.fields import Integer, List, String
from marshmallow.validate import OneOf, Range
from numpy import arange, asarray, einsum, eye, kron, ndarray, zeros
from numpy.linalg import cholesky
from numpy.random import Generator

from .. import errors
from ..errors.toyworlds import NoExactSamplerError, UnsupportedSystemError
from ..schemas import Boolean, DFFSchema, Float


__all__ = ['CGMap', 'ToySystem']


class CGMap(DFFSchema):
    """
    Linear coarse-graining map

    Slicing maps are defined by the indices of the fine-grained beads kept;
    a general map (e.g. center-of-mass averaging) may be given by an explicit
    (n_cg x n_fg) matrix together with its force map. The same matrix acts on
    every spatial axis.

    Attributes::
        n_fg: number of fine-grained beads
        kept: indices of the beads kept by a slicing map
    """
    n_fg: int = Integer(validate=Range(min=1))
    kept: TList[int] = List(Integer(validate=Range(min=0)))

    matrix: Optional[ndarray] = None
    force_matrix: Optional[ndarray] = None

    def __init__(self, *args, matrix: Optional[ndarray] = None,
                 force_matrix: Optional[ndarray] = None, **kwargs):
        """
        Create a CG map

        :param args: see :class:`DFFSchema`
        :param matrix: optional explicit (n_cg x n_fg) coordinate map
        :param force_matrix: force map for an explicit coordinate map;
            defaults to `matrix`, which is exact for slicing maps
        :param kwargs: see :class:`CGMap`
        """
        super().__init__(*args, **kwargs)

        if matrix is None:
            if getattr(self, 'kept', None) is None:
                self.kept = list(range(self.n_fg))
            if any(j >= self.n_fg for j in self.kept):
                raise errors.ValidationError(
                    'kept', 'Kept bead index out of range 0..{}'.format(
                        self.n_fg - 1))
            matrix = zeros((len(self.kept), self.n_fg))
            matrix[arange(len(self.kept)), self.kept] = 1
        else:
            matrix = asarray(matrix, float)
            self.n_fg = matrix.shape[1]
            if (matrix < 0).any() or abs(matrix.sum(1) - 1).max() > 1e-12:
                raise errors.ValidationError(
                    'matrix', 'CG map rows must be non-negative and sum to 1')
        self.matrix = matrix
        self.force_matrix = matrix if force_matrix is None \
            else asarray(force_matrix, float)

    @property
    def n_cg(self) -> int:
        return self.matrix.shape[0]

    def apply(self, r: ndarray) -> ndarray:
        """
        Map fine-grained configurations to CG configurations

        :param r: array of shape (..., n_fg, dim)

        :return: array of shape (..., n_cg, dim)
        """
        return einsum('cf,...fd->...cd', self.matrix, r)

    def apply_forces(self, f: ndarray) -> ndarray:
        """
        Map fine-grained forces to CG forces

        :param f: array of shape (..., n_fg, dim)

        :return: array of shape (..., n_cg, dim)
        """
        return einsum('cf,...fd->...cd', self.force_matrix, f)

    def flat_matrix(self, dim: int) -> ndarray:
        """
        Return the map acting on flattened bead-major, coordinate-minor vectors

        :param dim: spatial dimension

        :return: (n_cg*dim x n_fg*dim) matrix
        """
        return kron(self.matrix, eye(dim))


class ToySystem(DFFSchema):
    """
    Base class for analytic toy system plugins

    Plugin modules are placed in the :mod:`resources.toy_system_plugins`
    subpackage and must subclass from :class:`ToySystem`, e.g.

    class MySystem(ToySystem):
        name = 'my_system'
        exact_sampler = 'rejection'

        def potential(self, x):
            ...

        def force(self, x):
            ...

        def sampling_box(self):
            return ((-3, 3),)

        def potential_min(self):
            return 0

    Configurations are arrays of shape (..., n_beads, dim); potential() returns
    an array of shape (...) and force() an array of the configuration shape.

    Attributes::
        name: system name
        display_name: system description
        kT: thermal energy
        n_beads: number of fine-grained beads
        dim: spatial dimension
        exact_sampler: "direct-gaussian", "rejection", or "none"
        external: the potential depends on absolute positions; models of such
            systems need an anchor node
        rotation_symmetric: the Boltzmann distribution is invariant under
            rotations about the origin, so training may augment with random
            rotations
    """
    __polymorphic_on__ = 'name'

    name: str = String(dump_default=None)
    display_name: str = String(dump_default=None)
    kT: float = Float(
        dump_default=1.0, validate=Range(min=0, min_inclusive=False))
    n_beads: int = Integer(dump_default=1, validate=Range(min=1))
    dim: int = Integer(dump_default=1, validate=OneOf([1, 2, 3]))
    exact_sampler: str = String(
        dump_default='none',
        validate=OneOf(['direct-gaussian', 'rejection', 'none']))
    external: bool = Boolean(dump_default=True)
    rotation_symmetric: bool = Boolean(dump_default=True)

    def __init__(self, *args, **kwargs):
        """
        Create a ToySystem instance

        :param args: see :class:`DFFSchema`
        :param kwargs: system-specific parameters
        """
        super().__init__(*args, **kwargs)

        if getattr(self, 'display_name', None) is None:
            self.display_name = self.name

    @property
    def dim_total(self) -> int:
        return self.n_beads*self.dim

    @property
    def gaussian(self) -> bool:
        return self.exact_sampler == 'direct-gaussian'

    def potential(self, x: ndarray) -> ndarray:
        """
        Potential energy U(x)

        :param x: configurations of shape (..., n_beads, dim)

        :return: energies of shape (...)
        """
        raise errors.MethodNotImplementedError(
            class_name=self.__class__.__name__, method_name='potential')

    def force(self, x: ndarray) -> ndarray:
        """
        Exact force -grad U(x)

        :param x: configurations of shape (..., n_beads, dim)

        :return: forces of the same shape
        """
        raise errors.MethodNotImplementedError(
            class_name=self.__class__.__name__, method_name='force')

    def log_density(self, x: ndarray) -> ndarray:
        """
        Unnormalized Boltzmann log-density -U(x)/kT

        :param x: configurations of shape (..., n_beads, dim)

        :return: log-densities of shape (...)
        """
        return -self.potential(x)/self.kT

    def sampling_box(self) -> Tuple[Tuple[float, float], ...]:
        """
        Bounding box of the rejection sampler, one (low, high) pair per
        flattened coordinate

        :return: box limits
        """
        raise NoExactSamplerError(name=self.name)

    def potential_min(self) -> float:
        """
        Global minimum of the potential inside the sampling box; defines the
        uniform rejection envelope exp(-(U - U_min)/kT)

        :return: minimum energy
        """
        raise NoExactSamplerError(name=self.name)

    def covariance(self) -> ndarray:
        """
        Covariance of the Boltzmann distribution over flattened bead-major,
        coordinate-minor configurations; Gaussian systems only

        :return: (dim_total x dim_total) matrix
        """
        raise UnsupportedSystemError(name=self.name, operation='covariance')

    def mean(self) -> ndarray:
        """
        Mean configuration of a Gaussian system

        :return: array of shape (n_beads, dim)
        """
        if not self.gaussian:
            raise UnsupportedSystemError(name=self.name, operation='mean')
        return zeros((self.n_beads, self.dim))

    def sample(self, n: int, rng: Generator) -> ndarray:
        """
        Draw exact Boltzmann samples; the default implementation handles
        Gaussian systems by Cholesky factorization of :meth:`covariance`

        :param n: number of samples
        :param rng: random generator

        :return: array of shape (n, n_beads, dim)
        """
        if not self.gaussian:
            raise NoExactSamplerError(name=self.name)
        chol = cholesky(self.covariance())
        w = rng.standard_normal((n, self.dim_total))
        return (w @ chol.T).reshape(n, self.n_beads, self.dim) + self.mean()

    def cg_map(self) -> CGMap:
        """
        Default coarse-graining map of the system; identity slicing unless
        overridden

        :return: CG map
        """
        return CGMap(n_fg=self.n_beads)

    def model_defaults(self) -> dict:
        """
        ModelConfig fields suited to the CG representation of this system

        :return: dictionary of ModelConfig fields
        """
        return dict(
            n_beads=self.cg_map().n_cg, dim=self.dim, anchored=self.external)

    def train_defaults(self) -> dict:
        """
        TrainConfig fields suited to this system

        :return: dictionary of TrainConfig fields
        """
        return dict(augment_rotations=self.rotation_symmetric, kT=self.kT)
