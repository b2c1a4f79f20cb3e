"""
DFF Core: isotropic Gaussian well
"""

from marshmallow.validate import Range
from numpy import eye, ndarray

from ...models import ToySystem
from ...schemas import Float


__all__ = ['GaussianWell']


class GaussianWell(ToySystem):
    """
    Harmonic well U(x) = kT*|x|^2/(2 sigma^2) whose Boltzmann distribution is
    N(0, sigma^2 I) at any temperature
    """
    name = 'gaussian_well'
    display_name = 'Isotropic Gaussian well'
    exact_sampler = 'direct-gaussian'

    sigma: float = Float(
        dump_default=1.0, validate=Range(min=0, min_inclusive=False))

    def potential(self, x: ndarray) -> ndarray:
        return self.kT*(x**2).sum((-2, -1))/(2*self.sigma**2)

    def force(self, x: ndarray) -> ndarray:
        return -self.kT*x/self.sigma**2

    def covariance(self) -> ndarray:
        return self.sigma**2*eye(self.dim_total)
