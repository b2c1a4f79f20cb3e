"""
DFF Core: Muller-Brown potential
"""

from typing import Tuple

from numpy import array, exp, ndarray, stack
from scipy.optimize import minimize

from ...models import ToySystem


__all__ = ['MullerBrown']


# Standard four-term parameterization
A = array([-200.0, -100.0, -170.0, 15.0])
a = array([-1.0, -1.0, -6.5, 0.7])
b = array([0.0, 0.0, 11.0, 0.6])
c = array([-10.0, -10.0, -6.5, 0.7])
x0 = array([1.0, 0.0, -0.5, -1.0])
y0 = array([0.0, 0.5, 1.5, 1.0])


class MullerBrown(ToySystem):
    """
    2D Muller-Brown surface with three minima; the deepest is near
    (-0.558, 1.442) at U ~ -146.7

    Exact samples are drawn by rejection on the box x in [-3, 2],
    y in [-1.5, 3.5]; all box edges lie at least 25 kT above the global
    minimum for the default kT.
    """
    name = 'muller_brown'
    display_name = 'Muller-Brown potential'
    exact_sampler = 'rejection'
    dim = 2
    kT = 15.0
    rotation_symmetric = False

    _u_min = None

    def _terms(self, x: ndarray):
        dx = x[..., 0, 0, None] - x0
        dy = x[..., 0, 1, None] - y0
        return dx, dy, A*exp(a*dx**2 + b*dx*dy + c*dy**2)

    def potential(self, x: ndarray) -> ndarray:
        return self._terms(x)[2].sum(-1)

    def force(self, x: ndarray) -> ndarray:
        dx, dy, e = self._terms(x)
        fx = -(e*(2*a*dx + b*dy)).sum(-1)
        fy = -(e*(b*dx + 2*c*dy)).sum(-1)
        return stack([fx, fy], -1)[..., None, :]

    def sampling_box(self) -> Tuple[Tuple[float, float], ...]:
        return (-3.0, 2.0), (-1.5, 3.5)

    def potential_min(self) -> float:
        if self._u_min is None:
            res = minimize(
                lambda p: float(self.potential(p.reshape(1, 2))),
                array([-0.558, 1.442]),
                jac=lambda p: -self.force(p.reshape(1, 2)).ravel(),
                method='BFGS', options=dict(gtol=1e-10))
            self._u_min = float(res.fun)
        return self._u_min
