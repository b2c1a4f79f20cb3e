"""
DFF Core: quartic double well
"""

from typing import Tuple

from marshmallow.validate import Range
from numpy import ndarray, sqrt

from ...models import ToySystem
from ...schemas import Float


__all__ = ['DoubleWell']


class DoubleWell(ToySystem):
    """
    Symmetric double well U(x) = a*(x^2 - 1)^2 per coordinate, with minima at
    x = +-1 and barrier height a at x = 0

    Exact samples are drawn by rejection from the uniform envelope on the box
    where U <= 25 kT, which holds all but ~e^-25 of the probability mass.
    """
    name = 'double_well'
    display_name = '1D quartic double well'
    exact_sampler = 'rejection'
    kT = 0.5

    a: float = Float(
        dump_default=1.0, validate=Range(min=0, min_inclusive=False))

    def potential(self, x: ndarray) -> ndarray:
        return (self.a*(x**2 - 1)**2).sum((-2, -1))

    def force(self, x: ndarray) -> ndarray:
        return -4*self.a*x*(x**2 - 1)

    def sampling_box(self) -> Tuple[Tuple[float, float], ...]:
        h = float(sqrt(1 + sqrt(25*self.kT/self.a)))
        return ((-h, h),)*self.dim_total

    def potential_min(self) -> float:
        return 0.0
