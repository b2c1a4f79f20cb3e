"""
DFF Core: harmonic bead chain with an exactly Gaussian CG marginal
"""

from marshmallow.fields import Integer
from marshmallow.validate import Range
from numpy import diag, einsum, eye, kron, ndarray, ones
from numpy.linalg import inv

from ...models import CGMap, ToySystem
from ...schemas import Float


__all__ = ['HarmonicChain']


class HarmonicChain(ToySystem):
    """
    Linear chain of beads joined by harmonic springs,
    U(r) = k/2 sum_j |r_{j+1} - r_j|^2 + kappa/2 N |r_mean|^2

    The weak center-of-mass tether makes the Boltzmann distribution a proper
    zero-mean Gaussian with per-axis precision (k Lap + kappa/N 11^T)/kT. The
    default CG map keeps every `stride`-th bead.
    """
    name = 'harmonic_chain'
    display_name = 'Harmonic bead chain'
    exact_sampler = 'direct-gaussian'
    n_beads = 9
    dim = 3

    k: float = Float(
        dump_default=10.0, validate=Range(min=0, min_inclusive=False))
    kappa: float = Float(
        dump_default=1.0, validate=Range(min=0, min_inclusive=False))
    stride: int = Integer(dump_default=2, validate=Range(min=1))

    def stiffness(self) -> ndarray:
        """
        Per-axis stiffness matrix k Lap + kappa/N 11^T

        :return: (n_beads x n_beads) matrix
        """
        n = self.n_beads
        d = 2*ones(n)
        d[0] = d[-1] = 1
        lap = diag(d) - diag(ones(n - 1), 1) - diag(ones(n - 1), -1)
        if n == 1:
            lap = diag([0.0])
        return self.k*lap + self.kappa/n*ones((n, n))

    def potential(self, x: ndarray) -> ndarray:
        return 0.5*einsum('...id,ij,...jd->...', x, self.stiffness(), x)

    def force(self, x: ndarray) -> ndarray:
        return -einsum('ij,...jd->...id', self.stiffness(), x)

    def covariance(self) -> ndarray:
        return kron(self.kT*inv(self.stiffness()), eye(self.dim))

    def cg_map(self) -> CGMap:
        return CGMap(
            n_fg=self.n_beads, kept=list(range(0, self.n_beads, self.stride)))
