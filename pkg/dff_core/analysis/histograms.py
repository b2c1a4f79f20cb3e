"""
DFF Core: histograms, free energies, and Jensen-Shannon divergences
"""

from typing import List as TList, Optional, Sequence, Tuple, Union

from numpy import (
    asarray, float64, histogramdd, isfinite, log, ma, ndarray, where, zeros)
from scipy.special import rel_entr

from .. import config
from ..errors import ValidationError
from ..errors.analysis import BinningMismatchError


__all__ = [
    'Histogram', 'common_range', 'free_energy', 'histogram', 'histogram_js',
    'js_divergence',
]


Range = Sequence[Tuple[float, float]]


class Histogram(object):
    """
    Binned distribution of scalar or 2D values

    Attributes::
        edges: list of bin edge arrays, one per axis
        counts: integer counts per bin
        out_of_range: number of values outside the binning range
    """
    def __init__(self, edges: TList[ndarray], counts: ndarray,
                 out_of_range: int = 0):
        self.edges = [asarray(e, float64) for e in edges]
        self.counts = asarray(counts).astype(int)
        self.out_of_range = int(out_of_range)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def probabilities(self) -> ndarray:
        """Normalized bin probabilities; all zero for an empty histogram"""
        if not self.total:
            return zeros(self.counts.shape)
        return self.counts/self.total

    def same_binning(self, other: 'Histogram') -> bool:
        return len(self.edges) == len(other.edges) and all(
            e1.shape == e2.shape and (e1 == e2).all()
            for e1, e2 in zip(self.edges, other.edges))


def _as_points(values: ndarray) -> ndarray:
    v = asarray(values, float64)
    if v.ndim == 1:
        v = v[:, None]
    if v.ndim != 2 or v.shape[1] not in (1, 2):
        raise ValidationError(
            'values', 'Expected scalar or 2D point series, got shape {}'
            .format(v.shape))
    return v


def common_range(*series: ndarray) -> TList[Tuple[float, float]]:
    """
    Binning range covering all given series; degenerate axes are widened by
    0.5 on both sides

    :param series: value arrays of the same dimensionality

    :return: (low, high) per axis
    """
    pts = [_as_points(s) for s in series]
    pts = [p for p in pts if len(p)]
    if not pts:
        return [(-0.5, 0.5)]*_as_points(series[0]).shape[1]
    res = []
    for k in range(pts[0].shape[1]):
        lo = min(float(p[:, k].min()) for p in pts)
        hi = max(float(p[:, k].max()) for p in pts)
        if hi <= lo:
            lo, hi = lo - 0.5, hi + 0.5
        res.append((lo, hi))
    return res


def histogram(values: ndarray, bins: Optional[int] = None,
              range: Optional[Range] = None) -> Histogram:
    """
    Bin a scalar or 2D point series

    :param values: array (n,) or (n, 2)
    :param bins: number of bins per axis; defaults to HISTOGRAM_BINS
    :param range: (low, high) per axis; defaults to the data range

    :return: histogram; values outside the range are counted separately
    """
    if bins is None:
        bins = config['HISTOGRAM_BINS']
    if bins < 1:
        raise ValidationError('bins', 'At least one bin required')
    pts = _as_points(values)
    if range is None:
        range = common_range(pts)
    range = [tuple(float(v) for v in r) for r in range]
    if len(range) != pts.shape[1] or \
            not all(isfinite(r).all() and r[1] > r[0] for r in range):
        raise ValidationError('range', 'Finite non-empty range required')
    counts, edges = histogramdd(pts, bins=bins, range=range)
    return Histogram(edges, counts, len(pts) - int(counts.sum()))


def free_energy(h: Histogram) -> ma.MaskedArray:
    """
    Per-bin free energy -log p in units of kT; empty bins are masked

    :param h: histogram

    :return: masked array of the histogram shape
    """
    p = h.probabilities
    empty = p <= 0
    return ma.masked_array(-log(where(empty, 1.0, p)), empty)


def js_divergence(p: Union[Histogram, ndarray],
                  q: Union[Histogram, ndarray]) -> float:
    """
    Jensen-Shannon divergence in nats,
    KL(p||m)/2 + KL(q||m)/2 with m = (p + q)/2

    :param p: histogram or probability array
    :param q: histogram or probability array with the same binning

    :return: divergence in [0, ln 2]
    """
    if isinstance(p, Histogram) and isinstance(q, Histogram):
        if not p.same_binning(q):
            raise BinningMismatchError(
                shape1=p.counts.shape, shape2=q.counts.shape)
    if isinstance(p, Histogram):
        p = p.probabilities
    if isinstance(q, Histogram):
        q = q.probabilities
    p, q = asarray(p, float64), asarray(q, float64)
    if p.shape != q.shape:
        raise BinningMismatchError(shape1=p.shape, shape2=q.shape)
    m = (p + q)/2
    res = 0.5*rel_entr(p, m).sum() + 0.5*rel_entr(q, m).sum()
    return float(min(max(res, 0.0), log(2)))


def histogram_js(ref: ndarray, other: ndarray, bins: Optional[int] = None,
                 range: Optional[Range] = None) -> float:
    """
    JS divergence between two series binned on a shared grid

    :param ref: reference values (n,) or (n, 2)
    :param other: compared values of the same dimensionality
    :param bins: number of bins per axis
    :param range: shared binning range; defaults to the union of data ranges

    :return: divergence in nats
    """
    if range is None:
        range = common_range(ref, other)
    return js_divergence(histogram(ref, bins, range),
                         histogram(other, bins, range))
