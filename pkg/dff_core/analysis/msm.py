"""
DFF Core: state decomposition and Markov transition analysis
"""

from typing import List as TList, Optional, Sequence, Tuple, Union

from numpy import (
    asarray, bincount, float64, ndarray, ones, zeros)
from numpy.random import Generator
from scipy.spatial.distance import cdist
from sklearn.cluster import KMeans

from .. import config
from ..errors import ValidationError
from ..errors.analysis import ShapeMismatchError
from .histograms import js_divergence


__all__ = [
    'KMeansResult', 'TransitionMatrix', 'assign_states', 'elbow_curve',
    'kmeans', 'transition_js', 'transition_matrix',
]


class KMeansResult(object):
    """
    Attributes::
        labels: cluster index per point
        centroids: (K x dim) cluster centers
        inertia: sum of squared distances to the assigned centers
    """
    def __init__(self, labels: ndarray, centroids: ndarray, inertia: float):
        self.labels = labels
        self.centroids = centroids
        self.inertia = inertia


def _seed(rng: Union[Generator, int, None]) -> int:
    if isinstance(rng, Generator):
        return int(rng.integers(2**31 - 1))
    return 0 if rng is None else int(rng)


def kmeans(points: ndarray, K: int, rng: Union[Generator, int, None] = None,
           restarts: Optional[int] = None) -> KMeansResult:
    """
    Lloyd k-means with k-means++ seeding; the lowest-inertia restart is kept

    :param points: array (n, dim)
    :param K: number of clusters
    :param rng: random generator or seed
    :param restarts: number of restarts; defaults to KMEANS_RESTARTS

    :return: labels, centroids, and inertia
    """
    points = asarray(points, float64)
    if points.ndim == 1:
        points = points[:, None]
    if not 1 <= K <= len(points):
        raise ValidationError(
            'K', 'Need 1 <= K <= number of points ({})'.format(len(points)))
    if restarts is None:
        restarts = config['KMEANS_RESTARTS']
    km = KMeans(
        n_clusters=K, init='k-means++', n_init=restarts, algorithm='lloyd',
        random_state=_seed(rng)).fit(points)
    return KMeansResult(
        km.labels_.astype(int), km.cluster_centers_, float(km.inertia_))


def assign_states(centroids: ndarray, points: ndarray) -> ndarray:
    """
    Assign points to the nearest centroid; ties go to the lowest index

    :param centroids: (K x dim) centers
    :param points: array (n, dim)

    :return: labels
    """
    points = asarray(points, float64)
    if points.ndim == 1:
        points = points[:, None]
    return cdist(points, asarray(centroids, float64)).argmin(1)


def elbow_curve(points: ndarray, ks: Sequence[int],
                rng: Union[Generator, int, None] = None) \
        -> TList[Tuple[int, float]]:
    """
    Inertia as a function of the number of clusters

    :param points: array (n, dim)
    :param ks: cluster counts
    :param rng: random generator or seed

    :return: list of (K, inertia)
    """
    seed = _seed(rng)
    return [(int(k), kmeans(points, int(k), seed).inertia) for k in ks]


class TransitionMatrix(object):
    """
    Row-stochastic transition matrix between discrete states

    Rows of states never left within the data carry a self-transition and are
    flagged in `empty`.

    Attributes::
        counts: (K x K) transition counts
        P: (K x K) transition probabilities
        pi: empirical state probabilities
        empty: rows without counts
    """
    def __init__(self, counts: ndarray, pi: ndarray):
        self.counts = counts
        totals = counts.sum(1)
        self.empty = totals == 0
        P = zeros(counts.shape)
        nz = ~self.empty
        P[nz] = counts[nz]/totals[nz, None]
        P[self.empty, self.empty.nonzero()[0]] = 1
        self.P = P
        self.pi = pi

    @property
    def n_states(self) -> int:
        return len(self.P)


def transition_matrix(labels: ndarray, lag: int = 1,
                      segments: Sequence[int] = (),
                      n_states: Optional[int] = None) -> TransitionMatrix:
    """
    Count transitions at the given lag within each contiguous segment and
    normalize rows

    :param labels: state index per frame
    :param lag: lag time in frames
    :param segments: sorted segment start indices, as in
        :attr:`Trajectory.segments`
    :param n_states: number of states; defaults to max label + 1

    :return: transition matrix
    """
    labels = asarray(labels, int)
    if lag < 1:
        raise ValidationError('lag', 'Lag must be a positive integer')
    if len(labels) and labels.min() < 0:
        raise ValidationError('labels', 'State labels must be non-negative')
    if n_states is None:
        n_states = int(labels.max()) + 1 if len(labels) else 0
    starts = sorted({0, *[int(s) for s in segments]})
    stops = starts[1:] + [len(labels)]
    counts = zeros((n_states, n_states), int)
    for a, b in zip(starts, stops):
        seg = labels[a:b]
        if len(seg) > lag:
            idx = seg[:-lag]*n_states + seg[lag:]
            counts += bincount(idx, minlength=n_states**2).reshape(
                n_states, n_states)
    pi = bincount(labels, minlength=n_states)/max(len(labels), 1)
    return TransitionMatrix(counts, pi)


def transition_js(P_model: Union[TransitionMatrix, ndarray],
                  P_ref: Union[TransitionMatrix, ndarray],
                  pi_ref: Optional[ndarray] = None) -> Tuple[float, float]:
    """
    Compare transition matrices row by row

    :param P_model: model transition matrix
    :param P_ref: reference transition matrix
    :param pi_ref: reference state probabilities; taken from `P_ref` if it is
        a :class:`TransitionMatrix`

    :return: mean and pi_ref-weighted mean of per-row JS divergences over rows
        populated in both matrices
    """
    rows = None
    if isinstance(P_model, TransitionMatrix):
        rows = ~P_model.empty
        P_model = P_model.P
    if isinstance(P_ref, TransitionMatrix):
        rows = ~P_ref.empty if rows is None else rows & ~P_ref.empty
        if pi_ref is None:
            pi_ref = P_ref.pi
        P_ref = P_ref.P
    P_model, P_ref = asarray(P_model, float64), asarray(P_ref, float64)
    if P_model.shape != P_ref.shape:
        raise ShapeMismatchError(shape1=P_model.shape, shape2=P_ref.shape)
    if rows is None:
        rows = ones(len(P_ref), bool)
    if pi_ref is None:
        pi_ref = ones(len(P_ref))/len(P_ref)
    pi_ref = asarray(pi_ref, float64)
    idx = rows.nonzero()[0]
    if not len(idx):
        return float('nan'), float('nan')
    js = asarray([js_divergence(P_model[i], P_ref[i]) for i in idx])
    w = pi_ref[idx]
    weighted = float((w*js).sum()/w.sum()) if w.sum() > 0 else float('nan')
    return float(js.mean()), weighted
