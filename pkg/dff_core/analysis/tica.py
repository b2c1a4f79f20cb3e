"""
DFF Core: time-lagged independent component analysis
"""

from typing import List as TList, Optional, Sequence, Union

from numpy import argsort, asarray, eye, float64, ndarray, zeros
from scipy.linalg import LinAlgError, eigh

from .. import config
from ..errors.analysis import InsufficientFramesError, RankDeficientError
from ..models import Trajectory


__all__ = ['TICAModel', 'tica_fit', 'tica_transform']


class TICAModel(object):
    """
    Linear projection onto the slowest decorrelating directions at a fixed
    lag time

    Attributes::
        mean: feature mean
        lag: lag time in frames
        c0: regularized instantaneous covariance
        ctau: symmetrized time-lagged covariance
        eigenvalues: autocorrelations of the components, descending
        components: C0-orthonormal component vectors as columns
    """
    def __init__(self, mean: ndarray, lag: int, c0: ndarray, ctau: ndarray,
                 eigenvalues: ndarray, components: ndarray):
        self.mean = mean
        self.lag = lag
        self.c0 = c0
        self.ctau = ctau
        self.eigenvalues = eigenvalues
        self.components = components

    def transform(self, data: Union[Trajectory, ndarray],
                  n_components: Optional[int] = None) -> ndarray:
        return tica_transform(self, data, n_components)


def _features(data: Union[Trajectory, ndarray]) -> ndarray:
    if isinstance(data, Trajectory):
        data = data.frames
    x = asarray(data, float64)
    if x.ndim == 1:
        return x[:, None]
    return x.reshape(len(x), -1)


def _segments(data) -> TList[ndarray]:
    if isinstance(data, Trajectory):
        return [_features(f) for f in data.segment_frames()]
    if isinstance(data, (list, tuple)):
        segs = []
        for d in data:
            segs += _segments(d)
        return segs
    return [_features(data)]


def tica_fit(data: Union[Trajectory, ndarray,
                         Sequence[Union[Trajectory, ndarray]]],
             lag: Optional[int] = None, n_components: int = 2,
             epsilon: Optional[float] = None) -> TICAModel:
    """
    Fit TICA with the reversible (symmetrized) estimator

    Frames are flattened to feature vectors. Lagged pairs never cross
    trajectory segment boundaries.

    :param data: trajectory, feature array (n_frames, n_features), or a
        sequence of those
    :param lag: lag time in frames; defaults to TICA_LAG
    :param n_components: number of components kept in the model
    :param epsilon: C0 regularization; defaults to TICA_EPSILON

    :return: fitted model
    """
    if lag is None:
        lag = config['TICA_LAG']
    if epsilon is None:
        epsilon = config['TICA_EPSILON']
    segs = _segments(data)
    dim = segs[0].shape[1]
    n_total = sum(len(s) for s in segs)
    pairs = sum(max(len(s) - lag, 0) for s in segs)
    if lag < 1 or pairs <= dim:
        raise InsufficientFramesError(frames=n_total, required=lag + dim + 1)

    # Mean of the pooled lagged pairs, consistent with the symmetrized C0
    mean = zeros(dim)
    for s in segs:
        if len(s) > lag:
            mean += s[:-lag].sum(0) + s[lag:].sum(0)
    mean /= 2*pairs
    c0 = zeros((dim, dim))
    ctau = zeros((dim, dim))
    for s in segs:
        if len(s) <= lag:
            continue
        x0, xt = s[:-lag] - mean, s[lag:] - mean
        c0 += x0.T @ x0 + xt.T @ xt
        ctau += x0.T @ xt + xt.T @ x0
    c0 /= 2*pairs
    ctau /= 2*pairs
    c0 += epsilon*eye(dim)

    try:
        w, v = eigh(ctau, c0)
    except LinAlgError:
        raise RankDeficientError(dimension=int(c0.diagonal().argmin()))
    order = argsort(-w, kind='stable')
    w, v = w[order], v[:, order]
    for k in range(v.shape[1]):
        if v[abs(v[:, k]).argmax(), k] < 0:
            v[:, k] = -v[:, k]
    return TICAModel(mean, lag, c0, ctau, w, v[:, :n_components])


def tica_transform(model: TICAModel, data: Union[Trajectory, ndarray],
                   n_components: Optional[int] = None) -> ndarray:
    """
    Project frames onto the leading TICA components

    :param model: fitted model
    :param data: trajectory or feature array
    :param n_components: number of components; defaults to all in the model

    :return: array (n_frames, n_components)
    """
    x = _features(data)
    comps = model.components
    if n_components is not None:
        comps = comps[:, :n_components]
    return (x - model.mean) @ comps
