"""
DFF Core: analysis errors (subcodes 6xx)
"""

from . import DFFError


__all__ = [
    'BinningMismatchError', 'InsufficientFramesError', 'RankDeficientError',
    'ShapeMismatchError',
]


class BinningMismatchError(DFFError):
    """
    Histograms with different binning compared

    Extra attributes::
        shape1: bin count(s) of the first histogram
        shape2: bin count(s) of the second histogram
    """
    subcode = 600
    message = 'Histogram binning mismatch'


class RankDeficientError(DFFError):
    """
    Instantaneous covariance is singular even after regularization

    Extra attributes::
        dimension: index of the offending input coordinate
    """
    subcode = 601
    message = 'Covariance matrix is rank-deficient'


class ShapeMismatchError(DFFError):
    """
    Trajectories or arrays with incompatible shapes

    Extra attributes::
        shape1: first shape
        shape2: second shape
    """
    subcode = 602
    message = 'Shape mismatch'


class InsufficientFramesError(DFFError):
    """
    Not enough frames for the requested estimator

    Extra attributes::
        frames: number of frames available
        required: number of frames required
    """
    subcode = 603
    message = 'Not enough frames'
