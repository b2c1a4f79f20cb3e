"""
DFF Core: training errors (subcodes 3xx)
"""

from . import DFFError


__all__ = ['EmptyBatchError', 'TrainingDivergedError']


class TrainingDivergedError(DFFError):
    """
    Training loss became NaN or infinite

    Extra attributes::
        iteration: training iteration at which the loss diverged
        loss: loss value
        last_good_iteration: iteration of the restored parameter state
    """
    subcode = 300
    message = 'Training diverged'


class EmptyBatchError(DFFError):
    """
    Loss requested for an empty batch or empty training set
    """
    subcode = 301
    message = 'Empty batch'
