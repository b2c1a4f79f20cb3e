"""
DFF Core: noise schedule errors (subcodes 1xx)
"""

from . import DFFError


__all__ = ['InvalidNoiseLevelError', 'InvalidScheduleError']


class InvalidScheduleError(DFFError):
    """
    Noise schedule parameters are out of range

    Extra attributes::
        reason: description of the offending parameter
    """
    subcode = 100
    message = 'Invalid noise schedule'


class InvalidNoiseLevelError(DFFError):
    """
    Noise level outside 1..L requested

    Extra attributes::
        level: requested noise level
        levels: total number of noise levels
    """
    subcode = 101
    message = 'Noise level out of range'
