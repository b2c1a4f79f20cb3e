"""
DFF Core: toy system errors (subcodes 5xx)
"""

from . import DFFError


__all__ = [
    'EnvelopeViolationError', 'NoExactSamplerError', 'UnknownSystemError',
    'UnsupportedSystemError',
]


class UnknownSystemError(DFFError):
    """
    Requested toy system is not registered

    Extra attributes::
        name: requested system name
        available: names of the registered systems
    """
    subcode = 500
    message = 'Unknown toy system'


class UnsupportedSystemError(DFFError):
    """
    Operation is not supported by the given toy system

    Extra attributes::
        name: system name
        operation: requested operation
    """
    subcode = 501
    message = 'Operation not supported by toy system'


class EnvelopeViolationError(DFFError):
    """
    Rejection sampling proposal exceeded the envelope; the sampler bound is
    incorrect

    Extra attributes::
        name: system name
        ratio: density-to-envelope ratio of the offending proposal
    """
    subcode = 502
    message = 'Rejection sampling envelope violated'


class NoExactSamplerError(DFFError):
    """
    Toy system has no exact Boltzmann sampler

    Extra attributes::
        name: system name
    """
    subcode = 503
    message = 'No exact sampler available'
