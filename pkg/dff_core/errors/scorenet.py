"""
DFF Core: score network errors (subcodes 2xx)
"""

from . import DFFError


__all__ = ['ModelConfigError', 'NonFiniteInputError', 'NonFiniteModelError']


class ModelConfigError(DFFError):
    """
    Invalid network architecture parameters

    Extra attributes::
        field: name of the offending field
        value: field value
    """
    subcode = 200
    message = 'Invalid model configuration'


class NonFiniteInputError(DFFError):
    """
    Configuration passed to the network contains NaN or infinite coordinates

    Extra attributes::
        shape: shape of the input
    """
    subcode = 201
    message = 'Non-finite network input'


class NonFiniteModelError(DFFError):
    """
    Network parameters contain NaN or infinite values

    Extra attributes::
        parameter: name of the first non-finite parameter
    """
    subcode = 202
    message = 'Non-finite model parameters'
