"""
DFF Core: job errors (subcodes 8xx)
"""

from . import DFFError


__all__ = ['JobFailedError', 'UnknownJobTypeError']


class UnknownJobTypeError(DFFError):
    """
    Creating a job which type is not registered

    Extra attributes::
        type: job type
    """
    code = 2
    subcode = 800
    message = 'Unknown job type'


class JobFailedError(DFFError):
    """
    Job completed with errors

    Extra attributes::
        type: job type
        errors: list of error messages
    """
    subcode = 801
    message = 'Job failed'
