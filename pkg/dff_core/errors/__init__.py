"""
DFF Core: error system
"""

from typing import Optional


__all__ = [
    'DFFError', 'MethodNotImplementedError', 'ValidationError',
    'MissingFieldError',
]


class DFFError(Exception):
    """
    Base class for all DFF Core exceptions

    :Attributes::
        code: process exit code reported by the command-line interface,
            defaults to 1 (runtime/domain error)
        subcode: exception-specific error code; by convention, has the form
            "nmm", where the most significant digits ("n") define the DFF Core
            module and the two least significant digits ("mm") define specific
            exception within that module, from 0 to 99
        payload: dictionary containing the optional exception attributes passed
            as keyword arguments when raising the exception
    """
    code = 1  # exit code
    subcode = None  # DFF-specific error code
    payload = None  # additional error data
    message = None  # error message

    def __init__(self, **kwargs):
        """
        Create a DFF exception instance

        :param kwargs: optional extra data describing the error; the special
            keyword "message" overrides the default error description
        """
        if kwargs.get('message'):
            self.message = kwargs.pop('message')
        if not self.message and self.__doc__:
            self.message = self.__doc__.strip().splitlines()[0]
        self.payload = kwargs
        super(DFFError, self).__init__(self.message)

    def __str__(self) -> str:
        """
        Return a string representation of a DFF error showing both error
        message and payload

        :return: stringified DFF error
        """
        msg = self.message
        if self.payload:
            msg += ' ({})'.format(
                ', '.join('{}={}'.format(name, val)
                          for name, val in self.payload.items()))
        return msg

    def describe(self) -> str:
        """
        Return the error line printed by the command-line interface

        :return: "<Exception>: [subcode] message (payload)"
        """
        if self.subcode is not None:
            return '{}: [{}] {}'.format(
                self.__class__.__name__, self.subcode, self)
        return '{}: {}'.format(self.__class__.__name__, self)


class MethodNotImplementedError(DFFError):
    """
    Method is not implemented by a plugin class. Mainly used by the toy system
    and job plugin systems if the plugin class does not override the required
    abstract base class method.

    Extra attributes::
        class_name: name of the class that must implement the method
        method_name: name of the method to implement
    """
    subcode = 1
    message = 'Method not implemented'


class ValidationError(DFFError):
    """
    Validation fails for a certain argument, option, or configuration field

    Extra attributes::
        field: name of the field
    """
    subcode = 2
    message = 'Validation failed'

    def __init__(self, field: str, message: Optional[str] = None, **kwargs):
        super(ValidationError, self).__init__(field=field, **kwargs)
        if message:
            self.message = message
            self.args = (message,)


class MissingFieldError(ValidationError):
    """
    Required data is missing from the arguments or configuration

    Extra attributes::
        field: name of the field
    """
    subcode = 3
    message = 'Missing required data'
