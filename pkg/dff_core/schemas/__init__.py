"""
DFF Core: custom marshmallow schemas for configuration and data models
"""

import datetime
from math import isinf, isnan
from typing import Any, Dict as TDict, Union

from marshmallow import (
    Schema, ValidationError as MarshmallowValidationError, fields, missing)

from ..errors import ValidationError


__all__ = ['Boolean', 'DateTime', 'Float', 'DFFSchema']


class Boolean(fields.Boolean):
    """
    Use this instead of :class:`marshmallow.fields.Boolean` to allow assigning
    values such as "yes" and "no"
    """
    truthy = {
        True, 't', 'T', 'true', 'True', 'TRUE', 'yes', 'Yes', 'YES', 'on', 'On',
        'ON', '1', 1, 1.0}
    falsy = {
        False, 'f', 'F', 'false', 'False', 'FALSE', 'no', 'No', 'NO', 'off',
        'Off', 'OFF', '0', 0, 0.0}


class DateTime(fields.DateTime):
    """
    Use this instead of :class:`marshmallow.fields.DateTime` to keep already
    formatted timestamps unchanged on dump
    """
    def _serialize(self, value: Union[str, datetime.datetime, None], attr, obj,
                   **__):
        if value is None or isinstance(value, str):
            return value
        return value.strftime('%Y-%m-%d %H:%M:%S.%f')


class Float(fields.Float):
    """
    Floating-point :class:`marshmallow.Schema` field that serializes NaNs and
    Infs to None
    """
    def _serialize(self, value, attr, obj, **__):
        """
        Serializer for float fields

        :param value: value to serialize
        :param str attr: schema attribute name
        :param marshmallow.Schema obj: schema object

        :return: serialized value
        """
        try:
            if isinf(value) or isnan(value):
                return None
        except TypeError:
            pass

        return super()._serialize(value, attr, obj)


class DFFSchema(Schema):
    """
    A :class:`marshmallow.Schema` subclass that allows initialization from an
    object or keyword arguments and explicitly assigns default values to all
    uninitialized fields. Serves as a self-contained schema that can both hold
    field values and dump itself to a dict or a JSON string.

    Values are deserialized and validated on assignment; a failed field
    validator raises :class:`dff_core.errors.ValidationError` naming the field.

    :class:`DFFSchema` supports polymorphic schemas. If the special attribute
    `__polymorphic_on__` is set to the name of one of the attributes,
    DFFSchema(...), instead of returning the base class instance, will return
    an instance of one of its subclasses that has the value of the
    corresponding attribute equal to the value provided on creation, either in
    the initializer object or in the keyword arguments (see :meth:`__init__`).
    """
    __polymorphic_on__ = None

    def __new__(cls, _obj: Any = None, **kwargs):
        # Handle polymorphism
        poly_attr = cls.__polymorphic_on__
        if poly_attr is not None:
            try:
                poly_identity = getattr(_obj, poly_attr)
            except AttributeError:
                try:
                    poly_identity = kwargs[poly_attr]
                except KeyError:
                    poly_identity = None
            if poly_identity is not None:
                for subclass in _all_subclasses(cls):
                    if getattr(subclass, poly_attr, None) == poly_identity:
                        cls = subclass
                        break

        return super().__new__(cls)

    def __init__(self, _obj: Any = None, _set_defaults: bool = False,
                 **kwargs):
        """
        Create a DFF schema class instance

        schema = MySchema(field1=value1, ...)
            or
        schema = MySchema(object)

        :param _obj: initialize fields from the given object (another schema
            instance or a dictionary)
        :param _set_defaults: initialize fields missing from both `_obj` and
            keyword arguments to their defaults, if any
        :param kwargs: keyword arguments are assigned to the corresponding
            instance attributes, including fields
        """
        super().__init__(partial=True)

        if _obj is None:
            kw = kwargs
        else:
            if isinstance(_obj, dict):
                kw = dict(_obj)
            else:
                kw = dict(self.dump(_obj).items())
            kw.update(kwargs)

        for name, val in kw.items():
            setattr(self, name, val)

        if _set_defaults:
            # Initialize the missing fields with their defaults
            for name, f in self.fields.items():
                if not hasattr(self, name) and f.dump_default is not missing:
                    default = f.dump_default
                    if callable(default):
                        default = default()
                    try:
                        setattr(self, name, default)
                    except AttributeError:
                        # Read-only property in a subclass
                        pass

    def __setattr__(self, name: str, value: Any) -> None:
        """
        Deserialize and validate fields on assignment

        :param name: attribute name
        :param value: attribute value
        """
        if value is not None:
            try:
                field = self.fields[name]
            except (AttributeError, KeyError):
                pass
            else:
                if hasattr(field, 'nested') and \
                        isinstance(field.nested, type) and \
                        issubclass(field.nested, DFFSchema):
                    if not isinstance(value, field.nested):
                        value = field.nested(value, _set_defaults=True)
                elif isinstance(field, fields.List) and \
                        hasattr(field.inner, 'nested') and \
                        isinstance(field.inner.nested, type) and \
                        issubclass(field.inner.nested, DFFSchema):
                    klass = field.inner.nested
                    value = [item if isinstance(item, klass) else klass(item)
                             for item in value]
                else:
                    try:
                        value = field.deserialize(value)
                    except MarshmallowValidationError as e:
                        if isinstance(field, fields.DateTime) and \
                                isinstance(value, datetime.datetime):
                            pass
                        else:
                            raise ValidationError(
                                name, '{}: {}'.format(
                                    name, '; '.join(_flatten(e.messages))))
        super().__setattr__(name, value)

    @classmethod
    def from_dict(cls, data: TDict[str, Any]) -> 'DFFSchema':
        """
        Create a schema instance from a dictionary, e.g. a parsed JSON
        document, rejecting unknown keys and filling in defaults

        :param data: field values

        :return: new schema instance
        """
        if not isinstance(data, dict):
            raise ValidationError(
                cls.__name__, 'Expected a JSON object for {}'.format(
                    cls.__name__))
        unknown = sorted(set(data) - set(cls._declared_fields))
        if unknown:
            raise ValidationError(
                unknown[0], 'Unknown {} field(s): {}'.format(
                    cls.__name__, ', '.join(unknown)))
        return cls(_set_defaults=True, **data)

    def to_dict(self) -> TDict[str, Any]:
        """
        Serialize class instance to dictionary

        :return: dictionary containing all fields
        """
        return self.dump(self)


def _all_subclasses(cls: type) -> list:
    result = []
    for subclass in cls.__subclasses__():
        result.append(subclass)
        result += _all_subclasses(subclass)
    return result


def _flatten(messages: Any) -> list:
    if isinstance(messages, dict):
        return [m for v in messages.values() for m in _flatten(v)]
    if isinstance(messages, (list, tuple)):
        return [m for v in messages for m in _flatten(v)]
    return [str(messages)]
