"""
DFF Core: main package

Learning coarse-grained force fields from equilibrium samples with denoising
diffusion models, simulating with the extracted Denoising Force Field, and
analyzing the results against analytic reference systems.
"""

import datetime
import json
import logging
import os
from typing import Any

import numpy
from flask import Config
from marshmallow import missing

from .schemas import DFFSchema


__all__ = ['config', 'json_dumps', 'logger']


class DFFSchemaEncoder(json.JSONEncoder):
    """
    JSON encoder that can serialize DFFSchema class instances and numpy
    scalars/arrays
    """
    def default(self, obj):
        if isinstance(obj, type(missing)):
            return None
        if isinstance(obj, DFFSchema):
            return obj.dump(obj)
        if isinstance(obj, numpy.ndarray):
            return obj.tolist()
        if isinstance(obj, numpy.generic):
            return obj.item()
        if isinstance(obj, datetime.datetime):
            return obj.isoformat(' ')
        return super(DFFSchemaEncoder, self).default(obj)


def json_dumps(obj: Any, **kwargs) -> str:
    """
    Serialize a Python object to JSON

    :param obj: object to serialize; can be a DFFSchema instance or a compound
        object (list, dict, ...) possibly including schemas and numpy values
    :param kwargs: extra keyword arguments to :func:`json.dumps`

    :return: JSON string
    """
    return json.dumps(obj, cls=DFFSchemaEncoder, **kwargs)


config = Config(os.path.dirname(os.path.abspath(__file__)))
config.from_object('dff_core.default_cfg')
config.from_envvar('DFF_CORE_CONFIG', silent=True)
config.from_prefixed_env('DFF_CORE')

logger = logging.getLogger('dff_core')
if not logger.handlers:
    _handler = logging.StreamHandler()
    _handler.setFormatter(logging.Formatter(config['LOG_FORMAT']))
    logger.addHandler(_handler)
logger.setLevel(config['LOG_LEVEL'])
