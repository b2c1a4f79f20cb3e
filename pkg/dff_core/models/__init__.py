"""
DFF Core: object data models

DFF Core object data model is essentially a customized marshmallow
self-serializable schema subclassing from :class:`dff_core.schemas.DFFSchema`.
Such models have a predefined set of typed fields, validate values on
assignment, and can be loaded from another object or a dictionary of
field-value pairs (e.g. a JSON configuration document) and dumped to a
dictionary. Bulk numeric data (trajectory frames, index arrays, map matrices)
is held in plain numpy attributes next to the serializable fields.
"""

from .configs import *
from .jobs import *
from .toy_systems import *
from .trajectory import *
