"""
DFF Core: toy system plugin package

A toy system plugin must subclass :class:`dff_core.models.toy_systems.ToySystem`
and implement at least its potential() and force() methods.
"""
