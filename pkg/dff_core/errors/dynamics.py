"""
DFF Core: simulation errors (subcodes 4xx)
"""

from . import DFFError


__all__ = ['AllReplicasDivergedError', 'SimulationDivergedError']


class SimulationDivergedError(DFFError):
    """
    Simulation or sampling state became non-finite or left the allowed range

    Extra attributes::
        step: integration step or noise level at which divergence was detected
    """
    subcode = 400
    message = 'Simulation diverged'


class AllReplicasDivergedError(DFFError):
    """
    Every simulation replica diverged

    Extra attributes::
        replicas: number of replicas
        steps: steps at which the replicas diverged
    """
    subcode = 401
    message = 'All replicas diverged'
