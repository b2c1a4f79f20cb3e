"""
DFF Core: file format errors (subcodes 7xx)
"""

from . import DFFError


__all__ = [
    'CheckpointCorruptedError', 'CheckpointFormatError',
    'CheckpointIncompatibleError', 'TrajectoryCorruptedError',
    'TrajectoryFormatError',
]


class TrajectoryFormatError(DFFError):
    """
    Trajectory file has a bad magic number, version, or header field

    Extra attributes::
        path: file path
        reason: description of the problem
    """
    subcode = 700
    message = 'Invalid trajectory file'


class TrajectoryCorruptedError(DFFError):
    """
    Trajectory file is truncated or has extra data

    Extra attributes::
        path: file path
        expected: expected number of bytes
        actual: actual number of bytes
    """
    subcode = 701
    message = 'Corrupted trajectory file'


class CheckpointFormatError(DFFError):
    """
    Checkpoint file has a bad magic number

    Extra attributes::
        path: file path
    """
    subcode = 702
    message = 'Invalid checkpoint file'


class CheckpointCorruptedError(DFFError):
    """
    Checkpoint entry is truncated

    Extra attributes::
        path: file path
        entry: name of the truncated entry, if known
    """
    subcode = 703
    message = 'Corrupted checkpoint file'


class CheckpointIncompatibleError(DFFError):
    """
    Checkpoint lacks entries required to restore a model

    Extra attributes::
        missing: names of the missing entries
    """
    subcode = 704
    message = 'Incompatible checkpoint'
