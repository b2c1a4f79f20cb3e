"""
DFF Core: trajectory and dataset split data models
"""

from typing import List as TList, Optional, Sequence, Tuple

from marshmallow.fields import Integer, List, String
from marshmallow.validate import OneOf, Range
from numpy import asarray, concatenate, float32, isfinite, ndarray, zeros

from ..errors import ValidationError
from ..schemas import DFFSchema, Float


__all__ = ['DatasetSplit', 'PROVENANCES', 'Trajectory']


# Provenance tags in the order of their binary codes
PROVENANCES = ('oracle', 'simulation', 'iid', 'external')


class Trajectory(DFFSchema):
    """
    Time-ordered CG frames with metadata

    Frames are stored as a single-precision array of shape
    (n_frames, n_beads, dim). Multi-replica runs are concatenated replica by
    replica; `segments` holds the sorted start indices of the contiguous
    segments (empty = one segment spanning all frames).

    Attributes::
        kT: temperature in energy units
        dt: integration time step; 0 for i.i.d. samples
        save_every: number of integration steps between frames; 0 for i.i.d.
            samples
        provenance: "oracle", "simulation", "iid", or "external"
        segments: segment start indices
    """
    kT: float = Float(dump_default=1.0, validate=Range(min=0))
    dt: float = Float(dump_default=0.0, validate=Range(min=0))
    save_every: int = Integer(dump_default=0, validate=Range(min=0))
    provenance: str = String(
        dump_default='external', validate=OneOf(PROVENANCES))
    segments: TList[int] = List(
        Integer(validate=Range(min=0)), dump_default=list)

    frames: ndarray = None

    def __init__(self, frames: Optional[ndarray] = None,
                 n_beads: Optional[int] = None, dim: Optional[int] = None,
                 **kwargs):
        """
        Create a trajectory

        :param frames: array-like of shape (n_frames, n_beads, dim); a 2D
            array is treated as a series of single-bead frames
        :param n_beads: number of beads for an empty trajectory
        :param dim: spatial dimension for an empty trajectory
        :param kwargs: metadata fields, see :class:`Trajectory`
        """
        super().__init__(_set_defaults=True, **kwargs)

        if frames is None:
            frames = zeros((0, n_beads or 1, dim or 1), float32)
        frames = asarray(frames, float32)
        if frames.ndim == 2:
            frames = frames[:, None, :]
        if frames.ndim != 3:
            raise ValidationError(
                'frames', 'Trajectory frames must be a 3D array, got shape '
                '{}'.format(frames.shape))
        if not isfinite(frames).all():
            raise ValidationError('frames', 'Trajectory frames must be finite')
        self.frames = frames

        segments = [int(s) for s in self.segments]
        if segments != sorted(segments) or \
                any(s > len(frames) for s in segments) or \
                len(set(segments)) != len(segments):
            raise ValidationError(
                'segments', 'Segment boundaries must be sorted, unique, and '
                'within 0..{}'.format(len(frames)))
        self.segments = segments

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_beads(self) -> int:
        return self.frames.shape[1]

    @property
    def dim(self) -> int:
        return self.frames.shape[2]

    def __len__(self) -> int:
        return self.n_frames

    def segment_slices(self) -> TList[Tuple[int, int]]:
        """
        Return contiguous segments as (start, stop) frame index pairs

        :return: list of non-empty segments in frame order
        """
        starts = list(self.segments)
        if not starts or starts[0] != 0:
            starts.insert(0, 0)
        stops = starts[1:] + [self.n_frames]
        return [(a, b) for a, b in zip(starts, stops) if b > a]

    def segment_frames(self) -> TList[ndarray]:
        """
        Return frames of each contiguous segment

        :return: list of (n, n_beads, dim) arrays
        """
        return [self.frames[a:b] for a, b in self.segment_slices()]

    def subset(self, indices: Sequence[int]) -> 'Trajectory':
        """
        Return a single-segment trajectory made of the given frames

        :param indices: frame indices

        :return: new trajectory sharing the metadata of this one
        """
        return Trajectory(
            self.frames[asarray(indices, int)], kT=self.kT, dt=self.dt,
            save_every=self.save_every, provenance=self.provenance)

    @classmethod
    def concatenate(cls, trajectories: Sequence['Trajectory']) \
            -> 'Trajectory':
        """
        Join trajectories as separate segments

        :param trajectories: non-empty sequence of trajectories with equal
            bead count and dimension; metadata is taken from the first one

        :return: new trajectory
        """
        first = trajectories[0]
        segments, offset = [], 0
        for t in trajectories:
            for a, _ in t.segment_slices():
                segments.append(offset + a)
            offset += t.n_frames
        return cls(
            concatenate([t.frames for t in trajectories]), kT=first.kT,
            dt=first.dt, save_every=first.save_every,
            provenance=first.provenance, segments=segments)


class DatasetSplit(DFFSchema):
    """
    Frame-level train/validation/test partition

    Attributes::
        seed: shuffling seed
        fractions: requested train/validation/test fractions
        train: training frame indices (numpy array)
        validation: validation frame indices
        test: test frame indices
    """
    seed: int = Integer(dump_default=0)
    fractions: TList[float] = List(
        Float(), dump_default=lambda: [0.7, 0.1, 0.2])

    train: ndarray = None
    validation: ndarray = None
    test: ndarray = None

    def sizes(self) -> Tuple[int, int, int]:
        return len(self.train), len(self.validation), len(self.test)
