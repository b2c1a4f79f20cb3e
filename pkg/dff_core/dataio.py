"""
DFF Core: trajectory files, model checkpoints, and dataset splits

Both binary formats are little-endian.

Trajectory file:
    magic "DFFTRAJ1", u32 version (1), u32 n_beads, u32 dim, u64 n_frames,
    f64 kT, f64 dt, u64 save_every, u8 provenance, u32 n_segments,
    n_segments x u64 segment starts, then frames as float32, frame-major,
    bead-major, coordinate-minor

Checkpoint file:
    magic "DFFCKPT1" followed by entries until the end of file; each entry is
    u16 name length, UTF-8 name, u8 rank, rank x u64 dims, float64 payload
"""

import os
import struct
from typing import Dict as TDict, Optional, Sequence, Type, Union

from marshmallow.fields import Boolean, Integer, String
from marshmallow.validate import OneOf
from numpy import (
    array, asarray, dtype, float32, float64, frombuffer, loadtxt, ndarray)
from numpy.random import default_rng

from . import config, logger
from .errors import ValidationError
from .errors.dataio import (
    CheckpointCorruptedError, CheckpointFormatError,
    CheckpointIncompatibleError, TrajectoryCorruptedError,
    TrajectoryFormatError)
from .models import DatasetSplit, ModelConfig, PROVENANCES, TrainConfig, \
    Trajectory
from .schedule import NoiseSchedule
from .schemas import DFFSchema
from .scorenet import ScoreModel
from .trainer import Trainer


__all__ = [
    'read_checkpoint', 'read_checkpoint_entries', 'read_checkpoint_kt',
    'read_csv_trajectory', 'read_trajectory', 'resume_trainer',
    'split_dataset', 'write_checkpoint', 'write_checkpoint_entries',
    'write_trajectory',
]


TRAJ_MAGIC = b'DFFTRAJ1'
TRAJ_VERSION = 1
TRAJ_HEADER = struct.Struct('<8sIIIQddQBI')
CKPT_MAGIC = b'DFFCKPT1'

_F32 = dtype('<f4')
_F64 = dtype('<f8')


def write_trajectory(path: str, traj: Trajectory) -> None:
    """
    Write a trajectory file

    :param path: output file path
    :param traj: trajectory
    """
    header = TRAJ_HEADER.pack(
        TRAJ_MAGIC, TRAJ_VERSION, traj.n_beads, traj.dim, traj.n_frames,
        float(traj.kT), float(traj.dt), int(traj.save_every),
        PROVENANCES.index(traj.provenance), len(traj.segments))
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(header)
        f.write(struct.pack('<{}Q'.format(len(traj.segments)),
                            *traj.segments))
        f.write(asarray(traj.frames, _F32).tobytes())


def read_trajectory(path: str) -> Trajectory:
    """
    Read a trajectory file

    :param path: file path

    :return: trajectory
    """
    with open(path, 'rb') as f:
        data = f.read()
    if len(data) < TRAJ_HEADER.size:
        raise TrajectoryCorruptedError(
            path=path, expected=TRAJ_HEADER.size, actual=len(data))
    magic, version, n_beads, dim, n_frames, kT, dt, save_every, prov, \
        n_segments = TRAJ_HEADER.unpack_from(data)
    if magic != TRAJ_MAGIC:
        raise TrajectoryFormatError(path=path, reason='bad magic')
    if version != TRAJ_VERSION:
        raise TrajectoryFormatError(
            path=path, reason='unsupported version {}'.format(version))
    if prov >= len(PROVENANCES):
        raise TrajectoryFormatError(
            path=path, reason='unknown provenance code {}'.format(prov))
    if not n_beads or not dim:
        raise TrajectoryFormatError(path=path, reason='empty frame shape')

    seg_end = TRAJ_HEADER.size + 8*n_segments
    expected = seg_end + 4*n_frames*n_beads*dim
    if len(data) != expected:
        raise TrajectoryCorruptedError(
            path=path, expected=expected, actual=len(data))
    segments = list(struct.unpack_from(
        '<{}Q'.format(n_segments), data, TRAJ_HEADER.size))
    frames = frombuffer(data, _F32, offset=seg_end).astype(float32) \
        .reshape(n_frames, n_beads, dim)
    try:
        return Trajectory(
            frames, n_beads=n_beads, dim=dim, kT=kT, dt=dt,
            save_every=save_every, provenance=PROVENANCES[prov],
            segments=segments)
    except ValidationError as e:
        raise TrajectoryFormatError(path=path, reason=str(e))


def read_csv_trajectory(path: str, n_beads: int, dim: int, kT: float = 1.0,
                        dt: float = 0.0, save_every: int = 0) -> Trajectory:
    """
    Import external frames from CSV: one frame per row, columns bead-major and
    coordinate-minor; lines starting with "#" are ignored

    :param path: file path
    :param n_beads: number of beads
    :param dim: spatial dimension
    :param kT: temperature of the data
    :param dt: time step between frames, if known
    :param save_every: save interval, if known

    :return: trajectory with "external" provenance
    """
    try:
        data = loadtxt(path, delimiter=',', ndmin=2, comments='#')
    except ValueError as e:
        raise TrajectoryFormatError(path=path, reason=str(e))
    if data.size and data.shape[1] != n_beads*dim:
        raise TrajectoryFormatError(
            path=path, reason='expected {} columns, got {}'.format(
                n_beads*dim, data.shape[1]))
    return Trajectory(
        data.reshape(-1, n_beads, dim), n_beads=n_beads, dim=dim, kT=kT,
        dt=dt, save_every=save_every, provenance='external')


def _choices(field) -> Optional[Sequence]:
    for v in getattr(field, 'validators', []):
        if isinstance(v, OneOf) and isinstance(field, String):
            return list(v.choices)
    return None


def _encode_schema(prefix: str, obj: DFFSchema) -> TDict[str, ndarray]:
    res = {}
    for name, field in obj._declared_fields.items():
        value = getattr(obj, name)
        choices = _choices(field)
        if choices is not None:
            value = choices.index(value)
        res['{}/{}'.format(prefix, name)] = array([float(value)], float64)
    return res


def _decode_schema(cls: Type[DFFSchema], prefix: str,
                   entries: TDict[str, ndarray]) -> DFFSchema:
    values, missing = {}, []
    for name, field in cls._declared_fields.items():
        key = '{}/{}'.format(prefix, name)
        if key not in entries:
            missing.append(key)
            continue
        v = float(entries[key].ravel()[0])
        choices = _choices(field)
        if choices is not None:
            v = choices[int(v)]
        elif isinstance(field, Boolean):
            v = bool(v)
        elif isinstance(field, Integer):
            v = int(v)
        values[name] = v
    if missing:
        raise CheckpointIncompatibleError(missing=', '.join(missing))
    return cls(_set_defaults=True, **values)


def write_checkpoint_entries(path: str, entries: TDict[str, ndarray]) -> None:
    """
    Write named float64 arrays to a checkpoint container

    :param path: output file path
    :param entries: dictionary {name: array}
    """
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(CKPT_MAGIC)
        for name, a in entries.items():
            a = asarray(a, _F64)
            name = name.encode('utf-8')
            f.write(struct.pack('<H', len(name)))
            f.write(name)
            f.write(struct.pack('<B', a.ndim))
            f.write(struct.pack('<{}Q'.format(a.ndim), *a.shape))
            f.write(a.tobytes())


def read_checkpoint_entries(path: str) -> TDict[str, ndarray]:
    """
    Read all named arrays of a checkpoint container

    :param path: file path

    :return: dictionary {name: float64 array}
    """
    with open(path, 'rb') as f:
        data = f.read()
    if data[:len(CKPT_MAGIC)] != CKPT_MAGIC:
        raise CheckpointFormatError(path=path)
    entries, pos, n = {}, len(CKPT_MAGIC), len(data)
    while pos < n:
        name = None
        try:
            (name_len,) = struct.unpack_from('<H', data, pos)
            pos += 2
            if pos + name_len > n:
                raise struct.error()
            name = data[pos:pos + name_len].decode('utf-8')
            pos += name_len
            (rank,) = struct.unpack_from('<B', data, pos)
            pos += 1
            shape = struct.unpack_from('<{}Q'.format(rank), data, pos)
            pos += 8*rank
            size = 1
            for k in shape:
                size *= k
            if pos + 8*size > n:
                raise struct.error()
        except (struct.error, UnicodeDecodeError):
            raise CheckpointCorruptedError(path=path, entry=name)
        entries[name] = frombuffer(
            data, _F64, size, pos).astype(float64).reshape(shape)
        pos += 8*size
    return entries


def write_checkpoint(path: str, model: ScoreModel,
                     trainer: Optional[Trainer] = None,
                     state: Optional[TDict[str, ndarray]] = None) -> None:
    """
    Save a model and, optionally, the complete training state

    :param path: output file path
    :param model: model; its parameters serve as both raw and EMA parameters
        if no training state is given
    :param trainer: trainer whose state (raw and EMA parameters, optimizer
        moments, random stream, iteration, history) is saved
    :param state: explicit trainer state snapshot, e.g. the last good state
        of a diverged run; requires `trainer` for its configuration
    """
    entries = _encode_schema('config', model.config)
    entries['schedule/betas'] = asarray(model.schedule.betas)
    if trainer is not None:
        entries.update(_encode_schema('train_config', trainer.config))
        entries.update(state if state is not None else trainer.state())
    else:
        for name, a in model.parameter_arrays().items():
            entries['param/' + name] = a
            entries['ema/' + name] = a
    write_checkpoint_entries(path, entries)
    logger.debug('Saved checkpoint %s (%d entries)', path, len(entries))


def _build_model(entries: TDict[str, ndarray], prefix: str) -> ScoreModel:
    cfg = _decode_schema(ModelConfig, 'config', entries)
    if 'schedule/betas' not in entries:
        raise CheckpointIncompatibleError(missing='schedule/betas')
    schedule = NoiseSchedule.from_betas(entries['schedule/betas'], cfg.schedule)
    model = ScoreModel(cfg, schedule)
    names = [name for name, _ in model.named_parameters()]
    missing = [prefix + name for name in names if prefix + name not in entries]
    if missing:
        raise CheckpointIncompatibleError(missing=', '.join(missing))
    model.load_parameter_arrays(
        {name: entries[prefix + name] for name in names})
    return model


def read_checkpoint(path: str, ema: bool = True) -> ScoreModel:
    """
    Load a model from a checkpoint

    :param path: file path
    :param ema: load the EMA parameters (used for sampling and simulation);
        otherwise load the raw parameters

    :return: model
    """
    return _build_model(
        read_checkpoint_entries(path), 'ema/' if ema else 'param/')


def resume_trainer(path: str, data: Union[ndarray, Trajectory],
                   validation_data: Union[ndarray, Trajectory, None] = None,
                   forces: Union[ndarray, Trajectory, None] = None,
                   **overrides) -> Trainer:
    """
    Recreate a trainer from a checkpoint so that training continues exactly
    as if uninterrupted

    :param path: checkpoint file path
    :param data: training data
    :param validation_data: validation data
    :param forces: forces for the force-matching baseline
    :param overrides: TrainConfig fields to change, e.g. a larger iteration
        count

    :return: trainer in the saved state
    """
    entries = read_checkpoint_entries(path)
    model = _build_model(entries, 'param/')
    train_cfg = _decode_schema(TrainConfig, 'train_config', entries)
    for k, v in overrides.items():
        setattr(train_cfg, k, v)
    required = ('iteration', 'rng_state', 'scheduler', 'history',
                'early_stopping')
    missing = [k for k in required if k not in entries]
    if missing:
        raise CheckpointIncompatibleError(missing=', '.join(missing))
    trainer = Trainer(model, data, train_cfg, validation_data, forces)
    trainer.restore(entries)
    return trainer


def split_dataset(traj: Union[Trajectory, int],
                  fractions: Optional[Sequence[float]] = None,
                  seed: int = 0) -> DatasetSplit:
    """
    Shuffle frames and split them into train/validation/test subsets

    :param traj: trajectory or number of frames
    :param fractions: train/validation/test fractions summing to 1; defaults
        to SPLIT_FRACTIONS
    :param seed: shuffling seed

    :return: split holding index arrays
    """
    if fractions is None:
        fractions = config['SPLIT_FRACTIONS']
    fractions = [float(f) for f in fractions]
    if len(fractions) != 3 or min(fractions) < 0 or \
            abs(sum(fractions) - 1) > 1e-9:
        raise ValidationError(
            'fractions', 'Need three non-negative fractions summing to 1')
    n = traj if isinstance(traj, int) else len(traj)
    perm = default_rng(seed).permutation(n)
    n_train = min(int(round(fractions[0]*n)), n)
    n_val = min(int(round(fractions[1]*n)), n - n_train)
    split = DatasetSplit(seed=seed, fractions=fractions)
    split.train = perm[:n_train]
    split.validation = perm[n_train:n_train + n_val]
    split.test = perm[n_train + n_val:]
    return split


def read_checkpoint_kt(path: str) -> Optional[float]:
    """
    Return the training temperature stored in a checkpoint, if any

    :param path: checkpoint file path

    :return: kT of the training config; None for checkpoints saved without a
        trainer
    """
    entries = read_checkpoint_entries(path)
    if 'train_config/kT' not in entries:
        return None
    return float(entries['train_config/kT'].ravel()[0])
