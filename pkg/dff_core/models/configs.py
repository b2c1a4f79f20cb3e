"""
DFF Core: configuration data models for the score network, trainer, and
simulator
"""

from typing import Optional

from marshmallow.fields import Integer, String
from marshmallow.validate import OneOf, Range

from ..schemas import Boolean, DFFSchema, Float


__all__ = ['LangevinConfig', 'ModelConfig', 'TrainConfig']


class ModelConfig(DFFSchema):
    """
    Score network architecture and diffusion process

    Attributes::
        n_beads: number of CG beads (graph nodes)
        dim: spatial dimension
        n_layers: number of pairwise attention layers
        n_features: hidden width
        L: number of noise levels
        conservative: predict noise as the gradient of a scalar energy; if
            unset, use a direct vector head
        embed_dim: width of the learned per-bead embeddings
        anchored: append a fixed origin node so that the energy may depend on
            absolute positions; required for single-particle systems in an
            external potential
        schedule: "cosine" or "linear"
        beta_min: first beta of the linear schedule
        beta_max: last beta of the linear schedule
        seed: parameter initialization seed
    """
    n_beads: int = Integer(dump_default=1, validate=Range(min=1))
    dim: int = Integer(dump_default=3, validate=OneOf([1, 2, 3]))
    n_layers: int = Integer(dump_default=2, validate=Range(min=1))
    n_features: int = Integer(dump_default=64, validate=Range(min=1))
    L: int = Integer(dump_default=1000, validate=Range(min=1))
    conservative: bool = Boolean(dump_default=True)
    embed_dim: int = Integer(dump_default=16, validate=Range(min=1))
    anchored: bool = Boolean(dump_default=False)
    schedule: str = String(
        dump_default='cosine', validate=OneOf(['cosine', 'linear']))
    beta_min: float = Float(
        dump_default=1e-4, validate=Range(min=0, max=1, min_inclusive=False,
                                          max_inclusive=False))
    beta_max: float = Float(
        dump_default=0.02, validate=Range(min=0, max=1, min_inclusive=False,
                                          max_inclusive=False))
    seed: int = Integer(dump_default=0)


class TrainConfig(DFFSchema):
    """
    Denoising training hyperparameters

    Attributes::
        batch_size: number of configurations per step
        learning_rate: initial Adam learning rate
        min_learning_rate: final learning rate of the cosine decay
        iterations: number of optimizer steps
        ema_decay: exponential moving average decay
        augment_rotations: premultiply each batch configuration by a random
            proper rotation
        noise_split: fraction of levels in the "low" bucket; the two buckets
            are sampled with 50% probability each
        seed: seed of the training random stream
        loss_weighting: "unit" (K_i = 1) or "elbo"
        validation_interval: iterations between validation loss evaluations
        patience: number of validation evaluations without improvement before
            stopping early; 0 disables early stopping
        checkpoint_interval: iterations between periodic checkpoints written
            by the train job; 0 disables them
        force_matching_level: noise level at which the force-matching baseline
            evaluates the force field
        kT: energy scale of the force-matching baseline
    """
    batch_size: int = Integer(dump_default=512, validate=Range(min=1))
    learning_rate: float = Float(dump_default=4e-4, validate=Range(min=0))
    min_learning_rate: float = Float(dump_default=1e-5, validate=Range(min=0))
    iterations: int = Integer(dump_default=10000, validate=Range(min=0))
    ema_decay: float = Float(
        dump_default=0.995, validate=Range(min=0, max=1, min_inclusive=False,
                                           max_inclusive=False))
    augment_rotations: bool = Boolean(dump_default=True)
    noise_split: float = Float(
        dump_default=0.1, validate=Range(min=0, max=1, min_inclusive=False,
                                         max_inclusive=False))
    seed: int = Integer(dump_default=0)
    loss_weighting: str = String(
        dump_default='unit', validate=OneOf(['unit', 'elbo']))
    validation_interval: int = Integer(dump_default=500, validate=Range(min=1))
    patience: int = Integer(dump_default=0, validate=Range(min=0))
    checkpoint_interval: int = Integer(dump_default=0, validate=Range(min=0))
    force_matching_level: int = Integer(dump_default=1, validate=Range(min=1))
    kT: float = Float(
        dump_default=1.0, validate=Range(min=0, min_inclusive=False))


class LangevinConfig(DFFSchema):
    """
    CG simulation settings in internal units (nm, ps, amu, kJ/mol)

    Attributes::
        mass: per-bead mass M
        friction: friction coefficient gamma (1/time)
        kT: thermal energy
        dt: time step
        n_steps: number of integration steps per replica
        save_every: number of steps between saved frames
        n_replicas: number of independent replicas
        noise_level: level i at which the DFF is evaluated
        seed: seed of the replica random streams
        save_initial: store the initial frame of each replica
    """
    mass: float = Float(
        dump_default=1.0, validate=Range(min=0, min_inclusive=False))
    friction: float = Float(
        dump_default=1.0, validate=Range(min=0, min_inclusive=False))
    kT: float = Float(dump_default=1.0, validate=Range(min=0))
    dt: float = Float(
        dump_default=1e-3, validate=Range(min=0, min_inclusive=False))
    n_steps: int = Integer(dump_default=1000, validate=Range(min=0))
    save_every: int = Integer(dump_default=10, validate=Range(min=1))
    n_replicas: int = Integer(dump_default=1, validate=Range(min=1))
    noise_level: Optional[int] = Integer(dump_default=1, validate=Range(min=1))
    seed: int = Integer(dump_default=0)
    save_initial: bool = Boolean(dump_default=True)
