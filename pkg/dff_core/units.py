"""
DFF Core: physical units, simulation presets, and cross-validated noise levels

Simulations run in a consistent internal unit system: length in nm, time in
ps, mass in g/mol (amu), energy in kJ/mol. Settings quoted in femtoseconds,
inverse picoseconds, or Kelvin are converted with astropy.
"""

from typing import Dict as TDict, List as TList, Optional, Tuple, Union

from astropy import constants as const, units as u

from .errors import ValidationError
from .models import LangevinConfig, ModelConfig, TrainConfig
from .schedule import from_zero_based


__all__ = [
    'ALANINE_NOISE_LEVELS', 'FAST_FOLDER_NOISE_LEVELS',
    'FAST_FOLDER_TEMPERATURES', 'INTERNAL_UNITS', 'PRESETS',
    'cross_validated_level', 'kt_from_temperature', 'preset_config',
    'to_internal', 'training_preset', 'units_table',
]


# Internal units of each physical quantity
INTERNAL_UNITS = {
    'length': u.nm,
    'time': u.ps,
    'mass': u.g/u.mol,
    'energy': u.kJ/u.mol,
    'friction': 1/u.ps,
}

# Cross-validated DFF noise levels, 0-based as quoted in hyperparameter tables
ALANINE_NOISE_LEVELS = {
    10000: 26, 20000: 25, 50000: 20, 100000: 19, 200000: 17, 500000: 8,
}
FAST_FOLDER_NOISE_LEVELS = {
    'chignolin': 20, 'trp_cage': 15, 'bba': 5, 'villin': 5, 'protein_g': 5,
}
FAST_FOLDER_TEMPERATURES = {
    'chignolin': 340, 'trp_cage': 290, 'bba': 325, 'villin': 360,
    'protein_g': 350,
}

# Simulation settings with units; temperature in Kelvin
PRESETS = {
    'alanine': dict(
        dt=2*u.fs, save_every=250, temperature=300*u.K, friction=1/u.ps,
        mass=12.8*u.g/u.mol, n_steps=1000000, n_replicas=100),
    'fast_folder': dict(
        dt=2*u.fs, save_every=500, temperature=None, friction=1/u.ps,
        mass=12*u.g/u.mol, n_steps=6000000, n_replicas=1),
}

# Network and optimizer hyperparameters of the reference experiments
_TRAINING_PRESETS = {
    'alanine': (dict(n_layers=2, n_features=96),
                dict(batch_size=1024, learning_rate=3e-4)),
    'chignolin': (dict(n_layers=3, n_features=64),
                  dict(batch_size=512, learning_rate=4e-4)),
    'trp_cage': (dict(n_layers=3, n_features=128),
                 dict(batch_size=512, learning_rate=4e-4)),
    'bba': (dict(n_layers=3, n_features=96),
            dict(batch_size=512, learning_rate=4e-4)),
    'villin': (dict(n_layers=3, n_features=128),
               dict(batch_size=512, learning_rate=4e-4)),
    'protein_g': (dict(n_layers=3, n_features=128),
                  dict(batch_size=256, learning_rate=4e-4)),
}


def to_internal(value: Union[float, u.Quantity], quantity: str,
                unit: Optional[Union[str, u.UnitBase]] = None) -> float:
    """
    Convert a value to internal units

    :param value: plain number (in `unit`) or astropy quantity
    :param quantity: "length", "time", "mass", "energy", or "friction"
    :param unit: unit of a plain number; defaults to the internal unit

    :return: value in internal units
    """
    try:
        target = INTERNAL_UNITS[quantity]
    except KeyError:
        raise ValidationError(
            'quantity', 'Unknown physical quantity "{}"'.format(quantity))
    if not isinstance(value, u.Quantity):
        value = u.Quantity(value, unit if unit is not None else target)
    try:
        return float(value.to_value(target))
    except u.UnitConversionError as e:
        raise ValidationError(quantity, str(e))


def kt_from_temperature(temperature: Union[float, u.Quantity]) -> float:
    """
    Thermal energy k_B T per mole in kJ/mol

    :param temperature: temperature in Kelvin or astropy quantity

    :return: kT in internal energy units
    """
    if not isinstance(temperature, u.Quantity):
        temperature = temperature*u.K
    if temperature.to_value(u.K) < 0:
        raise ValidationError('temperature', 'Temperature must be non-negative')
    return float((const.R*temperature).to_value(u.kJ/u.mol))


def cross_validated_level(preset: str, key: Union[str, int]) -> int:
    """
    Return the 1-based cross-validated DFF noise level of a reference
    experiment

    :param preset: "alanine" or "fast_folder"
    :param key: alanine training-set size (nearest tabulated size is used) or
        fast-folder protein name

    :return: 1-based noise level
    """
    if preset == 'alanine':
        size = min(ALANINE_NOISE_LEVELS, key=lambda n: abs(n - int(key)))
        return from_zero_based(ALANINE_NOISE_LEVELS[size])
    if preset == 'fast_folder':
        try:
            return from_zero_based(FAST_FOLDER_NOISE_LEVELS[key])
        except KeyError:
            raise ValidationError(
                'protein', 'Unknown protein "{}"; expected one of {}'.format(
                    key, ', '.join(FAST_FOLDER_NOISE_LEVELS)))
    raise ValidationError('preset', 'Unknown preset "{}"'.format(preset))


def preset_config(name: str, protein: Optional[str] = None,
                  training_size: int = 100000, **overrides) -> LangevinConfig:
    """
    Build a simulation config from a named preset in internal units

    :param name: "alanine" or "fast_folder"
    :param protein: fast-folder protein name; selects temperature and noise
        level
    :param training_size: alanine training-set size selecting the noise level
    :param overrides: LangevinConfig fields overriding the preset values

    :return: simulation config
    """
    try:
        p = PRESETS[name]
    except KeyError:
        raise ValidationError(
            'preset', 'Unknown preset "{}"; expected one of {}'.format(
                name, ', '.join(PRESETS)))
    if name == 'fast_folder':
        if protein is None:
            raise ValidationError('protein', 'Fast-folder preset needs protein')
        level = cross_validated_level(name, protein)
        temperature = FAST_FOLDER_TEMPERATURES[protein]*u.K
    else:
        level = cross_validated_level(name, training_size)
        temperature = p['temperature']
    fields = dict(
        mass=to_internal(p['mass'], 'mass'),
        friction=to_internal(p['friction'], 'friction'),
        kT=kt_from_temperature(temperature),
        dt=to_internal(p['dt'], 'time'),
        n_steps=p['n_steps'], save_every=p['save_every'],
        n_replicas=p['n_replicas'], noise_level=level)
    fields.update(overrides)
    return LangevinConfig(_set_defaults=True, **fields)


def training_preset(name: str, **overrides) \
        -> Tuple[ModelConfig, TrainConfig]:
    """
    Network and optimizer hyperparameters of a reference experiment

    :param name: "alanine" or a fast-folder protein name
    :param overrides: ModelConfig or TrainConfig fields to override

    :return: model and training configs
    """
    try:
        model, train = _TRAINING_PRESETS[name]
    except KeyError:
        raise ValidationError(
            'preset', 'Unknown training preset "{}"; expected one of {}'
            .format(name, ', '.join(_TRAINING_PRESETS)))
    model, train = dict(model), dict(train, ema_decay=0.995)
    for k, v in overrides.items():
        if k in ModelConfig._declared_fields:
            model[k] = v
        elif k in TrainConfig._declared_fields:
            train[k] = v
        else:
            raise ValidationError(k, 'Unknown hyperparameter "{}"'.format(k))
    return (ModelConfig(_set_defaults=True, **model),
            TrainConfig(_set_defaults=True, **train))


def units_table() -> TList[TDict[str, str]]:
    """
    Conversion table from quoted simulation settings to internal units

    :return: list of rows {"quantity", "quoted", "internal"}
    """
    rows = []
    for quantity, value in (('time', 2*u.fs), ('friction', 1/u.ps),
                            ('mass', 12.8*u.g/u.mol),
                            ('length', 10*u.Angstrom)):
        rows.append(dict(
            quantity=quantity, quoted=str(value),
            internal='{:.6g} {}'.format(
                to_internal(value, quantity),
                INTERNAL_UNITS[quantity].to_string())))
    rows.append(dict(
        quantity='energy', quoted='kT at 300 K',
        internal='{:.6g} {}'.format(
            kt_from_temperature(300),
            INTERNAL_UNITS['energy'].to_string())))
    return rows
