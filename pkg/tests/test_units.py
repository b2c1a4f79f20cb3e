"""
DFF Core: unit conversion and preset tests
"""

import pytest
from astropy import units as u

from dff_core.errors import ValidationError
from dff_core.units import (
    ALANINE_NOISE_LEVELS, cross_validated_level, kt_from_temperature,
    preset_config, to_internal, training_preset, units_table)


def test_conversions():
    assert to_internal(2, 'time', 'fs') == pytest.approx(0.002)
    assert to_internal(2*u.fs, 'time') == pytest.approx(0.002)
    assert to_internal(10*u.Angstrom, 'length') == pytest.approx(1.0)
    assert to_internal(1, 'friction', '1/ps') == pytest.approx(1.0)
    assert to_internal(1.5, 'mass') == 1.5
    with pytest.raises(ValidationError):
        to_internal(1, 'charge')
    with pytest.raises(ValidationError):
        to_internal(1*u.K, 'time')


def test_thermal_energy():
    assert kt_from_temperature(300) == pytest.approx(2.49434, abs=1e-5)
    assert kt_from_temperature(0) == 0
    with pytest.raises(ValidationError):
        kt_from_temperature(-1)


def test_cross_validated_levels():
    assert cross_validated_level('alanine', 100000) == 20
    assert cross_validated_level('alanine', 120000) == 20
    assert cross_validated_level('alanine', 500000) == 9
    assert cross_validated_level('fast_folder', 'chignolin') == 21
    assert cross_validated_level('fast_folder', 'villin') == 6
    assert set(ALANINE_NOISE_LEVELS) == {
        10000, 20000, 50000, 100000, 200000, 500000}
    with pytest.raises(ValidationError):
        cross_validated_level('fast_folder', 'lysozyme')
    with pytest.raises(ValidationError):
        cross_validated_level('ubiquitin', 1)


def test_alanine_preset():
    cfg = preset_config('alanine')
    assert cfg.dt == pytest.approx(0.002)
    assert cfg.save_every == 250
    assert cfg.kT == pytest.approx(2.49434, abs=1e-5)
    assert cfg.friction == pytest.approx(1.0)
    assert cfg.mass == pytest.approx(12.8)
    assert cfg.n_steps == 1000000
    assert cfg.noise_level == 20


def test_fast_folder_preset():
    cfg = preset_config('fast_folder', 'trp_cage', n_replicas=4)
    assert cfg.save_every == 500
    assert cfg.mass == pytest.approx(12)
    assert cfg.n_steps == 6000000
    assert cfg.noise_level == 16
    assert cfg.n_replicas == 4
    assert cfg.kT == pytest.approx(kt_from_temperature(290))
    with pytest.raises(ValidationError):
        preset_config('fast_folder')
    with pytest.raises(ValidationError):
        preset_config('water')


def test_training_preset():
    model, train = training_preset('chignolin', n_beads=10, iterations=50)
    assert (model.n_layers, model.n_features, model.n_beads) == (3, 64, 10)
    assert train.ema_decay == 0.995 and train.iterations == 50
    with pytest.raises(ValidationError):
        training_preset('chignolin', colour='red')


def test_units_table():
    rows = {row['quantity']: row for row in units_table()}
    assert rows['time']['internal'] == '0.002 ps'
    assert rows['length']['internal'] == '1 nm'
    assert rows['energy']['internal'].startswith('2.49434')
