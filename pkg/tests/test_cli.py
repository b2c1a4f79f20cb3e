"""
DFF Core: command-line and job tests
"""

import json
import os

import pytest
from numpy import linspace

from dff_core.cli import main
from dff_core.dataio import (
    read_checkpoint, read_checkpoint_entries, read_checkpoint_kt,
    read_trajectory)
from dff_core.errors.job import UnknownJobTypeError
from dff_core.resources.jobs import create_job, get_job_types
from dff_core.scorenet import dff_force


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def train_config(tmp_path):
    path = str(tmp_path/'config.json')
    with open(path, 'w') as f:
        json.dump({
            'model': {'n_layers': 1, 'n_features': 8, 'embed_dim': 4,
                      'L': 10},
            'train': {'iterations': 5, 'batch_size': 16,
                      'validation_interval': 5},
        }, f)
    return path


def test_job_types():
    assert set(get_job_types()) == {
        'gen-data', 'train', 'sample', 'simulate', 'analyze', 'ablate',
        'gradcheck'}
    with pytest.raises(UnknownJobTypeError):
        create_job('stacking')


def test_usage_errors(capsys, tmp_path):
    assert run(capsys)[0] == 2
    assert run(capsys, 'train')[0] == 2
    out = str(tmp_path/'x.traj')
    assert run(capsys, 'gen-data', '--system', 'double_well', '--out', out,
               '--colour', 'red')[0] == 2
    assert run(capsys, 'simulate', '--integrator', 'verlet', '--out', out)[0] \
        == 2


def test_domain_error_exit_code(capsys, tmp_path):
    code, out, err = run(
        capsys, 'gen-data', '--system', 'lennard_jones', '--out',
        str(tmp_path/'x.traj'))
    assert code == 1
    assert 'UnknownSystemError' in err
    assert not os.path.exists(str(tmp_path/'x.traj'))


def test_gen_data(capsys, tmp_path):
    path = str(tmp_path/'dw.traj')
    code, out, _ = run(capsys, 'gen-data', '--system', 'double_well', '--n',
                       '300', '--seed', '1', '--out', path)
    assert code == 0
    result = json.loads(out)
    assert result['n_frames'] == 300 and result['kT'] == 0.5
    traj = read_trajectory(path)
    assert traj.frames.shape == (300, 1, 1)
    assert traj.provenance == 'oracle'


def test_gen_data_deterministic(capsys, tmp_path):
    paths = [str(tmp_path/'a.traj'), str(tmp_path/'b.traj')]
    for path in paths:
        assert run(capsys, 'gen-data', '--system', 'harmonic_chain', '--cg',
                   '--n', '50', '--seed', '3', '--out', path,
                   '--forces', path + '.forces')[0] == 0
    with open(paths[0], 'rb') as f1, open(paths[1], 'rb') as f2:
        assert f1.read() == f2.read()
    traj = read_trajectory(paths[0])
    assert traj.n_beads == 5
    assert read_trajectory(paths[0] + '.forces').frames.shape == \
        traj.frames.shape


def test_pipeline(capsys, tmp_path, train_config):
    data = str(tmp_path/'dw.traj')
    ckpt = str(tmp_path/'model.ckpt')
    samples = str(tmp_path/'samples.traj')
    sim = str(tmp_path/'sim.traj')
    reports = str(tmp_path/'reports')

    assert run(capsys, 'gen-data', '--system', 'double_well', '--n', '200',
               '--out', data)[0] == 0

    code, out, _ = run(capsys, 'train', '--data', data, '--system',
                       'double_well', '--config', train_config,
                       '--out-checkpoint', ckpt)
    assert code == 0
    result = json.loads(out)
    assert result['iterations'] == 5
    assert (result['n_train'], result['n_validation']) == (140, 20)
    assert os.path.exists(str(tmp_path/'model_loss.csv'))
    model = read_checkpoint(ckpt)
    assert model.config.anchored and model.config.L == 10

    code, out, _ = run(capsys, 'sample', '--checkpoint', ckpt, '--n', '30',
                       '--seed', '2', '--out', samples)
    assert code == 0
    traj = read_trajectory(samples)
    assert traj.provenance == 'iid' and traj.kT == 0.5
    assert json.loads(out)['n_samples'] == len(traj)

    code, out, _ = run(
        capsys, 'simulate', '--checkpoint', ckpt, '--system', 'double_well',
        '--noise-level', '1', '--dt', '0.01', '--steps', '40',
        '--save-every', '2', '--replicas', '2', '--seed', '4', '--out', sim)
    assert code == 0
    traj = read_trajectory(sim)
    assert traj.provenance == 'simulation' and traj.n_frames > 20
    assert json.loads(out)['noise_level'] == 1

    code, out, _ = run(
        capsys, 'analyze', '--ref', data, '--model', sim, '--metrics', 'tic',
        'contact', 'rmsd', 'msm', '--lag', '2', '--n-states', '3',
        '--out-dir', reports)
    assert code == 0
    with open(os.path.join(reports, 'metrics.json')) as f:
        metrics = json.load(f)
    assert 0 <= metrics['tic1_js'] <= 0.7
    assert metrics['contact_mae'] == 0
    assert 'msm_state_js' in metrics
    assert os.path.exists(os.path.join(reports, 'tic_free_energy.csv'))
    assert os.path.exists(os.path.join(reports, 'msm_populations.csv'))


def test_train_single_bead_without_system(capsys, tmp_path, train_config):
    data = str(tmp_path/'dw.traj')
    ckpt = str(tmp_path/'model.ckpt')
    assert run(capsys, 'gen-data', '--system', 'double_well', '--n', '100',
               '--out', data)[0] == 0

    code, out, _ = run(capsys, 'train', '--data', data, '--config',
                       train_config, '--out-checkpoint', ckpt)
    assert code == 0
    assert json.loads(out)['warnings']
    model = read_checkpoint(ckpt)
    assert model.config.anchored
    assert read_checkpoint_kt(ckpt) == 0.5
    entries = read_checkpoint_entries(ckpt)
    assert entries['train_config/augment_rotations'][0] == 0
    f = dff_force(model, linspace(-1.5, 1.5, 7).reshape(7, 1, 1), 1, 0.5)
    assert abs(f).max() > 0

    with open(train_config) as fp:
        doc = json.load(fp)
    doc['model']['anchored'] = False
    with open(train_config, 'w') as fp:
        json.dump(doc, fp)
    code, _, err = run(capsys, 'train', '--data', data, '--config',
                       train_config, '--out-checkpoint', ckpt)
    assert code == 1
    assert 'ValidationError' in err


def test_simulate_exact_force(capsys, tmp_path):
    paths = [str(tmp_path/'a.traj'), str(tmp_path/'b.traj')]
    for path in paths:
        assert run(capsys, 'simulate', '--system', 'muller_brown', '--dt',
                   '1e-4', '--kt', '10', '--steps', '20', '--save-every',
                   '5', '--replicas', '3', '--seed', '9', '--out', path)[0] \
            == 0
    with open(paths[0], 'rb') as f1, open(paths[1], 'rb') as f2:
        assert f1.read() == f2.read()
    assert read_trajectory(paths[0]).dim == 2


def test_analyze_shape_mismatch(capsys, tmp_path):
    a, b = str(tmp_path/'a.traj'), str(tmp_path/'b.traj')
    assert run(capsys, 'gen-data', '--system', 'double_well', '--n', '20',
               '--out', a)[0] == 0
    assert run(capsys, 'gen-data', '--system', 'muller_brown', '--n', '20',
               '--out', b)[0] == 0
    code, _, err = run(capsys, 'analyze', '--ref', a, '--model', b,
                       '--out-dir', str(tmp_path))
    assert code == 1
    assert 'ShapeMismatchError' in err


def test_gradcheck_fresh(capsys):
    code, out, _ = run(capsys, 'gradcheck', '--fresh', '--seed', '1')
    assert code == 0
    checks = {c['name']: c for c in json.loads(out)['checks']}
    assert checks['energy_gradient']['passed']
    assert checks['loss_equivalence']['passed']
    assert checks['translation_invariance']['passed']
    assert 'loss_gradient' in checks
