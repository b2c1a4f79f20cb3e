#!/usr/bin/env python

"""
Run the full DFF pipeline on a toy system: exact samples, training, i.i.d.
sampling, Langevin simulation, and comparison with the exact samples
"""

import argparse
import json
import os
import sys

from dff_core.cli import main


if __name__ == '__main__':
    parser = argparse.ArgumentParser(
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog='''
Examples:

{0} --system double_well --out-dir dw
  - 1D double well with the default desk-scale budget

{0} --system harmonic_chain --iterations 5000 --out-dir chain
  - coarse-grained 5-bead harmonic chain
'''.format(sys.argv[0]))
    parser.add_argument(
        '--system', default='double_well', help='toy system name')
    parser.add_argument(
        '--n', type=int, default=100000, help='number of exact samples')
    parser.add_argument(
        '--iterations', type=int, default=10000,
        help='training iterations')
    parser.add_argument(
        '--noise-level', type=int, default=1, help='DFF noise level')
    parser.add_argument(
        '--steps', type=int, default=100000, help='simulation steps')
    parser.add_argument('--dt', type=float, default=0.01, help='time step')
    parser.add_argument(
        '--replicas', type=int, default=10, help='number of replicas')
    parser.add_argument('--seed', type=int, default=0, help='random seed')
    parser.add_argument(
        '--metrics', nargs='+', default=['tic'],
        help='analysis metrics, e.g. tic pwd contact for bead chains')
    parser.add_argument(
        '--out-dir', default='.', help='directory for all outputs')
    args = parser.parse_args()

    os.makedirs(args.out_dir, exist_ok=True)

    def path(name):
        return os.path.join(args.out_dir, name)

    config = path('train.json')
    with open(config, 'w') as f:
        json.dump(
            {'train': {'iterations': args.iterations, 'seed': args.seed}},
            f)

    steps = [
        ['gen-data', '--system', args.system, '--n', str(args.n), '--cg',
         '--seed', str(args.seed), '--out', path('data.traj')],
        ['train', '--data', path('data.traj'), '--system', args.system,
         '--config', config, '--out-checkpoint', path('model.ckpt')],
        ['sample', '--checkpoint', path('model.ckpt'), '--n', str(args.n),
         '--seed', str(args.seed), '--out', path('iid.traj')],
        ['simulate', '--checkpoint', path('model.ckpt'), '--system',
         args.system, '--noise-level', str(args.noise_level), '--dt',
         str(args.dt), '--steps', str(args.steps), '--replicas',
         str(args.replicas), '--seed', str(args.seed), '--out',
         path('sim.traj')],
        ['analyze', '--ref', path('data.traj'), '--model', path('sim.traj'),
         '--metrics'] + args.metrics + ['--out-dir', path('analysis')],
    ]
    for argv in steps:
        code = main(argv)
        if code:
            sys.exit(code)
