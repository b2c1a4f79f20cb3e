"""
DFF Core: command-line interface

Each subcommand creates and runs the job plugin of the same name; options map
1:1 onto the job fields. Exit codes: 0 on success, 1 on a runtime or domain
error, 2 on a usage error.
"""

import argparse
import sys
from typing import List as TList, Optional

from . import config, json_dumps, logger
from .dynamics import INTEGRATORS
from .errors import DFFError
from .resources.job_plugins.ablate_job import ABLATION_MODES
from .resources.job_plugins.analyze_job import METRICS
from .resources.jobs import create_job, run_job
from .units import FAST_FOLDER_NOISE_LEVELS, PRESETS


__all__ = ['build_parser', 'main']


_GLOBAL_OPTIONS = ('command', 'workers', 'log_level', 'quiet')


def build_parser() -> argparse.ArgumentParser:
    """
    Create the argument parser with one subparser per job type

    :return: parser
    """
    parser = argparse.ArgumentParser(
        prog='dff', description='Denoising Force Fields: train diffusion '
        'models on equilibrium samples and simulate with the extracted force '
        'field')
    parser.add_argument(
        '--workers', type=int, metavar='N',
        help='number of worker threads (default: DFF_CORE_WORKERS or all '
        'cores)')
    parser.add_argument(
        '--log-level', choices=('DEBUG', 'INFO', 'WARNING', 'ERROR'),
        help='logging level')
    parser.add_argument(
        '-q', '--quiet', action='store_true', help='disable progress bars')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    p = sub.add_parser('gen-data', help='draw exact samples of a toy system')
    p.add_argument('--system', required=True, help='toy system name')
    p.add_argument('--n', type=int, help='number of samples')
    p.add_argument('--kt', dest='kT', type=float, help='thermal energy')
    p.add_argument('--seed', type=int, help='random seed')
    p.add_argument('--out', required=True, help='output trajectory')
    p.add_argument(
        '--cg', action='store_true', default=None,
        help='apply the coarse-graining map of the system')
    p.add_argument(
        '--forces', metavar='PATH',
        help='also write (projected) forces to this trajectory file')

    p = sub.add_parser('train', help='train a score model')
    p.add_argument('--data', required=True, help='training trajectory')
    p.add_argument(
        '--config', help='JSON document {"model": {...}, "train": {...}}')
    p.add_argument('--out-checkpoint', required=True, help='output checkpoint')
    p.add_argument(
        '--force-matching', metavar='FORCES',
        help='train the force-matching baseline on these projected forces')
    p.add_argument('--validation', help='validation trajectory')
    p.add_argument(
        '--system', help='toy system supplying model and training defaults')
    p.add_argument('--resume', metavar='CHECKPOINT', help='continue training')
    p.add_argument('--loss-csv', help='loss history output')
    p.add_argument(
        '--no-split', dest='split', action='store_false', default=None,
        help='use all data for training instead of a 70/10/20 split')
    p.add_argument('--split-seed', type=int, help='dataset shuffling seed')

    p = sub.add_parser('sample', help='draw i.i.d. samples from a model')
    p.add_argument('--checkpoint', required=True, help='model checkpoint')
    p.add_argument('--n', type=int, help='number of samples')
    p.add_argument('--seed', type=int, help='random seed')
    p.add_argument('--out', required=True, help='output trajectory')
    p.add_argument('--batch-size', type=int, help='chains per batch')
    p.add_argument('--kt', dest='kT', type=float, help='thermal energy')

    p = sub.add_parser('simulate', help='run CG dynamics')
    p.add_argument('--checkpoint', help='model checkpoint')
    p.add_argument(
        '--system', help='toy system (exact force, or initial configurations '
        'for a model)')
    p.add_argument('--integrator', choices=INTEGRATORS, help='dynamics')
    p.add_argument('--noise-level', type=int, help='DFF noise level (1-based)')
    p.add_argument('--dt', type=float, help='time step (ps)')
    p.add_argument('--steps', type=int, help='steps per replica')
    p.add_argument('--save-every', type=int, help='steps between frames')
    p.add_argument('--replicas', type=int, help='number of replicas')
    p.add_argument('--seed', type=int, help='random seed')
    p.add_argument('--kt', dest='kT', type=float, help='thermal energy')
    p.add_argument('--mass', type=float, help='bead mass (g/mol)')
    p.add_argument('--friction', type=float, help='friction (1/ps)')
    p.add_argument(
        '--preset', choices=sorted(PRESETS), help='reference settings')
    p.add_argument(
        '--protein', choices=sorted(FAST_FOLDER_NOISE_LEVELS),
        help='fast-folder protein of the preset')
    p.add_argument(
        '--training-size', type=int,
        help='training-set size selecting the alanine noise level')
    p.add_argument('--initial', help='trajectory of initial configurations')
    p.add_argument('--out', required=True, help='output trajectory')

    p = sub.add_parser('analyze', help='compare a model with a reference')
    p.add_argument('--ref', required=True, help='reference trajectory')
    p.add_argument('--model', required=True, help='model trajectory')
    p.add_argument('--metrics', nargs='+', choices=METRICS, help='metrics')
    p.add_argument('--lag', type=int, help='TICA and MSM lag (frames)')
    p.add_argument('--bins', type=int, help='histogram bins per axis')
    p.add_argument('--n-states', type=int, help='number of MSM states')
    p.add_argument(
        '--min-offset', type=int, help='minimum sequence separation for PWD')
    p.add_argument(
        '--contact-threshold', type=float, help='contact distance (nm)')
    p.add_argument(
        '--reference-frame', type=int,
        help='reference frame index for RMSD')
    p.add_argument('--seed', type=int, help='k-means seed')
    p.add_argument('--out-dir', default='.', help='output directory')

    p = sub.add_parser('ablate', help='run an ablation sweep')
    p.add_argument('--mode', required=True, choices=ABLATION_MODES)
    p.add_argument('--system', help='toy system')
    p.add_argument('--seeds', type=int, help='number of seeds')
    p.add_argument('--seed', type=int, help='first seed')
    p.add_argument('--iterations', type=int, help='training iterations')
    p.add_argument('--n-train', type=int, help='training samples')
    p.add_argument('--n-ref', type=int, help='reference samples')
    p.add_argument('--noise-level', type=int, help='DFF noise level')
    p.add_argument('--levels', type=int, nargs='+', help='noise levels')
    p.add_argument('--features', type=int, nargs='+', help='hidden widths')
    p.add_argument('--steps', dest='n_steps', type=int, help='steps')
    p.add_argument('--save-every', type=int, help='steps between frames')
    p.add_argument('--replicas', type=int, help='number of replicas')
    p.add_argument('--dt', type=float, help='time step')
    p.add_argument('--bins', type=int, help='histogram bins')
    p.add_argument('--out-dir', default='.', help='output directory')

    p = sub.add_parser('gradcheck', help='verify model gradients')
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument('--checkpoint', help='model checkpoint')
    g.add_argument(
        '--fresh', action='store_true', default=None,
        help='check a freshly initialized small model')
    p.add_argument('--tolerance', type=float, help='relative tolerance')
    p.add_argument('--seed', type=int, help='random seed')

    return parser


def main(argv: Optional[TList[str]] = None) -> int:
    """
    Run the command line

    :param argv: arguments without the program name; defaults to sys.argv

    :return: process exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    if args.workers is not None:
        config['WORKERS'] = args.workers
    if args.log_level:
        config['LOG_LEVEL'] = args.log_level
        logger.setLevel(args.log_level)
    if args.quiet:
        config['PROGRESS'] = False

    fields = {name.replace('-', '_'): value
              for name, value in vars(args).items()
              if value is not None and name not in _GLOBAL_OPTIONS}
    try:
        job = run_job(create_job(args.command, **fields))
    except DFFError as e:
        print(e.describe(), file=sys.stderr)
        return e.code
    print(json_dumps(job.result, indent=2))
    return 0


if __name__ == '__main__':
    sys.exit(main())
