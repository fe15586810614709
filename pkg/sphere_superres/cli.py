"""
Command line front-end.

    sphere-superres gen --L 50 --N 12 --r 2 --seed 7 --output signal.csv
    sphere-superres measure --L 50 --N 12 --signal signal.csv --snr-db 30 --coeffs y.csv --s s.csv
    sphere-superres solve --L 50 --N 12 --s s.csv --delta 0.8 --output recovery.csv
    sphere-superres solve --L 50 --N 12 --coeffs y.csv --delta 0.8 --output recovery.csv
    sphere-superres sweep-r --config table.conf --trials 5 --output-dir out
    sphere-superres sweep-noise --noise-levels 0.001,0.01,0.1 --r 2 --output-dir out
    sphere-superres demo-fig1 --output-dir out

Every subcommand accepts the experiment flags and --config FILE, a flat
key=value file of the same settings; flags given on the command line win.

Exit codes: 0 success, 1 other library error, 2 invalid configuration,
3 solver failure in the solve subcommand.
"""
import argparse
import logging
import sys
import typing

import numpy as np
from django.core.exceptions import ImproperlyConfigured

from . import __version__
from .csvio import (
    read_coeffs_csv,
    read_gridded_csv,
    read_signal_csv,
    write_coeffs_csv,
    write_grid_csv,
    write_gridded_csv,
    write_signal_csv,
)
from .exceptions import (
    InvalidParameterException,
    SolverFailureException,
    SphereSuperresException,
    StepSizeException,
)
from .experiments import (
    ExperimentConfig,
    demo_fig1,
    load_config_file,
    sweep_noise,
    sweep_regularity,
)
from .operators import adjoint, forward, measurement_matrix
from .signal_gen import add_noise, calibrate_sigma, gen_signal
from .solver import ALLOWED_MODES, extract_spikes, solve
from .sphere_core import build_grid


# Try to avoid log-name-context collisions defaulting to __name__
logger = logging.getLogger(__name__)


__all__ = [
    'EXIT_OK',
    'EXIT_ERROR',
    'EXIT_CONFIG',
    'EXIT_SOLVER',
    'build_parser',
    'main',
]


EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3

# (flag, field, help)
EXPERIMENT_FLAGS = [
    ('--L', 'L', 'grid resolution, L(L-1)+1 points'),
    ('--N', 'N', 'maximum harmonic degree'),
    ('--r', 'r', 'Rayleigh regularity (number of cells)'),
    ('--nu', 'nu', 'separation constant'),
    ('--points-per-cell', 'points_per_cell', 'support points per cell'),
    ('--total-m', 'total_m', 'total support size, spread round-robin over the cells'),
    ('--snr-db', 'snr_db', 'target SNR in dB, used when --sigma is not given'),
    ('--sigma', 'sigma', 'noise level per coefficient'),
    ('--delta', 'delta', 'noise budget; defaults to the realized noise norm'),
    ('--trials', 'trials', 'trials per setting'),
    ('--seed', 'seed', 'master seed'),
    ('--mode', 'mode', 'l1min, feasibility or both'),
    ('--separation', 'separation', 'theorem (mu = nu r) or cell (mu = nu)'),
    ('--noise-levels', 'noise_levels', 'comma separated sigma values'),
    ('--r-values', 'r_values', 'comma separated r values'),
    ('--output-dir', 'output_dir', 'where sweep outputs go'),
    ('--workers', 'workers', 'parallel trial processes'),
    ('--backend', 'backend', 'solver backend'),
    ('--operator', 'operator', 'projection matvec: kernel, coefficients or factored'),
    ('--max-iters', 'max_iters', 'solver iteration budget'),
    ('--feas-tol', 'feas_tol', 'relative feasibility tolerance'),
    ('--obj-tol', 'obj_tol', 'relative stagnation tolerance'),
    ('--threshold', 'threshold', 'spike extraction threshold, fraction of the peak'),
]


def _add_experiment_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', help='key=value file with defaults for the flags below')
    group = parser.add_argument_group('experiment')
    for flag, field, text in EXPERIMENT_FLAGS:
        group.add_argument(flag, dest=field, default=argparse.SUPPRESS, help=text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='sphere-superres',
                                     description='Super-resolution of positive Dirac streams on the sphere.')
    parser.add_argument('--version', action='version', version='%(prog)s ' + __version__)
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    commands = parser.add_subparsers(dest='command', required=True)

    gen = commands.add_parser('gen', help='draw a random Rayleigh-regular signal')
    _add_experiment_arguments(gen)
    gen.add_argument('--output', required=True, help='signal CSV')
    gen.add_argument('--grid', help='also write the grid CSV here')

    measure = commands.add_parser('measure', help='noisy low-degree coefficients of a signal')
    _add_experiment_arguments(measure)
    measure.add_argument('--signal', required=True, help='signal CSV')
    measure.add_argument('--coeffs', required=True, help='output coefficients CSV')
    measure.add_argument('--s', dest='s_path', required=True, help='output back-projection CSV')

    solve_parser = commands.add_parser('solve', help='recover a nonnegative function from s')
    _add_experiment_arguments(solve_parser)
    source = solve_parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--s', dest='s_path', help='back-projection CSV')
    source.add_argument('--coeffs', dest='coeffs_path', help='measured coefficients CSV, back-projected onto the grid')
    solve_parser.add_argument('--output', required=True, help='recovered function CSV')
    solve_parser.add_argument('--spikes', help='also write extracted spikes here')
    solve_parser.add_argument('--trace', help='solver trace CSV')

    for name, text in (('sweep-noise', 'error against noise level, both modes'),
                       ('sweep-r', 'error against Rayleigh regularity'),
                       ('demo-fig1', 'one dense recovery example with figure')):
        _add_experiment_arguments(commands.add_parser(name, help=text))
    return parser


def _experiment_config(args: argparse.Namespace, defaults: typing.Optional[dict] = None) -> ExperimentConfig:
    values = dict(defaults or {})
    if args.config:
        try:
            values.update(load_config_file(args.config))
        except OSError as e:
            raise ImproperlyConfigured('config: cannot read %s [%s].' % (args.config, e))
    for _, field, _ in EXPERIMENT_FLAGS:
        if hasattr(args, field):
            values[field] = getattr(args, field)
    return ExperimentConfig.from_mapping(values)


def _gen(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    grid = build_grid(config.L)
    signal = gen_signal(config.r, config.nu, config.N, grid, points_per_cell=config.points_per_cell,
                        rng_seed=config.seed, total_m=config.total_m, separation=config.separation)
    write_signal_csv(signal, args.output)
    if args.grid:
        write_grid_csv(grid, args.grid)
    logger.info('gen: %d points in %d cells written to %s.', len(signal), config.r, args.output)
    return EXIT_OK


def _measure(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    grid = build_grid(config.L)
    signal = read_signal_csv(args.signal, grid)
    clean = forward(signal, config.N)
    sigma = config.sigma if config.sigma is not None else calibrate_sigma(clean, config.snr_db)
    measurement = add_noise(clean, sigma, np.random.SeedSequence(config.seed), grid, delta=config.delta,
                            matrix=measurement_matrix(grid, config.N))
    write_coeffs_csv(measurement.noisy, args.coeffs)
    write_gridded_csv(measurement.s, args.s_path)
    for key in ('sigma', 'delta', 'oracle_delta', 'snr_db'):
        print('%s=%.17g' % (key, getattr(measurement, key)))
    return EXIT_OK


def _solve(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    if config.delta is None:
        raise ImproperlyConfigured('solve: --delta is required.')
    if config.mode not in ALLOWED_MODES:
        raise ImproperlyConfigured('solve: --mode must be one of %s.' % ALLOWED_MODES)
    grid = build_grid(config.L)
    matrix = measurement_matrix(grid, config.N)
    if args.coeffs_path:
        coeffs = read_coeffs_csv(args.coeffs_path)
        if coeffs.N != config.N:
            raise ImproperlyConfigured('solve: %s holds degree %d, not N=%d.' % (args.coeffs_path, coeffs.N, config.N))
        s = adjoint(coeffs, grid, matrix)
    else:
        s = read_gridded_csv(args.s_path, grid)
    try:
        result = solve(s, matrix, config.solve_config(config.delta, config.mode),
                       trace_path=args.trace)
    except (StepSizeException, SolverFailureException) as e:
        logger.error('solve: %s', e)
        return EXIT_SOLVER
    write_gridded_csv(result.g, args.output)
    if args.spikes:
        write_signal_csv(extract_spikes(result.g, config.threshold), args.spikes)
    print('status=%s' % result.status)
    for key in ('residual_l1', 'objective'):
        print('%s=%.17g' % (key, getattr(result, key)))
    print('iterations=%d' % result.iterations)
    return EXIT_OK if result.converged else EXIT_SOLVER


def _sweep_noise(args: argparse.Namespace) -> int:
    sweep_noise(_experiment_config(args, {'r': '2'}))
    return EXIT_OK


def _sweep_r(args: argparse.Namespace) -> int:
    sweep_regularity(_experiment_config(args))
    return EXIT_OK


def _demo_fig1(args: argparse.Namespace) -> int:
    defaults = {'L': '60', 'N': '15', 'r': '3', 'total_m': '41', 'points_per_cell': 'none',
                'separation': 'cell', 'trials': '1'}
    demo_fig1(_experiment_config(args, defaults))
    return EXIT_OK


COMMANDS = {
    'gen': _gen,
    'measure': _measure,
    'solve': _solve,
    'sweep-noise': _sweep_noise,
    'sweep-r': _sweep_r,
    'demo-fig1': _demo_fig1,
}


def main(argv: typing.Optional[typing.Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        return COMMANDS[args.command](args)
    except (ImproperlyConfigured, InvalidParameterException) as e:
        logger.error('%s', e)
        return EXIT_CONFIG
    except SphereSuperresException as e:
        logger.error('%s: %s', e.__class__.__name__, e)
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
