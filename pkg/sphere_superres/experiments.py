"""
Experiment harness: draw an instance, measure it, solve, score.

    from sphere_superres.experiments import ExperimentConfig, sweep_regularity

    config = ExperimentConfig(L=50, N=12, trials=10, output_dir='out')
    records = sweep_regularity(config)          # out/regularity_trials.csv, out/regularity_table.csv
    for record in records:
        print(record.value, record.mean_error, record.max_error)

Every trial gets its own integer seed derived from (master seed, trial index);
the same seed is reused across noise levels and solver modes so those
comparisons are paired. Row order follows trial index whatever the worker
count, and runtimes sit in the last column so every other column is
reproducible byte for byte.
"""
import dataclasses
import logging
import math
import multiprocessing
import os
import typing

import numpy as np
from django.core.exceptions import ImproperlyConfigured

from .conf import settings
from .csvio import write_gridded_csv, write_rows, write_signal_csv
from .exceptions import GridMismatchException, InvalidInputException, SphereSuperresException, fail
from .operators import GriddedFunction, forward, measurement_matrix
from .plotting import plot_noise_sweep, plot_recovery
from .signal_gen import (
    ALLOWED_SEPARATION_SCALINGS,
    SEPARATION_CELL,
    DiracSignal,
    Measurement,
    add_noise,
    calibrate_sigma,
    gen_signal,
    truth_residual,
)
from .solver import (
    ALLOWED_MODES,
    MODE_FEASIBILITY,
    MODE_L1MIN,
    SolveConfig,
    SolveResult,
    extract_spikes,
    solve,
)
from .sphere_core import build_grid


# Try to avoid log-name-context collisions defaulting to __name__
logger = logging.getLogger(__name__)


__all__ = [
    'ExperimentConfig',
    'TrialRow',
    'ExperimentRecord',
    'TrialOutcome',
    'MODE_BOTH',
    'TRIAL_HEADER',
    'REFERENCE_MEAN_ERROR',
    'REFERENCE_MAX_ERROR',
    'REFERENCE_BAND',
    'REGULARITY_ITERS_PER_R',
    'load_config_file',
    'trial_seeds',
    'normalized_l1_error',
    'run_trial',
    'execute_trial',
    'loglog_slope',
    'within_band',
    'sweep_noise',
    'sweep_regularity',
    'demo_fig1',
]


MODE_BOTH = 'both'

ALLOWED_EXPERIMENT_MODES = ALLOWED_MODES + [MODE_BOTH]

# Mean and max normalized l1 error over 10 instances, L=50, N=12, 30 dB, l1min.
REFERENCE_MEAN_ERROR = {1: 0.0026, 2: 0.0148, 3: 0.0285, 4: 0.0584}
REFERENCE_MAX_ERROR = {1: 0.0059, 2: 0.0365, 3: 0.0452, 4: 0.0699}
REFERENCE_BAND = 5.0

# Least solver iterations per unit of r in the regularity sweep.
REGULARITY_ITERS_PER_R = 150000

DEFAULT_NOISE_LEVELS = (0.001, 0.00316, 0.01, 0.0316, 0.1)
DEFAULT_R_VALUES = (1, 2, 3, 4)

TRIAL_HEADER = [
    'trial', 'seed', 'mode', 'r', 'sigma', 'noise_l2', 'delta', 'oracle_delta', 'snr_db',
    'truth_residual', 'error', 'residual_l1', 'objective', 'status', 'iterations', 'runtime',
]

STATUS_ERROR_PREFIX = 'error:'

_INT_FIELDS = {'L', 'N', 'r', 'points_per_cell', 'total_m', 'trials', 'seed', 'workers', 'max_iters'}
_FLOAT_FIELDS = {'nu', 'snr_db', 'sigma', 'delta', 'feas_tol', 'obj_tol', 'threshold'}
_TUPLE_FIELDS = {'noise_levels': float, 'r_values': int}


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    L: int = 50
    N: int = 12
    r: int = 1
    nu: typing.Optional[float] = None
    # None with total_m None fills every cell to saturation.
    points_per_cell: typing.Optional[int] = None
    total_m: typing.Optional[int] = None
    snr_db: typing.Optional[float] = 30.0
    sigma: typing.Optional[float] = None
    delta: typing.Optional[float] = None
    trials: int = 10
    seed: int = 0
    mode: str = MODE_L1MIN
    separation: str = SEPARATION_CELL
    noise_levels: typing.Tuple[float, ...] = DEFAULT_NOISE_LEVELS
    r_values: typing.Tuple[int, ...] = DEFAULT_R_VALUES
    output_dir: str = '.'
    workers: typing.Optional[int] = None
    # Solver overrides; None keeps the SPHERE_SUPERRES_* setting.
    backend: typing.Optional[str] = None
    operator: typing.Optional[str] = None
    max_iters: typing.Optional[int] = None
    feas_tol: typing.Optional[float] = None
    obj_tol: typing.Optional[float] = None
    threshold: float = 0.1

    def __post_init__(self):
        if self.nu is None:
            object.__setattr__(self, 'nu', float(settings.SPHERE_SUPERRES_NU))
        if self.workers is None:
            object.__setattr__(self, 'workers', int(settings.SPHERE_SUPERRES_WORKERS))
        object.__setattr__(self, 'noise_levels', tuple(float(level) for level in self.noise_levels))
        object.__setattr__(self, 'r_values', tuple(int(r) for r in self.r_values))

        if self.N < 1 or self.L <= self.N:
            fail(ImproperlyConfigured,
                 'ExperimentConfig: need 1 <= N < L. You passed [L=%r, N=%r].' % (self.L, self.N))
        if self.trials < 1:
            fail(ImproperlyConfigured, 'ExperimentConfig: trials must be >= 1. You passed [%r].' % (self.trials,))
        if self.r < 1 or any(r < 1 for r in self.r_values):
            fail(ImproperlyConfigured, 'ExperimentConfig: r values must be >= 1.')
        if self.nu <= 0:
            fail(ImproperlyConfigured, 'ExperimentConfig: nu must be > 0. You passed [%r].' % (self.nu,))
        if self.mode not in ALLOWED_EXPERIMENT_MODES:
            fail(ImproperlyConfigured,
                 'ExperimentConfig: mode must be one of %s. You passed [%s].' % (ALLOWED_EXPERIMENT_MODES, self.mode))
        if self.separation not in ALLOWED_SEPARATION_SCALINGS:
            fail(ImproperlyConfigured,
                 'ExperimentConfig: separation must be one of %s. You passed [%s].'
                 % (ALLOWED_SEPARATION_SCALINGS, self.separation))
        if self.points_per_cell is not None and self.points_per_cell < 1:
            fail(ImproperlyConfigured, 'ExperimentConfig: points_per_cell must be >= 1. You passed [%r].'
                 % (self.points_per_cell,))
        if self.total_m is not None and self.total_m < 0:
            fail(ImproperlyConfigured, 'ExperimentConfig: total_m must be >= 0. You passed [%r].' % (self.total_m,))
        if self.sigma is None and self.snr_db is None:
            fail(ImproperlyConfigured, 'ExperimentConfig: set either sigma or snr_db.')
        if self.sigma is not None and (self.sigma < 0 or not math.isfinite(self.sigma)):
            fail(ImproperlyConfigured, 'ExperimentConfig: sigma must be finite and >= 0. You passed [%r].' % (self.sigma,))
        if self.delta is not None and self.delta < 0:
            fail(ImproperlyConfigured, 'ExperimentConfig: delta must be >= 0. You passed [%r].' % (self.delta,))
        if self.workers < 1:
            fail(ImproperlyConfigured, 'ExperimentConfig: workers must be >= 1. You passed [%r].' % (self.workers,))
        if not 0 < self.threshold < 1:
            fail(ImproperlyConfigured, 'ExperimentConfig: threshold must be in (0, 1). You passed [%r].'
                 % (self.threshold,))

    @property
    def srf(self) -> float:
        """Super-resolution factor L/N."""
        return self.L / self.N

    @property
    def modes(self) -> typing.List[str]:
        if self.mode == MODE_BOTH:
            return [MODE_L1MIN, MODE_FEASIBILITY]
        return [self.mode]

    def output_path(self, name: str) -> str:
        os.makedirs(self.output_dir, exist_ok=True)
        return os.path.join(self.output_dir, name)

    def solve_config(self, delta: float, mode: str) -> SolveConfig:
        return SolveConfig.from_settings(delta, mode, backend=self.backend, operator=self.operator,
                                         max_iters=self.max_iters, feas_tol=self.feas_tol, obj_tol=self.obj_tol)

    @classmethod
    def from_mapping(cls, mapping: typing.Mapping[str, typing.Any]) -> 'ExperimentConfig':
        """
        Build a config from string values, as read from a key=value file or
        the command line. 'none' clears an optional field.
        """
        names = {field.name for field in dataclasses.fields(cls)}
        values = {}
        for key, raw in mapping.items():
            if key not in names:
                fail(ImproperlyConfigured, 'ExperimentConfig.from_mapping: unknown key [%s].' % key)
            values[key] = _convert(key, raw)
        return cls(**values)

    @classmethod
    def fig1(cls, **overrides) -> 'ExperimentConfig':
        """Three cells, 41 points, L=60, N=15 (SRF 4), 30 dB, separation mu = nu per cell."""
        values = dict(L=60, N=15, r=3, total_m=41, points_per_cell=None, snr_db=30.0,
                      separation=SEPARATION_CELL, trials=1, mode=MODE_L1MIN)
        values.update(overrides)
        return cls(**values)


def _convert(key: str, raw: typing.Any) -> typing.Any:
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if text.lower() == 'none':
        return None
    try:
        if key in _INT_FIELDS:
            return int(text)
        if key in _FLOAT_FIELDS:
            return float(text)
        if key in _TUPLE_FIELDS:
            kind = _TUPLE_FIELDS[key]
            return tuple(kind(item) for item in text.split(',') if item.strip())
    except ValueError:
        fail(ImproperlyConfigured, 'ExperimentConfig.from_mapping: bad value for %s [%s].' % (key, raw))
    return text


def load_config_file(path: str) -> typing.Dict[str, str]:
    """
    Read flat key=value lines. Blank lines and '#' comments are skipped.

    :param path: the file.
    :return: raw string values keyed by field name.
    """
    values = {}
    with open(path) as handle:
        for number, line in enumerate(handle, start=1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                fail(ImproperlyConfigured, 'load_config_file: %s:%d is not key=value [%s].' % (path, number, line))
            key, value = line.split('=', 1)
            values[key.strip()] = value.strip()
    return values


@dataclasses.dataclass(frozen=True)
class TrialRow:
    trial: int
    seed: int
    mode: str
    r: int
    sigma: float
    noise_l2: float
    delta: float
    oracle_delta: float
    snr_db: float
    truth_residual: float
    error: float
    residual_l1: float
    objective: float
    status: str
    iterations: int
    runtime: float

    def as_list(self) -> typing.List:
        return [getattr(self, name) for name in TRIAL_HEADER]

    @property
    def failed(self) -> bool:
        return self.status.startswith(STATUS_ERROR_PREFIX)


@dataclasses.dataclass
class ExperimentRecord:
    """Trials run at one setting (one r, or one noise level in one mode)."""
    parameter: str
    value: float
    mode: str
    rows: typing.List[TrialRow] = dataclasses.field(default_factory=list)

    @property
    def errors(self) -> np.ndarray:
        return np.array([row.error for row in self.rows if math.isfinite(row.error)])

    @property
    def mean_error(self) -> float:
        errors = self.errors
        return float(np.mean(errors)) if errors.size else math.nan

    @property
    def max_error(self) -> float:
        errors = self.errors
        return float(np.max(errors)) if errors.size else math.nan

    @property
    def mean_delta(self) -> float:
        return float(np.mean([row.delta for row in self.rows]))

    @property
    def mean_noise_l2(self) -> float:
        return float(np.mean([row.noise_l2 for row in self.rows]))

    @property
    def failures(self) -> int:
        return sum(1 for row in self.rows if row.failed)


@dataclasses.dataclass(frozen=True, eq=False)
class TrialOutcome:
    """A trial row together with the arrays it was computed from."""
    row: TrialRow
    signal: typing.Optional[DiracSignal] = None
    measurement: typing.Optional[Measurement] = None
    result: typing.Optional[SolveResult] = None


def trial_seeds(master_seed: int, trials: int) -> typing.List[int]:
    """One 32-bit seed per trial, derived from the master seed."""
    children = np.random.SeedSequence(master_seed).spawn(trials)
    return [int(child.generate_state(1)[0]) for child in children]


def normalized_l1_error(fhat: GriddedFunction, f: typing.Union[DiracSignal, GriddedFunction]) -> float:
    """
    Sum of |fhat - f| over the grid, divided by L^2. The pole is stored
    once and counts once.
    """
    truth = f.to_gridded() if isinstance(f, DiracSignal) else f
    if fhat.grid != truth.grid:
        fail(GridMismatchException,
             'normalized_l1_error: recovery on %r, truth on %r.' % (fhat.grid, truth.grid))
    return float(np.abs(fhat.values - truth.values).sum()) / fhat.grid.L ** 2


def execute_trial(config: ExperimentConfig, trial_seed: int, mode: typing.Optional[str] = None,
                  trial: int = 0) -> TrialOutcome:
    """
    run_trial, keeping the signal, measurement and solver result alongside
    the row. Library errors end up in the row status as 'error:<Class>'.
    """
    mode = mode or config.mode
    if mode not in ALLOWED_MODES:
        fail(ImproperlyConfigured, 'execute_trial: a single trial needs mode in %s. You passed [%s].'
             % (ALLOWED_MODES, mode))

    grid = build_grid(config.L)
    matrix = measurement_matrix(grid, config.N)
    signal_seed, noise_seed = np.random.SeedSequence(trial_seed).spawn(2)

    values = dict(trial=trial, seed=int(trial_seed), mode=mode, r=config.r, sigma=math.nan, noise_l2=math.nan,
                  delta=math.nan, oracle_delta=math.nan, snr_db=math.nan, truth_residual=math.nan,
                  error=math.nan, residual_l1=math.nan, objective=math.nan, status='', iterations=0,
                  runtime=0.0)
    signal = measurement = result = None
    try:
        signal = gen_signal(config.r, config.nu, config.N, grid, points_per_cell=config.points_per_cell,
                            rng_seed=signal_seed, total_m=config.total_m, separation=config.separation)
        clean = forward(signal, config.N)
        sigma = config.sigma if config.sigma is not None else calibrate_sigma(clean, config.snr_db)
        measurement = add_noise(clean, sigma, noise_seed, grid, delta=config.delta, matrix=matrix)
        values.update(sigma=measurement.sigma, noise_l2=measurement.noise.l2_norm(), delta=measurement.delta,
                      oracle_delta=measurement.oracle_delta, snr_db=measurement.snr_db,
                      truth_residual=truth_residual(signal, measurement, matrix))

        result = solve(measurement.s, matrix, config.solve_config(measurement.delta, mode))
        values.update(error=normalized_l1_error(result.g, signal), residual_l1=result.residual_l1,
                      objective=result.objective, status=result.status, iterations=result.iterations,
                      runtime=result.runtime)
    except SphereSuperresException as e:
        logger.warning('execute_trial: trial %d (seed %d) failed with %s: %s',
                       trial, trial_seed, e.__class__.__name__, e)
        values['status'] = STATUS_ERROR_PREFIX + e.__class__.__name__

    row = TrialRow(**values)
    logger.info('execute_trial: trial=%d r=%d mode=%s sigma=%.4g delta=%.4g error=%.6g status=%s.',
                row.trial, row.r, row.mode, row.sigma, row.delta, row.error, row.status)
    return TrialOutcome(row=row, signal=signal, measurement=measurement, result=result)


def run_trial(config: ExperimentConfig, trial_seed: int, mode: typing.Optional[str] = None,
              trial: int = 0) -> TrialRow:
    """
    One instance: generate, forward, add noise, solve, score.

    :param config: experiment settings.
    :param trial_seed: seed of this trial; the same seed gives the same row.
    :param mode: MODE_L1MIN or MODE_FEASIBILITY, defaults to config.mode.
    :param trial: index written to the row.
    :return: the TrialRow.
    """
    return execute_trial(config, trial_seed, mode, trial).row


def _run_job(job: typing.Tuple[ExperimentConfig, int, str, int]) -> TrialRow:
    config, seed, mode, trial = job
    return run_trial(config, seed, mode, trial)


def _run_jobs(jobs: typing.List[typing.Tuple[ExperimentConfig, int, str, int]], workers: int) -> typing.List[TrialRow]:
    if workers <= 1 or len(jobs) <= 1:
        return [_run_job(job) for job in jobs]
    with multiprocessing.Pool(min(workers, len(jobs))) as pool:
        # map keeps input order.
        return pool.map(_run_job, jobs)


def loglog_slope(x: typing.Sequence[float], y: typing.Sequence[float]) -> float:
    """Least-squares slope of log(y) against log(x) over the points where both are positive."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    usable = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if np.unique(x[usable]).size < 2:
        fail(InvalidInputException, 'loglog_slope: need at least two distinct positive points.')
    slope, _ = np.polyfit(np.log(x[usable]), np.log(y[usable]), 1)
    return float(slope)


def within_band(value: float, reference: float, factor: float = REFERENCE_BAND) -> bool:
    return reference / factor <= value <= reference * factor


def sweep_noise(config: ExperimentConfig) -> typing.List[ExperimentRecord]:
    """
    Run config.trials instances at every sigma in config.noise_levels with
    both solver modes, on paired seeds.

    Writes noise_trials.csv (one row per trial), noise_summary.csv (mean
    sigma, noise norm, delta and errors per level and mode) and
    noise_sweep.svg (mean error against mean delta, log-log).

    :param config: experiment settings; mode is ignored.
    :return: one ExperimentRecord per (mode, level), modes outermost.
    """
    if len(config.noise_levels) < 2:
        fail(ImproperlyConfigured, 'sweep_noise: need at least two noise levels. You passed %s.'
             % (config.noise_levels,))
    seeds = trial_seeds(config.seed, config.trials)
    modes = [MODE_L1MIN, MODE_FEASIBILITY]

    jobs = []
    for mode in modes:
        for level in config.noise_levels:
            level_config = dataclasses.replace(config, sigma=level)
            jobs.extend((level_config, seed, mode, trial) for trial, seed in enumerate(seeds))
    rows = _run_jobs(jobs, config.workers)

    records = []
    for position, (mode, level) in enumerate((mode, level) for mode in modes for level in config.noise_levels):
        chunk = rows[position * config.trials:(position + 1) * config.trials]
        records.append(ExperimentRecord(parameter='sigma', value=level, mode=mode, rows=list(chunk)))

    write_rows(config.output_path('noise_trials.csv'), ['level'] + TRIAL_HEADER,
               ([record.value] + row.as_list() for record in records for row in record.rows))
    write_rows(config.output_path('noise_summary.csv'),
               ['mode', 'sigma', 'mean_noise_l2', 'mean_delta', 'mean_error', 'max_error', 'failures'],
               ([record.mode, record.value, record.mean_noise_l2, record.mean_delta,
                 record.mean_error, record.max_error, record.failures] for record in records))

    curves = {}
    for mode in modes:
        selected = [record for record in records if record.mode == mode]
        curves[mode] = [record.mean_error for record in selected]
        try:
            slope = loglog_slope([record.mean_delta for record in selected], curves[mode])
            logger.info('sweep_noise: %s log-log slope of error against delta %.3f.', mode, slope)
        except InvalidInputException:
            logger.info('sweep_noise: %s has too few positive points for a slope.', mode)
    levels = [record.mean_delta for record in records if record.mode == modes[0]]
    plot_noise_sweep(levels, curves, config.output_path('noise_sweep.svg'), xlabel='delta')
    return records


def sweep_regularity(config: ExperimentConfig) -> typing.List[ExperimentRecord]:
    """
    Mean and max error per Rayleigh regularity r in config.r_values.

    Writes regularity_trials.csv and regularity_table.csv; the table puts the
    reference mean and max next to the measured ones for r in 1..4.

    :param config: experiment settings.
    :return: one ExperimentRecord per (mode, r).
    """
    seeds = trial_seeds(config.seed, config.trials)
    jobs = []
    keys = []
    for mode in config.modes:
        for r in config.r_values:
            r_config = dataclasses.replace(config, r=r)
            if config.max_iters is None:
                budget = max(int(settings.SPHERE_SUPERRES_MAX_ITERS), REGULARITY_ITERS_PER_R * r)
                r_config = dataclasses.replace(r_config, max_iters=budget)
            keys.append((mode, r))
            jobs.extend((r_config, seed, mode, trial) for trial, seed in enumerate(seeds))
    rows = _run_jobs(jobs, config.workers)

    records = [ExperimentRecord(parameter='r', value=r, mode=mode,
                                rows=list(rows[position * config.trials:(position + 1) * config.trials]))
               for position, (mode, r) in enumerate(keys)]

    write_rows(config.output_path('regularity_trials.csv'), TRIAL_HEADER,
               (row.as_list() for record in records for row in record.rows))

    table = []
    for record in records:
        r = int(record.value)
        reference_mean = REFERENCE_MEAN_ERROR.get(r, math.nan)
        reference_max = REFERENCE_MAX_ERROR.get(r, math.nan)
        band = within_band(record.mean_error, reference_mean) if r in REFERENCE_MEAN_ERROR else ''
        table.append([record.mode, r, record.mean_error, record.max_error,
                      reference_mean, reference_max, band, record.failures])
        logger.info('sweep_regularity: %s r=%d mean=%.4g max=%.4g (reference %.4g / %.4g).',
                    record.mode, r, record.mean_error, record.max_error, reference_mean, reference_max)
    write_rows(config.output_path('regularity_table.csv'),
               ['mode', 'r', 'mean_error', 'max_error', 'reference_mean', 'reference_max',
                'within_band', 'failures'],
               table)
    return records


def demo_fig1(config: typing.Optional[ExperimentConfig] = None) -> TrialOutcome:
    """
    A single dense recovery example, written out for plotting.

    Writes fig1_signal.csv, fig1_s.csv, fig1_recovery.csv, fig1_spikes.csv and
    the three-panel fig1.svg into config.output_dir.

    :param config: defaults to ExperimentConfig.fig1().
    :return: the trial outcome.
    """
    if config is None:
        config = ExperimentConfig.fig1()
    mode = config.modes[0]
    outcome = execute_trial(config, trial_seeds(config.seed, 1)[0], mode)
    logger.info('demo_fig1: L=%d N=%d SRF=%.3g r=%d M=%s status=%s error=%.6g.',
                config.L, config.N, config.srf, config.r, config.total_m,
                outcome.row.status, outcome.row.error)
    if outcome.result is None:
        fail(InvalidInputException, 'demo_fig1: the trial failed with status [%s].' % outcome.row.status)

    write_signal_csv(outcome.signal, config.output_path('fig1_signal.csv'))
    write_gridded_csv(outcome.measurement.s, config.output_path('fig1_s.csv'))
    write_gridded_csv(outcome.result.g, config.output_path('fig1_recovery.csv'))
    write_signal_csv(extract_spikes(outcome.result.g, config.threshold), config.output_path('fig1_spikes.csv'))
    plot_recovery(outcome.signal, outcome.measurement.s, outcome.result.g, config.output_path('fig1.svg'))
    return outcome

