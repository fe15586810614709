"""
Recovery of a nonnegative grid function g from s = P_N f + F_N* eta:

    find g >= 0  subject to  ||s - P_N g||_1 <= delta                 (feasibility)
    min sum(g)   subject to  ||s - P_N g||_1 <= delta, g >= 0           (l1min)

The shipped backend is a first-order primal-dual (Chambolle-Pock) iteration

    y <- prox_{sigma F*}(y + sigma K xbar)
    x' <- max(x - tau (K y + c), 0)
    xbar <- 2 x' - x

with c = 1 for l1min and c = 0 for feasibility. For l1min, F is the
indicator of the l1 ball of radius delta around s and its prox goes
through an exact Euclidean projection onto the l1 ball. Feasibility mode
minimizes the residual itself (F = ||s - .||_1), returning the canonical
residual-minimizing point. Step sizes use a seeded power-iteration estimate
of ||K||.

Backends are pluggable:

    from sphere_superres import SolveConfig, register_backend, solve

    register_backend('mine', my_callable)   # my_callable(s, matrix, config, trace_path) -> SolveResult
    solve(s, matrix, SolveConfig(delta=0.3, backend='mine'))

'highs' is an exact LP backend built on scipy's linprog, for small grids.
"""
import csv
import dataclasses
import logging
import math
import time
import typing

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.sparse.csgraph import connected_components

from .conf import settings
from .exceptions import (
    InvalidParameterException,
    NonFiniteInputException,
    ShapeMismatchException,
    SolverFailureException,
    StepSizeException,
    fail,
)
from .operators import ALLOWED_PROJECTION_METHODS, GriddedFunction, MeasurementMatrix
from .signal_gen import DiracSignal
from .sphere_core import SphereGrid


# Try to avoid log-name-context collisions defaulting to __name__
logger = logging.getLogger(__name__)


__all__ = [
    'SolveConfig',
    'SolveResult',
    'MODE_FEASIBILITY',
    'MODE_L1MIN',
    'ALLOWED_MODES',
    'STATUS_CONVERGED',
    'STATUS_MAX_ITERS',
    'STATUS_INFEASIBLE',
    'SOLVER_BACKEND_PDHG',
    'SOLVER_BACKEND_HIGHS',
    'register_backend',
    'available_backends',
    'project_l1_ball',
    'operator_norm',
    'acceptance_bound',
    'solve',
    'solve_feasibility',
    'solve_l1min',
    'extract_spikes',
]


MODE_FEASIBILITY = 'feasibility'
MODE_L1MIN = 'l1min'

ALLOWED_MODES = [
    MODE_FEASIBILITY,
    MODE_L1MIN,
]

STATUS_CONVERGED = 'converged'
STATUS_MAX_ITERS = 'max-iters'
STATUS_INFEASIBLE = 'infeasible'

SOLVER_BACKEND_PDHG = 'pdhg'
SOLVER_BACKEND_HIGHS = 'highs'

# Absolute slack on the residual test, relative to ||s||_1.
RESIDUAL_SLACK = 1e-9
# Keeps tau * sigma * ||K||^2 strictly below 1.
STEP_SAFETY = 0.95
POWER_ITERATION_TOL = 1e-8
POWER_ITERATION_SEED = 0

TRACE_HEADER = ['iter', 'objective', 'residual_l1', 'primal_step', 'dual_step']


@dataclasses.dataclass(frozen=True)
class SolveConfig:
    delta: float
    mode: str = MODE_L1MIN
    feas_tol: float = 1e-6
    obj_tol: float = 1e-8
    window: int = 100
    max_iters: int = 200000
    step_ratio: float = 1.0
    power_iters: int = 500
    backend: str = SOLVER_BACKEND_PDHG
    operator: str = 'factored'
    trace_every: int = 100

    def __post_init__(self):
        if not math.isfinite(self.delta) or self.delta < 0:
            fail(InvalidParameterException, 'SolveConfig: delta must be finite and >= 0. You passed [%r].' % (self.delta,))
        if self.mode not in ALLOWED_MODES:
            fail(InvalidParameterException, 'SolveConfig: unknown mode [%s].' % str(self.mode))
        if self.feas_tol <= 0 or self.obj_tol <= 0 or self.step_ratio <= 0:
            fail(InvalidParameterException,
                 'SolveConfig: feas_tol, obj_tol and step_ratio must be > 0. You passed [%r, %r, %r].'
                 % (self.feas_tol, self.obj_tol, self.step_ratio))
        if min(self.max_iters, self.window, self.power_iters, self.trace_every) < 1:
            fail(InvalidParameterException,
                 'SolveConfig: max_iters, window, power_iters and trace_every must be >= 1.')
        if self.operator not in ALLOWED_PROJECTION_METHODS:
            fail(InvalidParameterException, 'SolveConfig: unknown operator [%s].' % str(self.operator))

    @classmethod
    def from_settings(cls, delta: float, mode: str = MODE_L1MIN, **overrides) -> 'SolveConfig':
        """Defaults from the SPHERE_SUPERRES_* settings; keyword overrides win."""
        values = dict(
            feas_tol=settings.SPHERE_SUPERRES_FEAS_TOL,
            obj_tol=settings.SPHERE_SUPERRES_OBJ_TOL,
            window=settings.SPHERE_SUPERRES_STAGNATION_WINDOW,
            max_iters=settings.SPHERE_SUPERRES_MAX_ITERS,
            step_ratio=settings.SPHERE_SUPERRES_STEP_RATIO,
            power_iters=settings.SPHERE_SUPERRES_POWER_ITERS,
            backend=settings.SPHERE_SUPERRES_BACKEND,
            operator=settings.SPHERE_SUPERRES_OPERATOR,
            trace_every=settings.SPHERE_SUPERRES_TRACE_EVERY,
        )
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(delta=delta, mode=mode, **values)


@dataclasses.dataclass(frozen=True, eq=False)
class SolveResult:
    g: GriddedFunction
    residual_l1: float
    objective: float
    status: str
    iterations: int
    runtime: float
    delta: float
    mode: str
    backend: str

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CONVERGED


# backend(s, matrix, config, trace_path) -> SolveResult
Backend = typing.Callable[..., SolveResult]

_BACKENDS: typing.Dict[str, Backend] = {}


def register_backend(name: str, backend: Backend) -> None:
    _BACKENDS[name] = backend


def available_backends() -> typing.List[str]:
    return sorted(_BACKENDS)


def project_l1_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """
    Euclidean projection onto {w : ||w||_1 <= radius}, by sorting |v| and
    soft-thresholding at the level that puts the result on the boundary.
    """
    if radius < 0:
        fail(InvalidParameterException, 'project_l1_ball: radius must be >= 0. You passed [%r].' % (radius,))
    magnitudes = np.abs(v)
    if magnitudes.sum() <= radius:
        return v.copy()
    if radius == 0:
        return np.zeros_like(v)
    ordered = np.sort(magnitudes)[::-1]
    cumulative = np.cumsum(ordered)
    ranks = np.arange(1, ordered.size + 1)
    last = np.nonzero(ordered * ranks > cumulative - radius)[0][-1]
    threshold = (cumulative[last] - radius) / (last + 1.0)
    return np.sign(v) * np.maximum(magnitudes - threshold, 0.0)


def operator_norm(matvec: typing.Callable[[np.ndarray], np.ndarray], size: int,
                  max_iters: int = 500, seed: int = POWER_ITERATION_SEED) -> float:
    """
    ||K|| of a symmetric positive semidefinite operator by power iteration
    from a seeded random start.

    :param matvec: x -> K x.
    :param size: dimension of x.
    :param max_iters: iteration budget.
    :param seed: seed of the starting vector.
    :return: the estimate.
    """
    vector = np.random.default_rng(seed).standard_normal(size)
    vector /= np.linalg.norm(vector)
    estimate = 0.0
    for _ in range(max_iters):
        image = matvec(vector)
        norm = float(np.linalg.norm(image))
        if norm == 0.0:
            return 0.0
        vector = image / norm
        if abs(norm - estimate) <= POWER_ITERATION_TOL * norm:
            return norm
        estimate = norm
    fail(StepSizeException,
         'operator_norm: power iteration did not converge in %d iterations (last estimate %.6g).'
         % (max_iters, estimate))


def acceptance_bound(delta: float, s_l1: float, feas_tol: float) -> float:
    """
    Largest residual accepted as feasible: delta*(1+feas_tol) plus 1e-9 of
    ||s||_1. With delta = 0 the relative tolerance has nothing to scale, so
    feas_tol*||s||_1 is the floor instead.
    """
    if delta > 0:
        return delta * (1.0 + feas_tol) + RESIDUAL_SLACK * s_l1
    return feas_tol * s_l1


def _check_inputs(s: GriddedFunction, m: MeasurementMatrix, caller: str) -> None:
    if s.grid != m.grid:
        fail(ShapeMismatchException, '%s: s lives on %r, operator on %r.' % (caller, s.grid, m.grid))
    if not np.all(np.isfinite(s.values)):
        fail(NonFiniteInputException, '%s: s has non-finite entries.' % caller)


def _zero_result(s: GriddedFunction, config: SolveConfig, started: float) -> SolveResult:
    return SolveResult(g=GriddedFunction.zeros(s.grid), residual_l1=s.l1_norm(), objective=0.0,
                       status=STATUS_CONVERGED, iterations=0, runtime=time.perf_counter() - started,
                       delta=config.delta, mode=config.mode, backend=config.backend)


def _primal_dual(s: GriddedFunction, m: MeasurementMatrix, config: SolveConfig,
                 trace_path: typing.Optional[str] = None) -> SolveResult:
    started = time.perf_counter()
    _check_inputs(s, m, 'solve')
    target = s.values
    s_l1 = s.l1_norm()
    bound = acceptance_bound(config.delta, s_l1, config.feas_tol)
    l1min = config.mode == MODE_L1MIN

    if s_l1 == 0.0 or (l1min and config.delta >= s_l1):
        return _zero_result(s, config, started)

    def matvec(x):
        return m.apply(x, config.operator)

    norm = operator_norm(matvec, len(s.grid), max_iters=config.power_iters)
    if norm == 0.0:
        fail(StepSizeException, 'solve: the projection operator is zero.')
    tau = STEP_SAFETY * config.step_ratio / norm
    sigma = STEP_SAFETY / (config.step_ratio * norm)
    shift = 1.0 if l1min else 0.0

    if l1min:
        def prox_dual(v):
            return v - sigma * (target + project_l1_ball(v / sigma - target, config.delta))
    else:
        def prox_dual(v):
            return np.clip(v - sigma * target, -1.0, 1.0)

    trace_file = open(trace_path, 'w', newline='') if trace_path else None
    trace = csv.writer(trace_file) if trace_file else None
    if trace:
        trace.writerow(TRACE_HEADER)

    x = np.zeros(len(s.grid))
    Kx = np.zeros_like(x)
    Kx_bar = np.zeros_like(x)
    y = np.zeros_like(x)
    previous = None
    status = STATUS_MAX_ITERS
    residual = s_l1
    iteration = 0
    try:
        for iteration in range(1, config.max_iters + 1):
            y_new = prox_dual(y + sigma * Kx_bar)
            x_new = np.maximum(x - tau * (matvec(y_new) + shift), 0.0)
            Kx_new = matvec(x_new)
            if not np.isfinite(Kx_new).all():
                fail(SolverFailureException, 'solve: iterate became non-finite at iteration %d.' % iteration)
            Kx_bar = 2.0 * Kx_new - Kx

            at_window = iteration % config.window == 0
            at_trace = trace is not None and iteration % config.trace_every == 0
            if at_window or at_trace:
                residual = float(np.abs(target - Kx_new).sum())
                objective = float(x_new.sum()) if l1min else residual
                if at_trace:
                    trace.writerow([iteration, '%.17g' % objective, '%.17g' % residual,
                                    '%.17g' % np.linalg.norm(x_new - x), '%.17g' % np.linalg.norm(y_new - y)])

            x, Kx, y = x_new, Kx_new, y_new
            if not at_window:
                continue

            if previous is not None:
                if l1min:
                    stagnant = abs(objective - previous) <= config.obj_tol * max(abs(objective), abs(previous))
                    if stagnant and residual <= bound:
                        status = STATUS_CONVERGED
                        break
                elif residual <= bound:
                    if abs(objective - previous) <= config.obj_tol * s_l1:
                        status = STATUS_CONVERGED
                        break
                # Infeasible only once the residual itself has flattened out.
                elif abs(objective - previous) <= config.obj_tol * residual:
                    status = STATUS_INFEASIBLE
                    break
            previous = objective
            logger.debug('solve: iter=%d objective=%.6g residual=%.6g bound=%.6g.',
                         iteration, objective, residual, bound)
    finally:
        if trace_file:
            trace_file.close()

    residual = float(np.abs(target - Kx).sum())
    if status == STATUS_MAX_ITERS:
        logger.warning('solve: %s stopped at max_iters=%d with residual %.6g (bound %.6g).',
                       config.mode, config.max_iters, residual, bound)
    g = np.where(x > 0, x, 0.0)
    return SolveResult(g=GriddedFunction(s.grid, g), residual_l1=residual, objective=float(g.sum()),
                       status=status, iterations=iteration, runtime=time.perf_counter() - started,
                       delta=config.delta, mode=config.mode, backend=SOLVER_BACKEND_PDHG)


def _highs(s: GriddedFunction, m: MeasurementMatrix, config: SolveConfig,
           trace_path: typing.Optional[str] = None) -> SolveResult:
    """
    Exact LP with split residual u+ - u- = s - K g. Dense in K, so meant for
    small grids.
    """
    started = time.perf_counter()
    _check_inputs(s, m, 'solve')
    size = len(s.grid)
    s_l1 = s.l1_norm()
    bound = acceptance_bound(config.delta, s_l1, config.feas_tol)
    if s_l1 == 0.0 or (config.mode == MODE_L1MIN and config.delta >= s_l1):
        return _zero_result(s, config, started)

    identity = sparse.identity(size, format='csr')
    A_eq = sparse.hstack([sparse.csr_matrix(m.K), identity, -identity], format='csr')
    zeros, ones = np.zeros(size), np.ones(size)
    if config.mode == MODE_L1MIN:
        cost = np.concatenate([ones, zeros, zeros])
        A_ub = sparse.csr_matrix(np.concatenate([zeros, ones, ones])[None, :])
        b_ub = np.array([config.delta])
    else:
        cost = np.concatenate([zeros, ones, ones])
        A_ub, b_ub = None, None

    result = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=s.values,
                     bounds=(0, None), method='highs', options={'maxiter': config.max_iters})
    if result.status not in (0, 1, 2):
        fail(SolverFailureException, 'solve: highs failed with status %d [%s].' % (result.status, result.message))
    if result.x is None:
        status = STATUS_INFEASIBLE if result.status == 2 else STATUS_MAX_ITERS
        logger.warning('solve: highs returned status %d (%s).', result.status, result.message)
        g = np.zeros(size)
    else:
        g = np.maximum(result.x[:size], 0.0)
        status = STATUS_CONVERGED
    residual = float(np.abs(s.values - m.K @ g).sum())
    if status == STATUS_CONVERGED and residual > bound:
        status = STATUS_INFEASIBLE
    return SolveResult(g=GriddedFunction(s.grid, g), residual_l1=residual, objective=float(g.sum()),
                       status=status, iterations=int(getattr(result, 'nit', 0)),
                       runtime=time.perf_counter() - started, delta=config.delta, mode=config.mode,
                       backend=SOLVER_BACKEND_HIGHS)


register_backend(SOLVER_BACKEND_PDHG, _primal_dual)
register_backend(SOLVER_BACKEND_HIGHS, _highs)


def solve(s: GriddedFunction, m: MeasurementMatrix, config: SolveConfig,
          trace_path: typing.Optional[str] = None) -> SolveResult:
    """
    Dispatch to config.backend.

    :param s: back-projected measurements on the grid.
    :param m: the operator for (grid, N).
    :param config: solver configuration; config.mode picks the program.
    :param trace_path: optional CSV receiving iter,objective,residual_l1,
    primal_step,dual_step every config.trace_every iterations.
    :return: the SolveResult.
    """
    backend = _BACKENDS.get(config.backend)
    if backend is None:
        fail(InvalidParameterException,
             'solve: unknown backend [%s]. Available: %s.' % (config.backend, available_backends()))
    result = backend(s, m, config, trace_path)
    logger.info('solve: %s/%s %s after %d iterations, residual %.6g (delta %.6g), objective %.6g.',
                result.backend, result.mode, result.status, result.iterations,
                result.residual_l1, result.delta, result.objective)
    return result


def solve_feasibility(s: GriddedFunction, m: MeasurementMatrix, config: SolveConfig,
                      trace_path: typing.Optional[str] = None) -> SolveResult:
    return solve(s, m, dataclasses.replace(config, mode=MODE_FEASIBILITY), trace_path)


def solve_l1min(s: GriddedFunction, m: MeasurementMatrix, config: SolveConfig,
                trace_path: typing.Optional[str] = None) -> SolveResult:
    return solve(s, m, dataclasses.replace(config, mode=MODE_L1MIN), trace_path)


def extract_spikes(g: GriddedFunction, threshold_frac: float) -> DiracSignal:
    """
    Read spikes off a recovered function: keep points with
    g >= threshold_frac * max(g), merge lattice neighbours (the eight
    surrounding (q, p) cells, q cyclic, and the pole with all of row 1),
    and report each cluster at its largest point with the cluster sum as
    amplitude.

    :param g: recovered function.
    :param threshold_frac: in (0, 1).
    :return: the spikes as a DiracSignal (empty when g is all zero).
    """
    if not 0 < threshold_frac < 1:
        fail(InvalidParameterException,
             'extract_spikes: threshold_frac must be in (0, 1). You passed [%r].' % (threshold_frac,))
    peak = float(g.values.max()) if g.values.size else 0.0
    if peak <= 0.0:
        return DiracSignal.empty(g.grid)

    kept = np.nonzero(g.values >= threshold_frac * peak)[0]
    adjacency = _lattice_adjacency(g.grid, kept)
    count, labels = connected_components(sparse.csr_matrix(adjacency), directed=False)

    support, amplitudes = [], []
    for label in range(count):
        members = kept[labels == label]
        support.append(int(members[np.argmax(g.values[members])]))
        amplitudes.append(float(g.values[members].sum()))
    order = np.argsort(support)
    return DiracSignal(g.grid, np.array(support)[order], np.array(amplitudes)[order])


def _lattice_adjacency(grid: SphereGrid, indices: np.ndarray) -> np.ndarray:
    q = grid.q[indices]
    p = grid.p[indices]
    dq = np.abs(q[:, None] - q[None, :])
    dq = np.minimum(dq, grid.L - dq)
    dp = np.abs(p[:, None] - p[None, :])
    pole = (p[:, None] == 0) | (p[None, :] == 0)
    return (dp <= 1) & ((dq <= 1) | pole)
