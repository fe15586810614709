"""
Random positive Dirac streams and their noisy low-degree measurements.

A support is drawn as r disjoint cells of grid points, each cell separated
at scale mu/N, so it comes with its own Rayleigh-regularity witness.
Amplitudes are uniform on (0, 10]. Noise is Gaussian on the harmonic
coefficients, mirrored so the noisy coefficients stay conjugate-symmetric
and their back-projection s stays real.

All randomness goes through numpy's PCG64 generator (default_rng); every
function takes a seed (int, SeedSequence or Generator) and the same seed
gives bit-identical output.
"""
import dataclasses
import logging
import math
import typing

import numpy as np

from .conf import settings
from .exceptions import (
    DomainMismatchException,
    InfeasibleDensityException,
    InvalidInputException,
    InvalidParameterException,
    fail,
)
from .harmonics import harmonic_count, harmonic_index
from .operators import (
    GriddedFunction,
    HarmonicCoeffs,
    MeasurementMatrix,
    adjoint,
    measurement_matrix,
    mirror_indices,
)
from .sphere_core import RayleighParams, SphereGrid, SpherePoint, pairwise_distances, verify_rayleigh_witness


# Try to avoid log-name-context collisions defaulting to __name__
logger = logging.getLogger(__name__)


__all__ = [
    'DiracSignal',
    'RayleighSupport',
    'Measurement',
    'spawn_seeds',
    'SEPARATION_THEOREM',
    'SEPARATION_CELL',
    'ALLOWED_SEPARATION_SCALINGS',
    'AMPLITUDE_MAX',
    'cell_sizes',
    'packing_bound',
    'gen_support',
    'gen_amplitudes',
    'gen_signal',
    'add_noise',
    'snr_db',
    'calibrate_sigma',
    'truth_residual',
]


# mu = nu * r, the class covered by the error bound.
SEPARATION_THEOREM = 'theorem'
# mu = nu inside every cell, dense enough for r=3, M=41 at N=15.
SEPARATION_CELL = 'cell'

ALLOWED_SEPARATION_SCALINGS = [
    SEPARATION_THEOREM,
    SEPARATION_CELL,
]

AMPLITUDE_MAX = 10.0

SeedLike = typing.Union[int, np.random.SeedSequence, np.random.Generator, None]


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_seeds(seed: SeedLike, count: int) -> typing.List[SeedLike]:
    """Independent child streams of a seed. A Generator is shared as is."""
    if isinstance(seed, np.random.Generator):
        return [seed] * count
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return seed.spawn(count)


@dataclasses.dataclass(frozen=True, eq=False)
class DiracSignal:
    grid: SphereGrid
    support: np.ndarray
    amplitudes: np.ndarray
    witness: typing.Optional[typing.Tuple[typing.Tuple[int, ...], ...]] = None
    params: typing.Optional[RayleighParams] = None

    def __post_init__(self):
        support = np.asarray(self.support, dtype=int).reshape(-1)
        amplitudes = np.asarray(self.amplitudes, dtype=float).reshape(-1)
        object.__setattr__(self, 'support', support)
        object.__setattr__(self, 'amplitudes', amplitudes)

        if support.shape != amplitudes.shape:
            fail(InvalidInputException,
                 'DiracSignal: %d support points but %d amplitudes.' % (support.size, amplitudes.size))
        if np.unique(support).size != support.size:
            fail(InvalidInputException, 'DiracSignal: support indices must be distinct.')
        if support.size and (support.min() < 0 or support.max() >= len(self.grid)):
            fail(DomainMismatchException,
                 'DiracSignal: support indices must lie in [0, %d).' % len(self.grid))
        if amplitudes.size and not np.all(amplitudes > 0):
            fail(InvalidInputException, 'DiracSignal: amplitudes must be strictly positive.')

        if self.witness is not None:
            witness = tuple(tuple(int(index) for index in cell) for cell in self.witness)
            object.__setattr__(self, 'witness', witness)
            members = [index for cell in witness for index in cell]
            if len(members) != len(set(members)) or set(members) != set(support.tolist()):
                fail(InvalidInputException,
                     'DiracSignal: the witness cells must partition the support exactly.')
            if self.params is not None and not verify_rayleigh_witness(self.witness_points(), self.params):
                fail(InvalidInputException,
                     'DiracSignal: the witness does not certify Rayleigh regularity with %r.' % (self.params,))
        elif self.params is not None:
            fail(InvalidInputException, 'DiracSignal: params given without a witness.')

    @classmethod
    def empty(cls, grid: SphereGrid) -> 'DiracSignal':
        return cls(grid, np.zeros(0, dtype=int), np.zeros(0))

    def __len__(self) -> int:
        return self.support.size

    @property
    def points(self) -> typing.List[SpherePoint]:
        return self.grid.points_at(self.support)

    def witness_points(self) -> typing.List[typing.List[SpherePoint]]:
        return [self.grid.points_at(cell) for cell in (self.witness or ())]

    def cell_of(self) -> np.ndarray:
        """Witness cell of every support point, -1 when there is no witness."""
        cells = np.full(self.support.size, -1, dtype=int)
        position = {int(index): i for i, index in enumerate(self.support)}
        for c, cell in enumerate(self.witness or ()):
            for index in cell:
                cells[position[int(index)]] = c
        return cells

    def to_gridded(self) -> GriddedFunction:
        values = np.zeros(len(self.grid))
        values[self.support] = self.amplitudes
        return GriddedFunction(self.grid, values)


@dataclasses.dataclass(frozen=True)
class RayleighSupport:
    grid: SphereGrid
    cells: typing.Tuple[typing.Tuple[int, ...], ...]
    params: RayleighParams

    @property
    def support(self) -> np.ndarray:
        return np.array([index for cell in self.cells for index in cell], dtype=int)

    def verify(self) -> bool:
        return verify_rayleigh_witness([self.grid.points_at(cell) for cell in self.cells], self.params)


@dataclasses.dataclass(frozen=True, eq=False)
class Measurement:
    clean: HarmonicCoeffs
    noise: HarmonicCoeffs
    noisy: HarmonicCoeffs
    s: GriddedFunction
    delta: float
    oracle_delta: float
    sigma: float
    snr_db: typing.Optional[float] = None


def cell_sizes(r: int, points_per_cell: typing.Optional[int] = None,
               total_m: typing.Optional[int] = None) -> typing.List[int]:
    """
    Target size of every cell: points_per_cell each, or total_m spread
    round-robin (the first total_m % r cells get one extra point).
    """
    if total_m is not None:
        if total_m < 0:
            fail(InvalidParameterException, 'cell_sizes: total_m must be >= 0. You passed [%r].' % (total_m,))
        return [total_m // r + (1 if i < total_m % r else 0) for i in range(r)]
    if points_per_cell is None or points_per_cell < 1:
        fail(InvalidParameterException,
             'cell_sizes: points_per_cell must be >= 1. You passed [%r].' % (points_per_cell,))
    return [int(points_per_cell)] * r


def packing_bound(min_distance: float) -> float:
    """
    Most points a cell can hold when pairwise distances are >= min_distance:
    caps of angular radius min_distance/2 around them are disjoint. For small
    radii a this is the familiar 4/a^2.
    """
    radius = min_distance / 2.0
    if radius >= math.pi / 2:
        return 2.0
    return 2.0 / (1.0 - math.cos(radius))


def gen_support(r: int, nu: float, N: int, grid: SphereGrid,
                points_per_cell: typing.Optional[int] = None,
                rng_seed: SeedLike = None,
                total_m: typing.Optional[int] = None,
                separation: str = SEPARATION_THEOREM,
                attempts_per_point: typing.Optional[int] = None) -> RayleighSupport:
    """
    Draw r disjoint cells of grid indices by rejection sampling, uniform
    over grid points, each cell separated by at least mu/N.

    With neither points_per_cell nor total_m every cell is filled to
    saturation instead: grid points are visited in random order and each one
    at least mu/N away from the cell so far joins it.

    :param r: number of cells (the Rayleigh regularity).
    :param nu: separation constant.
    :param N: harmonic degree.
    :param grid: the target grid.
    :param points_per_cell: size of every cell (ignored when total_m is set).
    :param rng_seed: seed for the draw.
    :param total_m: total support size, spread round-robin over the cells.
    :param separation: SEPARATION_THEOREM (mu = nu*r) or SEPARATION_CELL (mu = nu).
    :param attempts_per_point: rejection budget per requested point; the
    default comes from SPHERE_SUPERRES_ATTEMPTS_PER_POINT.
    :return: the cells and the parameters they certify.
    """
    if r < 1 or nu <= 0 or N < 1:
        fail(InvalidParameterException,
             'gen_support: need r >= 1, nu > 0, N >= 1. You passed [r=%r, nu=%r, N=%r].' % (r, nu, N))
    if separation not in ALLOWED_SEPARATION_SCALINGS:
        fail(InvalidParameterException, 'gen_support: unknown separation scaling [%s].' % str(separation))

    mu = nu * r if separation == SEPARATION_THEOREM else nu
    params = RayleighParams(mu=mu, r=r, N=N, L=grid.L)
    min_distance = params.min_distance

    if points_per_cell is None and total_m is None:
        cells = _fill_cells(r, grid, min_distance, _rng(rng_seed))
        logger.debug('gen_support: r=%d, mu/N=%.6g, filled sizes=%s.', r, min_distance, [len(c) for c in cells])
        return RayleighSupport(grid=grid, cells=cells, params=params)

    sizes = cell_sizes(r, points_per_cell, total_m)
    if attempts_per_point is None:
        attempts_per_point = settings.SPHERE_SUPERRES_ATTEMPTS_PER_POINT

    bound = packing_bound(min_distance)
    if max(sizes) > bound:
        fail(InfeasibleDensityException,
             'gen_support: a cell of %d points cannot be separated by %.6g rad '
             '(packing bound %.3f).' % (max(sizes), min_distance, bound),
             achieved_sizes=[0] * r)

    rng = _rng(rng_seed)
    vectors = grid.unit_vectors
    used = set()
    cells: typing.List[typing.Tuple[int, ...]] = []
    for size in sizes:
        chosen: typing.List[int] = []
        budget = attempts_per_point * max(size, 1)
        attempts = 0
        while len(chosen) < size and attempts < budget:
            attempts += 1
            index = int(rng.integers(len(grid)))
            if index in used:
                continue
            if chosen:
                if pairwise_distances(vectors[chosen], vectors[index:index + 1]).min() < min_distance:
                    continue
            chosen.append(index)
            used.add(index)
        if len(chosen) < size:
            achieved = [len(cell) for cell in cells] + [len(chosen)] + [0] * (r - len(cells) - 1)
            fail(InfeasibleDensityException,
                 'gen_support: attempt budget exhausted after %d draws. Achieved cell sizes %s '
                 'for requested %s.' % (attempts, achieved, sizes),
                 achieved_sizes=achieved)
        cells.append(tuple(chosen))

    logger.debug('gen_support: r=%d, mu/N=%.6g, sizes=%s.', r, min_distance, sizes)
    return RayleighSupport(grid=grid, cells=tuple(cells), params=params)


def _fill_cells(r: int, grid: SphereGrid, min_distance: float,
                rng: np.random.Generator) -> typing.Tuple[typing.Tuple[int, ...], ...]:
    vectors = grid.unit_vectors
    # Slack keeps accepted pairs clear of min_distance after rounding.
    cos_limit = math.cos(min_distance) - 1e-12
    used = np.zeros(len(grid), dtype=bool)
    cells = []
    for _ in range(r):
        blocked = used.copy()
        chosen = []
        for index in rng.permutation(len(grid)):
            if blocked[index]:
                continue
            chosen.append(int(index))
            used[index] = True
            blocked |= vectors @ vectors[index] > cos_limit
        cells.append(tuple(chosen))
    return tuple(cells)


def gen_amplitudes(count: int, rng_seed: SeedLike = None) -> np.ndarray:
    """I.i.d. uniform amplitudes on (0, 10]."""
    if count < 0:
        fail(InvalidParameterException, 'gen_amplitudes: count must be >= 0. You passed [%r].' % (count,))
    return AMPLITUDE_MAX * (1.0 - _rng(rng_seed).random(count))


def gen_signal(r: int, nu: float, N: int, grid: SphereGrid,
               points_per_cell: typing.Optional[int] = None,
               rng_seed: SeedLike = None,
               total_m: typing.Optional[int] = None,
               separation: str = SEPARATION_THEOREM) -> DiracSignal:
    """
    Support and amplitudes together, each from its own child stream of
    rng_seed.
    """
    support_seed, amplitude_seed = spawn_seeds(rng_seed, 2)
    drawn = gen_support(r, nu, N, grid, points_per_cell=points_per_cell, rng_seed=support_seed,
                        total_m=total_m, separation=separation)
    support = drawn.support
    return DiracSignal(grid=grid,
                       support=support,
                       amplitudes=gen_amplitudes(support.size, amplitude_seed),
                       witness=drawn.cells,
                       params=drawn.params)


def add_noise(clean: HarmonicCoeffs, sigma: float, rng_seed: SeedLike, grid: SphereGrid,
              delta: typing.Optional[float] = None,
              matrix: typing.Optional[MeasurementMatrix] = None) -> Measurement:
    """
    Add conjugate-symmetric Gaussian noise to clean coefficients.

    Order 0 gets a real N(0, sigma^2) draw; order k > 0 gets independent real
    and imaginary parts of standard deviation sigma/sqrt(2), and (n, -k) is
    set to the conjugate. E||eta||^2 = sigma^2 (N+1)^2.

    :param clean: real-symmetric coefficients.
    :param sigma: noise level per coefficient.
    :param rng_seed: seed for the draw.
    :param grid: grid on which s = F_N* y is sampled.
    :param delta: override for the noise budget; by default (oracle mode)
    delta is the l1 norm of the back-projected noise.
    :param matrix: optional prebuilt MeasurementMatrix.
    :return: the Measurement.
    """
    if not clean.real_symmetric or not clean.is_real_symmetric():
        fail(InvalidInputException, 'add_noise: clean coefficients must be real-symmetric.')
    if sigma < 0 or not math.isfinite(sigma):
        fail(InvalidParameterException, 'add_noise: sigma must be finite and >= 0. You passed [%r].' % (sigma,))

    N = clean.N
    if matrix is None:
        matrix = measurement_matrix(grid, N)

    zero_orders = np.array([harmonic_index(n, 0) for n in range(N + 1)])
    positive_orders = np.array([harmonic_index(n, k) for n in range(1, N + 1) for k in range(1, n + 1)], dtype=int)

    rng = _rng(rng_seed)
    real_draws = rng.standard_normal(zero_orders.size)
    complex_draws = rng.standard_normal((positive_orders.size, 2))

    values = np.zeros(harmonic_count(N), dtype=complex)
    values[zero_orders] = sigma * real_draws
    if positive_orders.size:
        positive = sigma / math.sqrt(2.0) * (complex_draws[:, 0] + 1j * complex_draws[:, 1])
        values[positive_orders] = positive
        values[mirror_indices(N)[positive_orders]] = np.conj(positive)
    noise = HarmonicCoeffs(N, values, real_symmetric=True)

    noisy = clean + noise
    s = adjoint(noisy, grid, matrix)
    oracle_delta = adjoint(noise, grid, matrix).l1_norm()
    if delta is None:
        delta = oracle_delta
    elif delta < oracle_delta:
        logger.warning('add_noise: supplied delta %.6g is below the realized noise norm %.6g; '
                       'the true signal will not be feasible.', delta, oracle_delta)

    return Measurement(clean=clean, noise=noise, noisy=noisy, s=s,
                       delta=float(delta), oracle_delta=oracle_delta, sigma=float(sigma),
                       snr_db=snr_db(clean, noise))


def snr_db(clean: HarmonicCoeffs, noise: HarmonicCoeffs) -> float:
    """20 log10(||clean|| / ||noise||) over the full complex vectors; inf for zero noise."""
    if clean.N != noise.N:
        fail(DomainMismatchException, 'snr_db: degrees differ [%d != %d].' % (clean.N, noise.N))
    noise_norm = noise.l2_norm()
    if noise_norm == 0.0:
        return math.inf
    clean_norm = clean.l2_norm()
    if clean_norm == 0.0:
        return -math.inf
    return 20.0 * math.log10(clean_norm / noise_norm)


def calibrate_sigma(clean: HarmonicCoeffs, target_snr_db: float) -> float:
    """
    Sigma whose expected noise norm sigma*(N+1) gives the target SNR.

    :param clean: nonzero clean coefficients.
    :param target_snr_db: target in dB; +inf means no noise.
    :return: sigma >= 0.
    """
    clean_norm = clean.l2_norm()
    if clean_norm == 0.0:
        fail(InvalidInputException, 'calibrate_sigma: clean coefficients are all zero.')
    if math.isinf(target_snr_db) and target_snr_db > 0:
        return 0.0
    return clean_norm / (10.0 ** (target_snr_db / 20.0) * (clean.N + 1))


def truth_residual(signal: DiracSignal, measurement: Measurement, matrix: MeasurementMatrix) -> float:
    """||s - P_N f||_1 for the true signal, to check it lies in the constraint set."""
    return float(np.abs(measurement.s.values - matrix.apply(signal.to_gridded().values)).sum())
