"""
The measurement operator F_N, its adjoint and the projection P_N = F_N* F_N,
restricted to the grid S_L and stored densely.

    A[(n,k), j] = conj(Y_{n,k}(x_j))        (F_N: grid function -> coefficients)
    (F_N* z)(x) = sum_{n,k} z_{n,k} Y_{n,k}(x)
    K[i, j]     = sum_n (2n+1)/(4pi) P_n(cos rho(x_i, x_j)) = Re(A^H A)[i, j]

K is assembled from the addition theorem (real arithmetic only). B, the real
harmonics sampled on the grid, factors it as K = B^T B and is what the solver
multiplies by when SPHERE_SUPERRES_OPERATOR is 'factored'.
"""
import dataclasses
import functools
import logging
import typing

import numpy as np
from numpy.polynomial import legendre as npleg

from .exceptions import (
    DomainMismatchException,
    ImaginaryLeakException,
    InvalidParameterException,
    ShapeMismatchException,
    fail,
)
from .harmonics import eval_Y_all, harmonic_count, harmonic_index, real_harmonics
from .sphere_core import SphereGrid

if typing.TYPE_CHECKING:
    from .signal_gen import DiracSignal


# Try to avoid log-name-context collisions defaulting to __name__
logger = logging.getLogger(__name__)


__all__ = [
    'HarmonicCoeffs',
    'GriddedFunction',
    'MeasurementMatrix',
    'PROJECTION_KERNEL',
    'PROJECTION_COEFFICIENTS',
    'PROJECTION_FACTORED',
    'ALLOWED_PROJECTION_METHODS',
    'mirror_indices',
    'measurement_matrix',
    'forward',
    'adjoint',
    'projection_kernel',
    'apply_projection',
]


PROJECTION_KERNEL = 'kernel'
PROJECTION_COEFFICIENTS = 'coefficients'
PROJECTION_FACTORED = 'factored'

ALLOWED_PROJECTION_METHODS = [
    PROJECTION_KERNEL,
    PROJECTION_COEFFICIENTS,
    PROJECTION_FACTORED,
]

SYMMETRY_TOL = 1e-12
IMAGINARY_LEAK_TOL = 1e-8


@functools.lru_cache(maxsize=8)
def mirror_indices(N: int) -> np.ndarray:
    """Position of (n, -k) for every (n, k) in harmonic_index order."""
    mirror = np.empty(harmonic_count(N), dtype=int)
    for n in range(N + 1):
        for k in range(-n, n + 1):
            mirror[harmonic_index(n, k)] = harmonic_index(n, -k)
    mirror.setflags(write=False)
    return mirror


@dataclasses.dataclass(frozen=True, eq=False)
class HarmonicCoeffs:
    N: int
    values: np.ndarray
    real_symmetric: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        object.__setattr__(self, 'values', values)
        if values.shape != (harmonic_count(self.N),):
            fail(ShapeMismatchException,
                 'HarmonicCoeffs: expected %d values for N=%d. You passed [%s].'
                 % (harmonic_count(self.N), self.N, values.shape))

    def value(self, n: int, k: int) -> complex:
        return complex(self.values[harmonic_index(n, k)])

    def symmetry_error(self) -> float:
        """Largest violation of value(n,-k) = conj(value(n,k)), zero-order imaginary parts included."""
        if self.values.size == 0:
            return 0.0
        return float(np.abs(self.values[mirror_indices(self.N)] - np.conj(self.values)).max())

    def is_real_symmetric(self, tol: float = SYMMETRY_TOL) -> bool:
        scale = max(1.0, float(np.abs(self.values).max()))
        return self.symmetry_error() <= tol * scale

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def __add__(self, other: 'HarmonicCoeffs') -> 'HarmonicCoeffs':
        if other.N != self.N:
            fail(DomainMismatchException,
                 'HarmonicCoeffs.__add__: degrees differ [%d != %d].' % (self.N, other.N))
        return HarmonicCoeffs(self.N, self.values + other.values,
                              real_symmetric=self.real_symmetric and other.real_symmetric)


@dataclasses.dataclass(frozen=True, eq=False)
class GriddedFunction:
    grid: SphereGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, 'values', values)
        if values.shape != (len(self.grid),):
            fail(ShapeMismatchException,
                 'GriddedFunction: expected %d values for %r. You passed [%s].'
                 % (len(self.grid), self.grid, values.shape))

    @classmethod
    def zeros(cls, grid: SphereGrid) -> 'GriddedFunction':
        return cls(grid, np.zeros(len(grid)))

    def l1_norm(self) -> float:
        return float(np.abs(self.values).sum())


class MeasurementMatrix:
    """
    F_N on a grid. A, B and K are built on first access and then kept;
    once built they are read-only.
    """

    def __init__(self, grid: SphereGrid, N: int):
        if N < 0:
            fail(InvalidParameterException,
                 'MeasurementMatrix: N must be >= 0. You passed [%r].' % (N,))
        self.grid = grid
        self.N = int(N)

    def __repr__(self) -> str:
        return 'MeasurementMatrix(N=%d, %r)' % (self.N, self.grid)

    @functools.cached_property
    def A(self) -> np.ndarray:
        matrix = np.conj(eval_Y_all(self.N, self.grid.phi, self.grid.theta))
        matrix.setflags(write=False)
        return matrix

    @functools.cached_property
    def B(self) -> np.ndarray:
        matrix = real_harmonics(self.N, self.grid.phi, self.grid.theta)
        matrix.setflags(write=False)
        return matrix

    @functools.cached_property
    def K(self) -> np.ndarray:
        logger.debug('MeasurementMatrix: assembling %dx%d kernel for N=%d.',
                     len(self.grid), len(self.grid), self.N)
        cosines = np.clip(self.grid.unit_vectors @ self.grid.unit_vectors.T, -1.0, 1.0)
        degrees = np.arange(self.N + 1)
        kernel = npleg.legval(cosines, (2 * degrees + 1) / (4 * np.pi))
        kernel.setflags(write=False)
        return kernel

    @property
    def kernel_built(self) -> bool:
        return 'K' in self.__dict__

    @property
    def diagonal(self) -> float:
        """K[i][i], identical at every grid point."""
        return (self.N + 1) ** 2 / (4 * np.pi)

    def apply(self, values: np.ndarray, method: str = PROJECTION_KERNEL) -> np.ndarray:
        if values.shape != (len(self.grid),):
            fail(ShapeMismatchException,
                 'MeasurementMatrix.apply: expected %d values. You passed [%s].'
                 % (len(self.grid), values.shape))
        if method == PROJECTION_KERNEL:
            return self.K @ values
        elif method == PROJECTION_COEFFICIENTS:
            return (self.A.conj().T @ (self.A @ values)).real
        elif method == PROJECTION_FACTORED:
            return self.B.T @ (self.B @ values)
        fail(InvalidParameterException,
             'MeasurementMatrix.apply: unknown method [%s].' % str(method))


@functools.lru_cache(maxsize=4)
def measurement_matrix(grid: SphereGrid, N: int) -> MeasurementMatrix:
    return MeasurementMatrix(grid, N)


def forward(signal: 'DiracSignal', N: int) -> HarmonicCoeffs:
    """
    Noiseless measurements y_{n,k} = sum_m c_m conj(Y_{n,k}(x_m)).

    :param signal: the Dirac stream.
    :param N: maximum degree.
    :return: coefficients, flagged real-symmetric.
    """
    support = np.asarray(signal.support, dtype=int)
    if support.size and (support.min() < 0 or support.max() >= len(signal.grid)):
        fail(DomainMismatchException,
             'forward: support indices must lie in [0, %d).' % len(signal.grid))
    if support.size == 0:
        return HarmonicCoeffs(N, np.zeros(harmonic_count(N), dtype=complex), real_symmetric=True)
    harmonics = eval_Y_all(N, signal.grid.phi[support], signal.grid.theta[support])
    values = np.conj(harmonics) @ np.asarray(signal.amplitudes, dtype=float)
    return HarmonicCoeffs(N, values, real_symmetric=True)


def adjoint(coeffs: HarmonicCoeffs, grid: SphereGrid,
            matrix: typing.Optional[MeasurementMatrix] = None) -> GriddedFunction:
    """
    Evaluate sum z_{n,k} Y_{n,k}(x) at every grid point and keep the real part.

    For coefficients flagged real-symmetric the imaginary part must vanish;
    anything above 1e-8 of the sup norm means the input was not what it
    claimed and raises ImaginaryLeakException.

    :param coeffs: the coefficients z.
    :param grid: where to evaluate.
    :param matrix: optional prebuilt MeasurementMatrix for (grid, coeffs.N).
    :return: the gridded real part.
    """
    if matrix is None:
        matrix = measurement_matrix(grid, coeffs.N)
    elif matrix.grid != grid or matrix.N != coeffs.N:
        fail(DomainMismatchException,
             'adjoint: %r does not match N=%d on %r.' % (matrix, coeffs.N, grid))
    values = matrix.A.conj().T @ coeffs.values
    if coeffs.real_symmetric:
        sup_norm = float(np.abs(values).max()) if values.size else 0.0
        leak = float(np.abs(values.imag).max()) if values.size else 0.0
        if leak > IMAGINARY_LEAK_TOL * sup_norm:
            fail(ImaginaryLeakException,
                 'adjoint: imaginary part [%.3e] exceeds 1e-8 of the sup norm [%.3e].' % (leak, sup_norm))
    return GriddedFunction(grid, values.real)


def projection_kernel(grid: SphereGrid, N: int) -> MeasurementMatrix:
    matrix = measurement_matrix(grid, N)
    # Touch K so it is assembled now, not inside the first solve.
    getattr(matrix, 'K')
    return matrix


def apply_projection(m: MeasurementMatrix, g: GriddedFunction,
                     method: str = PROJECTION_KERNEL) -> GriddedFunction:
    """
    P_N g on the grid. All methods compute the same K g; 'kernel' uses the
    dense addition-theorem matrix, 'coefficients' goes through A and its
    adjoint, 'factored' through the real harmonics.
    """
    if g.grid != m.grid:
        fail(ShapeMismatchException,
             'apply_projection: function lives on %r, operator on %r.' % (g.grid, m.grid))
    return GriddedFunction(m.grid, m.apply(g.values, method))
