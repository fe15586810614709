"""
Spherical harmonics of degree n and order k,

    Y_{n,k}(phi, theta) = A_{n,k} * exp(i*k*phi) * P_{n,|k|}(cos(theta)),

with A_{n,k} = sqrt((2n+1)/(4pi) * (n-|k|)! / (n+|k|)!).

P_{n,k} carries no Condon-Shortley phase, so Y_{n,-k} = conj(Y_{n,k}) and a
real function has conjugate-symmetric coefficients. The projection kernel
only depends on |Y|, so the convention never reaches the solver.

Coefficient vectors are flat, degree-major: (n, k) sits at n*n + n + k.
"""
import cmath
import logging
import math
import typing

import numpy as np
from scipy.special import gammaln

from .exceptions import InvalidParameterException, fail
from .sphere_core import SpherePoint


# Try to avoid log-name-context collisions defaulting to __name__
logger = logging.getLogger(__name__)


__all__ = [
    'HarmonicIndex',
    'harmonic_index',
    'harmonic_count',
    'harmonic_indices',
    'assoc_legendre',
    'assoc_legendre_table',
    'normalization',
    'eval_Y',
    'eval_Y_all',
    'real_harmonics',
    'legendre',
]


MAX_DEGREE = 64


class HarmonicIndex(typing.NamedTuple):
    n: int
    k: int


def harmonic_index(n: int, k: int) -> int:
    return n * n + n + k


def harmonic_count(N: int) -> int:
    return (N + 1) ** 2


def harmonic_indices(N: int) -> typing.List[HarmonicIndex]:
    return [HarmonicIndex(n, k) for n in range(N + 1) for k in range(-n, n + 1)]


def assoc_legendre_table(N: int, x: np.ndarray, sin_theta: typing.Optional[np.ndarray] = None) -> np.ndarray:
    """
    All P_{n,k}(x) for 0 <= k <= n <= N in one sweep.

    Starts each order from the diagonal P_{k,k} = (2k-1)!! (1-x^2)^(k/2) and
    climbs in degree with
        (n-k) P_{n,k} = (2n-1) x P_{n-1,k} - (n+k-1) P_{n-2,k}.

    :param N: maximum degree.
    :param x: array of arguments in [-1, 1].
    :param sin_theta: optional sqrt(1 - x^2), passed when the colatitude is
    known so the diagonal does not lose accuracy near the poles.
    :return: array of shape (N+1, N+1) + x.shape, zero where k > n.
    """
    x = np.asarray(x, dtype=float)
    if sin_theta is None:
        sin_theta = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    table = np.zeros((N + 1, N + 1) + x.shape)

    diagonal = np.ones_like(x)
    for k in range(N + 1):
        if k > 0:
            diagonal = diagonal * (2 * k - 1) * sin_theta
        table[k, k] = diagonal
        if k + 1 <= N:
            table[k + 1, k] = (2 * k + 1) * x * diagonal
        for n in range(k + 2, N + 1):
            table[n, k] = ((2 * n - 1) * x * table[n - 1, k] - (n + k - 1) * table[n - 2, k]) / (n - k)
    return table


def assoc_legendre(n: int, k: int, x: float) -> float:
    """
    Associated Legendre function P_{n,k}(x) without the (-1)^k phase.

    :param n: degree >= 0.
    :param k: order, 0 <= k <= n.
    :param x: argument in [-1, 1].
    :return: the value.
    """
    if n < 0 or k < 0 or k > n:
        fail(InvalidParameterException,
             'assoc_legendre: need 0 <= k <= n. You passed [n=%r, k=%r].' % (n, k))
    if abs(x) > 1.0:
        fail(InvalidParameterException,
             'assoc_legendre: |x| must be <= 1. You passed [%r].' % (x,))
    return float(assoc_legendre_table(n, np.array([x]))[n, k, 0])


def normalization(n: int, k: int) -> float:
    """
    A_{n,k}, with the factorial ratio evaluated as a log-gamma difference so
    high degrees do not overflow.
    """
    k = abs(k)
    log_ratio = gammaln(n - k + 1) - gammaln(n + k + 1)
    return math.sqrt((2 * n + 1) / (4 * math.pi)) * math.exp(0.5 * log_ratio)


def _normalization_table(N: int) -> np.ndarray:
    n = np.arange(N + 1)[:, None]
    k = np.arange(N + 1)[None, :]
    valid = k <= n
    log_ratio = np.where(valid, gammaln(np.abs(n - k) + 1) - gammaln(n + k + 1), -np.inf)
    return np.sqrt((2 * n + 1) / (4 * np.pi)) * np.exp(0.5 * log_ratio)


def eval_Y(n: int, k: int, point: SpherePoint) -> complex:
    if abs(k) > n:
        fail(InvalidParameterException,
             'eval_Y: |k| must be <= n. You passed [n=%r, k=%r].' % (n, k))
    legendre_value = assoc_legendre_table(n, np.array([math.cos(point.theta)]),
                                          np.array([math.sin(point.theta)]))[n, abs(k), 0]
    return normalization(n, k) * cmath.exp(1j * k * point.phi) * legendre_value


def _check_degree(N: int, caller: str) -> None:
    if N < 0 or N > MAX_DEGREE:
        fail(InvalidParameterException,
             '%s: N must be in [0, %d]. You passed [%r].' % (caller, MAX_DEGREE, N))


def eval_Y_all(N: int, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """
    Every Y_{n,k} with n <= N at every point.

    :param N: maximum degree.
    :param phi: azimuths, shape (P,).
    :param theta: colatitudes, shape (P,).
    :return: complex array of shape ((N+1)^2, P), rows in harmonic_index order.
    """
    _check_degree(N, 'eval_Y_all')
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    table = assoc_legendre_table(N, np.cos(theta), np.sin(theta)) * _normalization_table(N)[:, :, None]
    phases = np.exp(1j * np.arange(N + 1)[:, None] * phi[None, :])

    values = np.zeros((harmonic_count(N), phi.shape[0]), dtype=complex)
    for n in range(N + 1):
        for k in range(n + 1):
            positive = table[n, k] * phases[k]
            values[harmonic_index(n, k)] = positive
            if k > 0:
                values[harmonic_index(n, -k)] = np.conj(positive)
    return values


def real_harmonics(N: int, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """
    Real orthonormal basis spanning the same space as eval_Y_all.

    Row n*n + n + k holds sqrt(2) Re Y_{n,k} for k > 0, sqrt(2) Im Y_{n,|k|}
    for k < 0 and Y_{n,0} for k = 0, so that B^T B = Re(Y^H Y).
    """
    complex_values = eval_Y_all(N, phi, theta)
    values = np.empty(complex_values.shape)
    root_two = math.sqrt(2.0)
    for n in range(N + 1):
        values[harmonic_index(n, 0)] = complex_values[harmonic_index(n, 0)].real
        for k in range(1, n + 1):
            positive = complex_values[harmonic_index(n, k)]
            values[harmonic_index(n, k)] = root_two * positive.real
            values[harmonic_index(n, -k)] = root_two * positive.imag
    return values


def legendre(n: int, x: typing.Union[float, np.ndarray]) -> typing.Union[float, np.ndarray]:
    """
    Legendre polynomial P_n by the Bonnet recurrence
        (m+1) P_{m+1} = (2m+1) x P_m - m P_{m-1}.

    :param n: degree >= 0.
    :param x: scalar or array in [-1, 1].
    :return: P_n(x), same shape as x.
    """
    if n < 0:
        fail(InvalidParameterException,
             'legendre: n must be >= 0. You passed [%r].' % (n,))
    x_array = np.asarray(x, dtype=float)
    previous, current = np.ones_like(x_array), x_array.copy()
    if n == 0:
        current = previous
    for m in range(1, n):
        previous, current = current, ((2 * m + 1) * x_array * current - m * previous) / (m + 1)
    if np.ndim(x) == 0:
        return float(current)
    return current
