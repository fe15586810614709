"""
Geometry of the unit sphere and the target grid.

Points are (phi, theta) pairs, phi the azimuth in [0, 2*pi) and theta the
colatitude in [0, pi]. The recovery domain is the uniform grid

    S_L = {(2*pi*q/L, pi*p/L) : q, p in 0..L-1}

with the L coincident north-pole points collapsed into one stored point, so
a grid of parameter L stores L*(L-1) + 1 points:

    from sphere_superres import build_grid, min_separation

    grid = build_grid(50)
    len(grid)                          # 2451
    grid.point(grid.index_of(3, 25))   # SpherePoint(phi=0.3769..., theta=1.5707...)

The separation and Rayleigh-regularity predicates work on plain lists of
SpherePoint, so they apply to any support, on or off the grid.
"""
import dataclasses
import functools
import logging
import math
import typing

import numpy as np

from .exceptions import (
    InvalidParameterException,
    UndefinedInputException,
    fail,
)


# Try to avoid log-name-context collisions defaulting to __name__
logger = logging.getLogger(__name__)


__all__ = [
    'SpherePoint',
    'SphereGrid',
    'RayleighParams',
    'NORTH_POLE',
    'geodesic_distance',
    'pairwise_distances',
    'build_grid',
    'min_separation',
    'satisfies_separation',
    'verify_rayleigh_witness',
    'greedy_rayleigh_partition',
]


TWO_PI = 2.0 * math.pi

# Distances below this are treated as the same point on the sphere.
COINCIDENCE_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class SpherePoint:
    phi: float
    theta: float

    def __post_init__(self):
        if not (0.0 <= self.phi < TWO_PI) or not (0.0 <= self.theta <= math.pi):
            fail(InvalidParameterException,
                 'SpherePoint: phi must be in [0, 2pi) and theta in [0, pi]. '
                 'You passed [%r, %r].' % (self.phi, self.theta))

    @property
    def unit_vector(self) -> np.ndarray:
        sin_theta = math.sin(self.theta)
        return np.array([sin_theta * math.cos(self.phi),
                         sin_theta * math.sin(self.phi),
                         math.cos(self.theta)])


NORTH_POLE = SpherePoint(0.0, 0.0)


def _unit_vectors(phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    sin_theta = np.sin(theta)
    return np.stack([sin_theta * np.cos(phi),
                     sin_theta * np.sin(phi),
                     np.cos(theta)], axis=-1)


def _as_unit_vectors(points: typing.Sequence[SpherePoint]) -> np.ndarray:
    if len(points) == 0:
        return np.zeros((0, 3))
    return _unit_vectors(np.array([p.phi for p in points]),
                         np.array([p.theta for p in points]))


def geodesic_distance(a: SpherePoint, b: SpherePoint) -> float:
    """
    Great-circle angle between two points, arccos(u . v). Evaluated as
    atan2(|u x v|, u . v), which agrees with the clamped arccos and stays
    exact for identical and nearly identical points.

    :param a: first point.
    :param b: second point.
    :return: the distance in radians, in [0, pi].
    """
    u, v = a.unit_vector, b.unit_vector
    return math.atan2(float(np.linalg.norm(np.cross(u, v))), float(np.dot(u, v)))


def pairwise_distances(vectors_a: np.ndarray, vectors_b: typing.Optional[np.ndarray] = None) -> np.ndarray:
    """
    Matrix of geodesic distances between two sets of unit vectors (rows).

    :param vectors_a: (m, 3) array of unit vectors.
    :param vectors_b: (n, 3) array; defaults to vectors_a.
    :return: (m, n) array of distances in radians.
    """
    if vectors_b is None:
        vectors_b = vectors_a
    cross = np.cross(vectors_a[:, None, :], vectors_b[None, :, :])
    return np.arctan2(np.linalg.norm(cross, axis=-1), vectors_a @ vectors_b.T)


class SphereGrid:
    """
    The deduplicated uniform grid of parameter L.

    Index 0 is the north pole; row p >= 1 of the (q, p) lattice occupies
    indices 1 + (p - 1) * L + q. Grids compare and hash by L, so they can key
    caches of operators built on them.
    """

    def __init__(self, L: int):
        self.L = int(L)
        p = np.repeat(np.arange(1, self.L), self.L)
        q = np.tile(np.arange(self.L), self.L - 1)
        self.q = np.concatenate([[0], q])
        self.p = np.concatenate([[0], p])
        self.phi = TWO_PI * self.q / self.L
        self.theta = math.pi * self.p / self.L
        self.unit_vectors = _unit_vectors(self.phi, self.theta)
        for array in (self.q, self.p, self.phi, self.theta, self.unit_vectors):
            array.setflags(write=False)

    def __len__(self) -> int:
        return self.phi.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, SphereGrid) and other.L == self.L

    def __hash__(self) -> int:
        return hash(('SphereGrid', self.L))

    def __repr__(self) -> str:
        return 'SphereGrid(L=%d, points=%d)' % (self.L, len(self))

    def index_of(self, q: int, p: int) -> int:
        if not (0 <= q < self.L and 0 <= p < self.L):
            fail(InvalidParameterException,
                 'SphereGrid.index_of: (q, p) must lie in [0, %d). You passed [%d, %d].' % (self.L, q, p))
        if p == 0:
            return 0
        return 1 + (p - 1) * self.L + q

    def point(self, index: int) -> SpherePoint:
        return SpherePoint(float(self.phi[index]), float(self.theta[index]))

    @property
    def points(self) -> typing.List[SpherePoint]:
        return [self.point(i) for i in range(len(self))]

    def points_at(self, indices: typing.Iterable[int]) -> typing.List[SpherePoint]:
        return [self.point(int(i)) for i in indices]

    def nearest_index(self, point: SpherePoint) -> int:
        return int(np.argmax(self.unit_vectors @ point.unit_vector))


@dataclasses.dataclass(frozen=True)
class RayleighParams:
    mu: float
    r: int
    N: int
    L: int

    def __post_init__(self):
        if not (self.mu > 0 and self.r >= 1 and self.N >= 1 and self.L >= 1):
            fail(InvalidParameterException,
                 'RayleighParams: need mu > 0, r >= 1, N >= 1, L >= 1. '
                 'You passed [%r, %r, %r, %r].' % (self.mu, self.r, self.N, self.L))

    @classmethod
    def from_nu(cls, nu: float, r: int, N: int, L: int) -> 'RayleighParams':
        """The class of signals for which the error bound holds: mu = nu * r."""
        return cls(mu=nu * r, r=r, N=N, L=L)

    @property
    def nu(self) -> float:
        return self.mu / self.r

    @property
    def min_distance(self) -> float:
        return self.mu / self.N


@functools.lru_cache(maxsize=8)
def build_grid(L: int) -> SphereGrid:
    """
    Build S_L with the north-pole row deduplicated.

    :param L: grid parameter, at least 2.
    :return: the grid; cached, so repeated calls share one object.
    """
    if int(L) != L or L < 2:
        fail(InvalidParameterException,
             'build_grid: L must be an integer >= 2. You passed [%r].' % (L,))
    grid = SphereGrid(int(L))
    logger.debug('build_grid: L=%d, %d points.', grid.L, len(grid))
    return grid


def min_separation(points: typing.Sequence[SpherePoint]) -> float:
    """
    Smallest geodesic distance over distinct pairs.

    :param points: at least two points.
    :return: the minimum distance in radians.
    """
    if len(points) < 2:
        fail(UndefinedInputException,
             'min_separation: need at least 2 points. You passed [%d].' % len(points))
    distances = pairwise_distances(_as_unit_vectors(points))
    upper = np.triu_indices(len(points), k=1)
    return float(distances[upper].min())


def satisfies_separation(points: typing.Sequence[SpherePoint], nu: float, N: int) -> bool:
    if len(points) < 2:
        return True
    return min_separation(points) >= nu / N


def verify_rayleigh_witness(partition: typing.Sequence[typing.Sequence[SpherePoint]],
                            params: RayleighParams) -> bool:
    """
    Check a witness of Rayleigh regularity: exactly r pairwise-disjoint cells,
    each satisfying the separation condition with constant mu.

    :param partition: list of r cells, each a list of points.
    :param params: the (mu, r; N, L) parameters.
    :return: True when the partition certifies regularity.
    """
    if len(partition) != params.r:
        logger.debug('verify_rayleigh_witness: %d cells for r=%d.', len(partition), params.r)
        return False

    vectors = [_as_unit_vectors(cell) for cell in partition]
    for i in range(len(vectors)):
        for j in range(i + 1, len(vectors)):
            if vectors[i].size and vectors[j].size:
                if pairwise_distances(vectors[i], vectors[j]).min() < COINCIDENCE_TOL:
                    return False

    return all(satisfies_separation(cell, params.mu, params.N) for cell in partition)


def greedy_rayleigh_partition(points: typing.Sequence[SpherePoint], mu: float, N: int) -> typing.List[typing.List[SpherePoint]]:
    """
    First-fit colouring of the conflict graph joining pairs closer than mu/N.

    The number of cells is an upper bound on the smallest r for which the set
    is Rayleigh-regular at (mu, r; N, L). Diagnostic only: the exact minimum is
    a graph colouring problem.

    :param points: the support.
    :param mu: separation constant applied inside each cell.
    :param N: harmonic degree.
    :return: list of cells.
    """
    vectors = _as_unit_vectors(points)
    distances = pairwise_distances(vectors) if len(points) else np.zeros((0, 0))
    threshold = mu / N
    cells: typing.List[typing.List[int]] = []
    for i in range(len(points)):
        for cell in cells:
            if all(distances[i, j] >= threshold for j in cell):
                cell.append(i)
                break
        else:
            cells.append([i])
    return [[points[i] for i in cell] for cell in cells]
