import math
import unittest

import numpy as np

from sphere_superres.exceptions import InvalidParameterException, UndefinedInputException
from sphere_superres.sphere_core import (
    NORTH_POLE,
    RayleighParams,
    SpherePoint,
    build_grid,
    geodesic_distance,
    greedy_rayleigh_partition,
    min_separation,
    satisfies_separation,
    verify_rayleigh_witness,
)

from tests.fixtures import NU, equator


class SphereCoreTests(unittest.TestCase):
    def test_geodesic_distance(self):
        """
        Identity, antipodal and orthogonal cases.

        :return: nothing as is a test case.

        """
        a = SpherePoint(0.3, 1.1)
        self.assertEqual(geodesic_distance(a, a), 0.0)
        self.assertAlmostEqual(geodesic_distance(SpherePoint(1.0, 0.0), SpherePoint(4.0, math.pi)), math.pi, places=12)
        self.assertAlmostEqual(geodesic_distance(SpherePoint(0.0, math.pi / 2), SpherePoint(math.pi / 2, math.pi / 2)),
                               math.pi / 2, places=12)

    def test_geodesic_metric_properties(self):
        """
        Symmetry, nonnegativity and the triangle inequality on random triples.

        :return: nothing as is a test case.

        """
        rng = np.random.default_rng(3)
        for _ in range(200):
            a, b, c = (SpherePoint(rng.uniform(0, 2 * math.pi), rng.uniform(0, math.pi)) for _ in range(3))
            ab, ba = geodesic_distance(a, b), geodesic_distance(b, a)
            self.assertAlmostEqual(ab, ba, places=12)
            self.assertGreaterEqual(ab, 0.0)
            self.assertLessEqual(ab, geodesic_distance(a, c) + geodesic_distance(c, b) + 1e-10)

    def test_unit_vector_norm(self):
        """
        :return: nothing as is a test case.
        """
        for point in (SpherePoint(0.0, 0.0), SpherePoint(2.5, 1.0), SpherePoint(6.0, math.pi)):
            self.assertAlmostEqual(float(np.linalg.norm(point.unit_vector)), 1.0, delta=1e-12)

    def test_invalid_point(self):
        """
        :return: nothing as is a test case.
        """
        with self.assertRaises(InvalidParameterException):
            SpherePoint(2 * math.pi, 0.5)
        with self.assertRaises(InvalidParameterException):
            SpherePoint(0.0, -0.1)

    def test_build_grid(self):
        """
        Point counts, the deduplicated pole and index_of.

        :return: nothing as is a test case.

        """
        grid = build_grid(2)
        self.assertEqual(len(grid), 3)
        self.assertEqual(grid.point(0), NORTH_POLE)
        self.assertAlmostEqual(grid.point(1).theta, math.pi / 2)
        self.assertAlmostEqual(grid.point(2).phi, math.pi)

        self.assertEqual(len(build_grid(50)), 2451)
        self.assertEqual(len(build_grid(60)), 3541)

        grid = build_grid(7)
        self.assertEqual({grid.index_of(q, 0) for q in range(7)}, {0})
        for q in range(7):
            for p in range(1, 7):
                point = grid.point(grid.index_of(q, p))
                self.assertAlmostEqual(point.phi, 2 * math.pi * q / 7)
                self.assertAlmostEqual(point.theta, math.pi * p / 7)

    def test_build_grid_invalid(self):
        """
        :return: nothing as is a test case.
        """
        with self.assertRaises(InvalidParameterException) as context:
            build_grid(1)
        self.assertTrue('build_grid' in str(context.exception))

    def test_grid_points_unique_and_nearest(self):
        """
        Stored points are pairwise distinct and every point is its own nearest grid point.

        :return: nothing as is a test case.

        """
        grid = build_grid(12)
        gram = grid.unit_vectors @ grid.unit_vectors.T
        np.fill_diagonal(gram, -1.0)
        self.assertLess(gram.max(), 1.0 - 1e-9)
        for index in range(len(grid)):
            self.assertEqual(grid.nearest_index(grid.point(index)), index)

    def test_min_separation(self):
        """
        :return: nothing as is a test case.
        """
        self.assertAlmostEqual(min_separation(equator([0.0, math.pi / 2, math.pi])), math.pi / 2, places=12)
        self.assertEqual(min_separation([SpherePoint(0.3, 1.1), SpherePoint(0.3, 1.1)]), 0.0)
        self.assertAlmostEqual(min_separation([NORTH_POLE, SpherePoint(0.0, math.pi / 2)]), math.pi / 2, places=12)
        with self.assertRaises(UndefinedInputException):
            min_separation([NORTH_POLE])

    def test_satisfies_separation(self):
        """
        :return: nothing as is a test case.
        """
        points = equator([0.0, math.pi / 2, math.pi, 3 * math.pi / 2])
        self.assertTrue(satisfies_separation(points, NU, 12))
        self.assertFalse(satisfies_separation(points, NU, 4))
        self.assertTrue(satisfies_separation([NORTH_POLE], NU, 1))
        self.assertTrue(satisfies_separation([], NU, 1))

    def test_verify_rayleigh_witness(self):
        """
        Single cells, shared points and interleaved combs.

        :return: nothing as is a test case.

        """
        cell = equator([0.0, math.pi / 2, math.pi])
        self.assertTrue(verify_rayleigh_witness([cell], RayleighParams(mu=NU, r=1, N=12, L=50)))
        self.assertEqual(verify_rayleigh_witness([cell], RayleighParams(mu=NU, r=1, N=4, L=50)),
                         satisfies_separation(cell, NU, 4))

        shared = equator([0.0, math.pi])
        other = equator([0.0, math.pi / 2])
        self.assertFalse(verify_rayleigh_witness([shared, other], RayleighParams(mu=1.0, r=2, N=12, L=50)))

        # Two combs with spacing pi/2, offset by pi/4: each cell is separated at
        # just under pi/2 but the union is not.
        even = equator([k * math.pi / 2 for k in range(4)])
        odd = equator([math.pi / 4 + k * math.pi / 2 for k in range(4)])
        params = RayleighParams(mu=0.99 * 6 * math.pi, r=2, N=12, L=50)
        self.assertTrue(verify_rayleigh_witness([even, odd], params))
        self.assertFalse(satisfies_separation(even + odd, params.mu, params.N))

        # Wrong number of cells.
        self.assertFalse(verify_rayleigh_witness([even], params))

    def test_rayleigh_params(self):
        """
        :return: nothing as is a test case.
        """
        params = RayleighParams.from_nu(NU, 3, 15, 60)
        self.assertAlmostEqual(params.mu, 3 * NU)
        self.assertAlmostEqual(params.nu, NU)
        self.assertAlmostEqual(params.min_distance, 3 * NU / 15)
        with self.assertRaises(InvalidParameterException):
            RayleighParams(mu=0.0, r=1, N=1, L=1)

    def test_greedy_rayleigh_partition(self):
        """
        The greedy cells form a valid witness.

        :return: nothing as is a test case.

        """
        even = equator([k * math.pi / 2 for k in range(4)])
        odd = equator([math.pi / 4 + k * math.pi / 2 for k in range(4)])
        mu, N = 0.99 * 6 * math.pi, 12
        cells = greedy_rayleigh_partition(even + odd, mu, N)
        self.assertEqual(len(cells), 2)
        self.assertTrue(verify_rayleigh_witness(cells, RayleighParams(mu=mu, r=len(cells), N=N, L=50)))


if __name__ == "__main__":
    unittest.main()
