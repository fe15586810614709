import math
import unittest

import numpy as np

from sphere_superres.exceptions import (
    DomainMismatchException,
    InfeasibleDensityException,
    InvalidInputException,
    InvalidParameterException,
)
from sphere_superres.harmonics import harmonic_index
from sphere_superres.operators import forward, measurement_matrix
from sphere_superres.signal_gen import (
    AMPLITUDE_MAX,
    SEPARATION_CELL,
    DiracSignal,
    add_noise,
    calibrate_sigma,
    cell_sizes,
    gen_amplitudes,
    gen_signal,
    gen_support,
    packing_bound,
    snr_db,
    truth_residual,
)
from sphere_superres.sphere_core import RayleighParams, build_grid, pairwise_distances, satisfies_separation

from tests.fixtures import NU


class SignalGenTests(unittest.TestCase):
    def test_gen_support_witness(self):
        """
        Every drawn support carries a valid, disjoint witness.

        :return: nothing as is a test case.

        """
        grid = build_grid(50)
        for r in (1, 2, 3):
            support = gen_support(r, NU, 12, grid, points_per_cell=2, rng_seed=r)
            self.assertEqual(len(support.cells), r)
            self.assertTrue(all(len(cell) == 2 for cell in support.cells))
            self.assertTrue(support.verify())
            self.assertEqual(len(set(support.support.tolist())), 2 * r)
            self.assertAlmostEqual(support.params.mu, NU * r)

    def test_gen_support_deterministic(self):
        """
        :return: nothing as is a test case.
        """
        grid = build_grid(40)
        first = gen_support(2, NU, 10, grid, points_per_cell=2, rng_seed=123)
        second = gen_support(2, NU, 10, grid, points_per_cell=2, rng_seed=123)
        self.assertEqual(first.cells, second.cells)

    def test_single_spike(self):
        """
        r = 1 with one point always succeeds.

        :return: nothing as is a test case.

        """
        support = gen_support(1, NU, 12, build_grid(50), points_per_cell=1, rng_seed=0)
        self.assertEqual(len(support.support), 1)

    def test_total_m_round_robin(self):
        """
        :return: nothing as is a test case.
        """
        self.assertEqual(cell_sizes(3, total_m=41), [14, 14, 13])
        self.assertEqual(cell_sizes(4, points_per_cell=2), [2, 2, 2, 2])
        with self.assertRaises(InvalidParameterException):
            cell_sizes(2)

    def test_dense_cells_with_cell_separation(self):
        """
        Three cells of 41 points at L=60, N=15 under mu = nu.

        :return: nothing as is a test case.

        """
        grid = build_grid(60)
        signal = gen_signal(3, NU, 15, grid, rng_seed=2, total_m=41, separation=SEPARATION_CELL)
        self.assertEqual(len(signal), 41)
        self.assertTrue(all(satisfies_separation(cell, NU, 15) for cell in signal.witness_points()))

    def test_filled_cells_are_saturated(self):
        """
        Without a size every cell is filled until no grid point outside it
        keeps the separation.

        :return: nothing as is a test case.

        """
        grid = build_grid(50)
        support = gen_support(1, NU, 12, grid, rng_seed=4)
        cell = list(support.cells[0])
        min_distance = NU / 12
        self.assertTrue(support.verify())
        self.assertGreater(len(cell), 2)
        self.assertLessEqual(len(cell), packing_bound(min_distance))
        outside = np.setdiff1d(np.arange(len(grid)), cell)
        nearest = pairwise_distances(grid.unit_vectors[outside], grid.unit_vectors[cell]).min(axis=1)
        self.assertTrue(np.all(nearest < min_distance + 1e-6))

        again = gen_support(1, NU, 12, grid, rng_seed=4)
        self.assertEqual(again.cells, support.cells)

    def test_filled_cells_grow_with_r(self):
        """
        :return: nothing as is a test case.
        """
        grid = build_grid(50)
        sizes = []
        for r in (1, 2, 3):
            signal = gen_signal(r, NU, 12, grid, rng_seed=r, separation=SEPARATION_CELL)
            self.assertEqual(len(signal.witness), r)
            self.assertEqual(len(set(signal.support.tolist())), len(signal))
            sizes.append(len(signal))
        self.assertLess(sizes[0], sizes[-1])

    def test_infeasible_density(self):
        """
        More points than can be packed at mu/N fail before sampling.

        :return: nothing as is a test case.

        """
        grid = build_grid(50)
        with self.assertRaises(InfeasibleDensityException) as context:
            gen_support(2, NU, 12, grid, points_per_cell=200, rng_seed=0)
        self.assertEqual(context.exception.achieved_sizes, [0, 0])
        self.assertLess(packing_bound(math.pi / 2), 200)

    def test_exhausted_budget_reports_sizes(self):
        """
        A tiny attempt budget leaves cells short and says how far it got.

        :return: nothing as is a test case.

        """
        grid = build_grid(50)
        with self.assertRaises(InfeasibleDensityException) as context:
            gen_support(1, NU, 12, grid, points_per_cell=20, rng_seed=0, attempts_per_point=1)
        self.assertEqual(len(context.exception.achieved_sizes), 1)
        self.assertLess(context.exception.achieved_sizes[0], 20)

    def test_amplitudes(self):
        """
        :return: nothing as is a test case.
        """
        amplitudes = gen_amplitudes(1000, 9)
        self.assertTrue(np.all(amplitudes > 0))
        self.assertTrue(np.all(amplitudes <= AMPLITUDE_MAX))
        np.testing.assert_array_equal(amplitudes, gen_amplitudes(1000, 9))

    def test_amplitude_mean(self):
        """
        Uniform on (0, 10]: the mean of many draws is close to 5.

        :return: nothing as is a test case.

        """
        self.assertAlmostEqual(float(np.mean(gen_amplitudes(100000, 21))), 5.0, delta=0.05)

    def test_witness_must_partition_support(self):
        """
        :return: nothing as is a test case.
        """
        grid = build_grid(10)
        params = RayleighParams(mu=1.0, r=2, N=4, L=10)
        with self.assertRaises(InvalidInputException):
            DiracSignal(grid, [1, 2], [1.0, 1.0], witness=((1, 2), (2, 50)), params=params)
        with self.assertRaises(InvalidInputException):
            DiracSignal(grid, [1, 2, 3], [1.0, 1.0, 1.0], witness=((1,), (2,)))
        with self.assertRaises(InvalidInputException):
            DiracSignal(grid, [1, 2], [1.0, 1.0], params=params)

    def test_witness_must_be_separated(self):
        """
        Two neighbouring points in one cell do not certify regularity.

        :return: nothing as is a test case.

        """
        grid = build_grid(10)
        near = [grid.index_of(0, 3), grid.index_of(1, 3)]
        with self.assertRaises(InvalidInputException):
            DiracSignal(grid, near, [1.0, 1.0], witness=(tuple(near),),
                        params=RayleighParams(mu=NU, r=1, N=4, L=10))
        signal = DiracSignal(grid, near, [1.0, 1.0], witness=((near[0],), (near[1],)),
                             params=RayleighParams(mu=NU, r=2, N=4, L=10))
        np.testing.assert_array_equal(signal.cell_of(), [0, 1])

    def test_dirac_signal_validation(self):
        """
        :return: nothing as is a test case.
        """
        grid = build_grid(10)
        with self.assertRaises(InvalidInputException):
            DiracSignal(grid, [1, 1], [1.0, 2.0])
        with self.assertRaises(InvalidInputException):
            DiracSignal(grid, [1, 2], [1.0, 0.0])
        with self.assertRaises(DomainMismatchException):
            DiracSignal(grid, [len(grid)], [1.0])

    def test_noise_symmetry_and_oracle_delta(self):
        """
        Noisy coefficients stay conjugate-symmetric and the truth is feasible at the oracle delta.

        :return: nothing as is a test case.

        """
        grid = build_grid(30)
        matrix = measurement_matrix(grid, 8)
        signal = gen_signal(1, NU, 8, grid, points_per_cell=2, rng_seed=4)
        clean = forward(signal, 8)
        measurement = add_noise(clean, 0.1, 5, grid, matrix=matrix)
        self.assertTrue(measurement.noisy.is_real_symmetric())
        for n in range(9):
            self.assertEqual(measurement.noise.value(n, 0).imag, 0.0)
        self.assertEqual(measurement.delta, measurement.oracle_delta)
        residual = truth_residual(signal, measurement, matrix)
        self.assertLessEqual(residual, measurement.delta * (1 + 1e-9) + 1e-12)

    def test_noise_level(self):
        """
        E||eta||^2 = sigma^2 (N+1)^2, checked on average.

        :return: nothing as is a test case.

        """
        grid = build_grid(20)
        clean = forward(DiracSignal(grid, [5], [1.0]), 10)
        norms = [add_noise(clean, 0.5, seed, grid).noise.l2_norm() ** 2 for seed in range(200)]
        self.assertAlmostEqual(np.mean(norms) / (0.25 * 121), 1.0, delta=0.05)

    def test_zero_noise(self):
        """
        :return: nothing as is a test case.
        """
        grid = build_grid(20)
        clean = forward(DiracSignal(grid, [5, 40], [1.0, 3.0]), 6)
        measurement = add_noise(clean, 0.0, 1, grid)
        self.assertEqual(measurement.delta, 0.0)
        self.assertEqual(measurement.snr_db, math.inf)
        self.assertEqual(measurement.noise.l2_norm(), 0.0)

    def test_delta_override(self):
        """
        A delta below the realized noise norm is kept but logged.

        :return: nothing as is a test case.

        """
        grid = build_grid(20)
        clean = forward(DiracSignal(grid, [5, 40], [1.0, 3.0]), 6)
        with self.assertLogs('sphere_superres.signal_gen', level='WARNING'):
            measurement = add_noise(clean, 0.2, 1, grid, delta=1e-6)
        self.assertEqual(measurement.delta, 1e-6)
        self.assertGreater(measurement.oracle_delta, 1e-6)

    def test_snr_calibration(self):
        """
        :return: nothing as is a test case.
        """
        grid = build_grid(50)
        clean = forward(gen_signal(2, NU, 12, grid, points_per_cell=2, rng_seed=1), 12)
        sigma = calibrate_sigma(clean, 30.0)
        self.assertAlmostEqual(clean.l2_norm() / (sigma * 13), 10 ** 1.5)
        self.assertEqual(calibrate_sigma(clean, math.inf), 0.0)
        realized = [add_noise(clean, sigma, seed, grid).snr_db for seed in range(20)]
        self.assertAlmostEqual(float(np.mean(realized)), 30.0, delta=1.5)
        self.assertEqual(snr_db(clean, forward(DiracSignal.empty(grid), 12)), math.inf)

    def test_add_noise_rejects_complex_input(self):
        """
        :return: nothing as is a test case.
        """
        grid = build_grid(10)
        clean = forward(DiracSignal(grid, [5], [1.0]), 3)
        values = clean.values.copy()
        values[harmonic_index(1, 1)] += 1j
        with self.assertRaises(InvalidInputException):
            add_noise(type(clean)(3, values, real_symmetric=True), 0.1, 0, grid)
        with self.assertRaises(InvalidParameterException):
            add_noise(clean, -1.0, 0, grid)


if __name__ == "__main__":
    unittest.main()
