import csv
import os
import tempfile
import unittest

import numpy as np

from sphere_superres.csvio import (
    format_float,
    read_coeffs_csv,
    read_gridded_csv,
    read_signal_csv,
    write_coeffs_csv,
    write_grid_csv,
    write_gridded_csv,
    write_signal_csv,
)
from sphere_superres.exceptions import InvalidInputException
from sphere_superres.operators import GriddedFunction, forward
from sphere_superres.signal_gen import DiracSignal, gen_signal
from sphere_superres.sphere_core import build_grid

from tests.fixtures import NU


class CsvTests(unittest.TestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)

    def path(self, name):
        return os.path.join(self.directory.name, name)

    def test_format_float(self):
        """
        Seventeen significant digits read back to the same double.

        :return: nothing as is a test case.

        """
        for value in (0.1, 1 / 3, 2.0 ** -40, 123456.789):
            self.assertEqual(float(format_float(value)), value)

    def test_grid_file(self):
        """
        :return: nothing as is a test case.
        """
        grid = build_grid(6)
        write_grid_csv(grid, self.path('grid.csv'))
        with open(self.path('grid.csv'), newline='') as handle:
            rows = list(csv.reader(handle))
        self.assertEqual(rows[0], ['index', 'q', 'p', 'phi', 'theta'])
        self.assertEqual(len(rows) - 1, len(grid))
        self.assertEqual(rows[1][:3], ['0', '0', '0'])

    def test_signal_file_keeps_witness(self):
        """
        :return: nothing as is a test case.
        """
        grid = build_grid(40)
        signal = gen_signal(2, NU, 10, grid, points_per_cell=2, rng_seed=6)
        write_signal_csv(signal, self.path('signal.csv'))
        loaded = read_signal_csv(self.path('signal.csv'), grid)
        np.testing.assert_array_equal(loaded.support, signal.support)
        np.testing.assert_array_equal(loaded.amplitudes, signal.amplitudes)
        self.assertEqual(loaded.witness, signal.witness)

    def test_signal_without_witness(self):
        """
        :return: nothing as is a test case.
        """
        grid = build_grid(10)
        write_signal_csv(DiracSignal(grid, [4, 9], [1.0, 2.0]), self.path('signal.csv'))
        loaded = read_signal_csv(self.path('signal.csv'), grid)
        self.assertIsNone(loaded.witness)
        np.testing.assert_array_equal(loaded.cell_of(), [-1, -1])

    def test_coefficients_file(self):
        """
        :return: nothing as is a test case.
        """
        grid = build_grid(20)
        coeffs = forward(DiracSignal(grid, [3, 200], [2.0, 5.0]), 5)
        write_coeffs_csv(coeffs, self.path('y.csv'))
        loaded = read_coeffs_csv(self.path('y.csv'))
        self.assertEqual(loaded.N, 5)
        np.testing.assert_array_equal(loaded.values, coeffs.values)
        self.assertTrue(loaded.real_symmetric)

    def test_gridded_file(self):
        """
        :return: nothing as is a test case.
        """
        grid = build_grid(8)
        function = GriddedFunction(grid, np.random.default_rng(1).random(len(grid)))
        write_gridded_csv(function, self.path('g.csv'))
        np.testing.assert_array_equal(read_gridded_csv(self.path('g.csv'), grid).values, function.values)
        with self.assertRaises(InvalidInputException):
            read_gridded_csv(self.path('g.csv'), build_grid(4))

    def test_wrong_header(self):
        """
        :return: nothing as is a test case.
        """
        with open(self.path('bad.csv'), 'w') as handle:
            handle.write('a,b\n1,2\n')
        with self.assertRaises(InvalidInputException) as context:
            read_gridded_csv(self.path('bad.csv'), build_grid(4))
        self.assertTrue('index,value' in str(context.exception))
        with self.assertRaises(InvalidInputException):
            read_coeffs_csv(self.path('bad.csv'))


if __name__ == "__main__":
    unittest.main()
