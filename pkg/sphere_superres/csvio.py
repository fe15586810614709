"""
CSV formats read and written by the CLI and the experiment harness.

    grid               index,q,p,phi,theta
    coefficients       n,k,re,im
    gridded function   index,value
    signal             index,phi,theta,amplitude,cell     (cell -1: no witness)

Every float is written with 17 significant digits, enough to read back the
exact double.
"""
import csv
import logging
import typing

import numpy as np

from .exceptions import InvalidInputException, fail
from .harmonics import harmonic_count, harmonic_index
from .operators import GriddedFunction, HarmonicCoeffs
from .signal_gen import DiracSignal
from .sphere_core import SphereGrid


# Try to avoid log-name-context collisions defaulting to __name__
logger = logging.getLogger(__name__)


__all__ = [
    'format_float',
    'write_rows',
    'write_grid_csv',
    'write_coeffs_csv',
    'read_coeffs_csv',
    'write_gridded_csv',
    'read_gridded_csv',
    'write_signal_csv',
    'read_signal_csv',
]


GRID_HEADER = ['index', 'q', 'p', 'phi', 'theta']
COEFFS_HEADER = ['n', 'k', 're', 'im']
GRIDDED_HEADER = ['index', 'value']
SIGNAL_HEADER = ['index', 'phi', 'theta', 'amplitude', 'cell']


def format_float(value: float) -> str:
    return '%.17g' % value


def write_rows(path: str, header: typing.Sequence[str], rows: typing.Iterable[typing.Sequence]) -> None:
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(value) if isinstance(value, float) else value for value in row])
    logger.debug('write_rows: wrote %s.', path)


def _read_rows(path: str, header: typing.Sequence[str]) -> typing.List[typing.Dict[str, str]]:
    with open(path, newline='') as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or list(reader.fieldnames[:len(header)]) != list(header):
            fail(InvalidInputException,
                 'read_csv: %s must start with header %s. Found [%s].' % (path, ','.join(header), reader.fieldnames))
        return list(reader)


def write_grid_csv(grid: SphereGrid, path: str) -> None:
    write_rows(path, GRID_HEADER,
               ([i, int(grid.q[i]), int(grid.p[i]), float(grid.phi[i]), float(grid.theta[i])]
                for i in range(len(grid))))


def write_coeffs_csv(coeffs: HarmonicCoeffs, path: str) -> None:
    rows = []
    for n in range(coeffs.N + 1):
        for k in range(-n, n + 1):
            value = coeffs.value(n, k)
            rows.append([n, k, float(value.real), float(value.imag)])
    write_rows(path, COEFFS_HEADER, rows)


def read_coeffs_csv(path: str, real_symmetric: bool = True) -> HarmonicCoeffs:
    rows = _read_rows(path, COEFFS_HEADER)
    if not rows:
        fail(InvalidInputException, 'read_coeffs_csv: %s has no coefficients.' % path)
    N = max(int(row['n']) for row in rows)
    values = np.zeros(harmonic_count(N), dtype=complex)
    for row in rows:
        values[harmonic_index(int(row['n']), int(row['k']))] = complex(float(row['re']), float(row['im']))
    return HarmonicCoeffs(N, values, real_symmetric=real_symmetric)


def write_gridded_csv(function: GriddedFunction, path: str) -> None:
    write_rows(path, GRIDDED_HEADER, ([i, float(v)] for i, v in enumerate(function.values)))


def read_gridded_csv(path: str, grid: SphereGrid) -> GriddedFunction:
    rows = _read_rows(path, GRIDDED_HEADER)
    values = np.zeros(len(grid))
    for row in rows:
        index = int(row['index'])
        if not 0 <= index < len(grid):
            fail(InvalidInputException,
                 'read_gridded_csv: index [%d] outside %r.' % (index, grid))
        values[index] = float(row['value'])
    return GriddedFunction(grid, values)


def write_signal_csv(signal: DiracSignal, path: str) -> None:
    cells = signal.cell_of()
    write_rows(path, SIGNAL_HEADER,
               ([int(index), float(signal.grid.phi[index]), float(signal.grid.theta[index]),
                 float(amplitude), int(cell)]
                for index, amplitude, cell in zip(signal.support, signal.amplitudes, cells)))


def read_signal_csv(path: str, grid: SphereGrid) -> DiracSignal:
    rows = _read_rows(path, SIGNAL_HEADER)
    support = [int(row['index']) for row in rows]
    amplitudes = [float(row['amplitude']) for row in rows]
    cells = [int(row['cell']) for row in rows]

    witness = None
    if rows and min(cells) >= 0:
        grouped: typing.Dict[int, typing.List[int]] = {}
        for index, cell in zip(support, cells):
            grouped.setdefault(cell, []).append(index)
        witness = tuple(tuple(grouped[cell]) for cell in sorted(grouped))
    return DiracSignal(grid, support, amplitudes, witness=witness)
