"""
Reusable instances for the test suite.
"""
import math
import typing

import numpy as np

from sphere_superres.operators import forward, measurement_matrix
from sphere_superres.signal_gen import DiracSignal, Measurement, add_noise, gen_amplitudes, gen_signal
from sphere_superres.sphere_core import SpherePoint, build_grid


NU = 5 * math.pi / 2


class Instance(typing.NamedTuple):
    grid: typing.Any
    matrix: typing.Any
    signal: DiracSignal
    measurement: Measurement


def equator(phis: typing.Iterable[float]) -> typing.List[SpherePoint]:
    return [SpherePoint(phi, math.pi / 2) for phi in phis]


def random_instance(L: int = 8, N: int = 3, spikes: int = 2, sigma: float = 0.05, seed: int = 0) -> Instance:
    """A few random spikes anywhere on a small grid, no separation imposed."""
    grid = build_grid(L)
    matrix = measurement_matrix(grid, N)
    rng = np.random.default_rng(seed)
    support = np.sort(rng.choice(len(grid), size=spikes, replace=False))
    signal = DiracSignal(grid, support, gen_amplitudes(spikes, rng))
    measurement = add_noise(forward(signal, N), sigma, rng, grid, matrix=matrix)
    return Instance(grid, matrix, signal, measurement)


def generated_instance(L: int, N: int, r: int = 1, points_per_cell: int = 2, sigma: float = 0.0,
                       seed: int = 0) -> Instance:
    """A Rayleigh-regular instance drawn the way the experiment harness draws it."""
    grid = build_grid(L)
    matrix = measurement_matrix(grid, N)
    signal_seed, noise_seed = np.random.SeedSequence(seed).spawn(2)
    signal = gen_signal(r, NU, N, grid, points_per_cell=points_per_cell, rng_seed=signal_seed)
    measurement = add_noise(forward(signal, N), sigma, noise_seed, grid, matrix=matrix)
    return Instance(grid, matrix, signal, measurement)
