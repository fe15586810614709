"""
SVG charts for the experiment harness, rendered off-screen with matplotlib's
Agg backend.

    plot_noise_sweep(levels, {'l1min': errors, 'feasibility': errors}, 'noise_sweep.svg')
    plot_recovery(signal, s, recovered, 'fig1.svg')
"""
import logging
import typing

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .exceptions import InvalidInputException, fail  # noqa: E402
from .operators import GriddedFunction  # noqa: E402
from .signal_gen import DiracSignal  # noqa: E402


# Try to avoid log-name-context collisions defaulting to __name__
logger = logging.getLogger(__name__)


__all__ = [
    'plot_noise_sweep',
    'plot_recovery',
]


MARKERS = {
    'l1min': '*',
    'feasibility': 'x',
}


def plot_noise_sweep(levels: typing.Sequence[float], curves: typing.Mapping[str, typing.Sequence[float]],
                     path: str, xlabel: str = 'delta') -> None:
    """
    Mean recovery error against noise level, both axes logarithmic.

    :param levels: x values, one per noise level.
    :param curves: label -> mean error per level.
    :param path: output SVG path.
    :param xlabel: what the levels are.
    :return: nothing, the chart is written to path.
    """
    levels = np.asarray(levels, dtype=float)
    figure, axes = plt.subplots(figsize=(6.4, 4.4))
    try:
        for label, errors in curves.items():
            errors = np.asarray(errors, dtype=float)
            if errors.shape != levels.shape:
                fail(InvalidInputException,
                     'plot_noise_sweep: curve [%s] has %d points for %d levels.' % (label, errors.size, levels.size))
            # Zero errors have no place on a log axis.
            visible = (levels > 0) & (errors > 0)
            axes.loglog(levels[visible], errors[visible], marker=MARKERS.get(label, 'o'), lw=1.4, label=label)
        axes.set_xlabel(xlabel)
        axes.set_ylabel('normalized l1 error')
        axes.grid(True, which='both', alpha=0.3)
        axes.legend(frameon=False)
        figure.tight_layout()
        figure.savefig(path, format='svg')
    finally:
        plt.close(figure)
    logger.info('plot_noise_sweep: wrote %s.', path)


def _scatter(axes, grid, values, title):
    nonzero = np.nonzero(values)[0]
    axes.scatter(grid.phi[nonzero], grid.theta[nonzero], c=values[nonzero], s=12, cmap='viridis')
    axes.set_xlim(0.0, 2.0 * np.pi)
    axes.set_ylim(np.pi, 0.0)
    axes.set_xlabel('phi')
    axes.set_title(title)


def plot_recovery(signal: DiracSignal, s: GriddedFunction, recovered: GriddedFunction, path: str) -> None:
    """Truth, back-projected measurements and recovery side by side on the (phi, theta) plane."""
    grid = signal.grid
    figure, panels = plt.subplots(1, 3, figsize=(13.5, 4.2), sharey=True)
    try:
        _scatter(panels[0], grid, signal.to_gridded().values, 'signal')
        image = panels[1].scatter(grid.phi, grid.theta, c=s.values, s=6, cmap='coolwarm')
        panels[1].set_xlim(0.0, 2.0 * np.pi)
        panels[1].set_xlabel('phi')
        panels[1].set_title('low-resolution data')
        figure.colorbar(image, ax=panels[1])
        _scatter(panels[2], grid, recovered.values, 'recovery')
        panels[0].set_ylabel('theta')
        figure.tight_layout()
        figure.savefig(path, format='svg')
    finally:
        plt.close(figure)
    logger.info('plot_recovery: wrote %s.', path)
