"""
Exact reference solve of the l1min program on the epigraph formulation,

    min sum(g)  s.t.  -t <= s - K g <= t,  sum(t) <= delta,  g, t >= 0,

with the dual simplex. Dense, for grids of a few hundred points.
"""
import typing

import numpy as np
from scipy.optimize import linprog


def epigraph_l1min(s: np.ndarray, K: np.ndarray, delta: float) -> typing.Tuple[float, np.ndarray]:
    """
    :param s: back-projected measurements.
    :param K: projection kernel.
    :param delta: noise budget.
    :return: optimal objective and g.
    """
    size = s.shape[0]
    identity = np.eye(size)
    A_ub = np.block([
        [K, -identity],
        [-K, -identity],
        [np.zeros((1, size)), np.ones((1, size))],
    ])
    b_ub = np.concatenate([s, -s, [delta]])
    cost = np.concatenate([np.ones(size), np.zeros(size)])
    result = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=(0, None), method='highs-ds')
    if result.status != 0:
        raise AssertionError('oracle: linprog failed [%s].' % result.message)
    return float(result.fun), result.x[:size]
