"""Seeded generators for lattice functions, disjoint families and kernels.

All generators take a ``numpy.random.Generator`` so that a suite seeded once
replays bit-for-bit.
"""

from __future__ import annotations

import numpy as np

from .kernels import ClosedFormKernel, TableKernel


def random_function(rng, n, low=-3.0, high=3.0):
    return rng.uniform(low, high, size=n)


def random_positive(rng, n, high=3.0):
    return rng.uniform(0.0, high, size=n)


def random_pair(rng, n, low=-3.0, high=3.0):
    return random_function(rng, n, low, high), random_function(rng, n, low, high)


def random_disjoint_pair(rng, n, low=-3.0, high=3.0):
    """Exactly disjoint pair: every atom goes to f, to g, or to neither."""
    owner = rng.integers(0, 3, size=n)
    f = np.where(owner == 0, _nonzero(rng, n, low, high), 0.0)
    g = np.where(owner == 1, _nonzero(rng, n, low, high), 0.0)
    return f, g


def random_disjoint_family(rng, n, k, low=-3.0, high=3.0):
    owner = rng.integers(0, k, size=n)
    vals = _nonzero(rng, n, low, high)
    return [np.where(owner == j, vals, 0.0) for j in range(k)]


def _nonzero(rng, n, low, high):
    x = rng.uniform(low, high, size=n)
    return np.where(x == 0.0, high, x)


def grid_valued(rng, n, lambda_grid):
    return rng.choice(np.asarray(lambda_grid, dtype=float), size=n)


def random_sine_kernel(rng, n, max_amp=2.0, max_freq=3.0, max_slope=1.0) -> ClosedFormKernel:
    """Lipschitz kernel ``a sin(w lam) + c lam`` with random per-atom a, w, c."""
    return ClosedFormKernel("sine", {
        "amp": rng.uniform(-max_amp, max_amp, n),
        "freq": rng.uniform(0.1, max_freq, n),
        "slope": rng.uniform(-max_slope, max_slope, n),
    }, n)


def random_mixture_kernel(rng, n) -> ClosedFormKernel:
    """Continuous, non-smooth per-atom functions vanishing at 0."""
    return ClosedFormKernel("mixture", {
        "amp": rng.uniform(-2.0, 2.0, n),
        "freq": rng.uniform(0.1, 4.0, n),
        "quad": rng.uniform(-1.0, 1.0, n),
        "kink": rng.uniform(-1.0, 1.0, n),
        "kink_at": rng.uniform(-2.0, 2.0, n),
    }, n)


def random_table_kernel(rng, n, lambda_grid) -> TableKernel:
    grid = np.asarray(lambda_grid, dtype=float)
    T = rng.uniform(-2.0, 2.0, size=(n, grid.size))
    T[:, grid == 0.0] = 0.0
    return TableKernel(grid, T)


def random_per_atom_functions(rng, n):
    """Per-atom callables h_i with h_i(0) = 0 drawn from a few continuous families."""
    funcs = []
    for _ in range(n):
        kind = int(rng.integers(0, 4))
        a, b = rng.uniform(-2.0, 2.0, 2)
        if kind == 0:
            funcs.append(lambda s, a=a, b=b: a * np.sin(b * s))
        elif kind == 1:
            funcs.append(lambda s, a=a, b=b: a * (np.abs(s - b) - abs(b)))
        elif kind == 2:
            funcs.append(lambda s, a=a, b=b: a * s * s + b * s)
        else:
            funcs.append(lambda s, a=a, b=b: a * np.tanh(b * s) * np.cos(s))
    return funcs
