"""Per-atom kernels lambda -> K(lambda, t_i).

Every kernel vanishes at lambda = 0 on every atom; this is checked when the
kernel is built. ``evaluate`` takes either one value per atom (shape ``(n,)``)
or a block of values per atom (shape ``(n, k)``) and returns the same shape.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


class KernelRangeError(ValueError):
    """A value falls outside a table kernel's lambda grid."""


class Kernel:
    n_atoms: int

    def evaluate(self, x) -> np.ndarray:
        raise NotImplementedError

    def atom(self, i: int) -> Callable:
        """Scalar (or array-broadcasting) function s -> K(s, t_i)."""
        raise NotImplementedError

    def lipschitz(self, bound: float) -> np.ndarray | None:
        """Per-atom Lipschitz constants in lambda on [-bound, bound], if known."""
        return None

    @property
    def lambda_range(self) -> tuple[float, float]:
        return (-np.inf, np.inf)

    def to_json(self) -> dict:
        raise TypeError(f"{type(self).__name__} is not serializable")

    def _check_zero(self):
        z = self.evaluate(np.zeros(self.n_atoms))
        if np.any(z != 0.0):
            bad = int(np.flatnonzero(z != 0.0)[0])
            raise ValueError(f"kernel does not vanish at lambda=0 on atom {bad}")


def _rows(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape[0] != n:
        raise ValueError(f"kernel has {n} atoms, got {x.shape[0]} values")
    return x


class TableKernel(Kernel):
    """Piecewise-linear kernel tabulated on a common lambda grid.

    Evaluation outside ``[grid[0], grid[-1]]`` raises :class:`KernelRangeError`.
    """

    def __init__(self, lambda_grid: Sequence[float], tables):
        grid = np.asarray(lambda_grid, dtype=float)
        T = np.atleast_2d(np.asarray(tables, dtype=float))
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("lambda grid must be strictly increasing with >= 2 nodes")
        if not np.any(grid == 0.0):
            raise ValueError("lambda grid must contain 0")
        if T.shape[1] != grid.size:
            raise ValueError("table rows must match the lambda grid")
        if not np.all(np.isfinite(T)):
            raise ValueError("table values must be finite")
        self.lambda_grid = grid
        self.tables = T
        self.n_atoms = T.shape[0]
        self._check_zero()

    @property
    def lambda_range(self):
        return (float(self.lambda_grid[0]), float(self.lambda_grid[-1]))

    def _check_range(self, x):
        lo, hi = self.lambda_range
        if np.any(x < lo) or np.any(x > hi):
            raise KernelRangeError(
                f"value outside lambda grid [{lo}, {hi}]: "
                f"min {float(np.min(x))}, max {float(np.max(x))}")

    def evaluate(self, x):
        x = _rows(x, self.n_atoms)
        self._check_range(x)
        g = self.lambda_grid
        j = np.clip(np.searchsorted(g, x, side="right") - 1, 0, g.size - 2)
        t = (x - g[j]) / (g[j + 1] - g[j])
        r = np.arange(self.n_atoms).reshape((-1,) + (1,) * (x.ndim - 1))
        # (1-t)a + tb reproduces node values exactly at t = 0 and t = 1
        return (1.0 - t) * self.tables[r, j] + t * self.tables[r, j + 1]

    def atom(self, i):
        row = self.tables[i]
        g = self.lambda_grid

        def k(s):
            s = np.asarray(s, dtype=float)
            self._check_range(s)
            j = np.clip(np.searchsorted(g, s, side="right") - 1, 0, g.size - 2)
            t = (s - g[j]) / (g[j + 1] - g[j])
            out = (1.0 - t) * row[j] + t * row[j + 1]
            return float(out) if out.ndim == 0 else out
        return k

    def lipschitz(self, bound=None):
        slopes = np.abs(np.diff(self.tables, axis=1)) / np.diff(self.lambda_grid)
        return slopes.max(axis=1)

    def node_maxima(self, upper) -> np.ndarray:
        """Exact per-atom max of K(., t_i) over [0, upper_i], upper_i >= 0."""
        upper = _rows(upper, self.n_atoms)
        self._check_range(upper)
        inside = (self.lambda_grid[None, :] >= 0.0) & (self.lambda_grid[None, :] <= upper[:, None])
        nodes = np.where(inside, self.tables, -np.inf).max(axis=1)
        return np.maximum(nodes, self.evaluate(upper))

    def to_json(self):
        return {"lambda_grid": self.lambda_grid.tolist(), "tables": self.tables.tolist()}


def _tent(x, block):
    scale = np.where(block > 0, 2.0 ** (block - 1), 0.0)
    return scale * np.maximum(0.0, 2.0 - np.abs(x - 2.0))


def _tent_lip(p, bound):
    return np.where(p["block"] > 0, 2.0 ** (p["block"] - 1), 0.0)


# name -> (evaluator(x, params), lipschitz(params, bound) or None, param names)
CLOSED_FORMS: dict[str, tuple] = {
    "linear": (
        lambda x, p: p["coef"] * x,
        lambda p, b: np.abs(p["coef"]),
        ("coef",),
    ),
    "power": (
        lambda x, p: p["coef"] * np.abs(x) ** p["p"],
        lambda p, b: np.abs(p["coef"]) * p["p"] * np.maximum(b, 1e-300) ** (p["p"] - 1.0),
        ("coef", "p"),
    ),
    "quadratic_shift": (
        # c * lam * (lam - s)
        lambda x, p: p["coef"] * x * (x - p["shift"]),
        lambda p, b: np.abs(p["coef"]) * (2.0 * b + np.abs(p["shift"])),
        ("coef", "shift"),
    ),
    "sine": (
        lambda x, p: p["amp"] * np.sin(p["freq"] * x) + p["slope"] * x,
        lambda p, b: np.abs(p["amp"] * p["freq"]) + np.abs(p["slope"]),
        ("amp", "freq", "slope"),
    ),
    "mixture": (
        lambda x, p: (p["amp"] * np.sin(p["freq"] * x) + p["quad"] * x * np.abs(x)
                      + p["kink"] * (np.abs(x - p["kink_at"]) - np.abs(p["kink_at"]))),
        lambda p, b: (np.abs(p["amp"] * p["freq"]) + 2.0 * np.abs(p["quad"]) * b
                      + np.abs(p["kink"])),
        ("amp", "freq", "quad", "kink", "kink_at"),
    ),
    "tent_phi_n": (
        lambda x, p: _tent(x, p["block"]),
        _tent_lip,
        ("block",),
    ),
}

_DEFAULTS = {"coef": 1.0, "p": 2.0, "shift": 1.0, "amp": 1.0, "freq": 1.0, "slope": 0.0,
             "quad": 0.0, "kink": 0.0, "kink_at": 0.0}


class ClosedFormKernel(Kernel):
    """Named analytic kernel with per-atom parameter vectors.

    Scalar parameters are broadcast to every atom.
    """

    def __init__(self, name: str, params: dict | None = None, n_atoms: int | None = None):
        if name not in CLOSED_FORMS:
            raise ValueError(f"unknown closed-form kernel {name!r}")
        self.name = name
        fn, lip, names = CLOSED_FORMS[name]
        params = dict(params or {})
        unknown = set(params) - set(names)
        if unknown:
            raise ValueError(f"unexpected parameters for {name}: {sorted(unknown)}")
        sizes = {np.size(v) for v in params.values() if np.ndim(v) > 0}
        if n_atoms is None:
            if len(sizes) != 1:
                raise ValueError("cannot infer the atom count; pass n_atoms")
            n_atoms = sizes.pop()
        elif sizes - {n_atoms}:
            raise ValueError("parameter vector length does not match n_atoms")
        self.n_atoms = int(n_atoms)
        full = {}
        for k in names:
            if k not in params and k not in _DEFAULTS:
                raise ValueError(f"missing parameter {k!r} for {name}")
            v = np.asarray(params.get(k, _DEFAULTS.get(k)), dtype=float)
            full[k] = np.broadcast_to(v, (self.n_atoms,)).copy()
        self.params = full
        self._fn, self._lip = fn, lip
        self._check_zero()

    def evaluate(self, x):
        x = _rows(x, self.n_atoms)
        shape = (-1,) + (1,) * (x.ndim - 1)
        return self._fn(x, {k: v.reshape(shape) for k, v in self.params.items()})

    def atom(self, i):
        p = {k: v[i] for k, v in self.params.items()}
        fn = self._fn

        def k(s):
            out = fn(np.asarray(s, dtype=float), p)
            return float(out) if np.ndim(out) == 0 else out
        return k

    def lipschitz(self, bound):
        return np.asarray(self._lip(self.params, float(bound)), dtype=float)

    def to_json(self):
        params = {}
        for k, v in self.params.items():
            params[k] = float(v[0]) if np.all(v == v[0]) else v.tolist()
        return {"closed_form": self.name, "params": params, "n_atoms": self.n_atoms}


class FunctionKernel(Kernel):
    """Kernel backed by arbitrary per-atom Python callables (not serializable)."""

    def __init__(self, funcs: Sequence[Callable[[float], float]], lipschitz=None):
        self.funcs = tuple(funcs)
        self.n_atoms = len(self.funcs)
        self._lipschitz = None if lipschitz is None else np.asarray(lipschitz, dtype=float)
        self._check_zero()

    def evaluate(self, x):
        x = _rows(x, self.n_atoms)
        out = np.empty_like(x)
        for i, h in enumerate(self.funcs):
            out[i] = h(x[i])
        return out

    def atom(self, i):
        return self.funcs[i]

    def lipschitz(self, bound=None):
        return self._lipschitz


class DensityTransformedKernel(Kernel):
    """K~(lam, t) = K(lam g(t), t) / g(t) for a strictly positive density g."""

    def __init__(self, base: Kernel, g):
        g = np.asarray(g, dtype=float)
        if g.shape != (base.n_atoms,):
            raise ValueError("density must have one entry per atom")
        if not np.all(np.isfinite(g)) or np.any(g <= 0):
            raise ValueError("density must be strictly positive and finite")
        self.base, self.g = base, g
        self.n_atoms = base.n_atoms
        self._check_zero()

    def evaluate(self, x):
        x = _rows(x, self.n_atoms)
        g = self.g.reshape((-1,) + (1,) * (x.ndim - 1))
        return self.base.evaluate(x * g) / g

    def atom(self, i):
        k, gi = self.base.atom(i), self.g[i]
        return lambda s: k(np.asarray(s, dtype=float) * gi) / gi

    def lipschitz(self, bound):
        lip = self.base.lipschitz(float(bound) * float(self.g.max()))
        return None if lip is None else lip

    def to_json(self):
        return {"density_transform": {"base": self.base.to_json(), "density": self.g.tolist()}}


def kernel_from_json(obj: dict, n_atoms: int | None = None) -> Kernel:
    if not isinstance(obj, dict):
        raise ValueError("kernel JSON must be an object")
    if "tables" in obj:
        return TableKernel(obj["lambda_grid"], obj["tables"])
    if "closed_form" in obj:
        return ClosedFormKernel(obj["closed_form"], obj.get("params", {}),
                                obj.get("n_atoms", n_atoms))
    if "density_transform" in obj:
        d = obj["density_transform"]
        return DensityTransformedKernel(kernel_from_json(d["base"], n_atoms), d["density"])
    raise ValueError("kernel JSON needs 'tables', 'closed_form' or 'density_transform'")
