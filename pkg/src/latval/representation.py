"""Kernel recovery and integral representation of valuations.

On atoms the density of ``nu_lambda(A) = V(lambda chi_A)`` with respect to
``mu`` is a ratio, so ``K(lambda, t_i) = V(lambda e_i) / mu_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .kernels import DensityTransformedKernel, Kernel, TableKernel
from .measure_space import MeasurableSet, MeasureSpace, equal_measure_transport
from .valuation import DefectReport, Valuation, kernel_valuation

CHUNK_TOL = 1e-12


def parse_lambda_grid(text: str) -> np.ndarray:
    """``"min:max:steps"`` -> ``steps`` equispaced nodes, with 0 inserted if missing."""
    try:
        lo, hi, steps = text.split(":")
        grid = np.linspace(float(lo), float(hi), int(steps))
    except ValueError as exc:
        raise ValueError(f"lambda grid must look like min:max:steps, got {text!r}") from exc
    return _with_zero(grid)


def _with_zero(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if not np.any(grid == 0.0):
        grid = np.sort(np.append(grid, 0.0))
    if np.any(np.diff(grid) <= 0):
        raise ValueError("lambda grid must be strictly increasing")
    return grid


def nu_lambda(V: Valuation, lam: float, A: MeasurableSet) -> float:
    """``V(lam chi_A)``."""
    return V(lam * A.indicator)


def recover_kernel(V: Valuation, lambda_grid, space: MeasureSpace) -> TableKernel:
    """Table kernel with ``K(lam, t_i) = V(lam e_i) / mu_i`` on the grid."""
    grid = _with_zero(lambda_grid)
    n = space.n
    T = np.zeros((n, grid.size))
    e = np.zeros(n)
    for i in range(n):
        for j, lam in enumerate(grid):
            if lam == 0.0:
                continue
            e[i] = lam
            T[i, j] = V(e) / space.weights[i]
        e[i] = 0.0
    return TableKernel(grid, T)


def roundtrip_check(V: Valuation, kernel: Kernel, samples: Sequence, space: MeasureSpace,
                    seed: int | None = None) -> DefectReport:
    """Max over samples of ``|V(f) - sum_i K(f_i, t_i) mu_i|``."""
    W = kernel_valuation(kernel, space)
    best, witness = -1.0, None
    for f in samples:
        d = abs(V(f) - W(f))
        if d > best:
            best, witness = d, np.asarray(f).tolist()
    return DefectReport(best, witness, len(samples), seed)


@dataclass
class ChunkedRecovery:
    kernel: TableKernel
    chunk_kernels: list[TableKernel]
    consistency_gap: float
    partial_values: list[list[float]]


def chunk_partial_values(V: Valuation, f, space: MeasureSpace) -> list[float]:
    """``[V(f chi_{Omega_n}) for each chunk]``; the last one equals ``V(f)``."""
    f = np.asarray(f, dtype=float)
    return [V(f * A.indicator) for A in space.chunk_sets()]


def chunk_partial_sums(kernel: Kernel, f, space: MeasureSpace) -> list[float]:
    """``sum_{i in Omega_n} K(f_i, t_i) mu_i`` along the chunks."""
    terms = kernel.evaluate(np.asarray(f, dtype=float)) * space.weights
    return [math.fsum(terms[list(c)]) for c in space.chunks]


def chunked_recovery(V: Valuation, lambda_grid, space: MeasureSpace,
                     samples: Sequence = ()) -> ChunkedRecovery:
    """Recover ``K_n`` from each restriction ``V(. chi_{Omega_n})`` and glue them.

    Each ``K_n`` is extended by zero off its chunk. ``K_n`` and ``K_m`` must
    agree on ``Omega_n`` for ``n < m`` (gap beyond ``CHUNK_TOL`` raises); the
    glued kernel takes, at each atom, the value from the first chunk holding it.
    """
    if not space.chunks:
        raise ValueError("chunked recovery needs a chunked space")
    grid = _with_zero(lambda_grid)
    n = space.n
    kernels = []
    for chunk in space.chunks:
        chi = np.zeros(n)
        chi[list(chunk)] = 1.0
        T = np.zeros((n, grid.size))
        e = np.zeros(n)
        for i in chunk:
            for j, lam in enumerate(grid):
                if lam == 0.0:
                    continue
                e[i] = lam
                T[i, j] = V(e * chi) / space.weights[i]
            e[i] = 0.0
        kernels.append(TableKernel(grid, T))
    gap = 0.0
    for a in range(len(kernels)):
        rows = list(space.chunks[a])
        for b in range(a + 1, len(kernels)):
            gap = max(gap, float(np.max(np.abs(kernels[a].tables[rows] - kernels[b].tables[rows]))))
    if gap > CHUNK_TOL:
        raise ValueError(f"chunk kernels disagree by {gap:.3g}: V is not orthogonally additive")
    T = np.zeros((n, grid.size))
    seen: set[int] = set()
    for k, chunk in zip(kernels, space.chunks):
        new = [i for i in chunk if i not in seen]
        T[new] = k.tables[new]
        seen.update(new)
    partial = [chunk_partial_values(V, f, space) for f in samples]
    return ChunkedRecovery(TableKernel(grid, T), kernels, gap, partial)


def density_transform(kernel: Kernel, g, space: MeasureSpace) -> tuple[Kernel, MeasureSpace]:
    """``K~(lam, t) = K(lam g(t), t) / g(t)`` on the space reweighted by ``g mu``.

    The transformed valuation satisfies ``V~(f / g) = V(f)``.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (space.n,) or np.any(g <= 0) or not np.all(np.isfinite(g)):
        raise ValueError("density must be strictly positive, finite and atom-aligned")
    return DensityTransformedKernel(kernel, g), space.with_weights(g * space.weights)


def l1_factor(kernel: Kernel, f) -> np.ndarray:
    """``Phi(f)_i = K(f_i, t_i)``; local in the sense ``Phi(f chi_A) = Phi(f) chi_A``."""
    return kernel.evaluate(np.asarray(f, dtype=float))


def _random_subset(rng, space: MeasureSpace) -> MeasurableSet:
    k = int(rng.integers(0, space.n + 1))
    return MeasurableSet(rng.choice(space.n, size=k, replace=False).tolist(), space)


def proportionality_check(nu: Callable[[MeasurableSet], float], space: MeasureSpace,
                          trials: int, seed: int) -> tuple[float, float]:
    """Estimate ``c = nu(Omega)/mu(Omega)`` and the worst ``|nu(A) - c mu(A)|``.

    The first half of the atoms is always among the tested sets.
    """
    if not space.is_uniform or not space.nonatomic_surrogate:
        raise ValueError("proportionality check needs a uniform non-atomic surrogate grid")
    full = space.full()
    c = nu(full) / space.measure(full)
    rng = np.random.default_rng(seed)
    sets = [space.subset(range(space.n // 2))]
    sets += [_random_subset(rng, space) for _ in range(trials)]
    gap = max(abs(nu(A) - c * space.measure(A)) for A in sets)
    return c, gap


def invariance_check(V: Valuation, lambdas: Sequence[float], space: MeasureSpace,
                     trials: int, seed: int) -> DefectReport:
    """Max of ``|V(lam chi_A) - V(lam chi_A')|`` over random equal-measure pairs."""
    if not space.is_uniform:
        raise ValueError("invariance check needs equal atom weights")
    rng = np.random.default_rng(seed)
    lambdas = [float(x) for x in lambdas]
    best, witness = -1.0, None
    for _ in range(trials):
        lam = lambdas[int(rng.integers(0, len(lambdas)))]
        A = _random_subset(rng, space)
        B = equal_measure_transport(A, space, int(rng.integers(0, 2**63 - 1)))
        d = abs(nu_lambda(V, lam, A) - nu_lambda(V, lam, B))
        if d > best:
            best, witness = d, {"lambda": lam, "A": list(A.indices), "A_prime": list(B.indices)}
    return DefectReport(best, witness, trials, seed)


@dataclass(frozen=True, eq=False)
class ThetaFunction:
    lambda_grid: np.ndarray
    values: np.ndarray
    reference_gap: float = 0.0

    def __post_init__(self):
        i0 = np.flatnonzero(self.lambda_grid == 0.0)
        if i0.size != 1 or self.values[i0[0]] != 0.0:
            raise ValueError("theta must be tabulated at 0 with value 0")

    def kernel(self, n_atoms: int) -> TableKernel:
        return TableKernel(self.lambda_grid, np.tile(self.values, (n_atoms, 1)))

    def valuation(self, space: MeasureSpace) -> Valuation:
        """``f -> sum_i theta(f_i) mu_i``."""
        return kernel_valuation(self.kernel(space.n), space, label="theta")

    def to_json(self) -> dict:
        return {"lambda_grid": self.lambda_grid.tolist(), "values": self.values.tolist(),
                "reference_gap": self.reference_gap}


def recover_theta(V: Valuation, lambda_grid, space: MeasureSpace) -> ThetaFunction:
    """``theta(lam) = V(lam chi_A) / mu(A)`` for A the first half of the atoms.

    The second half serves as a cross-check; ``reference_gap`` is the largest
    disagreement between the two references.
    """
    grid = _with_zero(lambda_grid)
    half = max(1, (space.n + 1) // 2)
    A = space.subset(range(half))
    B = space.subset(range(space.n - half, space.n))
    muA, muB = A.measure, B.measure
    vals = np.array([nu_lambda(V, lam, A) / muA if lam != 0.0 else 0.0 for lam in grid])
    other = np.array([nu_lambda(V, lam, B) / muB if lam != 0.0 else 0.0 for lam in grid])
    return ThetaFunction(grid, vals, float(np.max(np.abs(vals - other))))


@dataclass(frozen=True)
class GrowthBound:
    a: float
    b: float
    p: float
    finite_measure: bool
    lambda_max: float = math.nan

    def __post_init__(self):
        if not self.finite_measure and self.b != 0.0:
            raise ValueError("infinite measure forces b = 0")
        if self.p < 1:
            raise ValueError("p must be >= 1")

    def envelope(self, lam):
        return self.a * np.abs(lam) ** self.p + self.b

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "p": self.p, "finite_measure": self.finite_measure,
                "lambda_max": self.lambda_max,
                "convention": "b = max |theta| on [-1,1]; a fitted on |lambda| > 1"
                if self.finite_measure else "b = 0; a = max |theta|/|lambda|^p"}


def fit_growth_bound(theta: ThetaFunction, p: float, finite_measure: bool) -> GrowthBound:
    """Smallest grid-certified envelope ``|theta(lam)| <= a |lam|^p + b``.

    Finite measure: ``b = max_{|lam| <= 1} |theta|`` and ``a`` is fitted on the
    remaining nodes. Infinite measure: ``b = 0``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    lam = np.asarray(theta.lambda_grid, dtype=float)
    v = np.abs(np.asarray(theta.values, dtype=float))
    return _fit(lam[None, :], v[None, :], p, finite_measure)


def fit_kernel_growth_bound(kernel: TableKernel | Kernel, lambda_grid, p: float,
                            finite_measure: bool) -> GrowthBound:
    """One envelope ``|K(lam, t)| <= a |lam|^p + b`` valid on all atoms at the grid nodes."""
    grid = _with_zero(lambda_grid)
    V = np.abs(kernel.evaluate(np.tile(grid, (kernel.n_atoms, 1))))
    return _fit(np.broadcast_to(grid, V.shape), V, p, finite_measure)


def _fit(lam, v, p, finite_measure) -> GrowthBound:
    if not np.all(np.isfinite(v)):
        raise ValueError("no finite envelope fits non-finite samples")
    a_lam = np.abs(lam)
    if finite_measure:
        inner = a_lam <= 1.0
        b = float(v[inner].max()) if np.any(inner) else 0.0
        outer = ~inner
        a = float(np.max(np.maximum(v[outer] - b, 0.0) / a_lam[outer] ** p)) if np.any(outer) else 0.0
    else:
        b = 0.0
        nz = a_lam > 0
        zero_bad = np.any(v[~nz] > 0)
        if zero_bad:
            raise ValueError("theta(0) != 0 cannot be bounded with b = 0")
        a = float(np.max(v[nz] / a_lam[nz] ** p)) if np.any(nz) else 0.0
    if not math.isfinite(a):
        raise ValueError("no finite envelope of the requested shape fits the samples")
    return GrowthBound(a=a, b=b, p=float(p), finite_measure=finite_measure,
                       lambda_max=float(a_lam.max()))
