"""Finite weighted-atom measure spaces.

A :class:`MeasureSpace` is a list of atoms with positive weights. Optional
chunks (nested index sets exhausting all atoms) model sigma-finiteness, and
the ``nonatomic_surrogate`` flag marks fine grids that stand in for a
non-atomic space; such grids carry a granularity ``eta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from .lattice import NormSpec


class TargetUnreachable(ValueError):
    """The remaining mass cannot reach the requested norm."""


class GridTooCoarse(ValueError):
    """A single atom carries more than the allowed slack budget."""


@dataclass(frozen=True, eq=False)
class MeasureSpace:
    weights: np.ndarray
    ids: tuple[int, ...] = ()
    chunks: tuple[tuple[int, ...], ...] = ()
    nonatomic_surrogate: bool = False
    mass_unbounded: bool = False
    _mass: float = field(init=False, repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size == 0:
            raise ValueError("a measure space needs at least one atom")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("atom weights must be strictly positive and finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        ids = tuple(int(i) for i in self.ids) if self.ids else tuple(range(w.size))
        if len(ids) != w.size or len(set(ids)) != len(ids):
            raise ValueError("atom ids must be unique, one per weight")
        object.__setattr__(self, "ids", ids)
        chunks = tuple(tuple(sorted(int(i) for i in c)) for c in self.chunks)
        _check_chunks(chunks, w.size)
        object.__setattr__(self, "chunks", chunks)
        if self.mass_unbounded and not chunks:
            raise ValueError("unbounded total mass may only be declared on a chunked space")
        object.__setattr__(self, "_mass", math.fsum(w))

    def __eq__(self, other):
        if not isinstance(other, MeasureSpace):
            return NotImplemented
        return (
            self.ids == other.ids
            and np.array_equal(self.weights, other.weights)
            and self.chunks == other.chunks
            and self.nonatomic_surrogate == other.nonatomic_surrogate
            and self.mass_unbounded == other.mass_unbounded
        )

    __hash__ = None

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def total_mass(self) -> float:
        return math.inf if self.mass_unbounded else self._mass

    @property
    def atom_mass(self) -> float:
        """Sum of the atom weights, finite even when the space is declared unbounded."""
        return self._mass

    @property
    def finite_measure(self) -> bool:
        return not self.mass_unbounded

    @property
    def eta(self) -> float | None:
        if not self.nonatomic_surrogate:
            return None
        return float(self.weights.max()) / self._mass

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))

    def subset(self, indices: Iterable[int]) -> "MeasurableSet":
        return MeasurableSet(indices, self)

    def full(self) -> "MeasurableSet":
        return MeasurableSet(range(self.n), self)

    def empty(self) -> "MeasurableSet":
        return MeasurableSet((), self)

    def measure(self, A: "MeasurableSet") -> float:
        self._own(A)
        return math.fsum(self.weights[list(A.indices)])

    def indicator(self, A: "MeasurableSet") -> np.ndarray:
        self._own(A)
        chi = np.zeros(self.n)
        chi[list(A.indices)] = 1.0
        return chi

    def chunk_sets(self) -> list["MeasurableSet"]:
        return [MeasurableSet(c, self) for c in self.chunks]

    def with_weights(self, weights: Sequence[float]) -> "MeasureSpace":
        return MeasureSpace(
            np.asarray(weights, dtype=float),
            ids=self.ids,
            chunks=self.chunks,
            nonatomic_surrogate=self.nonatomic_surrogate,
            mass_unbounded=self.mass_unbounded,
        )

    def _own(self, A: "MeasurableSet"):
        if A.space is not self and A.space != self:
            raise ValueError("measurable set belongs to a different space")

    def to_json(self) -> dict:
        out = {
            "atoms": [{"id": i, "weight": float(w)} for i, w in zip(self.ids, self.weights)],
            "chunks": [list(c) for c in self.chunks],
            "nonatomic_surrogate": self.nonatomic_surrogate,
        }
        if self.mass_unbounded:
            out["mass_unbounded"] = True
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "MeasureSpace":
        try:
            atoms = obj["atoms"]
            ids = [int(a["id"]) for a in atoms]
            weights = [float(a["weight"]) for a in atoms]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed space JSON: {exc}") from exc
        return cls(
            np.array(weights),
            ids=tuple(ids),
            chunks=tuple(tuple(c) for c in obj.get("chunks", [])),
            nonatomic_surrogate=bool(obj.get("nonatomic_surrogate", False)),
            mass_unbounded=bool(obj.get("mass_unbounded", False)),
        )


def _check_chunks(chunks, n):
    if not chunks:
        return
    prev: set[int] = set()
    for c in chunks:
        s = set(c)
        if any(i < 0 or i >= n for i in s):
            raise ValueError("chunk index out of range")
        if not (prev < s):
            raise ValueError("chunks must strictly increase")
        prev = s
    if len(prev) != n:
        raise ValueError("chunks must exhaust all atoms")


@dataclass(frozen=True)
class MeasurableSet:
    indices: tuple[int, ...]
    space: MeasureSpace = field(compare=False, repr=False)

    def __init__(self, indices: Iterable[int], space: MeasureSpace):
        idx = tuple(sorted({int(i) for i in indices}))
        if idx and (idx[0] < 0 or idx[-1] >= space.n):
            raise ValueError("index out of range for the owning space")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "space", space)

    def __len__(self):
        return len(self.indices)

    def __contains__(self, i):
        return i in set(self.indices)

    @property
    def measure(self) -> float:
        return self.space.measure(self)

    @property
    def indicator(self) -> np.ndarray:
        return self.space.indicator(self)

    def complement(self) -> "MeasurableSet":
        own = set(self.indices)
        return MeasurableSet((i for i in range(self.space.n) if i not in own), self.space)

    def union(self, other: "MeasurableSet") -> "MeasurableSet":
        _same_space(self, other)
        return MeasurableSet(self.indices + other.indices, self.space)

    def isdisjoint(self, other: "MeasurableSet") -> bool:
        return set(self.indices).isdisjoint(other.indices)


def _same_space(A: MeasurableSet, B: MeasurableSet):
    if A.space is not B.space and A.space != B.space:
        raise ValueError("sets live on different spaces")


def make_uniform_grid(n: int, total_mass: float = 1.0) -> MeasureSpace:
    """Uniform surrogate grid of ``n`` atoms of weight ``total_mass / n``."""
    if int(n) != n or n < 1:
        raise ValueError("grid size must be a positive integer")
    if not (total_mass > 0 and math.isfinite(total_mass)):
        raise ValueError("total mass must be positive and finite")
    return MeasureSpace(np.full(int(n), total_mass / n), nonatomic_surrogate=True)


def make_chunked_space(weights: Sequence[float], sizes: Sequence[int], *,
                       mass_unbounded: bool = False,
                       nonatomic_surrogate: bool = False) -> MeasureSpace:
    """Space whose chunks are the index prefixes of the given lengths."""
    chunks = tuple(tuple(range(k)) for k in sizes)
    return MeasureSpace(np.asarray(weights, dtype=float), chunks=chunks,
                        mass_unbounded=mass_unbounded,
                        nonatomic_surrogate=nonatomic_surrogate)


def parse_space(text: str) -> MeasureSpace:
    """Inline space spec: ``uniform:N`` or ``uniform:N:MASS``."""
    parts = text.split(":")
    if parts[0] != "uniform" or len(parts) not in (2, 3):
        raise ValueError(f"unknown inline space spec {text!r}")
    try:
        n = int(parts[1])
        mass = float(parts[2]) if len(parts) == 3 else 1.0
    except ValueError as exc:
        raise ValueError(f"bad inline space spec {text!r}") from exc
    return make_uniform_grid(n, mass)


def symdiff_distance(A: MeasurableSet, B: MeasurableSet) -> float:
    """Frechet-Nikodym distance mu(A symmetric-difference B)."""
    _same_space(A, B)
    diff = set(A.indices) ^ set(B.indices)
    return math.fsum(A.space.weights[sorted(diff)])


@dataclass(frozen=True)
class SubsetSearchResult:
    subset: MeasurableSet
    achieved: float
    eps_grid: float
    lower_slack: float


def find_subset_with_target_norm(f, delta: float, spec: "NormSpec",
                                 forbidden: MeasurableSet, *,
                                 slack_budget: float = 0.1) -> SubsetSearchResult:
    """Greedy intermediate-value search for a set A with ||f chi_A|| close to delta.

    Atoms outside ``forbidden`` are accumulated in index order; the longest
    prefix whose restricted norm stays <= delta is returned. The certified
    lower slack ``eps_grid`` comes from the largest single-atom contribution:
    for Lp norms ``1 - (1 - (c/delta)^p)^(1/p)``, otherwise ``c/delta`` by the
    triangle inequality.
    """
    from .lattice import norm

    space = forbidden.space
    if not space.nonatomic_surrogate:
        raise ValueError("subset search needs a non-atomic surrogate grid")
    if not delta > 0:
        raise ValueError("delta must be positive")
    f = np.asarray(f, dtype=float)
    eligible = np.array(forbidden.complement().indices, dtype=int)

    def restricted_norm(idx):
        g = np.zeros(space.n)
        g[idx] = f[idx]
        return norm(g, spec, space)

    atom_norms = np.abs(f[eligible]) * _atom_scale(spec, space.weights[eligible])
    c = float(atom_norms.max()) if eligible.size else 0.0
    if spec.variant == "lp":
        ratio = min(c / delta, 1.0)
        eps_grid = 1.0 - (1.0 - ratio ** spec.p) ** (1.0 / spec.p)
    else:
        eps_grid = min(c / delta, 1.0)
    if eps_grid > slack_budget:
        raise GridTooCoarse(
            f"single-atom contribution {c:.3g} gives slack {eps_grid:.3g} > budget {slack_budget}")
    remaining = restricted_norm(eligible)
    if remaining == 0.0 or remaining < delta * (1.0 - eps_grid):
        raise TargetUnreachable(
            f"remaining norm {remaining:.6g} cannot reach {delta:.6g}")

    # largest k with ||f chi_{first k eligible}|| <= delta; prefix norms are monotone
    lo, hi = 0, eligible.size
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if restricted_norm(eligible[:mid]) <= delta:
            lo = mid
        else:
            hi = mid - 1
    A = MeasurableSet(eligible[:lo].tolist(), space)
    achieved = restricted_norm(eligible[:lo])
    return SubsetSearchResult(A, achieved, eps_grid, 1.0 - achieved / delta)


def _atom_scale(spec, w):
    # norm of a unit value sitting on a single atom
    if spec.variant == "lp":
        return w ** (1.0 / spec.p)
    if spec.variant == "sup":
        return np.ones_like(w)
    from .lattice import orlicz_atom_norm
    return np.array([orlicz_atom_norm(spec, wi) for wi in w])


def equal_measure_transport(A: MeasurableSet, space: MeasureSpace, seed: int) -> MeasurableSet:
    """Pseudo-random set A' with mu(A') = mu(A) on an equal-weight space."""
    space._own(A)
    if not space.is_uniform:
        raise ValueError("equal-measure transport needs equal atom weights")
    rng = np.random.default_rng(seed)
    pick = rng.choice(space.n, size=len(A), replace=False)
    return MeasurableSet(pick.tolist(), space)
