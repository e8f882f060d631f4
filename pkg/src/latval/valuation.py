"""The valuation contract, concrete valuations and defect functionals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .kernels import Kernel
from .lattice import NormSpec, as_function, is_disjoint, join, meet, norm
from .measure_space import MeasureSpace


@dataclass(frozen=True, eq=False)
class Valuation:
    """A functional ``f -> R`` with ``V(0) = 0``.

    ``per_atom`` holds the orthogonally additive normal form
    ``V(f) = sum_i h_i(f_i)`` when it is known; ``kernel``/``space`` are set
    for kernel valuations. Both are what the decomposition code needs.
    """

    evaluator: Callable[[np.ndarray], float]
    label: str
    size: int
    per_atom: tuple[Callable[[float], float], ...] | None = field(default=None, repr=False)
    kernel: Kernel | None = field(default=None, repr=False)
    space: MeasureSpace | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.per_atom is not None and len(self.per_atom) != self.size:
            raise ValueError("per-atom form must have one function per atom")
        v0 = self.evaluator(np.zeros(self.size))
        if v0 != 0.0:
            raise ValueError(f"valuation {self.label!r} has V(0) = {v0} != 0")

    def __call__(self, f) -> float:
        f = np.asarray(f, dtype=float)
        if f.shape != (self.size,):
            raise ValueError(f"{self.label}: expected {self.size} entries, got {f.shape}")
        return float(self.evaluator(f))

    def combine(self, other: "Valuation", a: float = 1.0, b: float = 1.0) -> "Valuation":
        """The linear combination ``a V + b W``."""
        if other.size != self.size:
            raise ValueError("valuations live on different spaces")
        per_atom = None
        if self.per_atom is not None and other.per_atom is not None:
            per_atom = tuple(
                (lambda s, h=h, k=k: a * h(s) + b * k(s))
                for h, k in zip(self.per_atom, other.per_atom))
        return Valuation(lambda f: a * self.evaluator(f) + b * other.evaluator(f),
                         f"{a}*{self.label} + {b}*{other.label}", self.size, per_atom=per_atom)

    def __add__(self, other):
        return self.combine(other)

    def __sub__(self, other):
        return self.combine(other, 1.0, -1.0)

    def __rmul__(self, c: float):
        per_atom = None
        if self.per_atom is not None:
            per_atom = tuple((lambda s, h=h: c * h(s)) for h in self.per_atom)
        return Valuation(lambda f: c * self.evaluator(f), f"{c}*{self.label}", self.size,
                         per_atom=per_atom)

    def __neg__(self):
        return -1.0 * self


def kernel_valuation(kernel: Kernel, space: MeasureSpace, label: str | None = None) -> Valuation:
    """``V(f) = sum_i K(f_i, t_i) mu_i``."""
    if kernel.n_atoms != space.n:
        raise ValueError(f"kernel has {kernel.n_atoms} atoms, space has {space.n}")
    w = space.weights

    def evaluator(f):
        return math.fsum(kernel.evaluate(f) * w)

    per_atom = tuple((lambda s, k=kernel.atom(i), wi=w[i]: k(s) * wi) for i in range(space.n))
    return Valuation(evaluator, label or "kernel", space.n, per_atom=per_atom,
                     kernel=kernel, space=space)


def per_atom_valuation(funcs: Sequence[Callable[[float], float]], label: str = "per-atom") -> Valuation:
    """Black-box orthogonally additive functional ``V(f) = sum_i h_i(f_i)``."""
    funcs = tuple(funcs)

    def evaluator(f):
        return math.fsum(h(x) for h, x in zip(funcs, f))

    return Valuation(evaluator, label, len(funcs), per_atom=funcs)


def linear_valuation(coef, space: MeasureSpace) -> Valuation:
    """``V(f) = sum_i c_i f_i mu_i``; every linear functional is a valuation."""
    from .kernels import ClosedFormKernel
    return kernel_valuation(ClosedFormKernel("linear", {"coef": np.asarray(coef, dtype=float)},
                                             space.n), space, label="linear")


# -- defects ---------------------------------------------------------------

def valuation_defect(V: Valuation, f, g) -> float:
    """``|V(f v g) + V(f ^ g) - V(f) - V(g)|``."""
    return abs(V(join(f, g)) + V(meet(f, g)) - V(f) - V(g))


def orthogonality_defect(V: Valuation, f, g) -> float:
    """``|V(f + g) - V(f) - V(g)|`` for disjoint ``f``, ``g``."""
    if not is_disjoint(f, g):
        raise ValueError("orthogonality defect needs disjoint functions")
    f, g = np.asarray(f, dtype=float), np.asarray(g, dtype=float)
    return abs(V(f + g) - V(f) - V(g))


@dataclass
class DefectReport:
    max_defect: float
    witness: object
    trials: int
    seed: int | None

    def to_json(self) -> dict:
        return {"max_defect": self.max_defect, "witness": _jsonable(self.witness),
                "trials": self.trials, "seed": self.seed}


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (list, tuple)):
        return [_jsonable(o) for o in obj]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "indices"):
        return list(obj.indices)
    return obj


def max_defect(defect: Callable[..., float], cases, seed: int | None = None) -> DefectReport:
    """Fold a defect functional over cases, keeping the first maximizer."""
    best, witness, n = -1.0, None, 0
    for case in cases:
        d = defect(*case)
        n += 1
        if d > best:
            best, witness = d, case
    if n == 0:
        raise ValueError("no cases")
    return DefectReport(max_defect=float(best), witness=witness, trials=n, seed=seed)


def relative_valuation_defect(V: Valuation, f, g) -> float:
    """Valuation defect scaled by ``1 + |V(f)| + |V(g)|``."""
    return valuation_defect(V, f, g) / (1.0 + abs(V(f)) + abs(V(g)))


# -- constructions from the positive cone ----------------------------------

def extend_from_positive(Vp: Valuation, mode: str = "difference") -> Valuation:
    """Extend a valuation given on the positive cone to all functions.

    ``difference``: ``V(f+) - V(f-)``; ``join_zero``: ``V(f v 0)``.
    """
    from .lattice import negative_part, positive_part
    if mode == "difference":
        ev = lambda f: Vp(positive_part(f)) - Vp(negative_part(f))
    elif mode == "join_zero":
        ev = lambda f: Vp(positive_part(f))
    else:
        raise ValueError(f"unknown extension mode {mode!r}")
    return Valuation(ev, f"{Vp.label}^{mode}", Vp.size)


def split_valuation(V: Valuation) -> tuple[Valuation, Valuation]:
    """``V1(f) = V(f v 0)`` and ``V2(f) = V(f ^ 0)``."""
    V1 = Valuation(lambda f: V(np.maximum(f, 0.0)), f"{V.label}_1", V.size)
    V2 = Valuation(lambda f: V(np.minimum(f, 0.0)), f"{V.label}_2", V.size)
    return V1, V2


def continuity_modulus(V: Valuation, f, spec: NormSpec, radii: Sequence[float],
                       trials: int, seed: int, space: MeasureSpace | None = None):
    """Empirical modulus: ``[(r, max |V(f) - V(f+h)| over sampled ||h|| <= r)]``.

    Each radius draws ``trials`` random directions scaled to norms in
    ``(0, r]`` (always including ``r`` itself). The table is reported, not
    checked for monotonicity.
    """
    radii = [float(r) for r in radii]
    if any(not r > 0 for r in radii):
        raise ValueError("radii must be positive")
    if any(a < b for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be sorted in decreasing order")
    f = as_function(f)
    w = space.weights if space is not None else None
    base = V(f)
    rng = np.random.default_rng(seed)
    table = []
    for r in radii:
        worst = 0.0
        for k in range(trials):
            d = rng.standard_normal(f.size)
            nd = norm(d, spec, w)
            if nd == 0.0:
                continue
            scale = r if k == 0 else r * rng.uniform(0.0, 1.0)
            worst = max(worst, abs(base - V(f + d * (scale / nd))))
        table.append((r, worst))
    return table
