"""Pointwise lattice algebra and lattice norms on atom-aligned vectors.

Lattice functions are plain float numpy arrays aligned with the atoms of a
:class:`~latval.measure_space.MeasureSpace`. Disjointness is exact: entries
are compared against 0.0 with no tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .measure_space import MeasureSpace

ORLICZ_RTOL = 1e-12
_MAX_BISECTIONS = 400


def as_function(values, space: MeasureSpace | None = None) -> np.ndarray:
    f = np.asarray(values, dtype=float)
    if f.ndim != 1:
        raise ValueError("a lattice function is a 1-d vector")
    if not np.all(np.isfinite(f)):
        raise ValueError("lattice function entries must be finite")
    if space is not None and f.size != space.n:
        raise ValueError(f"expected {space.n} entries, got {f.size}")
    return f


def _pair(f, g):
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise ValueError(f"length mismatch: {f.shape} vs {g.shape}")
    return f, g


def join(f, g) -> np.ndarray:
    f, g = _pair(f, g)
    return np.maximum(f, g)


def meet(f, g) -> np.ndarray:
    f, g = _pair(f, g)
    return np.minimum(f, g)


def positive_part(f) -> np.ndarray:
    return np.maximum(np.asarray(f, dtype=float), 0.0)


def negative_part(f) -> np.ndarray:
    return np.maximum(-np.asarray(f, dtype=float), 0.0)


def abs_parts(f) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(|f|, f+, f-)``; ``|f| = f+ + f-`` and ``f = f+ - f-`` exactly."""
    f = np.asarray(f, dtype=float)
    return np.abs(f), positive_part(f), negative_part(f)


def is_disjoint(f, g) -> bool:
    f, g = _pair(f, g)
    return bool(np.all(np.minimum(np.abs(f), np.abs(g)) == 0.0))


def band_projection(x, y) -> np.ndarray:
    """Projection of ``y`` onto the band generated by ``x >= 0``.

    On atoms the band is the support of ``x``, so ``P_x(y+) - P_x(y-)``
    reduces to masking ``y`` by ``x != 0``.
    """
    x, y = _pair(x, y)
    if np.any(x < 0):
        raise ValueError("band generator must be nonnegative")
    mask = x != 0.0
    return np.where(mask, positive_part(y), 0.0) - np.where(mask, negative_part(y), 0.0)


def complementary_projection(x, y) -> np.ndarray:
    """``(I - P_x) y``."""
    return np.asarray(y, dtype=float) - band_projection(x, y)


# -- norms -----------------------------------------------------------------

def _power_p(p: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda u: u ** p


PHI_BUILTINS: dict[str, Callable[..., Callable[[np.ndarray], np.ndarray]]] = {
    "power_p": _power_p,
    "exp_minus_one": lambda p=None: np.expm1,
}


@dataclass(frozen=True)
class NormSpec:
    variant: str
    p: float | None = None
    phi: str | None = None

    def __post_init__(self):
        if self.variant == "lp":
            if self.p is None or not self.p >= 1:
                raise ValueError("Lp norms need p >= 1")
        elif self.variant == "orlicz":
            if self.phi not in PHI_BUILTINS:
                raise ValueError(f"unknown Orlicz function {self.phi!r}")
            if self.phi == "power_p" and (self.p is None or not self.p >= 1):
                raise ValueError("power_p needs p >= 1")
        elif self.variant != "sup":
            raise ValueError(f"unknown norm variant {self.variant!r}")

    @classmethod
    def lp(cls, p: float) -> "NormSpec":
        return cls("lp", p=float(p))

    @classmethod
    def sup(cls) -> "NormSpec":
        return cls("sup")

    @classmethod
    def orlicz(cls, phi: str, p: float | None = None) -> "NormSpec":
        return cls("orlicz", p=None if p is None else float(p), phi=phi)

    def phi_function(self):
        return PHI_BUILTINS[self.phi](self.p)

    def to_json(self) -> dict:
        out: dict = {"variant": self.variant}
        if self.p is not None:
            out["p"] = self.p
        if self.phi is not None:
            out["phi"] = self.phi
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "NormSpec":
        try:
            variant = obj["variant"]
        except (KeyError, TypeError) as exc:
            raise ValueError("norm spec needs a 'variant'") from exc
        p = obj.get("p")
        if variant == "orlicz" and obj.get("phi") == "power_p" and p is None:
            p = 2.0
        return cls(variant, p=None if p is None else float(p), phi=obj.get("phi"))


def _weights(space_or_weights, n):
    if space_or_weights is None:
        return np.ones(n)
    if isinstance(space_or_weights, MeasureSpace):
        w = space_or_weights.weights
    else:
        w = np.asarray(space_or_weights, dtype=float)
    if w.size != n:
        raise ValueError(f"function has {n} entries but the space has {w.size} atoms")
    return w


def norm(f, spec: NormSpec, space: MeasureSpace | Sequence[float] | None = None) -> float:
    """Lattice norm of ``f``. ``space=None`` means unit weights."""
    f = np.abs(np.asarray(f, dtype=float))
    w = _weights(space, f.size)
    if spec.variant == "sup":
        return float(f.max()) if f.size else 0.0
    if not np.any(f):
        return 0.0
    if spec.variant == "lp":
        return math.fsum((f ** spec.p) * w) ** (1.0 / spec.p)
    return luxemburg_norm(f, w, spec.phi_function())


def luxemburg_norm(f, w, phi) -> float:
    """inf{lam > 0 : sum phi(|f|/lam) w <= 1} by bisection on the monotone gauge."""
    f = np.abs(np.asarray(f, dtype=float))
    nz = f > 0
    if not np.any(nz):
        return 0.0
    f, w = f[nz], np.asarray(w, dtype=float)[nz]
    # homogeneity: bisect on f / max|f| so subnormal or huge inputs stay in range
    scale = float(f.max())
    f = f / scale

    def gauge(lam):
        with np.errstate(over="ignore"):
            return math.fsum(phi(f / lam) * w)

    hi = 1.0
    for _ in range(_MAX_BISECTIONS):
        if gauge(hi) <= 1.0:
            break
        hi *= 2.0
    else:
        raise RuntimeError("Luxemburg bracket search did not terminate")
    lo = hi
    for _ in range(_MAX_BISECTIONS):
        lo *= 0.5
        if gauge(lo) > 1.0:
            break
    else:
        raise RuntimeError("Luxemburg bracket search did not terminate")
    for _ in range(_MAX_BISECTIONS):
        if hi - lo <= ORLICZ_RTOL * hi:
            return scale * hi
        mid = 0.5 * (lo + hi)
        if gauge(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    raise RuntimeError("Luxemburg bisection did not converge")


def orlicz_atom_norm(spec: NormSpec, weight: float) -> float:
    """Luxemburg norm of the indicator of a single atom of the given weight."""
    return luxemburg_norm(np.array([1.0]), np.array([weight]), spec.phi_function())


# -- lower q-estimates -----------------------------------------------------

@dataclass(frozen=True)
class QEstimateReport:
    q: float
    best_ratio: float
    witness_family: list


def _check_family(family):
    fam = [np.asarray(x, dtype=float) for x in family]
    if not fam:
        raise ValueError("empty family")
    if len({x.shape for x in fam}) != 1:
        raise ValueError("family members have different shapes")
    # pairwise disjoint iff no atom is charged by two members
    crowded = np.flatnonzero(np.count_nonzero(np.stack(fam), axis=0) > 1)
    if crowded.size:
        owners = [k for k, x in enumerate(fam) if x[crowded[0]] != 0][:2]
        raise ValueError(f"family members {owners[0]} and {owners[1]} are not disjoint")
    return fam


def lower_q_estimate_ratio(family, q: float, spec: NormSpec, space=None) -> float:
    """``(sum ||x_i||^q)^(1/q) / ||sum x_i||`` for a pairwise-disjoint family."""
    if not q >= 1:
        raise ValueError("q must be >= 1")
    fam = _check_family(family)
    denom = norm(np.sum(fam, axis=0), spec, space)
    if denom == 0.0:
        raise ValueError("family sums to zero")
    num = math.fsum(norm(x, spec, space) ** q for x in fam) ** (1.0 / q)
    return num / denom


def q_estimate_report(families, q: float, spec: NormSpec, space=None) -> QEstimateReport:
    best, witness = -math.inf, None
    for fam in families:
        r = lower_q_estimate_ratio(fam, q, spec, space)
        if r > best:
            best, witness = r, [np.asarray(x).tolist() for x in fam]
    return QEstimateReport(q=q, best_ratio=best, witness_family=witness)
