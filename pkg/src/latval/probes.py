"""Explicit examples and counterexamples, and the boundedness certificate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import ClosedFormKernel
from .lattice import NormSpec, norm
from .measure_space import (MeasurableSet, MeasureSpace, TargetUnreachable,
                            find_subset_with_target_norm)
from .valuation import DefectReport, Valuation, orthogonality_defect, valuation_defect


# -- series valuations on atomic lattices -----------------------------------

@dataclass(frozen=True)
class SeriesValuation:
    """``V(x) = sum_n n x_n^n`` on the first ``truncation`` coordinates of c0+."""

    truncation: int

    def __post_init__(self):
        if self.truncation < 1:
            raise ValueError("truncation must be >= 1")

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("the series valuation is defined on the positive cone")
        if np.any(x[self.truncation:] != 0):
            raise ValueError(f"nonzero coordinate beyond truncation {self.truncation}")
        x = x[: self.truncation]
        n = np.arange(1, x.size + 1)
        return math.fsum(n * x ** n)

    def as_valuation(self) -> Valuation:
        return Valuation(self, f"c0-series[{self.truncation}]", self.truncation)


def c0_series_valuation(x) -> float:
    """``sum_n n x_n^n`` (1-based ``n``) for a finitely supported ``x >= 0``."""
    x = np.asarray(x, dtype=float)
    return SeriesValuation(max(x.size, 1))(x)


def basis_series_valuation(a, c_unconditionality: float = 1.0) -> float:
    """``V(sum a_n u_n) = sum_n n |a_n|^n`` for a normalized unconditional basis.

    ``c_unconditionality`` is the constant in ``||sum a_n u_n|| >= C sup |a_n|``;
    it only enters :func:`basis_norm_lower_bound`.
    """
    if not c_unconditionality > 0:
        raise ValueError("unconditionality constant must be positive")
    a = np.abs(np.asarray(a, dtype=float))
    n = np.arange(1, a.size + 1)
    return math.fsum(n * a ** n)


def basis_norm_lower_bound(a, c_unconditionality: float) -> float:
    return c_unconditionality * float(np.max(np.abs(a))) if np.size(a) else 0.0


def series_sum_check(eps: float, terms: int) -> dict:
    """Partial sum of ``sum n eps^n`` against its closed forms.

    ``oracle`` is ``eps/(1-eps)^2``; ``alternate`` is the expression
    ``1 + (2-eps) eps/(1-eps)^2``, an alternative form for the same series, which
    this check flags as discrepant whenever it disagrees with the partial sum.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    n = np.arange(1, terms + 1)
    partial = math.fsum(n * eps ** n)
    oracle = eps / (1.0 - eps) ** 2
    alternate = 1.0 + (2.0 - eps) * eps / (1.0 - eps) ** 2
    tail = abs(oracle - partial)
    return {
        "eps": eps, "terms": terms, "partial_sum": partial,
        "oracle_closed_form": oracle, "oracle_gap": tail,
        "alternate_closed_form": alternate,
        "alternate_expression": "1 + (2 - eps) * eps / (1 - eps)**2",
        "alternate_discrepant": abs(alternate - partial) > max(1e-9, 10 * tail),
    }


def series_continuity_delta(x, eps: float) -> tuple[float, int]:
    """A radius ``delta`` and cutoff ``N`` for the continuity estimate at ``x``.

    ``N`` is the last index with ``x_n > eps/2``; ``delta < eps/2`` is small
    enough that ``n |a^n - b^n| <= eps/2^n`` for ``n <= N`` and
    ``a, b in [0, ||x|| + 1]``.
    """
    x = np.asarray(x, dtype=float)
    big = np.flatnonzero(x > eps / 2)
    N = int(big[-1]) + 1 if big.size else 0
    M = float(x.max(initial=0.0)) + 1.0
    delta = eps / 2
    for n in range(1, N + 1):
        delta = min(delta, eps / (2.0 ** n * n * n * M ** (n - 1)))
    return 0.99 * delta, N


def series_continuity_envelope(eps: float) -> float:
    """``eps + 2 eps/(1-eps)^2``: the head contributes at most eps, each tail ``sum n eps^n``."""
    return eps + 2.0 * eps / (1.0 - eps) ** 2


# -- min functional ---------------------------------------------------------

def min_functional(f) -> float:
    """``min_i |f_i|``."""
    f = np.asarray(f, dtype=float)
    return float(np.min(np.abs(f)))


def min_valuation(n: int) -> Valuation:
    return Valuation(min_functional, "min", n)


def two_block_witness(block: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """``(f_A, g_B)`` on a model split into two disconnected blocks of ``block`` atoms.

    ``f_A = 1`` on block A plus a bump on B vanishing at B's first atom;
    ``g_B`` mirrors it. Then ``phi(f_A v g_B) = 1`` while the other three
    terms vanish.
    """
    if block < 2:
        raise ValueError("each block needs at least two atoms")
    bump = 0.5 * np.sin(np.linspace(0.0, np.pi, block + 1)[:-1])
    f_A = np.concatenate([np.ones(block), bump])
    g_B = np.concatenate([bump, np.ones(block)])
    return f_A, g_B


def path_disjoint_pair(rng, n_grid: int, allow_zero: bool = True):
    """Disjoint pair of piecewise-linear functions on a path of ``n_grid`` nodes.

    Nodes are cut into segments separated by exact-zero nodes; each segment is
    given to f, to g, or to neither. Either function may also be zero, in
    which case the other may be nonzero everywhere.
    """
    if allow_zero and rng.uniform() < 0.2:
        f = rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 2.0, n_grid)
        return (f, np.zeros(n_grid)) if rng.uniform() < 0.5 else (np.zeros(n_grid), f)
    cuts = np.sort(rng.choice(np.arange(n_grid), size=int(rng.integers(1, max(2, n_grid // 4))),
                              replace=False))
    f = np.zeros(n_grid)
    g = np.zeros(n_grid)
    start = 0
    for stop in list(cuts) + [n_grid]:
        seg = slice(start, stop)
        if stop > start:
            owner = rng.integers(0, 3)
            hump = rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 2.0) * _hump(stop - start, rng)
            if owner == 0:
                f[seg] = hump
            elif owner == 1:
                g[seg] = hump
        start = stop + 1
    return f, g


def _hump(k, rng):
    # strictly nonzero inside the segment; the neighbouring cut nodes are the zeros
    t = np.arange(1, k + 1) / (k + 1)
    return np.sin(np.pi * t) * rng.uniform(0.5, 1.5, k)


def supports_cover_path(f, g) -> bool:
    """Brute force: do the supports of f and g together cover every node?"""
    return bool(np.all((np.asarray(f) != 0) | (np.asarray(g) != 0)))


def connected_disjoint_additivity_suite(n_grid: int, trials: int, seed: int) -> DefectReport:
    """Orthogonality defect of the min functional on the connected path model."""
    rng = np.random.default_rng(seed)
    phi = min_valuation(n_grid)
    best, witness = -1.0, None
    for _ in range(trials):
        f, g = path_disjoint_pair(rng, n_grid)
        both = np.any(f) and np.any(g)
        if both and supports_cover_path(f, g):
            raise AssertionError("generator produced a disconnection of the path")
        d = orthogonality_defect(phi, f, g)
        if d > best:
            best, witness = d, (f.tolist(), g.tolist())
    return DefectReport(best, witness, trials, seed)


def two_block_defects(block: int = 8) -> dict:
    """Valuation and orthogonality defects of the min functional on two blocks."""
    f_A, g_B = two_block_witness(block)
    phi = min_valuation(2 * block)
    chi1 = np.concatenate([np.ones(block), np.zeros(block)])
    chi2 = 1.0 - chi1
    return {
        "valuation_defect": valuation_defect(phi, f_A, g_B),
        "orthogonality_defect": orthogonality_defect(phi, chi1, chi2),
        "phi": {"f_A": min_functional(f_A), "g_B": min_functional(g_B),
                "join": min_functional(np.maximum(f_A, g_B)),
                "meet": min_functional(np.minimum(f_A, g_B))},
        "witness": (f_A.tolist(), g_B.tolist()),
    }


# -- tent kernel ------------------------------------------------------------

def tent_kernel_phi_n(n_blocks: int, atoms_per_block: int = 1,
                      remainder_atoms: int = 1) -> tuple[ClosedFormKernel, MeasureSpace]:
    """Blocks ``A_n`` of mass ``2^{-2n}`` carrying the tent ``phi_n`` (peak ``2^n`` at 2).

    The leftover mass of [0, 1] forms a final block where the kernel is 0.
    ``phi_n`` is 0 for negative arguments.
    """
    if n_blocks < 1:
        raise ValueError("need at least one block")
    weights, blocks = [], []
    for n in range(1, n_blocks + 1):
        weights += [4.0 ** -n / atoms_per_block] * atoms_per_block
        blocks += [n] * atoms_per_block
    rest = 1.0 - math.fsum(weights)
    weights += [rest / remainder_atoms] * remainder_atoms
    blocks += [0] * remainder_atoms
    space = MeasureSpace(np.array(weights), nonatomic_surrogate=True)
    kernel = ClosedFormKernel("tent_phi_n", {"block": np.array(blocks, dtype=float)}, len(blocks))
    return kernel, space


def tent_bound(n_blocks: int) -> float:
    """``sum_{n <= N} 2^n 2^{-2n} = 1 - 2^{-N}``."""
    return 1.0 - 2.0 ** -n_blocks


# -- boundedness certificate ------------------------------------------------

@dataclass
class BoundednessCertificate:
    pieces: list[MeasurableSet]
    delta: float
    q: float
    bound: float
    achieved: float
    slack: float
    eps_grid: float
    norm_f: float
    piece_norms: list[float] = field(default_factory=list)
    piece_values: list[float] = field(default_factory=list)
    remainder_value: float = 0.0
    reconstitution_gap: float = 0.0
    calibration_max: float = 0.0

    @property
    def calibrated(self) -> bool:
        return self.calibration_max <= 1.0

    @property
    def holds(self) -> bool:
        return self.achieved <= self.bound

    def to_json(self) -> dict:
        return {
            "pieces": [list(A.indices) for A in self.pieces],
            "n_pieces": len(self.pieces),
            "piece_measures": [A.measure for A in self.pieces],
            "delta": self.delta, "q": self.q, "bound": self.bound,
            "achieved": self.achieved, "slack": self.slack, "eps_grid": self.eps_grid,
            "norm_f": self.norm_f, "piece_norms": self.piece_norms,
            "piece_values": self.piece_values, "remainder_value": self.remainder_value,
            "reconstitution_gap": self.reconstitution_gap,
            "calibration_max": self.calibration_max, "calibrated": self.calibrated,
            "holds": self.holds,
        }


def calibrated_power_kernel(rng, n: int, delta: float, p: float) -> ClosedFormKernel:
    """``K(lam, t_i) = c_i |lam|^p / delta^p`` with ``|c_i| <= 1``.

    In L_p this gives ``|V(g)| <= (||g||/delta)^p <= 1`` on the delta-ball.
    """
    return ClosedFormKernel("power", {"coef": rng.uniform(-1.0, 1.0, n) / delta ** p, "p": p}, n)


def boundedness_certificate(V: Valuation, f, delta: float, q: float, spec: NormSpec,
                            space: MeasureSpace, slack_budget: float = 0.1) -> BoundednessCertificate:
    """Cut ``f`` into disjoint pieces of norm about ``delta`` and bound ``|V(f)|``.

    Pieces are extracted until the remainder has norm <= delta. With the
    lower q-estimate (constant 1) and piece norms >= ``delta (1 - eps_grid)``
    the piece count is at most ``(||f|| / (delta (1 - eps_grid)))^q``, so
    ``|V(f)| <= (||f||/delta)^q + 2 + slack`` with
    ``slack = (||f||/delta)^q ((1 - eps_grid)^{-q} - 1)``.
    """
    if spec.variant != "lp" or q < spec.p:
        raise ValueError("certificate needs an Lp norm with q >= p (lower q-estimate, M = 1)")
    f = np.asarray(f, dtype=float)
    nf = norm(f, spec, space)
    pieces: list[MeasurableSet] = []
    used = space.empty()
    eps_grid = 0.0
    piece_norms = []
    while True:
        rest = used.complement()
        if norm(f * rest.indicator, spec, space) <= delta:
            break
        try:
            res = find_subset_with_target_norm(f, delta, spec, used, slack_budget=slack_budget)
        except TargetUnreachable:
            break
        if len(res.subset) == 0:
            break
        pieces.append(res.subset)
        piece_norms.append(res.achieved)
        eps_grid = max(eps_grid, res.eps_grid)
        used = used.union(res.subset)
    rest = used.complement()
    piece_values = [V(f * A.indicator) for A in pieces]
    remainder_value = V(f * rest.indicator)
    total = V(f)
    gap = abs(math.fsum(piece_values) + remainder_value - total)
    ratio = (nf / delta) ** q
    slack = ratio * ((1.0 - eps_grid) ** -q - 1.0)
    calib = max([abs(v) for v in piece_values] + [abs(remainder_value)])
    return BoundednessCertificate(
        pieces=pieces, delta=delta, q=q, bound=ratio + 2.0 + slack, achieved=abs(total),
        slack=slack, eps_grid=eps_grid, norm_f=nf, piece_norms=piece_norms,
        piece_values=piece_values, remainder_value=remainder_value,
        reconstitution_gap=gap, calibration_max=calib)


# -- atomic failure modes ---------------------------------------------------

def atomic_proportionality_failure() -> dict:
    """Two atoms of weights 1 and 2 with ``nu(A) = #A``.

    No two distinct sets share a measure, so ``nu`` is trivially invariant
    under measure-preserving set maps, yet it is not a multiple of ``mu``.
    """
    space = MeasureSpace(np.array([1.0, 2.0]))
    sets = [space.subset(ix) for ix in ([0], [1], [0, 1])]
    ratios = [len(A) / A.measure for A in sets]
    return {"artifact_derived": True, "weights": [1.0, 2.0],
            "nu_over_mu": ratios, "proportional": max(ratios) - min(ratios) == 0.0}


def atomic_boundedness_failure(delta: float = 0.5, lam: float = 4.0, p: float = 10.0) -> dict:
    """One atom of mass 1 and ``K(s) = |s/delta|^p``.

    ``|V| <= 1`` on the delta-ball of L2, but ``V(lam)`` exceeds
    ``(||lam||/delta)^2 + 2`` as soon as ``p > 2`` and ``lam > delta``: the atom
    cannot be cut into pieces of norm about ``delta``.
    """
    space = MeasureSpace(np.array([1.0]), nonatomic_surrogate=True)
    K = ClosedFormKernel("power", {"coef": delta ** -p, "p": p}, 1)
    f = np.array([lam])
    value = float(K.evaluate(f)[0])
    envelope = (lam / delta) ** 2 + 2.0
    try:
        find_subset_with_target_norm(f, delta, NormSpec.lp(2), space.empty())
        splittable = True
    except (TargetUnreachable, ValueError):
        splittable = False
    return {"artifact_derived": True, "value": value, "envelope": envelope,
            "exceeds": value > envelope, "splittable": splittable}
