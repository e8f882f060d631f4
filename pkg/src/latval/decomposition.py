"""Jordan decomposition ``V = V+ - V-`` on the positive cone.

On a discrete space the order interval ``0 <= g <= f`` is a box, so
``V+(f) = sup{V(g) : 0 <= g <= f}`` splits into one-dimensional maxima per
atom. Only valuations whose per-atom form is known are decomposed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import Kernel, TableKernel
from .measure_space import MeasureSpace
from .valuation import Valuation

SCAN_POINTS = 1000
REFINE_TOL = 1e-10
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class DecompositionRefused(TypeError):
    """The valuation exposes no per-atom form to maximize over."""


def _check_positive(f):
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("positive part is only defined on the positive cone")
    return f


def maximize_per_atom(evaluate, upper, scan: int = SCAN_POINTS, tol: float = REFINE_TOL):
    """Vectorized ``max_{0 <= s <= upper_i} h_i(s)`` for every atom.

    ``evaluate`` maps an ``(n, k)`` block of arguments to values. A dense scan
    of ``scan`` points locates the best bracket, which golden-section search
    then shrinks to width ``tol``; the answer never falls below the scan.
    """
    upper = np.asarray(upper, dtype=float)
    n = upper.size
    u = np.linspace(0.0, 1.0, scan)
    S = upper[:, None] * u[None, :]
    H = evaluate(S)
    j = H.argmax(axis=1)
    best = H[np.arange(n), j]
    rows = np.arange(n)
    lo = S[rows, np.maximum(j - 1, 0)]
    hi = S[rows, np.minimum(j + 1, scan - 1)]
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    hc = evaluate(c[:, None])[:, 0]
    hd = evaluate(d[:, None])[:, 0]
    while np.any(hi - lo > tol):
        left = hc >= hd
        # keep [lo, d] when h(c) >= h(d), else [c, hi]
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        c_new = hi - _INV_PHI * (hi - lo)
        d_new = lo + _INV_PHI * (hi - lo)
        c_eval = np.where(left, c_new, d)
        d_eval = np.where(left, c, d_new)
        h_c = np.where(left, evaluate(c_new[:, None])[:, 0], hd)
        h_d = np.where(left, hc, evaluate(d_new[:, None])[:, 0])
        c, d, hc, hd = c_eval, d_eval, h_c, h_d
    return np.maximum(best, np.maximum(hc, hd))


def positive_part_kernel(kernel: Kernel, f, space: MeasureSpace) -> float:
    """``V+(f) = sum_i mu_i max_{0 <= s <= f_i} K(s, t_i)`` for ``f >= 0``.

    Table kernels are maximized exactly over their nodes; other kernels use
    :func:`maximize_per_atom`.
    """
    f = _check_positive(f)
    if kernel.n_atoms != space.n or f.size != space.n:
        raise ValueError("kernel, function and space sizes differ")
    if isinstance(kernel, TableKernel):
        m = kernel.node_maxima(f)
    else:
        m = maximize_per_atom(kernel.evaluate, f)
    return math.fsum(np.maximum(m, 0.0) * space.weights)


def positive_part_bruteforce(V: Valuation, f, grid_points: int) -> float:
    """Grid oracle: per atom, the best of ``grid_points`` samples of ``[0, f_i]``."""
    f = _check_positive(f)
    if V.per_atom is None:
        raise DecompositionRefused(f"{V.label} has no per-atom form")
    if grid_points < 2:
        raise ValueError("need at least two grid points")
    total = []
    for h, fi in zip(V.per_atom, f):
        s = np.linspace(0.0, fi, grid_points)
        vals = np.array([h(x) for x in s], dtype=float)
        total.append(max(float(vals.max()), 0.0))
    return math.fsum(total)


def positive_part_per_atom(V: Valuation, f) -> float:
    """Scan-and-refine positive part for a per-atom black box."""
    f = _check_positive(f)
    if V.per_atom is None:
        raise DecompositionRefused(f"{V.label} has no per-atom form")
    funcs = V.per_atom

    def evaluate(S):
        out = np.empty_like(S)
        for i, h in enumerate(funcs):
            out[i] = np.vectorize(h, otypes=[float])(S[i])
        return out

    return math.fsum(np.maximum(maximize_per_atom(evaluate, f), 0.0))


@dataclass(frozen=True, eq=False)
class JordanPair:
    positive: Valuation
    negative: Valuation
    source: Valuation


def jordan_decompose(V: Valuation, space: MeasureSpace | None = None) -> JordanPair:
    """Split ``V`` into positive valuations with ``V = V+ - V-`` on ``f >= 0``."""
    if V.kernel is not None:
        sp = space or V.space
        kernel = V.kernel
        plus = lambda f: positive_part_kernel(kernel, f, sp)
    elif V.per_atom is not None:
        plus = lambda f: positive_part_per_atom(V, f)
    else:
        raise DecompositionRefused(
            f"{V.label} is opaque: the supremum over the order interval is a "
            "high-dimensional global optimization with no per-atom structure")
    positive = Valuation(plus, f"{V.label}+", V.size)
    negative = Valuation(lambda f: positive(f) - V(f), f"{V.label}-", V.size)
    return JordanPair(positive, negative, V)
