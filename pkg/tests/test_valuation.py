import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latval.kernels import ClosedFormKernel
from latval.lattice import NormSpec
from latval.measure_space import MeasureSpace, make_uniform_grid
from latval.probes import min_valuation, two_block_witness
from latval.sampling import (random_disjoint_pair, random_mixture_kernel, random_pair,
                             random_per_atom_functions)
from latval.valuation import (Valuation, continuity_modulus, extend_from_positive,
                              kernel_valuation, linear_valuation, max_defect,
                              orthogonality_defect, per_atom_valuation,
                              relative_valuation_defect, split_valuation, valuation_defect)


def square_valuation(space):
    return kernel_valuation(ClosedFormKernel("power", {"p": 2.0}, space.n), space)


def test_kernel_valuation_examples():
    s = MeasureSpace(np.array([0.5, 0.5]))
    V = square_valuation(s)
    assert V([1.0, 2.0]) == 2.5
    assert V(np.zeros(2)) == 0.0
    lin = linear_valuation(1.0, make_uniform_grid(4))
    assert lin(np.array([1.0, 2.0, 3.0, 4.0])) == 2.5


def test_valuation_rejects_bad_input():
    V = square_valuation(make_uniform_grid(3))
    with pytest.raises(ValueError):
        V(np.zeros(4))
    with pytest.raises(ValueError):
        Valuation(lambda f: 1.0, "const", 2)
    with pytest.raises(ValueError):
        kernel_valuation(ClosedFormKernel("linear", {}, 2), make_uniform_grid(3))


def test_defect_examples():
    V = square_valuation(make_uniform_grid(5))
    rng = np.random.default_rng(0)
    f, g = random_pair(rng, 5)
    assert valuation_defect(V, f, g) <= 1e-14
    m = min_valuation(16)
    f, g = two_block_witness(8)
    assert valuation_defect(m, f, g) == 1.0
    chi = np.repeat([1.0, 0.0], 8)
    assert orthogonality_defect(m, chi, 1.0 - chi) == 1.0
    with pytest.raises(ValueError):
        orthogonality_defect(V, np.ones(5), np.ones(5))


def test_per_atom_functionals_pass_both_defects():
    rng = np.random.default_rng(7)
    n = 50
    worst_v = worst_o = 0.0
    for _ in range(100):
        V = per_atom_valuation(random_per_atom_functions(rng, n))
        f, g = random_pair(rng, n)
        a, b = random_disjoint_pair(rng, n)
        worst_v = max(worst_v, relative_valuation_defect(V, f, g))
        worst_o = max(worst_o, orthogonality_defect(V, a, b) / (1 + abs(V(a)) + abs(V(b))))
    assert worst_v <= 1e-10 and worst_o <= 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_linear_combinations_stay_valuations(seed):
    rng = np.random.default_rng(seed)
    s = make_uniform_grid(30)
    V = kernel_valuation(random_mixture_kernel(rng, 30), s)
    W = square_valuation(s)
    a, b = rng.normal(size=2)
    U = V.combine(W, a, b)
    f, g = random_pair(rng, 30)
    assert relative_valuation_defect(U, f, g) <= 1e-12
    assert U(f) == pytest.approx(a * V(f) + b * W(f), rel=1e-12, abs=1e-12)
    assert (V - W)(f) == pytest.approx(V(f) - W(f), rel=1e-12, abs=1e-12)
    assert (-V)(f) == -V(f)


def test_max_defect_keeps_witness():
    rep = max_defect(lambda x: abs(x), [(1.0,), (-3.0,), (3.0,), (2.0,)], seed=5)
    assert rep.max_defect == 3.0 and rep.witness == (-3.0,) and rep.trials == 4
    assert rep.to_json()["seed"] == 5
    with pytest.raises(ValueError):
        max_defect(abs, [])


def test_extension_from_positive_cone():
    s = make_uniform_grid(4)
    Vp = square_valuation(s)
    D = extend_from_positive(Vp, "difference")
    J = extend_from_positive(Vp, "join_zero")
    f = np.array([1.0, -2.0, 0.0, 3.0])
    assert D(f) == (1 + 9 - 4) / 4
    assert J(f) == (1 + 9) / 4
    rng = np.random.default_rng(1)
    for _ in range(50):
        f, g = random_pair(rng, 4)
        assert relative_valuation_defect(D, f, g) <= 1e-14
        assert relative_valuation_defect(J, f, g) <= 1e-14
    with pytest.raises(ValueError):
        extend_from_positive(Vp, "other")


def test_split_valuation():
    s = make_uniform_grid(6)
    V = kernel_valuation(ClosedFormKernel("linear", {"coef": 1.0}, 6), s)
    V1, V2 = split_valuation(V)
    f = np.array([1.0, -1.0, 2.0, -2.0, 0.0, 3.0])
    assert V1(f) == 1.0 and V2(f) == -0.5
    assert V1(f) + V2(f) == V(f)


def test_continuity_modulus_linear_bound():
    # for linear V and the L1 norm the worst case over the unit ball is attained
    # at the extreme points +-e_i / mu_i, so the dual norm is max_i |c_i|
    s = make_uniform_grid(20)
    rng = np.random.default_rng(3)
    c = rng.normal(size=20)
    V = linear_valuation(c, s)
    extreme = max(abs(V(np.eye(20)[i] / s.weights[i])) for i in range(20))
    assert extreme == pytest.approx(np.abs(c).max(), rel=1e-14)
    f = rng.normal(size=20)
    table = continuity_modulus(V, f, NormSpec.lp(1), [1.0, 0.5, 0.01], 200, seed=0, space=s)
    for r, worst in table:
        assert worst <= extreme * r * (1 + 1e-12) + 1e-15
    assert [r for r, _ in table] == [1.0, 0.5, 0.01]


def test_continuity_modulus_rejects():
    V = square_valuation(make_uniform_grid(3))
    with pytest.raises(ValueError):
        continuity_modulus(V, np.ones(3), NormSpec.lp(2), [0.1, 0.5], 5, 0)
    with pytest.raises(ValueError):
        continuity_modulus(V, np.ones(3), NormSpec.lp(2), [-0.1], 5, 0)
    with pytest.raises(ValueError):
        continuity_modulus(V, np.ones(3), NormSpec.lp(2), [0.5, 0.0], 5, 0)


def test_per_atom_fsum_is_accurate():
    V = per_atom_valuation([lambda s: s] * 3)
    assert V(np.array([1e16, 1.0, -1e16])) == 1.0
    assert math.isclose(V(np.array([0.1, 0.2, 0.3])), 0.6)
