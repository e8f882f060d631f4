import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latval.lattice import NormSpec
from latval.measure_space import make_uniform_grid
from latval.probes import (SeriesValuation, atomic_boundedness_failure,
                           atomic_proportionality_failure, basis_norm_lower_bound,
                           basis_series_valuation,
                           boundedness_certificate, c0_series_valuation, calibrated_power_kernel,
                           connected_disjoint_additivity_suite, path_disjoint_pair,
                           series_continuity_delta, series_continuity_envelope, series_sum_check,
                           supports_cover_path, tent_bound, tent_kernel_phi_n, two_block_defects,
                           two_block_witness)
from latval.valuation import kernel_valuation, relative_valuation_defect


def test_series_on_basis_vectors():
    for n in range(1, 31):
        e = np.zeros(30)
        e[n - 1] = 1.0
        assert c0_series_valuation(e) == n
    assert c0_series_valuation(np.zeros(5)) == 0.0


def test_series_partial_sum_and_closed_forms():
    r = series_sum_check(0.5, 60)
    # oracle: exact rational partial sum of n / 2^n
    from fractions import Fraction
    exact = sum(Fraction(n, 2 ** n) for n in range(1, 61))
    assert abs(r["partial_sum"] - float(exact)) <= 1e-15
    assert abs(r["partial_sum"] - 2.0) <= 1e-9
    assert r["oracle_closed_form"] == 2.0
    assert r["alternate_closed_form"] == 4.0
    assert r["alternate_discrepant"]
    with pytest.raises(ValueError):
        series_sum_check(1.0, 10)


@settings(max_examples=50)
@given(st.lists(st.floats(0, 1.5), min_size=1, max_size=12),
       st.lists(st.floats(0, 1.5), min_size=1, max_size=12))
def test_series_valuation_law_on_cone(a, b):
    n = max(len(a), len(b))
    f = np.pad(np.array(a), (0, n - len(a)))
    g = np.pad(np.array(b), (0, n - len(b)))
    V = SeriesValuation(n).as_valuation()
    assert relative_valuation_defect(V, f, g) <= 1e-12


def test_series_rejects_bad_input():
    V = SeriesValuation(3)
    with pytest.raises(ValueError):
        V(np.array([-1.0, 0.0, 0.0]))
    with pytest.raises(ValueError):
        V(np.array([0.0, 0.0, 0.0, 1.0]))


def test_series_continuity_envelope():
    rng = np.random.default_rng(0)
    for eps in (0.1, 0.25, 0.4):
        env = series_continuity_envelope(eps)
        assert env == eps + 2 * eps / (1 - eps) ** 2
        for _ in range(50):
            x = np.sort(rng.uniform(0, 1.2, 25))[::-1] * (0.8 ** np.arange(25))
            delta, N = series_continuity_delta(x, eps)
            assert 0 < delta < eps / 2
            y = np.maximum(x + rng.uniform(-delta, delta, 25), 0.0)
            assert abs(c0_series_valuation(x) - c0_series_valuation(y)) <= env


def test_basis_series():
    a = np.array([0.5, -0.5, 0.25])
    assert basis_series_valuation(a) == 0.5 + 2 * 0.25 + 3 * 0.25 ** 3
    assert basis_norm_lower_bound(a, 2.0) == 1.0
    with pytest.raises(ValueError):
        basis_series_valuation(a, 0.0)


def test_two_block_witness():
    f, g = two_block_witness(8)
    assert f.size == 16
    d = two_block_defects(8)
    assert d["valuation_defect"] == 1.0
    assert d["orthogonality_defect"] == 1.0
    assert d["phi"] == {"f_A": 0.0, "g_B": 0.0, "join": 1.0, "meet": 0.0}
    with pytest.raises(ValueError):
        two_block_witness(1)


def test_connected_model_pairs_never_cover_the_path():
    rng = np.random.default_rng(1)
    for _ in range(500):
        f, g = path_disjoint_pair(rng, 32)
        assert np.all(np.minimum(np.abs(f), np.abs(g)) == 0)
        if np.any(f) and np.any(g):
            assert not supports_cover_path(f, g)


def test_connected_model_defect_zero():
    rep = connected_disjoint_additivity_suite(64, 1000, seed=0)
    assert rep.max_defect == 0.0 and rep.trials == 1000


def test_tent_kernel():
    for N in (1, 5, 10):
        K, s = tent_kernel_phi_n(N)
        assert math.isclose(s.total_mass, 1.0, rel_tol=1e-15)
        peak = K.evaluate(np.full(K.n_atoms, 2.0))
        assert peak.max() == 2.0 ** N
        V = kernel_valuation(K, s)
        assert V(np.full(K.n_atoms, 2.0)) == pytest.approx(tent_bound(N), rel=1e-14)
        assert V(np.full(K.n_atoms, 2.0)) < 1.0
    assert tent_bound(3) == 1 - 1 / 8
    with pytest.raises(ValueError):
        tent_kernel_phi_n(0)


def test_boundedness_constant_function():
    s = make_uniform_grid(10_000)
    rng = np.random.default_rng(0)
    K = calibrated_power_kernel(rng, s.n, 0.5, 2.0)
    V = kernel_valuation(K, s)
    cert = boundedness_certificate(V, np.ones(s.n), 0.5, 2.0, NormSpec.lp(2), s)
    assert len(cert.pieces) <= 4
    assert cert.holds and cert.calibrated
    assert cert.slack <= 1.0
    assert cert.reconstitution_gap <= 1e-12
    # pieces are pairwise disjoint
    seen = set()
    for A in cert.pieces:
        assert seen.isdisjoint(A.indices)
        seen |= set(A.indices)
    assert all(x <= 0.5 for x in cert.piece_norms)


def test_boundedness_requires_lp_with_large_q():
    s = make_uniform_grid(100)
    V = kernel_valuation(calibrated_power_kernel(np.random.default_rng(0), 100, 0.5, 2.0), s)
    with pytest.raises(ValueError):
        boundedness_certificate(V, np.ones(100), 0.5, 1.0, NormSpec.lp(2), s)
    with pytest.raises(ValueError):
        boundedness_certificate(V, np.ones(100), 0.5, 2.0, NormSpec.sup(), s)


def test_atomic_failure_modes():
    prop = atomic_proportionality_failure()
    assert prop["artifact_derived"] and not prop["proportional"]
    assert prop["nu_over_mu"] == [1.0, 0.5, 2.0 / 3.0]
    bnd = atomic_boundedness_failure()
    assert bnd["artifact_derived"] and bnd["exceeds"] and not bnd["splittable"]
    assert bnd["value"] == 8.0 ** 10 and bnd["envelope"] == 66.0
