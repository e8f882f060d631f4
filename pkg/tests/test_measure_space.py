import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latval.lattice import NormSpec, norm
from latval.measure_space import (GridTooCoarse, MeasurableSet, MeasureSpace, TargetUnreachable,
                                  equal_measure_transport, find_subset_with_target_norm,
                                  make_chunked_space, make_uniform_grid, parse_space,
                                  symdiff_distance)


def test_uniform_grid_examples():
    s = make_uniform_grid(4, 1.0)
    assert np.all(s.weights == 0.25)
    assert s.nonatomic_surrogate
    one = make_uniform_grid(1, 2.0)
    assert one.weights.tolist() == [2.0]
    big = make_uniform_grid(10**6, 1.0)
    assert big.eta == pytest.approx(1e-6, rel=1e-12)


@pytest.mark.parametrize("n, mass", [(0, 1.0), (3, 0.0), (3, -1.0), (2.5, 1.0)])
def test_uniform_grid_rejects(n, mass):
    with pytest.raises(ValueError):
        make_uniform_grid(n, mass)


def test_space_invariants():
    with pytest.raises(ValueError):
        MeasureSpace(np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        MeasureSpace(np.array([1.0, np.inf]))
    with pytest.raises(ValueError):
        MeasureSpace(np.ones(3), chunks=((0, 1), (0, 1)))  # not strictly increasing
    with pytest.raises(ValueError):
        MeasureSpace(np.ones(3), chunks=((0,), (0, 1)))  # does not exhaust
    with pytest.raises(ValueError):
        MeasureSpace(np.ones(3), mass_unbounded=True)
    s = make_chunked_space(np.ones(4), [1, 3, 4], mass_unbounded=True)
    assert s.total_mass == np.inf and s.atom_mass == 4.0 and not s.finite_measure


def test_symdiff_examples():
    s = MeasureSpace(np.ones(3))
    assert symdiff_distance(s.subset([0, 1]), s.subset([1, 2])) == 2.0
    assert symdiff_distance(s.subset([0, 2]), s.subset([0, 2])) == 0.0
    g = make_uniform_grid(8, 3.0)
    assert symdiff_distance(g.empty(), g.full()) == g.total_mass


def test_symdiff_rejects_mismatched_spaces():
    a, b = make_uniform_grid(3), make_uniform_grid(4)
    with pytest.raises(ValueError):
        symdiff_distance(a.full(), b.full())


@settings(max_examples=200)
@given(st.data())
def test_symdiff_triangle_inequality(data):
    # dyadic weights keep every sum exact, so the comparison needs no tolerance
    n = data.draw(st.integers(1, 12))
    w = np.array(data.draw(st.lists(st.integers(1, 64), min_size=n, max_size=n))) / 64.0
    s = MeasureSpace(w)
    sets = [s.subset(data.draw(st.sets(st.integers(0, n - 1)))) for _ in range(3)]
    A, B, C = sets
    assert symdiff_distance(A, C) <= symdiff_distance(A, B) + symdiff_distance(B, C)
    assert symdiff_distance(A, B) == symdiff_distance(B, A)
    assert (symdiff_distance(A, B) == 0) == (A.indices == B.indices)


def test_subset_search_constant_function():
    s = make_uniform_grid(1000, 1.0)
    res = find_subset_with_target_norm(np.ones(1000), 0.5, NormSpec.lp(2), s.empty())
    # exact-arithmetic greedy oracle: largest k with k/1000 <= 1/4
    k = max(j for j in range(1001) if Fraction(j, 1000) <= Fraction(1, 4))
    assert len(res.subset) == k
    assert 0.2498 <= res.subset.measure <= 0.25
    assert res.achieved <= 0.5


def test_subset_search_errors():
    s = make_uniform_grid(100)
    with pytest.raises(TargetUnreachable):
        find_subset_with_target_norm(np.zeros(100), 0.5, NormSpec.lp(2), s.empty())
    f = np.zeros(100)
    f[3] = 1e3
    with pytest.raises(GridTooCoarse):
        find_subset_with_target_norm(f, 0.5, NormSpec.lp(2), s.empty())
    with pytest.raises(ValueError):
        find_subset_with_target_norm(np.ones(3), 0.5, NormSpec.lp(2), MeasureSpace(np.ones(3)).empty())


def test_subset_search_respects_forbidden():
    s = make_uniform_grid(400)
    forbidden = s.subset(range(0, 400, 2))
    res = find_subset_with_target_norm(np.ones(400), 0.3, NormSpec.lp(1), forbidden)
    assert res.subset.isdisjoint(forbidden)
    assert res.achieved <= 0.3


SPECS = [NormSpec.lp(1), NormSpec.lp(2), NormSpec.lp(3.5), NormSpec.sup(),
         NormSpec.orlicz("power_p", 2), NormSpec.orlicz("exp_minus_one")]


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), which=st.integers(0, len(SPECS) - 1),
       frac=st.floats(0.05, 0.9))
def test_subset_search_bounds(seed, which, frac):
    spec = SPECS[which]
    rng = np.random.default_rng(seed)
    s = make_uniform_grid(2000)
    f = rng.uniform(-1, 1, 2000)
    delta = frac * norm(f, spec, s)
    try:
        res = find_subset_with_target_norm(f, delta, spec, s.empty(), slack_budget=1.0)
    except TargetUnreachable:
        return
    measured = norm(f * res.subset.indicator, spec, s)
    assert measured <= delta  # hard bound, no tolerance
    assert measured == res.achieved
    assert measured >= delta * (1 - res.eps_grid) * (1 - 1e-12)


def test_equal_measure_transport():
    s = make_uniform_grid(10)
    A = s.subset([1, 4, 7])
    B = equal_measure_transport(A, s, seed=3)
    assert len(B) == 3 and B.measure == A.measure
    assert equal_measure_transport(s.full(), s, 1).indices == s.full().indices
    assert equal_measure_transport(A, s, 42) == equal_measure_transport(A, s, 42)
    with pytest.raises(ValueError):
        equal_measure_transport(MeasureSpace(np.array([1.0, 2.0])).full(),
                                MeasureSpace(np.array([1.0, 2.0])), 0)


@given(st.sets(st.integers(0, 49)), st.integers(0, 2**32))
def test_transport_preserves_measure(idx, seed):
    s = make_uniform_grid(50, 3.0)
    A = s.subset(idx)
    assert equal_measure_transport(A, s, seed).measure == A.measure


@given(st.integers(0, 10**6))
def test_chunk_exhaustion(seed):
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.1, 2.0, 30)
    s = make_chunked_space(w, [3, 10, 11, 25, 30])
    f = rng.normal(size=30)
    for spec in (NormSpec.lp(1), NormSpec.lp(2), NormSpec.sup()):
        vals = [norm(f * A.indicator, spec, s) for A in s.chunk_sets()]
        assert all(a <= b for a, b in zip(vals, vals[1:]))
        assert vals[-1] == norm(f, spec, s)


def test_space_json_roundtrip():
    s = make_chunked_space([0.5, 0.25, 0.25], [1, 3], nonatomic_surrogate=True)
    obj = json.loads(json.dumps(s.to_json()))
    assert set(obj) == {"atoms", "chunks", "nonatomic_surrogate"}
    assert obj["atoms"][0] == {"id": 0, "weight": 0.5}
    assert MeasureSpace.from_json(obj) == s
    with pytest.raises(ValueError):
        MeasureSpace.from_json({"atoms": [{"weight": 1.0}]})


def test_parse_space():
    assert parse_space("uniform:4") == make_uniform_grid(4)
    assert parse_space("uniform:4:2").total_mass == 2.0
    with pytest.raises(ValueError):
        parse_space("gaussian:3")


def test_measurable_set_validation():
    s = make_uniform_grid(3)
    with pytest.raises(ValueError):
        MeasurableSet([5], s)
    A = s.subset([2, 0, 2])
    assert A.indices == (0, 2)
    assert A.complement().indices == (1,)
