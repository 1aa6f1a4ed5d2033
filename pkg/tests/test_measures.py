import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftvp.dynsys import ValidationError, make_system
from shiftvp.formats import random_system
from shiftvp.measures import (
    WeakStarNeighborhood,
    check_measure,
    invariant_polytope,
    is_invariant,
    neighborhood_contains,
    push_forward,
    sample_measures,
)
from shiftvp.oracles import invariance_lp_vertices

from conftest import systems


def test_invariance_examples():
    assert is_invariant(make_system([1, 0]), [0.5, 0.5])
    assert not is_invariant(make_system([0, 0]), [0.0, 1.0])
    assert is_invariant(make_system([0, 0]), [1.0, 0.0])


def test_push_forward():
    sys = make_system([0, 0, 1])
    np.testing.assert_allclose(push_forward(sys, [0.0, 0.0, 1.0]), [0, 1, 0])
    np.testing.assert_allclose(push_forward(sys, [0.0, 0.0, 1.0], 2), [1, 0, 0])


def test_check_measure_rejects():
    sys = make_system([0, 1])
    for bad in ([0.5, 0.6], [1.5, -0.5], [1.0], [np.nan, 1.0]):
        with pytest.raises(ValidationError):
            check_measure(sys, bad)


def _as_set(points):
    return sorted(tuple(np.round(p, 12)) for p in points)


def test_polytope_examples():
    assert _as_set(invariant_polytope(make_system([1, 0])).extreme_points) == [(0.5, 0.5)]
    assert _as_set(invariant_polytope(make_system([0, 1, 0])).extreme_points) == _as_set(
        [[1, 0, 0], [0, 1, 0]])
    assert _as_set(invariant_polytope(make_system([0, 0])).extreme_points) == [(1.0, 0.0)]


def test_polytope_matches_lp_vertices(rng):
    for _ in range(40):
        n = int(rng.integers(1, 6))
        sys = random_system(rng, n)
        assert _as_set(invariant_polytope(sys).extreme_points) == _as_set(invariance_lp_vertices(sys.map))


@settings(max_examples=60, deadline=None)
@given(sys=systems(max_points=10), data=st.data())
def test_polytope_points_are_invariant(sys, data):
    poly = invariant_polytope(sys)
    for p in poly.extreme_points:
        assert is_invariant(sys, p, tol=0.0)
    k = len(poly.extreme_points)
    w = np.array(data.draw(st.lists(st.floats(0.01, 1), min_size=k, max_size=k)))
    assert is_invariant(sys, poly.combine(w / w.sum()), tol=1e-12)


def test_neighborhood_examples():
    c = np.array([0.2, 0.8])
    assert neighborhood_contains(WeakStarNeighborhood(c, [np.array([1.0, 0.0])], 1e-9), c)
    assert neighborhood_contains(WeakStarNeighborhood(c, [], 0.1), [1.0, 0.0])
    O = WeakStarNeighborhood(np.array([1.0, 0.0]), [np.array([1.0, 0.0])], 0.1)
    assert not neighborhood_contains(O, [0.75, 0.25])
    with pytest.raises(ValueError):
        WeakStarNeighborhood(c, [], 0.0)


def test_neighborhood_rows_match_scalar(rng):
    c = rng.dirichlet(np.ones(4))
    O = WeakStarNeighborhood(c, list(rng.uniform(0, 1, (3, 4))), 0.1)
    nus = rng.dirichlet(np.ones(4), size=200)
    np.testing.assert_array_equal(O.contains_rows(nus), [O.contains(nu) for nu in nus])


def test_sample_measures():
    sys = make_system([0, 0])
    a = sample_measures(sys, 1, seed=7)
    b = sample_measures(sys, 1, seed=7)
    np.testing.assert_array_equal(a[0], b[0])
    assert a[0].sum() == pytest.approx(1.0)
    rest = _as_set(a[1:])
    assert (1.0, 0.0) in rest and (0.0, 1.0) in rest
    sys = make_system([1, 0, 2])
    pts = _as_set(sample_measures(sys, 3, seed=1))
    for e in invariant_polytope(sys).extreme_points:
        assert tuple(np.round(e, 12)) in pts
