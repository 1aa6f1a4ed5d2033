import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftvp.dynsys import make_system
from shiftvp.formats import random_system
from shiftvp.measures import invariant_polytope
from shiftvp.oracles import grid_inner_sup, inner_objective_direct
from shiftvp.partitions import PartitionOfUnity, singleton_partition, trivial_partition
from shiftvp.shiftop import log_operator_norm
from shiftvp.tentropy import (
    cross_tau_n,
    inner_problem,
    stationarity_check,
    solve_inner,
    tau,
    tau_n,
    tau_n_D,
)

from conftest import measures, systems

LN2, LN3 = math.log(2), math.log(3)


def random_partition(rng, n):
    k = int(rng.integers(1, n + 1))
    if rng.random() < 0.5:
        return PartitionOfUnity(rng.dirichlet(np.ones(k), size=n).T)
    labels = np.unique(rng.integers(0, k, size=n), return_inverse=True)[1]
    return PartitionOfUnity.from_labels(labels)


def test_tau_n_D_examples(fixed_point, identity2):
    delta1 = [0.0, 1.0]
    rep = tau_n_D(fixed_point, delta1, singleton_partition(fixed_point), 1)
    assert rep.value == pytest.approx(LN2, abs=1e-9)
    assert rep.mu_prime[1] == pytest.approx(2.0, abs=1e-9)
    assert rep.certified_direction == "exact-within-tol"
    rep = tau_n_D(fixed_point, delta1, trivial_partition(fixed_point), 1)
    assert rep.value == pytest.approx(LN3, abs=1e-9)
    assert rep.value == pytest.approx(log_operator_norm(fixed_point, [0, 0], 1), abs=1e-9)
    assert tau_n_D(identity2, [0.5, 0.5], singleton_partition(identity2), 1).value == pytest.approx(0, abs=1e-9)


def test_tau_n_examples(fixed_point, swap):
    rep = tau_n(fixed_point, [0.0, 1.0], 1)
    assert rep.value == pytest.approx(LN2, abs=1e-9)
    assert rep.diagnostics["partitions_total"] == 2
    for mu in ([0.5, 0.5], [1.0, 0.0], [0.3, 0.7]):
        for k in (1, 2, 5):
            assert abs(tau_n(swap, mu, k).value) <= 1e-9
    assert abs(tau_n(make_system([0, 0]), [1.0, 0.0], 3).value) <= 1e-9


def test_tau_examples(swap):
    rep = tau(make_system([0, 0], [2.0, 1.0]), [0.0, 1.0], 4)
    assert rep.value == pytest.approx(-LN2, abs=1e-9)
    assert rep.n == 1
    assert abs(tau(swap, [0.25, 0.75], 6).value) <= 1e-9
    rep = tau(make_system([0, 0], [1.0, 2.0]), [0.0, 1.0], 8)
    assert rep.value == pytest.approx(LN2 / 8, abs=1e-9)
    assert rep.certified_direction == "upper-estimate"
    np.testing.assert_allclose(rep.diagnostics["tau_n"], LN2, atol=1e-9)


def test_cross_tau_examples(fixed_point, swap):
    D = singleton_partition(fixed_point)
    mu = np.array([0.5, 0.5])
    rep = tau_n_D(fixed_point, mu, D, 1)
    assert cross_tau_n(fixed_point, mu, mu, D, 1) == pytest.approx(rep.value, abs=1e-9)
    oracle_mu0 = rep.mu_prime[0]
    assert cross_tau_n(fixed_point, [1.0, 0.0], mu, D, 1) == pytest.approx(math.log(oracle_mu0 / 0.5), abs=1e-9)
    Ds = singleton_partition(swap)
    for nu in ([1.0, 0.0], [0.3, 0.7]):
        assert abs(cross_tau_n(swap, nu, [0.5, 0.5], Ds, 1)) <= 1e-9
    with pytest.raises(ValueError):
        cross_tau_n(fixed_point, mu, [1.0, 0.0], D, 1)


def test_cross_mu_prime_matches_grid(fixed_point):
    # mu'(1_0) = <c_{1_0}, h*> with h* found by grid search on the 1-dim simplex
    mu = [0.5, 0.5]
    rep = tau_n_D(fixed_point, mu, singleton_partition(fixed_point), 1)
    grid = grid_inner_sup([0, 0], [1.0, 2.0], mu, [[1, 0], [0, 1]], 1, final_step=1e-6)
    assert rep.value == pytest.approx(grid, abs=1e-9)


def test_stationarity_examples(rng):
    for _ in range(20):
        n = int(rng.integers(1, 7))
        sys = random_system(rng, n)
        mu = rng.dirichlet(np.ones(n))
        D = random_partition(rng, n)
        steps = int(rng.integers(1, 4))
        rep = tau_n_D(sys, mu, D, steps, tol=1e-13)
        assert stationarity_check(sys, mu, D, steps, rep, rep.h)
        assert stationarity_check(sys, mu, D, steps, rep, np.zeros(n))
        for f in rng.uniform(0, 1, (100, n)):
            assert stationarity_check(sys, mu, D, steps, rep, f)


def test_solver_matches_grid_oracle(rng):
    for _ in range(25):
        n = int(rng.integers(1, 4))
        sys = random_system(rng, n)
        mu = rng.dirichlet(np.ones(n))
        D = random_partition(rng, n)
        steps = int(rng.integers(1, 4))
        value = tau_n_D(sys, mu, D, steps).value
        grid = grid_inner_sup(sys.map.tolist(), sys.mass.tolist(), mu.tolist(), D.rows.tolist(), steps)
        assert value == pytest.approx(grid, abs=1e-4)
        # the solver is certified to within its tol of the sup
        assert value >= grid - 1e-10


def test_reported_value_is_attained(rng):
    for _ in range(20):
        n = int(rng.integers(1, 8))
        sys = random_system(rng, n)
        mu = rng.dirichlet(np.ones(n))
        D = random_partition(rng, n)
        rep = tau_n_D(sys, mu, D, 2)
        assert sys.mass @ rep.h == pytest.approx(1.0)
        direct = inner_objective_direct(sys.map.tolist(), sys.mass.tolist(), mu.tolist(), D.rows.tolist(), 2,
                                        rep.h.tolist())
        assert direct == pytest.approx(rep.value, abs=1e-12)


def test_trace_is_monotone(rng):
    for _ in range(30):
        n = int(rng.integers(2, 8))
        sys = random_system(rng, n)
        mu = rng.dirichlet(np.ones(n))
        D = PartitionOfUnity(rng.dirichlet(np.ones(3), size=n).T)
        sol = solve_inner(inner_problem(sys, mu, D, 2), tol=1e-12, record_trace=True)
        assert sol.converged
        assert np.all(np.diff(sol.trace) >= -1e-12)


def test_unconverged_report_is_lower_estimate():
    sys = make_system([1, 2, 0, 0], [1.0, 0.5, 2.0, 1.5])
    D = PartitionOfUnity(np.array([[0.3, 0.6, 0.1, 0.9], [0.7, 0.4, 0.9, 0.1]]))
    rep = tau_n_D(sys, [0.1, 0.2, 0.3, 0.4], D, 1, tol=1e-14, max_iter=2)
    assert not rep.converged
    assert rep.certified_direction == "lower-estimate"
    full = tau_n_D(sys, [0.1, 0.2, 0.3, 0.4], D, 1)
    assert rep.value <= full.value + 1e-12


def test_zero_weight_rows_are_skipped(fixed_point):
    D = PartitionOfUnity.from_blocks([[0], [1]], 2)
    rep = tau_n_D(fixed_point, [1.0, 0.0], D, 1)
    assert rep.value == pytest.approx(0.0, abs=1e-12)


def test_prune_matches_full_enumeration(rng):
    for _ in range(10):
        n = int(rng.integers(1, 6))
        sys = random_system(rng, n)
        mu = rng.dirichlet(np.ones(n)) * (rng.random(n) < 0.7)
        if mu.sum() == 0:
            mu[0] = 1
        mu /= mu.sum()
        steps = int(rng.integers(1, 3))
        a = tau_n(sys, mu, steps, prune=True)
        b = tau_n(sys, mu, steps, prune=False)
        assert a.value == pytest.approx(b.value, abs=1e-9)
        assert b.diagnostics["partitions_solved"] == b.diagnostics["partitions_total"]


def test_exact_mode_limits():
    sys = make_system(list(range(11)))
    with pytest.raises(ValueError):
        tau_n(sys, np.full(11, 1 / 11), 1, mode="exact")
    rep = tau_n(sys, np.full(11, 1 / 11), 1, mode="greedy")
    assert rep.certified_direction == "upper-estimate"
    small = make_system([0, 0, 1])
    rep = tau_n(small, [0.2, 0.3, 0.5], 1, budget=3)
    assert rep.diagnostics["truncated"] and rep.certified_direction == "upper-estimate"


@settings(max_examples=40, deadline=None)
@given(sys=systems(max_points=5), data=st.data(), steps=st.integers(1, 3))
def test_upper_bound_and_singleton_minimal(sys, data, steps):
    mu = data.draw(measures(sys.n))
    trace = []
    rep = tau_n(sys, mu, steps, prune=False, trace=trace)
    bound = log_operator_norm(sys, np.zeros(sys.n), steps)
    assert all(v <= bound + 1e-9 for _, v in trace)
    single = tau_n_D(sys, mu, singleton_partition(sys), steps).value
    assert single <= min(v for _, v in trace) + 1e-8
    assert rep.value == pytest.approx(single, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(sys=systems(max_points=5), data=st.data(), p=st.floats(0, 1), steps=st.integers(1, 3))
def test_concavity(sys, data, p, steps):
    mu1 = data.draw(measures(sys.n))
    mu2 = data.draw(measures(sys.n))
    seed = data.draw(st.integers(0, 2**32 - 1))
    D = random_partition(np.random.default_rng(seed), sys.n)
    mix = p * mu1 + (1 - p) * mu2
    lhs = tau_n_D(sys, mix / mix.sum(), D, steps).value
    rhs = p * tau_n_D(sys, mu1, D, steps).value + (1 - p) * tau_n_D(sys, mu2, D, steps).value
    assert lhs >= rhs - 1e-8


@settings(max_examples=25, deadline=None)
@given(sys=systems(max_points=6), data=st.data())
def test_subadditive_and_zero_on_invariant(sys, data):
    poly = invariant_polytope(sys)
    k = len(poly.extreme_points)
    w = np.array(data.draw(st.lists(st.floats(0.01, 1), min_size=k, max_size=k)))
    mu = poly.combine(w / w.sum())
    seq = [tau_n(sys, mu, n).value for n in range(1, 9)]
    for a in range(1, 8):
        for b in range(1, 9 - a):
            assert seq[a + b - 1] <= seq[a - 1] + seq[b - 1] + 1e-6
    assert np.max(np.abs(seq)) <= 1e-9
