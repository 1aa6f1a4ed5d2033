import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftvp.dynsys import ValidationError, make_system
from shiftvp.formats import random_system
from shiftvp.oracles import brute_force_norm, eigen_log_spectral_radius
from shiftvp.shiftop import (
    WeightedShiftOperator,
    lambda_cycle_mean,
    lambda_norm_limit,
    lambda_power,
    log_operator_norm,
    operator_norm_L1,
    spectral_report,
    tail_bound_K,
)

from conftest import systems

LN2 = math.log(2)


def test_apply_examples():
    op = WeightedShiftOperator(make_system([0, 1]), [0.0, 0.0])
    np.testing.assert_allclose(op.apply([1, 2]), [1, 2])
    op = WeightedShiftOperator(make_system([0, 0]), [LN2, 0.0])
    np.testing.assert_allclose(op.apply([1, 5]), [2, 1])
    op = WeightedShiftOperator(make_system([1, 0]), [0.0, 0.0])
    np.testing.assert_allclose(op.apply([3, 7]), [7, 3])


def test_apply_rejects_wrong_shape():
    op = WeightedShiftOperator(make_system([1, 0]), [0.0, 0.0])
    with pytest.raises(ValueError):
        op.apply([1, 2, 3])
    with pytest.raises(ValidationError):
        WeightedShiftOperator(make_system([1, 0]), [0.0])


@pytest.mark.parametrize("n_steps", [1, 2, 7])
def test_norm_identity(n_steps):
    assert operator_norm_L1(make_system([0, 1]), [0.0, 0.0], n_steps) == pytest.approx(1.0)


def test_norm_examples_against_brute_force():
    cases = [
        (make_system([0, 0], [1, 2]), [0.0, 0.0]),
        (make_system([0, 0], [1, 1]), [LN2, 0.0]),
    ]
    for sys, phi in cases:
        value = operator_norm_L1(sys, phi, 1)
        oracle = brute_force_norm(WeightedShiftOperator(sys, phi).table, sys.mass, seed=1)
        assert value == pytest.approx(3.0, abs=1e-12)
        assert oracle == pytest.approx(value, rel=1e-9)


def test_norm_matches_brute_force_on_random_powers(rng):
    for _ in range(10):
        n = int(rng.integers(1, 6))
        sys = random_system(rng, n)
        phi = rng.uniform(-1, 1, n)
        A = WeightedShiftOperator(sys, phi).table
        for k in (1, 2, 3):
            oracle = brute_force_norm(np.linalg.matrix_power(A, k), sys.mass, samples=2000, seed=k)
            # the sup is attained at a point mass, which the oracle always includes
            assert operator_norm_L1(sys, phi, k) == pytest.approx(oracle, rel=1e-10)


def test_cycle_mean_examples():
    assert lambda_cycle_mean(make_system([0, 1]), [1.0, 2.0]) == pytest.approx(2.0)
    assert lambda_cycle_mean(make_system([0, 0]), [LN2, 7.0]) == pytest.approx(LN2)
    assert lambda_cycle_mean(make_system([1, 0]), [0.0, 1.0]) == pytest.approx(0.5)


@pytest.mark.parametrize("amap, phi, expected", [
    ([0, 1], [0.0, 0.0], 0.0),
    ([0, 0], [LN2, 7.0], LN2),
    ([1, 0], [0.0, 1.0], 0.5),
])
def test_power_examples(amap, phi, expected):
    res = lambda_power(make_system(amap), phi, tol=1e-11)
    assert res.converged
    assert res.value == pytest.approx(expected, abs=1e-11)
    assert res.lower <= expected + 1e-11 and expected - 1e-11 <= res.upper


def test_norm_limit_examples():
    np.testing.assert_allclose(lambda_norm_limit(make_system([0, 1]), [0.0, 0.0], 10), 0.0, atol=1e-15)
    k = np.arange(1, 11)
    np.testing.assert_allclose(lambda_norm_limit(make_system([0, 0]), [0.0, 0.0], 10), LN2 / k, rtol=1e-12)
    lam = lambda_norm_limit(make_system([1, 0]), [0.0, 1.0], 20)
    assert lam[0] == pytest.approx(1.0)
    assert lam[1] == pytest.approx(0.5)
    assert np.all(np.abs(lam - 0.5) <= 1 / np.arange(1, 21) + 1e-12)


def test_eigenvalue_oracle_and_envelope(rng):
    for _ in range(30):
        n = int(rng.integers(1, 17))
        sys = random_system(rng, n)
        phi = rng.uniform(-3, 3, n)
        lam = lambda_cycle_mean(sys, phi)
        assert lam == pytest.approx(eigen_log_spectral_radius(sys.map, phi), abs=1e-9)
        assert abs(lambda_power(sys, phi).value - lam) <= 1e-9
        K = tail_bound_K(sys, phi)
        lam_k = lambda_norm_limit(sys, phi, 64)
        assert abs(lam_k[-1] - lam) <= K / 64


def test_power_on_long_periodic_tables():
    # a single 7-cycle with one tree: windowed averages alone are biased here
    sys = make_system([1, 2, 3, 4, 5, 6, 0, 0, 7, 8])
    phi = np.array([3.0, -3, 2, -2, 1, -1, 0.5, 3, 3, 3])
    res = lambda_power(sys, phi)
    assert res.converged
    assert res.value == pytest.approx(phi[:7].mean(), abs=1e-10)


def test_log_norm_matches_norm():
    sys = make_system([0, 0, 1], [1.0, 0.5, 2.0])
    phi = [0.1, -0.2, 0.3]
    for k in (1, 3, 5):
        assert math.exp(log_operator_norm(sys, phi, k)) == pytest.approx(operator_norm_L1(sys, phi, k))


def test_spectral_report_record():
    rec = spectral_report(make_system([1, 0]), [0.0, 1.0], k_max=8).to_record()
    assert rec["lambda"] == pytest.approx(0.5)
    assert rec["lambda_power"] == pytest.approx(0.5, abs=1e-11)
    assert len(rec["norm_limit"]) == 8
    assert rec["tail_bound_K"] == pytest.approx(4 + LN2)


phis = st.lists(st.floats(-3, 3), min_size=8, max_size=8)


@settings(max_examples=60, deadline=None)
@given(sys=systems(max_points=8), p1=phis, p2=phis, c=st.floats(-5, 5), t=st.floats(0, 1))
def test_lambda_structure(sys, p1, p2, c, t):
    p1 = np.array(p1[: sys.n])
    p2 = np.array(p2[: sys.n])
    lam1 = lambda_cycle_mean(sys, p1)
    lam2 = lambda_cycle_mean(sys, p2)
    assert lambda_cycle_mean(sys, p1 + c) == pytest.approx(lam1 + c, abs=1e-12)
    assert lambda_cycle_mean(sys, np.maximum(p1, p2)) >= max(lam1, lam2) - 1e-12
    assert lambda_cycle_mean(sys, t * p1 + (1 - t) * p2) <= t * lam1 + (1 - t) * lam2 + 1e-9


@settings(max_examples=40, deadline=None)
@given(sys=systems(max_points=12), phi=st.lists(st.floats(-3, 3), min_size=12, max_size=12))
def test_power_agrees_with_cycle_mean(sys, phi):
    phi = np.array(phi[: sys.n])
    assert abs(lambda_power(sys, phi).value - lambda_cycle_mean(sys, phi)) <= 1e-9
