import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from macrocap.capacity_bounds import (
    MAX_BOUND_COLUMNS,
    high_snr_approx,
    jensen_bound,
    low_snr_approx,
    theta_coeffs,
)
from macrocap.channel import scenario_table1
from macrocap.errors import DomainError, ShapeError
from macrocap.montecarlo import mc_capacity

PRIMES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71]


def _prime_matrix(rng, n):
    return np.array(rng.choice(PRIMES, size=n * n, replace=False), dtype=np.int64).reshape(n, n)


def _expanded_2x2(P):
    (p11, p12), (p21, p22) = P.tolist()
    return (1, p11 + p12 + p21 + p22, p11 * p22 + p12 * p21)


def _expanded_3x3(P):
    P = P.tolist()

    def q(i, k):
        return P[i - 1][k - 1]

    first = sum(q(i, k) for i in (1, 2, 3) for k in (1, 2, 3))
    pairs = [
        ((1, 1), (2, 2)), ((1, 1), (3, 2)), ((2, 1), (1, 2)), ((2, 1), (3, 2)),
        ((3, 1), (1, 2)), ((3, 1), (2, 2)), ((1, 1), (2, 3)), ((1, 1), (3, 3)),
        ((2, 1), (1, 3)), ((2, 1), (3, 3)), ((3, 1), (1, 3)), ((3, 1), (2, 3)),
        ((1, 2), (2, 3)), ((1, 2), (3, 3)), ((2, 2), (1, 3)), ((2, 2), (3, 3)),
        ((3, 2), (1, 3)), ((3, 2), (2, 3)),
    ]
    second = sum(q(*a) * q(*b) for a, b in pairs)
    third = (q(1, 1) * q(2, 2) * q(3, 3) + q(1, 1) * q(2, 3) * q(3, 2)
             + q(1, 2) * q(2, 1) * q(3, 3) + q(1, 2) * q(3, 1) * q(2, 3)
             + q(1, 3) * q(2, 1) * q(3, 2) + q(1, 3) * q(2, 2) * q(3, 1))
    return (1, first, second, third)


@pytest.mark.parametrize("seed", range(10))
def test_coefficients_match_expanded_forms(seed):
    rng = np.random.default_rng(seed)
    P2 = _prime_matrix(rng, 2)
    P3 = _prime_matrix(rng, 3)
    assert theta_coeffs(P2) == _expanded_2x2(P2)
    assert theta_coeffs(P3) == _expanded_3x3(P3)


def test_all_ones_examples():
    assert jensen_bound(np.ones((2, 2)), 1.0).bits == pytest.approx(math.log2(7), rel=1e-15)
    b = jensen_bound(np.ones((3, 3)), 1.0)
    assert b.theta == pytest.approx((1, 9, 18, 6))
    assert b.bits == pytest.approx(math.log2(34), rel=1e-15)
    assert jensen_bound(np.eye(2), 1.0).bits == pytest.approx(2.0, rel=1e-15)


def test_theta_invariants(rng):
    P = rng.uniform(0.0, 2.0, size=(5, 3))
    th = jensen_bound(P, 1.0).theta
    assert th[0] == 1.0
    assert th[1] == pytest.approx(P.sum(), rel=1e-14)
    assert all(t >= 0 for t in th)
    assert len(th) == 4


def test_orientation_free(rng):
    P = rng.uniform(0.1, 2.0, size=(3, 5))
    assert jensen_bound(P, 0.7).bits == pytest.approx(jensen_bound(P.T, 0.7).bits, rel=1e-14)


def test_one_term_examples():
    assert low_snr_approx([[0.25, 0.25], [0.25, 0.25]], 1.0) == pytest.approx(1.0)
    assert high_snr_approx(np.eye(2), 10.0) == pytest.approx(math.log2(101), rel=1e-15)


def test_low_snr_limit():
    P, _ = scenario_table1("S3", 0.0)
    assert abs(low_snr_approx(P, 0.01) - jensen_bound(P, 0.01).bits) <= 0.05
    assert jensen_bound(P, 1e-12).bits < 1e-9


def test_high_snr_limit(rng):
    P = rng.uniform(0.2, 2.0, size=(3, 3))
    assert abs(high_snr_approx(P, 1e3) - jensen_bound(P, 1e3).bits) <= 0.1


def test_doubling_powers_adds_n_bits_at_high_snr(rng):
    P = rng.uniform(0.2, 2.0, size=(3, 3))
    g = 1e8
    assert jensen_bound(2 * P, g).bits - jensen_bound(P, g).bits == pytest.approx(3.0, abs=1e-6)


@given(st.integers(0, 2**32 - 1), st.floats(-6, 6))
def test_one_term_versions_below_bound(seed, log_g):
    rng = np.random.default_rng(seed)
    P = rng.uniform(0.0, 3.0, size=(rng.integers(1, 5), rng.integers(1, 5)))
    P[0, 0] += 0.1
    g = 10.0 ** log_g
    b = jensen_bound(P, g)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        assert low_snr_approx(P, g) <= b.bits * (1 + 1e-12) + 1e-300
        assert high_snr_approx(P, g) <= b.bits * (1 + 1e-12) + 1e-300


def test_zero_permanent_warns():
    P = np.array([[1.0, 1.0], [0.0, 0.0]])
    with pytest.warns(RuntimeWarning):
        assert high_snr_approx(P, 10.0) == 0.0
    with pytest.warns(RuntimeWarning):
        assert jensen_bound(P, 10.0).bits > 0


@pytest.mark.parametrize("sid", ["S1", "S4", "S8"])
def test_dominates_monte_carlo(sid):
    for rho in (0.0, 10.0, 20.0):
        P, s2 = scenario_table1(sid, rho)
        mc = mc_capacity(P, s2, 20_000, seed=2)
        assert jensen_bound(P, 1.0 / s2).bits >= mc.mean - 3 * mc.stderr


def test_scale_invariance(rng):
    P = rng.uniform(0.1, 2.0, size=(4, 3))
    a = jensen_bound(P, 2.0)
    b = jensen_bound(5.0 * P, 2.0 / 5.0)
    assert b.bits == pytest.approx(a.bits, rel=1e-12)
    assert b.low_snr_bits == pytest.approx(a.low_snr_bits, rel=1e-12)
    assert b.high_snr_bits == pytest.approx(a.high_snr_bits, rel=1e-12)


def test_large_gamma_no_overflow(rng):
    P = rng.uniform(0.1, 2.0, size=(4, 4))
    v = jensen_bound(P, 1e200).bits
    assert math.isfinite(v)
    assert v == pytest.approx(math.log2(float(theta_coeffs(P)[-1])) + 4 * math.log2(1e200), rel=1e-12)


def test_errors():
    with pytest.raises(DomainError):
        jensen_bound(np.ones((2, 2)), 0.0)
    with pytest.raises(DomainError):
        low_snr_approx(np.ones((2, 2)), -1.0)
    with pytest.raises(DomainError):
        jensen_bound(-np.ones((2, 2)), 1.0)
    with pytest.raises(ShapeError):
        jensen_bound(np.ones(3), 1.0)
    n = MAX_BOUND_COLUMNS + 1
    with pytest.raises(ShapeError):
        jensen_bound(np.ones((n, n)), 1.0)
