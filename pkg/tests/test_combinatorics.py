import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import cn_matrix, esf_bruteforce, mean_se, perm_bruteforce

from macrocap.combinatorics import esf, esf_all, perm, perm_rect, perm_square, subset_iter, tr_k
from macrocap.errors import ShapeError


def test_subset_iter_order_and_counts():
    assert list(subset_iter(3, 2)) == [(0, 1), (0, 2), (1, 2)]
    assert list(subset_iter(5, 0)) == [()]
    assert list(subset_iter(2, 3)) == []
    assert sum(1 for _ in subset_iter(10, 4)) == 210


def test_perm_square_small_cases():
    assert perm_square(np.array([[1, 2], [3, 4]])) == 10
    assert perm_square(np.ones((4, 4), dtype=int)) == 24
    assert perm_square(np.eye(3)) == 1.0
    assert perm_square(np.zeros((0, 0))) == 1


@pytest.mark.parametrize("n", range(1, 8))
def test_perm_square_exact_on_integers(rng, n):
    a = rng.integers(-9, 10, size=(n, n))
    assert perm_square(a) == perm_bruteforce(a.tolist())


def test_perm_square_float_accuracy(rng):
    a = rng.uniform(0, 1, (6, 6))
    assert perm_square(a) == pytest.approx(perm_bruteforce(a), rel=1e-13)


def test_perm_square_rejects_non_square():
    with pytest.raises(ShapeError):
        perm_square(np.ones((2, 3)))


def test_perm_rect_examples(rng):
    assert perm_rect(np.ones((3, 2), dtype=int)) == 6
    assert perm_rect(np.array([[1, 0], [0, 1], [1, 1]])) == 3
    a = rng.integers(0, 7, size=(6, 3))
    assert perm_rect(a) == perm_bruteforce(a.tolist())
    sq = rng.integers(0, 5, size=(4, 4))
    assert perm_rect(sq) == perm_square(sq)
    with pytest.raises(ShapeError):
        perm_rect(np.ones((2, 3)))


def test_perm_either_orientation(rng):
    a = rng.uniform(size=(2, 5))
    assert perm(a) == pytest.approx(perm_rect(a.T), rel=1e-15)


def test_empty_block_convention():
    # degree-0 selections contribute exactly one, as an empty permanent
    a = np.arange(6.0).reshape(3, 2)
    assert sum(perm_rect(a[:, list(c)]) for c in subset_iter(2, 0)) == 1


@pytest.mark.parametrize("seed", range(50))
def test_row_and_column_subset_sums_agree(seed):
    a = np.random.default_rng(seed).uniform(0, 2, (5, 3))
    for k in range(4):
        by_rows = math.fsum(perm(a[list(r), :]) if k else 1.0 for r in subset_iter(5, k))
        by_cols = math.fsum(perm(a[:, list(c)]) if k else 1.0 for c in subset_iter(3, k))
        assert by_rows == pytest.approx(by_cols, rel=1e-12)


def test_esf_examples():
    assert esf([1, 2, 3], 2) == 11
    assert esf([4.0, 5.0], 0) == 1
    assert esf([1, 2, 3], 4) == 0
    assert esf([2, 3, 4], 3) == 24
    assert esf_all([1, 2, 3]) == [1, 6, 11, 6]


@given(st.lists(st.floats(0, 10), min_size=0, max_size=7), st.integers(0, 8))
def test_esf_matches_bruteforce(values, k):
    ref = esf_bruteforce(values, k) if k <= len(values) else 0.0
    assert esf(values, k) == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_tr_k_examples():
    d = np.diag([1.0, 2.0, 3.0])
    assert tr_k(d, 0) == 1.0
    assert tr_k(d, 1) == pytest.approx(6.0)
    assert tr_k(d, 2) == pytest.approx(11.0)
    assert tr_k(d, 4) == 0.0


def test_tr_k_equals_esf_of_eigenvalues(rng):
    a = rng.standard_normal((5, 5))
    m = a @ a.T
    lam = np.linalg.eigvalsh(m)
    for k in range(6):
        assert tr_k(m, k) == pytest.approx(esf(lam, k), rel=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_determinant_mean_is_permanent(n):
    # E|X^H X| = Perm(A) for independent CN(0, A_ij) entries
    rng = np.random.default_rng(100 + n)
    A = rng.uniform(0.2, 2.0, (n, n))
    X = cn_matrix(rng, A, 100_000)
    dets = np.real(np.linalg.det(np.conj(np.swapaxes(X, 1, 2)) @ X))
    m, se = mean_se(dets)
    assert abs(m - perm_square(A)) <= 3 * se


def test_weighted_determinant_mean_is_rect_permanent():
    # E|X^H S X| = Perm_rect(S A) for diagonal S
    rng = np.random.default_rng(7)
    A = rng.uniform(0.2, 2.0, (3, 2))
    s = np.array([0.5, 1.5, 2.0])
    X = cn_matrix(rng, A, 100_000)
    dets = np.real(np.linalg.det(np.conj(np.swapaxes(X, 1, 2)) @ (s[:, None] * X)))
    m, se = mean_se(dets)
    assert abs(m - perm_rect(s[:, None] * A)) <= 3 * se
