"""Permanents, elementary symmetric functions and principal-minor sums."""

import math
from itertools import combinations

import numpy as np

from .errors import ShapeError

MAX_PERMANENT_ORDER = 20


def subset_iter(n, k):
    """All ``k``-subsets of ``range(n)`` as increasing tuples, in lexicographic order.

    ``k == 0`` yields the single empty tuple; ``k > n`` yields nothing.
    """
    if k < 0 or n < 0:
        raise ValueError("n and k must be non-negative")
    return combinations(range(n), k)


def _is_integer_matrix(a):
    return np.issubdtype(a.dtype, np.integer) or a.dtype == object


def perm_square(a):
    """Permanent of a square matrix by Ryser's formula with Gray-code updates.

    Cost is ``O(2**n * n)``. Integer-typed input is evaluated in exact integer
    arithmetic; float input accumulates the alternating Ryser terms with
    :func:`math.fsum`.

    Raises
    ------
    ShapeError
        For non-square input or ``n > 20``.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"perm_square needs a square matrix, got {a.shape}")
    n = a.shape[0]
    if n > MAX_PERMANENT_ORDER:
        raise ShapeError(f"permanent of order {n} exceeds the size guard ({MAX_PERMANENT_ORDER})")
    if n == 0:
        return 1
    if n == 1:
        return a[0, 0].item() if hasattr(a[0, 0], "item") else a[0, 0]

    exact = _is_integer_matrix(a)
    if exact:
        cols = [[int(x) for x in a[:, j]] for j in range(n)]
        row_sums = [0] * n
        total = 0
    else:
        a = a.astype(complex if np.iscomplexobj(a) else float)
        cols = [a[:, j].copy() for j in range(n)]
        row_sums = np.zeros(n, dtype=a.dtype)
        terms = []
    in_set = [False] * n
    sign = -1 if n % 2 else 1  # (-1)**n * (-1)**|S|, |S| starts at 0
    for g in range(1, 1 << n):
        j = (g & -g).bit_length() - 1
        if in_set[j]:
            in_set[j] = False
            if exact:
                row_sums = [r - c for r, c in zip(row_sums, cols[j])]
            else:
                row_sums = row_sums - cols[j]
        else:
            in_set[j] = True
            if exact:
                row_sums = [r + c for r, c in zip(row_sums, cols[j])]
            else:
                row_sums = row_sums + cols[j]
        sign = -sign
        if exact:
            total += sign * math.prod(row_sums)
        else:
            terms.append(sign * np.prod(row_sums))
    if exact:
        return total
    terms = np.asarray(terms)
    if np.iscomplexobj(terms):
        return complex(math.fsum(terms.real), math.fsum(terms.imag))
    return math.fsum(terms)


def perm_rect(a):
    """Permanent of an ``m x n`` matrix with ``m >= n``.

    Defined as the sum of :func:`perm_square` over all ``n``-row selections,
    i.e. the sum over injective column-to-row assignments.
    """
    a = np.asarray(a)
    if a.ndim != 2:
        raise ShapeError("perm_rect needs a 2-D matrix")
    m, n = a.shape
    if m < n:
        raise ShapeError(f"perm_rect needs rows >= cols, got {m}x{n}; transpose first")
    if m == n:
        return perm_square(a)
    if n == 0:
        return 1
    vals = [perm_square(a[list(rows), :]) for rows in subset_iter(m, n)]
    if _is_integer_matrix(a):
        return sum(vals)
    if any(isinstance(v, complex) for v in vals):
        return complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))
    return math.fsum(vals)


def perm(a):
    """Permanent of a matrix of either orientation (``perm(a) == perm(a.T)``)."""
    a = np.asarray(a)
    if a.ndim == 2 and a.shape[0] < a.shape[1]:
        a = a.T
    return perm_rect(a)


def esf(values, k):
    """Elementary symmetric function ``e_k`` of ``values``.

    Uses the product recurrence ``e_k <- e_k + x_j * e_{k-1}``, which is
    stable for non-negative inputs.
    """
    if k < 0:
        raise ValueError("degree k must be non-negative")
    x = list(values)
    if k > len(x):
        return 0.0
    e = [1.0] + [0.0] * k
    for xj in x:
        for d in range(k, 0, -1):
            e[d] = e[d] + xj * e[d - 1]
    return e[k]


def esf_all(values):
    """All elementary symmetric functions ``[e_0, ..., e_n]``."""
    x = list(values)
    e = [1.0] + [0.0] * len(x)
    for j, xj in enumerate(x, start=1):
        for d in range(j, 0, -1):
            e[d] = e[d] + xj * e[d - 1]
    return e


def tr_k(m, k):
    """Sum of all ``k x k`` principal minors of a square matrix.

    ``tr_k(m, 0) == 1`` and ``tr_k(m, k) == 0`` for ``k > n``. For a Hermitian
    matrix this equals ``esf(eigenvalues, k)``.
    """
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError("tr_k needs a square matrix")
    n = a.shape[0]
    if k < 0:
        raise ValueError("degree k must be non-negative")
    if k == 0:
        return 1.0
    if k > n:
        return 0.0
    minors = [np.linalg.det(a[np.ix_(s, s)]) for s in subset_iter(n, k)]
    if np.iscomplexobj(a):
        return complex(sum(minors))
    return math.fsum(minors)
