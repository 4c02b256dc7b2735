"""Jensen upper bound on the ergodic sum capacity and its one-term limits.

Moving the expectation inside the logarithm gives
``C <= log2 E|I + g H^H H| = log2 sum_i theta_i g**i`` with ``g = 1/sigma2``
and ``theta_i`` the sum of permanents of all ``n_R x i`` column selections
of ``P``.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .combinatorics import perm, perm_rect, subset_iter
from .errors import DomainError, ShapeError

MAX_BOUND_COLUMNS = 8


@dataclass(frozen=True)
class BoundBreakdown:
    """Jensen bound with its polynomial coefficients.

    Attributes
    ----------
    theta : tuple of float
        ``theta_0 .. theta_N``; ``theta_0 = 1``, ``theta_1 = sum(P)``,
        ``theta_N = Perm(P)``.
    bits : float
        ``log2(sum_i theta_i g**i)``.
    low_snr_bits, high_snr_bits : float
        The one-term versions keeping only ``theta_1`` or ``theta_N``.
    """

    theta: tuple
    bits: float
    low_snr_bits: float
    high_snr_bits: float


def _tall(p):
    P = np.array(p, dtype=float)
    if P.ndim != 2 or 0 in P.shape:
        raise ShapeError(f"power matrix must be non-empty 2-D, got shape {P.shape}")
    if not np.all(np.isfinite(P)) or np.any(P < 0):
        raise DomainError("powers must be finite and non-negative")
    # |I + g H^H H| = |I + g H H^H|, so orientation is free
    if P.shape[1] > P.shape[0]:
        P = P.T
    if P.shape[1] > MAX_BOUND_COLUMNS:
        raise ShapeError(f"bound supports min(n_R, N) <= {MAX_BOUND_COLUMNS}, got {P.shape[1]}")
    return P


def _check_gamma(gamma):
    if not (gamma > 0 and math.isfinite(gamma)):
        raise DomainError("inverse noise power must be positive and finite")


def theta_coeffs(p):
    """``theta_i = sum over i-column subsets S of perm_rect(P[:, S])``, ``i = 0..N``.

    Exact integers for integer input.
    """
    P = np.asarray(p)
    integer = np.issubdtype(P.dtype, np.integer)
    if integer:
        if P.ndim == 2 and P.shape[1] > P.shape[0]:
            P = P.T
    else:
        P = _tall(P)
    n_t = P.shape[1]
    out = [1 if integer else 1.0]
    for i in range(1, n_t + 1):
        vals = [perm_rect(P[:, list(cols)]) for cols in subset_iter(n_t, i)]
        out.append(sum(vals) if integer else math.fsum(vals))
    return tuple(out)


def _log2_sum_exp(logs):
    # log2(sum(exp(logs))) with the largest term factored out to avoid overflow
    top = max(logs)
    return (top + math.log(math.fsum(math.exp(v - top) for v in logs))) / math.log(2.0)


def _log2_poly(theta, gamma):
    return _log2_sum_exp([math.log(t) + i * math.log(gamma) for i, t in enumerate(theta) if t > 0])


def jensen_bound(p, gamma):
    """Jensen upper bound ``log2 E|I + gamma H^H H|`` with its breakdown.

    Parameters
    ----------
    p : (n_R, N) array_like
        Average link powers.
    gamma : float
        Inverse noise power ``1 / sigma2``.

    Returns
    -------
    BoundBreakdown
    """
    _check_gamma(gamma)
    P = _tall(p)
    theta = theta_coeffs(P)
    return BoundBreakdown(
        theta=theta,
        bits=_log2_poly(theta, gamma),
        low_snr_bits=math.log2(1.0 + theta[1] * gamma),
        high_snr_bits=_high(theta[-1], len(theta) - 1, gamma),
    )


def low_snr_approx(p, gamma):
    """``log2(1 + P_T gamma)`` with ``P_T = sum(P)``; the bound's linear term only."""
    _check_gamma(gamma)
    P = _tall(p)
    return math.log2(1.0 + math.fsum(P.ravel()) * gamma)


def _high(perm_p, n, gamma):
    if perm_p <= 0:
        warnings.warn("Perm(P) = 0: the high-SNR one-term approximation is meaningless",
                      RuntimeWarning, stacklevel=3)
        return 0.0
    return _log2_sum_exp([0.0, math.log(perm_p) + n * math.log(gamma)])


def high_snr_approx(p, gamma):
    """``log2(1 + Perm(P) gamma**N)``; the bound's top-degree term only.

    Returns 0 with a ``RuntimeWarning`` when ``Perm(P) = 0`` (no full
    transversal of non-zero powers).
    """
    _check_gamma(gamma)
    P = _tall(p)
    return _high(float(perm(P)), P.shape[1], gamma)
