"""Approximate ergodic sum capacity for any number of sources.

The capacity is split by the chain rule into one term per transmit antenna
(stream). Stream ``k`` sees the first ``k - 1`` streams as interference with
power matrix ``Q_k``. Its term ``E ln(1 + h_k^H (sigma2 I + H H^H)^-1 h_k)``
is approximated by replacing the expectation of a ratio of determinants with
the ratio of expectations. Both expectations are polynomials in the powers
(sums of permanents), which leads to

    C_k = (phi_0 / phi_n) * sum_l zeta_l * e**w_l * E1(w_l)

where ``phi(t) = sum_l phi_l t**l = phi_n prod_l (t + w_l)``. ``phi(t)``
equals ``|S| E|sigma2 I + H^H S^-1 H|`` with ``S = I + t P_k / sigma2``.
It is an expected mixed determinant, which makes it real-rooted with
positive ``w_l``; the code still copes with complex conjugate pairs that
rounding may produce.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .combinatorics import esf_all, perm, subset_iter
from .errors import DegeneracyError, DomainError, ShapeError
from .linalg import poly_roots_neg
from .specfun import exp_e1

LN2 = math.log(2.0)
ZERO_POWER_FLOOR = 1e-12
# roots closer than this (relative) are treated as one cluster
ROOT_CLUSTER_RTOL = 1e-4
IMAG_RESIDUE_TOL = 1e-9


def _check_q(q, n_r=None):
    a = np.asarray(q, dtype=float)
    if a.ndim == 1 and a.size == 0:
        a = a.reshape(n_r if n_r is not None else 0, 0)
    if a.ndim != 2:
        raise ShapeError(f"interference power matrix must be 2-D, got shape {a.shape}")
    if n_r is not None and a.shape[0] != n_r:
        raise ShapeError(f"interference matrix has {a.shape[0]} rows, expected {n_r}")
    if a.shape[1] > a.shape[0]:
        raise ShapeError(f"{a.shape[1]} interferers exceed {a.shape[0]} receive antennas")
    if not np.all(np.isfinite(a)) or np.any(a < 0):
        raise DomainError("powers must be finite and non-negative")
    return a


def _row_subset_perms(q):
    """``{j: [(rows, Perm(q[rows, :])) for all j-row subsets]}`` for ``j = 0..k-1``."""
    n_r, km1 = q.shape
    out = {}
    for j in range(km1 + 1):
        out[j] = [(rows, float(perm(q[list(rows), :])) if j else 1.0)
                  for rows in subset_iter(n_r, j)]
    return out


def numerator_expectation(q, sigma2):
    """``E|sigma2 I + H^H H|`` for ``H`` with independent ``CN(0, q_ij)`` entries.

    Expanding the determinant in principal minors gives
    ``sum_j sigma2**(k-1-j) sum_{|R|=j} Perm(q[R, :])`` over row subsets
    ``R``, with ``Perm`` of a wide block taken over column selections and
    ``Perm`` of an empty block equal to 1. The identity is exact.

    Parameters
    ----------
    q : (n_R, k-1) array_like
        Powers of the interfering streams; ``k - 1 <= n_R``. May have zero
        columns, in which case the result is 1.
    sigma2 : float
        Noise power.
    """
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    a = _check_q(q)
    km1 = a.shape[1]
    perms = _row_subset_perms(a)
    return math.fsum(sigma2 ** (km1 - j) * v for j in perms for _, v in perms[j])


def phi_coeffs(q, pk, sigma2):
    """Ascending coefficients ``phi_0 .. phi_{n_R}`` of the denominator polynomial.

    ``sum_l phi_l t**l = |S| E|sigma2 I + H^H S^-1 H|`` with
    ``S = I + t diag(pk) / sigma2`` and ``H`` distributed as in
    :func:`numerator_expectation`. Explicitly

        phi_l = sum_j sigma2**(k-1-j-l) sum_{|R|=j} e_l(pk[~R]) Perm(q[R, :])

    where ``e_l`` is the elementary symmetric function of the powers outside
    ``R``. ``phi_0`` equals :func:`numerator_expectation`.
    """
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    p = np.asarray(pk, dtype=float)
    if p.ndim != 1:
        raise ShapeError("pk must be a 1-D power vector")
    a = _check_q(q, p.size)
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise DomainError("powers must be finite and non-negative")
    n_r, km1 = a.shape
    perms = _row_subset_perms(a)
    terms = [[] for _ in range(n_r + 1)]
    everyone = set(range(n_r))
    for j, items in perms.items():
        for rows, pv in items:
            rest = sorted(everyone.difference(rows))
            e = esf_all(p[rest])
            for l, el in enumerate(e):
                terms[l].append(sigma2 ** (km1 - j - l) * el * pv)
    return np.array([math.fsum(t) for t in terms])


@dataclass
class StreamContext:
    """Per-stream data of the approximation.

    ``q`` holds the powers of streams ``1..k-1``, ``pk`` those of stream
    ``k``; ``phi``, ``omega`` and ``zeta`` are filled in by :meth:`build`.
    """

    k: int
    q: np.ndarray
    pk: np.ndarray
    sigma2: float
    phi: Optional[np.ndarray] = None
    omega: Optional[np.ndarray] = None
    zeta: Optional[np.ndarray] = None
    zeta0: Optional[float] = None
    clustered: bool = False
    imag_residue: float = 0.0

    @classmethod
    def build(cls, p, k, sigma2):
        """Context for stream ``k`` (1-based) of power matrix ``p``."""
        P = np.asarray(p, dtype=float)
        ctx = cls(k=k, q=P[:, :k - 1], pk=P[:, k - 1], sigma2=float(sigma2))
        ctx.phi = phi_coeffs(ctx.q, ctx.pk, ctx.sigma2)
        if not ctx.phi[-1] > 0:
            raise DomainError(f"stream {k}: leading coefficient vanishes (all powers zero)")
        omega = poly_roots_neg(ctx.phi)
        omega, ctx.clustered = spread_root_clusters(omega)
        ctx.omega = omega
        ctx.zeta, ctx.zeta0 = partial_fraction_weights(omega)
        return ctx


def partial_fraction_weights(omega):
    """Weights of ``1/(t prod(t + w)) = zeta0/t - sum_l zeta_l/(t + w_l)``.

    ``zeta_l = 1 / (w_l prod_{u != l}(w_u - w_l))`` and ``zeta0 = 1/prod(w)``.
    """
    w = np.asarray(omega, dtype=complex)
    if np.any(w == 0):
        raise DegeneracyError("zero root")
    zeta = np.empty_like(w)
    for l in range(w.size):
        diff = np.delete(w, l) - w[l]
        if np.any(diff == 0):
            raise DegeneracyError("repeated root in partial fractions")
        zeta[l] = 1.0 / (w[l] * np.prod(diff))
    zeta0 = complex(1.0 / np.prod(w))
    return zeta, zeta0.real if abs(zeta0.imag) <= 1e-12 * abs(zeta0) else zeta0


def _cluster_spread(m):
    # balances rounding noise (u / d**(m-1)) against the O(d**2) shift
    return (2.0 ** -52) ** (1.0 / (m + 1))


def spread_root_clusters(omega, rtol=ROOT_CLUSTER_RTOL):
    """Replace groups of nearly equal roots by symmetric, well-separated ones.

    Roots are grouped by single linkage at relative distance ``rtol``. A group
    of ``m`` roots is replaced by its mean ``c`` spread to
    ``c (1 + d (j - (m-1)/2))`` with ``d = u**(1/(m+1))`` (``u`` the unit
    roundoff), so the partial-fraction weights stay computable. The
    divided-difference sum they feed is a smooth symmetric function of the
    roots, so the shift costs ``O(d**2)`` relative accuracy.

    Returns
    -------
    omega : ndarray of complex
    changed : bool
    """
    w = np.asarray(omega, dtype=complex)
    n = w.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(w[i] - w[j]) <= rtol * max(abs(w[i]), abs(w[j])):
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = w.copy()
    changed = False
    for idx in groups.values():
        m = len(idx)
        if m == 1:
            continue
        changed = True
        c = np.mean(w[idx])
        c = c.real if abs(c.imag) <= rtol * abs(c) else c
        d = _cluster_spread(m)
        for j, i in enumerate(idx):
            out[i] = c * (1.0 + d * (j - 0.5 * (m - 1)))
    return out, changed


def stream_capacity(ctx):
    """Approximate stream term ``C_k`` in nats.

    ``(phi_0/phi_n) sum_l zeta_l exp_e1(w_l)``; complex roots contribute in
    conjugate pairs, so the imaginary part cancels up to rounding.

    Raises
    ------
    DegeneracyError
        If a root has non-positive real part or the imaginary residue
        exceeds ``1e-9``.
    """
    w = np.asarray(ctx.omega, dtype=complex)
    if np.any(w.real <= 0):
        raise DegeneracyError(f"stream {ctx.k}: root with non-positive real part {w[w.real <= 0]}")
    ratio = ctx.phi[0] / ctx.phi[-1]
    vals = [ratio * z * exp_e1(complex(x) if x.imag else float(x.real)) for z, x in zip(ctx.zeta, w)]
    re = math.fsum(complex(v).real for v in vals)
    im = math.fsum(complex(v).imag for v in vals)
    ctx.imag_residue = abs(im)
    if abs(im) > IMAG_RESIDUE_TOL * max(1.0, abs(re)):
        raise DegeneracyError(f"stream {ctx.k}: imaginary residue {im:.3g} too large")
    return re


@dataclass(frozen=True)
class ApproxResult:
    """Approximate capacity with the per-stream terms (bits) and diagnostics."""

    bits: float
    stream_bits: tuple
    order: tuple
    clustered: bool
    max_imag_residue: float
    contexts: list = field(default_factory=list, repr=False, compare=False)


def _prepare(p, sigma2):
    if not (sigma2 > 0 and math.isfinite(sigma2)):
        raise DomainError("sigma2 must be a positive finite number")
    P = np.array(p, dtype=float)
    if P.ndim != 2 or 0 in P.shape:
        raise ShapeError(f"power matrix must be non-empty 2-D, got shape {P.shape}")
    if not np.all(np.isfinite(P)) or np.any(P < 0):
        raise DomainError("powers must be finite and non-negative")
    n_r, n_t = P.shape
    if n_t > n_r:
        raise ShapeError(f"approximation needs n_R >= N (got n_R={n_r}, N={n_t})")
    top = P.max()
    if top <= 0:
        raise DomainError("power matrix is identically zero")
    return np.maximum(P, ZERO_POWER_FLOOR * top) / sigma2


def approx_capacity_details(p, sigma2, order: Optional[Sequence[int]] = None):
    """Approximate capacity with per-stream breakdown.

    Parameters
    ----------
    p : (n_R, N) array_like
        Average link powers, ``N <= n_R``. Zeros are floored at ``1e-12``
        times the largest power.
    sigma2 : float
        Noise power.
    order : sequence of int, optional
        Column order for the chain-rule decomposition (default natural order).
    """
    P = _prepare(p, sigma2)
    n_t = P.shape[1]
    order = tuple(range(n_t)) if order is None else tuple(int(i) for i in order)
    if sorted(order) != list(range(n_t)):
        raise DomainError(f"order must be a permutation of range({n_t})")
    P = P[:, list(order)]
    ctxs = [StreamContext.build(P, k, 1.0) for k in range(1, n_t + 1)]
    nats = [stream_capacity(c) for c in ctxs]
    bits = [v / LN2 for v in nats]
    return ApproxResult(
        bits=math.fsum(nats) / LN2,
        stream_bits=tuple(bits),
        order=order,
        clustered=any(c.clustered for c in ctxs),
        max_imag_residue=max(c.imag_residue for c in ctxs),
        contexts=ctxs,
    )


def approx_capacity(p, sigma2, order=None):
    """Approximate ergodic sum capacity in bits/s/Hz.

    Parameters
    ----------
    p : (n_R, N) array_like
        Average link powers with ``N <= n_R``.
    sigma2 : float
        Noise power.
    order : sequence of int, optional
        Stream order for the chain rule; the approximation (not the true
        capacity) depends on it mildly.

    Raises
    ------
    ShapeError
        If ``N > n_R``.
    """
    return approx_capacity_details(p, sigma2, order).bits
