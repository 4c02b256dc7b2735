"""Exact ergodic sum capacity of a two-source macrodiversity channel.

The capacity splits as ``(I_a1 + I_a2 - I_b) / ln 2`` where ``I_ak`` is the
single-source term of column ``k`` and ``I_b`` couples the two columns. Both
are finite sums of exponential-integral type special functions.

Everything is computed on the normalised powers ``P / sigma2`` (so the noise
power is 1), which makes the result exactly invariant to a common rescaling
of powers and noise.

Near-equal powers make the partial-fraction weights blow up and the sums
cancel catastrophically. Such inputs are detected from the cancellation
ratio of the final sum. They are then evaluated at four small generic
perturbations ``delta, 2 delta, 3 delta, 4 delta`` and extrapolated back to
zero perturbation by the cubic through those points, which removes the
error terms up to ``delta**3``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, DomainError, ShapeError
from .specfun import _h2_from_h1, exp_e1, exp_e1_divided_difference, exp_e1_pv, log_kernel_integral

LN2 = math.log(2.0)
ZERO_POWER_FLOOR = 1e-12
# estimated relative error (cancellation ratio and smallest denominator gap
# against the unit roundoff) above which the jitter path is used
MAX_REL_ERROR = 1e-10
UNIT_ERROR = 1e-15
JITTER_DELTA = 1e-2
_JITTER_NODES = (1, 2, 3, 4)
# stop refining the jitter size once the estimated relative error is this small
TARGET_REL_ERROR = 1e-9
MAX_JITTER_ERROR = 1e-5
JITTER_SNAP_BITS = 36
# powers below LIFT_RATIO * max are reached by extrapolation from above
LIFT_RATIO = 1e-6
LIFT_STEP = 1e-3


@dataclass(frozen=True)
class ExactResult:
    """Two-source capacity with diagnostics.

    Attributes
    ----------
    bits : float
        Ergodic sum capacity in bits/s/Hz.
    i_a : tuple of float
        Single-source terms ``I_a1``, ``I_a2`` in nats.
    i_b : float
        Coupling term in nats.
    jittered : bool
        True if the powers were perturbed and the result extrapolated.
    cancellation : float
        Ratio of the summed absolute terms to the absolute total. Large values
        mean heavy cancellation.
    """

    bits: float
    i_a: tuple
    i_b: float
    jittered: bool
    cancellation: float


def _positive_vector(p, name):
    v = np.asarray(p, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ShapeError(f"{name} must be a non-empty 1-D power vector")
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        raise DomainError(f"{name} entries must be finite and positive")
    return v


def eta_weights(pk):
    """Partial-fraction weights ``eta_i = p_i**(n-1) / prod_{l != i}(p_i - p_l)``.

    They satisfy ``sum_i eta_i / (t + 1/p_i) = 1/t - 1/(t prod_i(1 + t p_i))``,
    which is the expansion behind :func:`i_a` (noise power normalised to 1).

    Raises
    ------
    DegeneracyError
        If two powers coincide exactly.
    """
    p = _positive_vector(pk, "pk")
    n = p.size
    eta = np.empty(n)
    for i in range(n):
        diffs = p[i] - np.delete(p, i)
        if np.any(diffs == 0):
            raise DegeneracyError("repeated powers in the column; eta weights are undefined")
        eta[i] = p[i] ** (n - 1) / np.prod(diffs)
    return eta


def _i_a_terms(p):
    eta = eta_weights(p)
    return [e * exp_e1(1.0 / pi) for e, pi in zip(eta, p)]


def i_a(pk, sigma2):
    """Single-source term ``E{ln(1 + h^H h / sigma2)}`` in nats.

    ``h`` has independent ``CN(0, pk_i)`` entries. Closed form
    ``sum_i eta_i exp_e1(sigma2 / pk_i)`` on the normalised powers.
    """
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    p = _positive_vector(pk, "pk") / sigma2
    return math.fsum(_i_a_terms(p))


def _rel_gap(x, *parts):
    """``|x|`` relative to the magnitudes it was formed from (0 means total cancellation)."""
    scale = sum(abs(v) for v in parts)
    return abs(x) / scale if scale > 0 else 0.0


def _column_gap(p):
    """Smallest relative separation of two entries of a power vector."""
    q = np.sort(p)
    return float(np.min(np.diff(q) / (q[1:] + q[:-1]))) if q.size > 1 else 1.0


class _Pair:
    """Per-row constants of the coupling term on normalised powers (sigma2 = 1)."""

    def __init__(self, p1, p2):
        self.p1, self.p2 = p1, p2
        self.n = p1.size
        self.R = 1.0 / (p1 * p2)

    def row(self, i):
        p1, p2, R = self.p1, self.p2, self.R
        J = 1.0 / p2[i] - 1.0 / p1[i]
        if J == 0:
            raise DegeneracyError(f"row {i} has equal powers in both columns")
        alpha = 1.0 / p2 - 1.0 / p2[i]
        beta = 1.0 / p1 - 1.0 / p1[i]
        gamma = R - R[i]
        a = (alpha - beta) / J
        b = (beta / p2[i] - alpha / p1[i]) / J
        return J, a, b, gamma


def _h1_set(b, a, c):
    """``H1(a_j, b, c_j)`` for the four logarithm terms sharing the pole ``b``.

    Also returns the magnitudes ``|e^b E1(b) ln|c|| + |G|`` of the pieces.
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    first = exp_e1_pv(b) * np.log(np.abs(c))
    g = log_kernel_integral(a / c, b, pv=True)
    return first + g, np.abs(first) + np.abs(g)


_SIGNS = np.array([1.0, 1.0, -1.0, -1.0])


def _es(b, A1, A2, p1i, p2i):
    """Exponential-integral part and its magnitude."""
    t1 = p2i * exp_e1_divided_difference(A1, b, pv=True)
    t2 = p1i * exp_e1_divided_difference(A2, b, pv=True)
    return t1 - t2, abs(t1) + abs(t2)


def _i_b_terms(p1, p2, gaps=None, masses=None):
    """Terms of ``I_b`` (normalised powers) whose sum is ``I_b``.

    If ``gaps`` is a list, the relative size of every difference that ends
    up in a denominator is appended to it; values near zero flag a
    (near-)degenerate configuration. If ``masses`` is a list, each term's
    sum of absolute values of its pieces is appended; a mass much larger
    than the term reveals cancellation inside the term.
    """
    track = gaps is not None
    pair = _Pair(p1, p2)
    n = pair.n
    scale = -1.0 / np.prod(p1 * p2)
    terms = []
    for i in range(n):
        J, a, b, gamma = pair.row(i)
        Ri = pair.R[i]
        A1, A2 = 1.0 / p1[i], 1.0 / p2[i]
        c1, c2 = A1, A2
        if track:
            gaps.append(_rel_gap(J, c1, c2))
        for k in range(n):
            if k == i:
                continue
            if a[k] == 0 or b[k] == 0:
                raise DegeneracyError("vanishing coupling constant")
            q = b[k] / a[k]
            r = gamma[k] / a[k]
            lam = c1 + q
            mu = c2 + q
            m = (r - Ri) / q
            if m == 0:
                raise DegeneracyError("vanishing shifted pole")
            if Ri == 0 or r == 0:
                raise DegeneracyError("vanishing logarithm argument")
            h_a = (Ri, r, Ri, r)
            h_c = (c2, lam, c1, mu)
            if track:
                alpha = 1.0 / p2[k] - c2
                beta = 1.0 / p1[k] - c1
                gaps.extend([
                    _rel_gap(gamma[k], pair.R[k], Ri),
                    _rel_gap(alpha - beta, alpha, beta),
                    _rel_gap(beta / p2[i] - alpha / p1[i], beta / p2[i], alpha / p1[i]),
                    _rel_gap(r - Ri, r, Ri),
                    _rel_gap(lam, c1, q), _rel_gap(mu, c2, q),
                    _rel_gap(m - A1, m, A1), _rel_gap(m - A2, m, A2),
                ])
                gaps.extend(_rel_gap(aa / cc - m, aa / cc, m) for aa, cc in zip(h_a, h_c))
            # pieces that depend only on (i, k)
            h1_m, w1_m = _h1_set(m, h_a, h_c)
            hs1_m = float(_SIGNS @ h1_m)
            h2_pairs = [_h2_from_h1(aa, m, cc, hv, True, with_mass=True)
                        for aa, cc, hv in zip(h_a, h_c, h1_m)]
            hs2_m = math.fsum(sg * v for sg, (v, _) in zip(_SIGNS, h2_pairs))
            w2_m = math.fsum(w - abs(hv) + wh for (_, w), hv, wh in zip(h2_pairs, h1_m, w1_m))
            es_m, wes_m = _es(m, A1, A2, p1[i], p2[i])
            c = b * a[k] - a * b[k]
            d = a[k] * gamma - gamma[k] * a
            for l in range(n):
                if l in (i, k):
                    continue
                if c[l] == 0:
                    raise DegeneracyError("vanishing pole separation")
                xi = (a[k] * c[l]) ** (n - 3)
                for z in range(n):
                    if z not in (i, k, l):
                        xi /= d[z] * c[l] - c[z] * d[l]
                        if track:
                            gaps.append(_rel_gap(d[z] * c[l] - c[z] * d[l], d[z] * c[l], c[z] * d[l]))
                eps = d[l] / c[l]
                nn = r * c[l] - d[l] * q - c[l] * Ri
                if nn == 0 or eps == 0:
                    raise DegeneracyError("vanishing residue denominator")
                if track:
                    gaps.extend([
                        _rel_gap(c[l], b[l] * a[k], a[l] * b[k]),
                        _rel_gap(d[l], a[k] * gamma[l], gamma[k] * a[l]),
                        _rel_gap(nn, r * c[l], d[l] * q, c[l] * Ri),
                        _rel_gap(eps - A1, eps, A1), _rel_gap(eps - A2, eps, A2),
                    ])
                    gaps.extend(_rel_gap(aa / cc - eps, aa / cc, eps) for aa, cc in zip(h_a, h_c))
                h1_e, w1_e = _h1_set(eps, h_a, h_c)
                hs1_e = float(_SIGNS @ h1_e)
                es_e, wes_e = _es(eps, A1, A2, p1[i], p2[i])
                m_t = c[l] / nn ** 2 * hs1_e + es_e / nn
                n_t = c[l] / nn ** 2 * hs1_m + es_m / nn + hs2_m / (nn * q)
                front = scale * xi / J
                terms.append(front * (m_t - n_t))
                if masses is not None:
                    w = (abs(c[l] / nn ** 2) * (w1_e.sum() + w1_m.sum()) + (wes_e + wes_m) / abs(nn)
                         + w2_m / abs(nn * q))
                    masses.append(abs(front) * w)
    return terms


def i_b(p1, p2, sigma2):
    """Coupling term of the two-source capacity, in nats.

    Equals ``I_a1 + I_a2 - ln(2) * C`` where ``C`` is the two-source
    capacity. Requires at least three receive antennas, pairwise distinct
    powers within each column and ``p1[i] != p2[i]``; no jitter is applied.

    Raises
    ------
    ShapeError
        If the vectors differ in length or have fewer than three entries.
    DegeneracyError
        If a denominator of the closed form vanishes.
    """
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    p1 = _positive_vector(p1, "p1") / sigma2
    p2 = _positive_vector(p2, "p2") / sigma2
    if p1.size != p2.size:
        raise ShapeError("p1 and p2 must have the same length")
    if p1.size < 3:
        raise ShapeError("the exact two-source engine needs at least 3 receive antennas")
    return math.fsum(_i_b_terms(p1, p2))


def _evaluate(p1, p2):
    """Closed form on normalised powers.

    Returns ``(total, ia1, ia2, ib, kappa, err)`` in nats. ``kappa`` is the
    cancellation ratio: the magnitudes of all pieces, including those that
    cancel inside a term, over ``|total|``; ``err`` estimates the relative
    rounding error as ``u (kappa + 1/gap)`` with ``gap`` the smallest
    relative denominator difference met on the way.
    """
    gaps = [_column_gap(p1), _column_gap(p2)]
    masses = []
    ia1 = _i_a_terms(p1)
    ia2 = _i_a_terms(p2)
    ib = _i_b_terms(p1, p2, gaps, masses)
    total = math.fsum(ia1) + math.fsum(ia2) - math.fsum(ib)
    mass = math.fsum(abs(t) for t in ia1 + ia2) + math.fsum(masses)
    if not (math.isfinite(total) and math.isfinite(mass)):
        raise DegeneracyError("non-finite intermediate value")
    kappa = mass / abs(total) if total != 0 else math.inf
    err = UNIT_ERROR * (kappa + 1.0 / max(min(gaps), 1e-300))
    return total, math.fsum(ia1), math.fsum(ia2), math.fsum(ib), kappa, err


def jitter_weights(n_rows, n_cols=2):
    """Deterministic perturbation directions ``1 + frac(sqrt(prime_j))``.

    Entry ``(i, k)`` uses the ``(i * n_cols + k)``-th prime. The fractional
    parts of square roots of distinct primes are linearly independent over the
    rationals, so no perturbed powers coincide and no structured
    cancellation can survive.
    """
    count = n_rows * n_cols
    primes = []
    cand = 2
    while len(primes) < count:
        if all(cand % p for p in primes if p * p <= cand):
            primes.append(cand)
        cand += 1
    w = np.array([1.0 + math.sqrt(p) % 1.0 for p in primes])
    return w.reshape(n_rows, n_cols)


def _prepare(p, sigma2):
    if not (isinstance(sigma2, (int, float, np.floating)) and sigma2 > 0 and math.isfinite(sigma2)):
        raise DomainError("sigma2 must be a positive finite number")
    P = np.array(p, dtype=float)
    if P.ndim != 2 or P.shape[1] != 2:
        raise ShapeError(f"exact engine needs an n_R x 2 power matrix, got shape {P.shape}")
    if P.shape[0] < 3:
        raise ShapeError("the exact two-source engine needs at least 3 receive antennas")
    if not np.all(np.isfinite(P)) or np.any(P < 0):
        raise DomainError("powers must be finite and non-negative")
    top = P.max()
    if top <= 0:
        raise DomainError("power matrix is identically zero")
    P = np.maximum(P, ZERO_POWER_FLOOR * top)
    return canonical_order(P / sigma2)


def canonical_order(P):
    """Row/column permutation of ``P`` that depends only on its multiset structure.

    Capacity is invariant under row and column permutations; evaluating on a
    canonical representative makes the computed value (including its rounding
    and the jitter pattern) exactly invariant too.
    """
    best = None
    for cols in ([0, 1], [1, 0]):
        Q = P[:, cols]
        Q = Q[np.lexsort(Q.T[::-1])]
        key = tuple(Q.ravel())
        if best is None or key < best[0]:
            best = (key, Q)
    return np.ascontiguousarray(best[1])


def _direct_or_jitter(P, delta, force_jitter):
    """``(total, ia1, ia2, ib, kappa, err, jittered)`` for normalised powers."""
    if not force_jitter:
        try:
            total, ia1, ia2, ib, kappa, err = _evaluate(P[:, 0], P[:, 1])
            if err <= MAX_REL_ERROR:
                return total, ia1, ia2, ib, kappa, err, False
        except (DegeneracyError, DomainError, ZeroDivisionError, OverflowError):
            pass
    P = _snap(P)
    best = None
    for delta0 in (delta / 4.0, delta, 4.0 * delta):
        est = _jitter_extrapolate(P, delta0)
        if best is None or est[-1] < best[-1]:
            best = est
        if est[-1] <= TARGET_REL_ERROR:
            break
    return (*best, True)


def _lift_extrapolate(P, mask, delta, force_jitter):
    """Raise the masked (tiny) powers by ``j * h`` and extrapolate back to ``j = 0``.

    The capacity is smooth in each power near zero, so the cubic through
    ``j = 1..4`` recovers the value at the true powers. ``h`` keeps the
    lifted entries within ``1 / LIFT_RATIO`` of the largest power, where the
    closed form is well conditioned.
    """
    h = LIFT_STEP * min(1.0, float(P.max()))
    h = max(h, LIFT_RATIO * float(P.max()))
    rows = []
    worst = 0.0
    kappa = 0.0
    jittered = False
    for j in _JITTER_NODES:
        total, ia1, ia2, ib, kap, err, jit = _direct_or_jitter(np.where(mask, P + j * h, P), delta, force_jitter)
        rows.append((total, ia1, ia2, ib))
        worst = max(worst, err)
        kappa = max(kappa, kap)
        jittered = jittered or jit
    rows = np.array(rows)
    w4 = _lagrange_at_zero(_JITTER_NODES)
    w3 = _lagrange_at_zero(_JITTER_NODES[:3])
    ext = [math.fsum(w * r for w, r in zip(w4, col)) for col in rows.T]
    ext3 = math.fsum(w * r for w, r in zip(w3, rows[:3, 0]))
    err = sum(abs(w) for w in w4) * worst + abs(ext[0] - ext3) / abs(ext[0])
    return (*ext, kappa, err, jittered)


def exact_capacity_details(p, sigma2, delta=JITTER_DELTA, force_jitter=False):
    """Two-source ergodic sum capacity with diagnostics.

    Parameters
    ----------
    p : (n_R, 2) array_like
        Average link powers, ``n_R >= 3``. Zero entries are floored at
        ``1e-12`` times the largest power.
    sigma2 : float
        Noise power.
    delta : float
        Base relative perturbation of the jitter path.
    force_jitter : bool
        Use the jitter path even for well-conditioned input.

    Returns
    -------
    ExactResult
        ``jittered`` is set when the value came from extrapolated perturbed
        evaluations, either of the whole matrix (degenerate powers) or of
        powers below ``LIFT_RATIO`` times the largest one.
    """
    P = _prepare(p, sigma2)
    tiny = P < LIFT_RATIO * P.max()
    if np.any(tiny):
        total, ia1, ia2, ib, kappa, err, jit = _lift_extrapolate(P, tiny, delta, force_jitter)
        jit = True
    else:
        total, ia1, ia2, ib, kappa, err, jit = _direct_or_jitter(P, delta, force_jitter)
    if not err <= MAX_JITTER_ERROR:
        raise DegeneracyError(f"closed form too ill-conditioned even after jitter (estimated error {err:.3g})")
    return ExactResult(total / LN2, (ia1, ia2), ib, jit, kappa)


def _snap(P, bits=JITTER_SNAP_BITS):
    """Round mantissas to ``bits`` bits.

    ``c * P / (c * sigma2)`` and ``P / sigma2`` differ in the last ulp; the
    amplified rounding noise of the jitter path would turn that into a
    visible difference. Snapping first maps both to the same grid point.
    """
    m, e = np.frexp(P)
    return np.ldexp(np.round(m * 2.0 ** bits) / 2.0 ** bits, e)


def _lagrange_at_zero(nodes):
    return [math.prod(-xm / (xj - xm) for xm in nodes if xm != xj) for xj in nodes]


def _jitter_extrapolate(P, delta0):
    """Evaluate at perturbations ``j * delta0`` (``j = 1..4``) and extrapolate to zero.

    Returns the extrapolated ``(total, ia1, ia2, ib)``, the worst cancellation
    ratio and an estimated relative error: the worst per-node rounding
    estimate amplified by the extrapolation weights, plus the gap to the
    three-node extrapolant as a truncation estimate.
    """
    W = jitter_weights(*P.shape)
    rows = []
    kappa = 0.0
    worst = 0.0
    for j in _JITTER_NODES:
        Q = P * (1.0 + W * (j * delta0))
        try:
            total, ia1, ia2, ib, kap, err = _evaluate(Q[:, 0], Q[:, 1])
        except (DegeneracyError, DomainError, ZeroDivisionError, OverflowError):
            return (math.nan,) * 5 + (math.inf,)
        rows.append((total, ia1, ia2, ib))
        kappa = max(kappa, kap)
        worst = max(worst, err)
    rows = np.array(rows)
    w4 = _lagrange_at_zero(_JITTER_NODES)
    w3 = _lagrange_at_zero(_JITTER_NODES[:3])
    ext = [math.fsum(w * r for w, r in zip(w4, col)) for col in rows.T]
    ext3 = math.fsum(w * r for w, r in zip(w3, rows[:3, 0]))
    scale = abs(ext[0])
    noise = sum(abs(w) for w in w4) * worst
    trunc = abs(ext[0] - ext3) / scale
    return (*ext, kappa, noise + trunc)


def exact_capacity_two_source(p, sigma2):
    """Ergodic sum capacity ``E{log2|I + H H^H / sigma2|}`` of a two-column power matrix.

    Parameters
    ----------
    p : (n_R, 2) array_like
        Average link powers ``P_ik = E|H_ik|^2`` with ``n_R >= 3``.
    sigma2 : float
        Noise power.

    Returns
    -------
    float
        Capacity in bits/s/Hz.

    Raises
    ------
    ShapeError
        Wrong number of columns or fewer than three rows.
    DegeneracyError
        The closed form could not be evaluated reliably.
    """
    return exact_capacity_details(p, sigma2).bits
