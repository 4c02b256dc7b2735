"""Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals."""

import heapq
import math
from dataclasses import dataclass

import numpy as np

# Kronrod 15-point nodes / weights and the embedded Gauss 7-point weights.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_KW = np.concatenate([_WK[:-1], _WK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes (1, 3, 5, 7 from each side)
_GW = np.zeros(15)
_GW[[1, 3, 5]] = _WG[:3]
_GW[[13, 11, 9]] = _WG[:3]
_GW[7] = _WG[3]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for :func:`gauss_kronrod`."""

    epsabs: float = 1e-14
    epsrel: float = 1e-13
    limit: int = 400

    def __post_init__(self):
        if not (self.epsabs > 0 and self.epsrel > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.limit < 1:
            raise ValueError("limit must be >= 1")


_ROUNDOFF = 50.0 * np.finfo(float).eps


def _gk15(f, a, b):
    """Kronrod estimate and error on one interval.

    The error uses the usual rescaling of ``|K - G|`` by the interval's
    variation, and is zero once it drops below the rounding level of
    ``|f|`` (such intervals cannot be improved by bisection).
    """
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    y = np.asarray(f(c + h * _NODES), dtype=float)
    k = h * np.dot(_KW, y)
    g = h * np.dot(_GW, y)
    err = abs(k - g)
    resabs = h * np.dot(_KW, np.abs(y))
    resasc = h * np.dot(_KW, np.abs(y - k / (2.0 * h)))
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if err <= _ROUNDOFF * resabs:
        err = 0.0
    return k, err


def gauss_kronrod(f, a, b, spec=QuadratureSpec(), points=()):
    """Integrate a vectorised function over ``[a, b]``.

    Parameters
    ----------
    f : callable
        Maps an ndarray of abscissae to an ndarray of values.
    a, b : float
        Finite limits.
    spec : QuadratureSpec
        Absolute/relative tolerance and the subdivision limit.
    points : iterable of float
        Interior break points (singularities, kinks). Nodes never land on them.

    Returns
    -------
    value, error : float
        Integral estimate and the summed Kronrod-Gauss error estimate.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("gauss_kronrod integrates finite intervals only")
    if a == b:
        return 0.0, 0.0
    sgn = 1.0
    if b < a:
        a, b, sgn = b, a, -1.0
    edges = sorted({a, b, *(p for p in points if a < p < b)})
    heap = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = _gk15(f, lo, hi)
        heapq.heappush(heap, (-e, lo, hi, v))
    count = len(heap)
    while True:
        total = math.fsum(item[3] for item in heap)
        err = math.fsum(-item[0] for item in heap)
        if err <= max(spec.epsabs, spec.epsrel * abs(total)) or count >= spec.limit:
            break
        neg_e, lo, hi, _ = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:  # interval exhausted at double precision
            heapq.heappush(heap, (0.0, lo, hi, _))
            continue
        for l2, h2 in ((lo, mid), (mid, hi)):
            v, e = _gk15(f, l2, h2)
            heapq.heappush(heap, (-e, l2, h2, v))
        count += 1
    return sgn * total, err


# Double-exponential rules. Nodes cluster doubly-exponentially at the
# endpoints, so integrable endpoint singularities (logarithms, nearby poles)
# cost only a few extra nodes.
_TS_TMAX = 3.2
_ES_TMIN, _ES_TMAX = -4.2, 2.4
_DE_CACHE = {}


def _tanh_sinh_nodes(level):
    """Nodes on (-1, 1) as (x, distance to the nearer endpoint, weight) for step 2**-level."""
    key = ("ts", level)
    if key not in _DE_CACHE:
        h = 2.0 ** -level
        tau = np.arange(-_TS_TMAX, _TS_TMAX + h / 2, h)
        s = 0.5 * np.pi * np.sinh(tau)
        x = np.tanh(s)
        dist = 1.0 / (np.exp(np.abs(s)) * np.cosh(s))  # 1 - |x| without cancellation
        w = h * 0.5 * np.pi * np.cosh(tau) / np.cosh(s) ** 2
        _DE_CACHE[key] = (x, dist, w)
    return _DE_CACHE[key]


def _exp_sinh_nodes(level):
    key = ("es", level)
    if key not in _DE_CACHE:
        h = 2.0 ** -level
        tau = np.arange(_ES_TMIN, _ES_TMAX + h / 2, h)
        u = np.exp(0.5 * np.pi * np.sinh(tau))
        w = h * 0.5 * np.pi * np.cosh(tau) * u
        _DE_CACHE[key] = (u, w)
    return _DE_CACHE[key]


def _de_segment(f, a, b, level):
    if math.isinf(b):
        u, w = _exp_sinh_nodes(level)
        t = a + u
    else:
        x, dist, w = _tanh_sinh_nodes(level)
        half = 0.5 * (b - a)
        # place nodes relative to the nearer endpoint so they never round onto it
        t = np.where(x < 0, a + half * dist, b - half * dist)
        w = w * half
    # outermost nodes can round onto an endpoint; their weights are negligible
    keep = (t > a) & (t < b)
    if not np.all(keep):
        t, w = t[keep], w[keep]
    y = np.asarray(f(t), dtype=float)
    return y @ w


def double_exponential(f, a, b=math.inf, points=(), tol=1e-14, min_level=3, max_level=8):
    """Integrate ``f`` over ``[a, b]`` (``b`` may be ``inf``) by tanh-sinh / exp-sinh rules.

    Parameters
    ----------
    f : callable
        Maps an ndarray of abscissae ``t`` (shape ``(n,)``) to values of shape
        ``(n,)`` or ``(m, n)`` for ``m`` integrands sharing the same nodes.
    points : iterable of float
        Interior points where ``f`` is singular or kinked; the range is split
        there so every singularity sits at a segment endpoint.
    tol : float
        Relative tolerance on the change between successive step halvings,
        applied to the largest component.

    Returns
    -------
    value, error : ndarray or float
        Estimate at the finest level used and the last level-to-level change.
    """
    edges = sorted({a, *(p for p in points if a < p < b)})
    segments = list(zip(edges, edges[1:] + [b]))
    prev = None
    for level in range(min_level, max_level + 1):
        cur = sum(_de_segment(f, lo, hi, level) for lo, hi in segments)
        if prev is not None:
            err = np.max(np.abs(cur - prev))
            if err <= tol * max(np.max(np.abs(cur)), 1e-300):
                return cur, err
        prev = cur
    return cur, err
