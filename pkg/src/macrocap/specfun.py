"""Exponential integral and the logarithmic integrals H1, H2, D1.

All ``e**b * E1(b)`` products go through :func:`exp_e1`, which never forms
``e**b`` for large arguments.

The ``pv=True`` variants of :func:`h1` and :func:`h2` extend the integrals to
arbitrary real parameters: ``ln|c t + a|`` replaces ``ln(c t + a)``, a pole at
``t = -b`` inside the range is taken as a Cauchy principal value (``h1``) or
Hadamard finite part (``h2``), and ``exp_e1_pv`` gives the matching
``PV int_0^inf e^-t / (t + x) dt`` for ``x < 0``. These regularisations are
linear, so they cancel exactly whenever the singular pieces sum to a regular
integrand.
"""

import cmath
import math

import numpy as np

from .errors import DomainError
from .quadrature import double_exponential

EULER_GAMMA = 0.57721566490153286060651209008240243
SERIES_RADIUS = 1.5
_CF_MAX_ITER = 20000

# Tight enough that H1/H2 can feed the heavily cancelling two-source sums.
LOG_INTEGRAL_TOL = 1e-14
_FAR = 720.0


def _check_e1_arg(z):
    if z == 0:
        raise DomainError("E1 is singular at z = 0")
    if z.imag == 0 and z.real < 0:
        raise DomainError(f"E1 argument {z} lies on the branch cut (-inf, 0]")


def _e1_series(z):
    # E1(z) = -gamma - log z - sum_{k>=1} (-z)^k / (k k!)
    term = 1.0 + 0j
    acc = 0.0 + 0j
    k = 1
    while True:
        term *= -z / k
        contrib = term / k
        acc += contrib
        if abs(contrib) <= 1e-17 * max(abs(acc), 1e-300) or k > 2000:
            break
        k += 1
    return -EULER_GAMMA - cmath.log(z) - acc


def _exp_e1_cf(z):
    """e^z E1(z) by the modified Lentz continued fraction 1/(z+1- 1/(z+3- 4/(z+5- ...)))."""
    tiny = 1e-300
    f = z + 1.0
    if f == 0:
        f = tiny
    C = f
    D = 0.0
    for k in range(1, _CF_MAX_ITER):
        a = -float(k * k)
        b = z + 2.0 * k + 1.0
        D = b + a * D
        if D == 0:
            D = tiny
        C = b + a / C
        if C == 0:
            C = tiny
        D = 1.0 / D
        delta = C * D
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return 1.0 / f


def _use_series(z):
    # left half-plane terms of the series add coherently, so no cancellation there
    r = abs(z)
    return r <= SERIES_RADIUS or (z.real < -SERIES_RADIUS and abs(z.imag) < 0.5 * -z.real and r <= 700.0)


def e1(z):
    """Principal-branch exponential integral ``E1(z) = int_z^inf e^-t / t dt``.

    Real input returns a float; complex input a complex. Power series near
    the origin and close to the negative axis, continued fraction elsewhere.

    Raises
    ------
    DomainError
        If ``z == 0`` or ``z`` lies on the negative real axis.
    """
    is_real = not isinstance(z, complex) and not np.iscomplexobj(z)
    zc = complex(z)
    _check_e1_arg(zc)
    if _use_series(zc):
        val = _e1_series(zc)
    else:
        val = cmath.exp(-zc) * _exp_e1_cf(zc)
    return val.real if is_real else val


def exp_e1(z):
    """``e**z * E1(z)`` evaluated without overflow (finite for real z up to 1e300)."""
    is_real = not isinstance(z, complex) and not np.iscomplexobj(z)
    zc = complex(z)
    _check_e1_arg(zc)
    if _use_series(zc):
        val = cmath.exp(zc) * _e1_series(zc)
    else:
        val = _exp_e1_cf(zc)
    return val.real if is_real else val


def _exp_neg_ei(y):
    """``e**-y * Ei(y)`` for real ``y > 0``."""
    if y <= 40.0:
        term = 1.0
        acc = 0.0
        k = 1
        while True:
            term *= y / k
            acc += term / k
            if term / k <= 1e-17 * acc:
                break
            k += 1
        return math.exp(-y) * (EULER_GAMMA + math.log(y) + acc)
    # asymptotic series, truncated at its smallest term
    term = 1.0
    acc = 1.0
    k = 1
    while True:
        nxt = term * k / y
        if nxt >= term or nxt < 1e-17:
            break
        term = nxt
        acc += term
        k += 1
    return acc / y


def exp_e1_pv(x):
    """``PV int_0^inf e^-t / (t + x) dt`` for real ``x != 0``.

    Equals :func:`exp_e1` for ``x > 0`` and ``-e**x Ei(-x)`` (the real part of
    ``e**x E1(x +- i0)``) for ``x < 0``.
    """
    x = float(x)
    if x > 0:
        return exp_e1(x)
    if x == 0:
        raise DomainError("principal value diverges at x = 0")
    return -_exp_neg_ei(-x)


def log_kernel_integral(x, b, pv=False, tol=LOG_INTEGRAL_TOL):
    """``G(x, b) = int_0^inf e^-t ln(t + x) / (t + b) dt``, equal to ``e**b D1(x - b, b)``.

    ``x`` may be an array; all entries share the pole and one quadrature
    pass. With ``pv=True`` the log is ``ln|t + x|`` and a pole at
    ``t = -b > 0`` is taken as a principal value: the constant
    ``ln|x - b|`` is subtracted so the integrand is smooth through the pole
    and its contribution is added back through :func:`exp_e1_pv`.
    """
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    b = float(b)
    if not pv:
        if not b > 0:
            raise DomainError(f"log_kernel_integral needs b > 0, got {b}")
        if not np.all(xs > 0):
            raise DomainError("logarithm argument t + x must be positive on [0, inf)")
    elif b == 0:
        raise DomainError("pole at t = 0 is not integrable")
    if not (np.all(np.isfinite(xs)) and math.isfinite(b)):
        raise DomainError("log_kernel_integral needs finite arguments")

    # singular points beyond the e^-t underflow range cannot matter
    points = [p for p in (-xs).tolist() + [-b] if 0.0 < p < _FAR]
    xc = xs[:, None]
    if b > 0:
        def f(t):
            with np.errstate(divide="ignore", invalid="ignore"):
                v = np.exp(-t) * np.log(np.abs(t + xc)) / (t + b)
            return np.where(np.isfinite(v), v, 0.0)

        val, _ = double_exponential(f, 0.0, math.inf, points, tol=tol)
    else:
        gap = xs - b
        if np.any(np.abs(gap) <= 1e-14 * max(1.0, abs(b))):
            raise DomainError("log zero coincides with the principal-value pole")
        gc = gap[:, None]

        def g(t):
            # ln|t + x| - ln|x - b| = ln|1 + v| with v = (t + b)/(x - b): smooth through the pole
            v = (t + b) / gc
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(np.abs(v) < 1e-8, 1.0 - 0.5 * v, np.log(np.abs(1.0 + v)) / v)
                out = np.exp(-t) * ratio / gc
            return np.where(np.isfinite(out), out, 0.0)

        val, _ = double_exponential(g, 0.0, math.inf, points, tol=tol)
        val = val + np.log(np.abs(gap)) * exp_e1_pv(b)
    return float(val[0]) if scalar else val


def d1(a, b):
    """``D1(a, b) = int_b^inf e^-t ln(t + a) / t dt`` for ``b > 0`` and ``a > -b``.

    Evaluated as ``e**-b * G(a + b, b)`` so the result stays accurate when
    ``e**-b`` underflows the bare integrand.
    """
    if not b > 0:
        raise DomainError(f"D1 requires b > 0, got {b}")
    if not a > -b:
        raise DomainError(f"D1 requires a > -b (log argument positive), got a={a}, b={b}")
    return math.exp(-b) * log_kernel_integral(a + b, b)


def h1(a, b, c, pv=False):
    """``H1(a, b, c) = int_0^inf e^-t ln(c t + a) / (t + b) dt``.

    Closed form ``e**b [E1(b) ln c + D1(a/c - b, b)]``. Without ``pv`` the
    parameters must satisfy ``b > 0``, ``c > 0``, ``a / c > 0``.
    """
    if not pv:
        if not (b > 0 and c > 0 and a / c > 0):
            raise DomainError(f"h1 needs b > 0, c > 0, a/c > 0; got a={a}, b={b}, c={c}")
        return exp_e1(b) * math.log(c) + log_kernel_integral(a / c, b)
    if c == 0 or b == 0:
        raise DomainError("h1 principal value needs b != 0 and c != 0")
    return exp_e1_pv(b) * math.log(abs(c)) + log_kernel_integral(a / c, b, pv=True)


def _en_series(n, x):
    """Real part of ``E_n(x)`` from its power series (``x != 0`` real, ``|x|`` moderate)."""
    nm1 = n - 1
    acc = 1.0 / nm1 if nm1 else -math.log(abs(x)) - EULER_GAMMA
    fact = 1.0
    i = 1
    while True:
        fact *= -x / i
        if i != nm1:
            term = -fact / (i - nm1)
        else:
            psi = -EULER_GAMMA + math.fsum(1.0 / j for j in range(1, nm1 + 1))
            term = fact * (-math.log(abs(x)) + psi)
        acc += term
        if (abs(term) <= 1e-17 * abs(acc) and i > nm1) or i > 5000:
            return acc
        i += 1


def _exp_en_cf(n, x):
    """``e**x E_n(x)`` for ``x > 1`` by the modified Lentz continued fraction."""
    tiny = 1e-300
    b = x + n
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAX_ITER):
        an = -i * (n - 1 + i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h


def exp_e1_moments(b, nmax, pv=False):
    """``U_n(b) = int_0^inf e^-t (t + b)**-n dt`` for ``n = 1 .. nmax``.

    ``U_1`` is ``exp_e1(b)``. For ``b < 0`` (``pv=True``) the integrals are
    Hadamard finite parts, the real parts of the continuation of
    ``b**(1-n) e**b E_n(b)``. Each order is computed on its own (continued
    fraction, power series or asymptotic series), so no recurrence error
    builds up; the three-term recurrence ``n U_{n+1} = b**-n - U_n`` is
    unstable in both directions for ``|b|`` of order ``nmax``.
    """
    b = float(b)
    if b == 0 or (b < 0 and not pv):
        raise DomainError(f"moments need b > 0 (or pv=True with b != 0), got {b}")
    out = np.empty(nmax)
    for n in range(1, nmax + 1):
        if b > 1.0:
            v = _exp_en_cf(n, b)
        elif b >= -600.0:
            v = math.exp(b) * _en_series(n, b)
        else:
            # asymptotic b**-n sum_j (-1)^j (n)_j / b**j, truncated at its smallest term
            term, acc, j = 1.0, 1.0, 0
            while True:
                nxt = -term * (n + j) / b
                if abs(nxt) >= abs(term) or abs(nxt) < 1e-17 * abs(acc):
                    break
                acc += nxt
                term = nxt
                j += 1
            v = acc / b
        out[n - 1] = v * b ** (1 - n)
    return out


_DD_TAYLOR = 1e-2
_DD_TERMS = 12


def exp_e1_divided_difference(x, b, pv=False):
    """``[f(b) - f(x)] / (x - b)`` with ``f = exp_e1`` (``exp_e1_pv`` if ``pv``).

    Equals ``int_0^inf e^-t / ((t + x)(t + b)) dt``. Near ``x == b`` the
    quotient is summed as ``sum_k (b - x)**k U_{k+2}(b)``, which avoids the
    cancellation of the direct formula.
    """
    f = exp_e1_pv if pv else exp_e1
    gap = x - b
    if abs(gap) < _DD_TAYLOR * abs(b):
        u = exp_e1_moments(b, _DD_TERMS + 1, pv=pv)[1:]
        return math.fsum(u[k] * (-gap) ** k for k in range(_DD_TERMS))
    return (f(b) - f(x)) / gap


def _h2_from_h1(a, b, c, h1_val, pv, with_mass=False):
    x = a / c
    lead = math.log(abs(a)) / b
    diff = exp_e1_divided_difference(x, b, pv)
    val = lead - h1_val + diff
    if with_mass:
        return val, abs(lead) + abs(h1_val) + abs(diff)
    return val


def h2(a, b, c, pv=False, h1_value=None):
    """``H2(a, b, c) = int_0^inf e^-t ln(c t + a) / (t + b)**2 dt``.

    Integration by parts gives
    ``ln(a)/b - H1(a, b, c) + [e**b E1(b) - e**x E1(x)] / (x - b)`` with
    ``x = a / c``; the difference quotient comes from
    :func:`exp_e1_divided_difference`. ``h1_value`` lets callers reuse an H1
    already computed for the same arguments.
    """
    if not pv:
        if not (b > 0 and c > 0 and a / c > 0):
            raise DomainError(f"h2 needs b > 0, c > 0, a/c > 0; got a={a}, b={b}, c={c}")
    elif c == 0 or b == 0 or a == 0:
        raise DomainError("h2 finite part needs a, b, c non-zero")
    if h1_value is None:
        h1_value = h1(a, b, c, pv=pv)
    return _h2_from_h1(a, b, c, h1_value, pv)
