"""Small dense kernels: Hermitian log-determinant, Jacobi eigensolver, polynomial roots."""

import numpy as np

from .errors import DefinitenessError, ShapeError

HERMITIAN_RTOL = 1e-12


def _as_hermitian(m, name="matrix"):
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {a.shape}")
    a = a.astype(complex if np.iscomplexobj(a) else float)
    scale = np.max(np.abs(a)) if a.size else 0.0
    if a.size and np.max(np.abs(a - a.conj().T)) > HERMITIAN_RTOL * scale:
        raise ShapeError(f"{name} is not Hermitian within {HERMITIAN_RTOL:g} relative")
    return 0.5 * (a + a.conj().T)


def cholesky_lower(m):
    """Lower Cholesky factor of a Hermitian positive-definite matrix.

    Raises
    ------
    DefinitenessError
        If a pivot is not strictly positive; ``err.pivot`` names its index.
    """
    a = _as_hermitian(m)
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        d = a[j, j].real - np.sum(np.abs(L[j, :j]) ** 2)
        if not d > 0.0:
            raise DefinitenessError(f"matrix is not positive definite (pivot {j} = {d:.3g})", pivot=j)
        L[j, j] = np.sqrt(d)
        if j + 1 < n:
            L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j].conj()) / L[j, j]
    return L


def logdet_hpd(m):
    """Natural log of the determinant of a Hermitian positive-definite matrix.

    Computed as ``2 * sum(log(diag(L)))`` from a Cholesky factorisation, so it
    does not overflow for large well-scaled matrices.
    """
    L = cholesky_lower(m)
    return float(2.0 * np.sum(np.log(np.diag(L).real)))


def logdet_hpd_batch(m):
    """Vectorised :func:`logdet_hpd` over a stack of matrices ``(..., n, n)``.

    No symmetry check is made; the caller guarantees Hermitian input.
    """
    try:
        L = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise DefinitenessError(str(exc)) from exc
    return 2.0 * np.sum(np.log(np.diagonal(L, axis1=-2, axis2=-1).real), axis=-1)


def hermitian_eig(m, tol=1e-15, max_sweeps=100):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    m : (n, n) array_like
        Hermitian (real symmetric or complex) matrix.
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm falls below
        ``tol * ||m||_F``.

    Returns
    -------
    eigenvalues : (n,) ndarray
        Real eigenvalues in descending order.
    eigenvectors : (n, n) ndarray
        Unitary matrix whose columns are the matching eigenvectors, so that
        ``m = V @ diag(w) @ V^H``.
    """
    a = _as_hermitian(m).astype(complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    norm = np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = np.sqrt(max(norm ** 2 - np.sum(np.abs(np.diag(a)) ** 2), 0.0))
        if off <= tol * norm or n < 2:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = abs(a[p, q])
                if g <= 1e-300 or g <= 1e-18 * norm:
                    continue
                phase = a[p, q] / g
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * g)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # D = diag(1, conj(phase)) makes a[p, q] real; then a real rotation zeroes it
                u = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ u
                a[idx, :] = u.conj().T @ a[idx, :]
                v[:, idx] = v[:, idx] @ u
                a[p, q] = a[q, p] = 0.0
    w = np.diag(a).real.copy()
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    if not np.iscomplexobj(m) and np.allclose(v.imag, 0.0, atol=1e-14):
        v = v.real
    return w, v


def _horner(coeffs, z):
    """Value and derivative of sum(coeffs[l] * z**l) at z."""
    p = 0.0 * z
    dp = 0.0 * z
    for c in coeffs[::-1]:
        dp = dp * z + p
        p = p * z + c
    return p, dp


def _pair_conjugates(roots, tol):
    roots = np.array(roots, dtype=complex)
    out = roots.copy()
    used = np.zeros(len(roots), bool)
    for i, r in enumerate(roots):
        if used[i]:
            continue
        used[i] = True
        if abs(r.imag) <= tol * max(1.0, abs(r)):
            out[i] = r.real
            continue
        cand = [j for j in range(len(roots)) if not used[j]]
        if not cand:
            continue
        j = min(cand, key=lambda j: abs(roots[j] - r.conjugate()))
        used[j] = True
        mid = 0.5 * (r + roots[j].conjugate())
        out[i], out[j] = mid, mid.conjugate()
    return out


def poly_roots_neg(coeffs):
    """Negated roots of a real polynomial, ``p(t) = c_d * prod(t + w_l)``.

    Parameters
    ----------
    coeffs : sequence of float
        Ascending coefficients ``c_0 .. c_d``; ``c_d`` must be non-zero.

    Returns
    -------
    ndarray of complex, length d
        The values ``w_l = -root_l``. Complex values come in exact conjugate
        pairs. Roots are companion-matrix eigenvalues followed by one Newton
        polish step each.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or c.size < 2:
        raise ShapeError("polynomial must have degree >= 1")
    if c[-1] == 0.0:
        raise ShapeError("leading coefficient is zero (degree is ill-defined)")
    d = c.size - 1
    monic = c / c[-1]
    comp = np.zeros((d, d))
    comp[0, :] = -monic[-2::-1]
    if d > 1:
        comp[np.arange(1, d), np.arange(d - 1)] = 1.0
    roots = np.linalg.eigvals(comp).astype(complex)
    polished = []
    for r in roots:
        p, dp = _horner(monic, r)
        if dp != 0:
            cand = r - p / dp
            if abs(_horner(monic, cand)[0]) <= abs(p):
                r = cand
        polished.append(r)
    roots = _pair_conjugates(polished, 1e-12)
    return -roots


def poly_from_neg_roots(omegas, lead=1.0):
    """Ascending real coefficients of ``lead * prod(t + w)``."""
    coeffs = np.array([1.0 + 0j])
    for w in omegas:
        coeffs = np.concatenate([coeffs * w, [0]]) + np.concatenate([[0], coeffs])
    return lead * coeffs.real
