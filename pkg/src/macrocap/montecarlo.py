"""Monte Carlo estimate of the ergodic sum capacity ``E log2|I + H H^H / sigma2|``.

Randomness is counter based: every uniform variate is a pure function of
``(seed, trial, row, column, slot)``. Blocks of trials can therefore be
simulated in any order, on any number of threads, and still give
bit-identical results.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .linalg import logdet_hpd_batch

BLOCK_TRIALS = 4096
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix64(z):
    """SplitMix64 finaliser on a uint64 array (wrapping arithmetic)."""
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class CounterStream:
    """Stateless uniform generator ``u = F(seed, counter)``.

    ``F`` is the SplitMix64 output function applied to
    ``key + (counter + 1) * golden``, where ``key`` is the finalised seed.
    Uniforms lie strictly inside ``(0, 1)`` with 53-bit resolution.
    """

    def __init__(self, seed):
        self.seed = int(seed) & _MASK64
        with np.errstate(over="ignore"):
            self._key = _mix64(np.array([self.seed], dtype=np.uint64))[0]

    def uniforms(self, counters):
        c = np.asarray(counters, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = _mix64(self._key + (c + np.uint64(1)) * _GOLDEN)
        return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53

    def normal_pairs(self, counters):
        """Two independent standard normals per counter pair (Box-Muller).

        ``counters`` indexes entries; uniforms ``2c`` and ``2c + 1`` feed the
        transform.
        """
        c = np.asarray(counters, dtype=np.uint64)
        u1 = self.uniforms(c * np.uint64(2))
        u2 = self.uniforms(c * np.uint64(2) + np.uint64(1))
        r = np.sqrt(-2.0 * np.log(u1))
        ang = 2.0 * np.pi * u2
        return r * np.cos(ang), r * np.sin(ang)


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo mean with its standard error (both bits/s/Hz)."""

    mean: float
    stderr: float
    trials: int
    seed: int


def _check_p(p):
    P = np.array(p, dtype=float)
    if P.ndim != 2 or 0 in P.shape:
        raise ShapeError(f"power matrix must be non-empty 2-D, got shape {P.shape}")
    if not np.all(np.isfinite(P)) or np.any(P < 0):
        raise DomainError("powers must be finite and non-negative")
    return P


def _sample_block(P, stream, start, count):
    """Channels for trials ``start .. start+count-1``, shape ``(count, n_R, N)``."""
    n_r, n_t = P.shape
    per_trial = n_r * n_t
    t = np.arange(start, start + count, dtype=np.uint64)[:, None]
    cells = np.arange(per_trial, dtype=np.uint64)[None, :]
    g1, g2 = stream.normal_pairs(t * np.uint64(per_trial) + cells)
    scale = np.sqrt(0.5 * P).ravel()
    return ((g1 + 1j * g2) * scale).reshape(count, n_r, n_t)


def sample_channel(p, stream, trial=0):
    """One channel realisation with independent ``CN(0, P_ik)`` entries.

    Entry ``(i, k)`` is ``sqrt(P_ik / 2) (g1 + j g2)`` with ``g1, g2`` standard
    normal. The result depends only on ``(stream.seed, trial)``.
    """
    P = _check_p(p)
    if not isinstance(stream, CounterStream):
        stream = CounterStream(stream)
    return _sample_block(P, stream, int(trial), 1)[0]


def _block_stats(P, sigma2, stream, start, count):
    H = _sample_block(P / sigma2, stream, start, count)
    n_r, n_t = P.shape
    Hh = np.conj(np.swapaxes(H, 1, 2))
    # the smaller Gram matrix has the same determinant
    G = Hh @ H if n_t <= n_r else H @ Hh
    G = G + np.eye(G.shape[-1])
    c = logdet_hpd_batch(G) / math.log(2.0)
    mean = float(np.mean(c))
    return count, mean, float(np.sum((c - mean) ** 2))


def default_workers():
    """Worker count: ``MACROCAP_THREADS`` if set, else the CPU count."""
    env = os.environ.get("MACROCAP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def mc_capacity(p, sigma2, trials=100_000, seed=0, workers=None, block=BLOCK_TRIALS):
    """Monte Carlo ergodic sum capacity.

    Parameters
    ----------
    p : (n_R, N) array_like
        Average link powers.
    sigma2 : float
        Noise power.
    trials : int
        Number of channel realisations, at least 2.
    seed : int
        64-bit seed of the counter-based stream.
    workers : int, optional
        Threads used for blocks of trials (default :func:`default_workers`).
        The estimate is bit-identical for any value.

    Returns
    -------
    McEstimate
    """
    P = _check_p(p)
    if not (sigma2 > 0 and math.isfinite(sigma2)):
        raise DomainError("sigma2 must be positive and finite")
    trials = int(trials)
    if trials < 2:
        raise DomainError("need at least 2 trials")
    stream = CounterStream(seed)
    starts = list(range(0, trials, block))
    jobs = [(s, min(block, trials - s)) for s in starts]
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(jobs) == 1:
        stats = [_block_stats(P, sigma2, stream, s, n) for s, n in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(lambda j: _block_stats(P, sigma2, stream, *j), jobs))
    # combine block moments in index order (parallel-variance update)
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in stats:
        tot = n + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    stderr = math.sqrt(m2 / (n - 1) / n)
    return McEstimate(mean=mean, stderr=stderr, trials=n, seed=stream.seed)
