"""Power matrices from scenario descriptions.

A power matrix ``P`` (``n_R x N``) holds the average link powers
``P_ik = E|H_ik|^2`` between receive antenna ``i`` and transmit antenna ``k``.
It is the only channel statistic the capacity engines consume.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DefinitenessError, DomainError, ModelError, ShapeError
from .linalg import _as_hermitian, hermitian_eig

SCENARIO_ALPHAS = {
    "S1": (0.1, 0.1, 1.0),
    "S2": (0.1, 1.0, 1.0),
    "S3": (0.1, 10.0, 1.0),
    "S4": (1.0, 1.0, 1.0),
    "S5": (0.1, 0.1, 10.0),
    "S6": (0.1, 1.0, 10.0),
    "S7": (0.1, 10.0, 10.0),
    "S8": (1.0, 0.1, 10.0),
}
TABLE_RECEIVE_ANTENNAS = 3


class PowerMatrix:
    """Validated ``n_R x N`` matrix of non-negative average link powers.

    Behaves as an array through ``np.asarray``; the stored data is read-only.
    """

    def __init__(self, p):
        a = np.array(p, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2 or 0 in a.shape:
            raise ShapeError(f"power matrix must be a non-empty 2-D array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DomainError("power matrix entries must be finite")
        if np.any(a < 0):
            raise DomainError("power matrix entries must be non-negative")
        if not np.any(a > 0):
            raise DomainError("power matrix needs at least one positive entry")
        a.setflags(write=False)
        self._p = a

    @property
    def P(self) -> np.ndarray:
        return self._p

    @property
    def n_r(self) -> int:
        return self._p.shape[0]

    @property
    def n_t(self) -> int:
        return self._p.shape[1]

    @property
    def total_power(self) -> float:
        return float(self._p.sum())

    def __array__(self, dtype=None, copy=None):
        return self._p if dtype is None else self._p.astype(dtype)

    def __repr__(self):
        return f"PowerMatrix({self._p.tolist()!r})"

    def __eq__(self, other):
        return isinstance(other, PowerMatrix) and np.array_equal(self._p, other._p)

    __hash__ = None


def exponential_profile(alphas, traces, n_r):
    """Geometric power spread across receive sites, one decay factor per user.

    Column ``k`` is ``K_k * alpha_k**i`` for ``i = 0..n_r-1`` with ``K_k``
    chosen so the column sums to ``traces[k]``.

    Examples
    --------
    >>> exponential_profile([1.0], [1.0], 3).P.ravel()
    array([0.33333333, 0.33333333, 0.33333333])
    """
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    traces = np.atleast_1d(np.asarray(traces, dtype=float))
    if alphas.shape != traces.shape or alphas.ndim != 1:
        raise ShapeError("alphas and traces must be 1-D and of equal length")
    if n_r < 1:
        raise DomainError("n_r must be at least 1")
    if np.any(~(alphas > 0)) or np.any(~np.isfinite(alphas)):
        raise DomainError("decay factors must be positive and finite")
    if np.any(~(traces > 0)) or np.any(~np.isfinite(traces)):
        raise DomainError("traces must be positive and finite")
    i = np.arange(n_r)[:, None]
    shape = alphas[None, :] ** i
    return PowerMatrix(shape * (traces / shape.sum(axis=0)))


def scenario_table1(scenario_id, rho_db):
    """Power matrix and noise power of a named two-user scenario.

    Three receive sites, two single-antenna users, exponential profiles and
    total power ``Tr(P_1) + Tr(P_2) = 1`` split in the ratio ``varsigma``.
    The noise power is ``1 / rho`` with ``rho = 10**(rho_db / 10)``.

    Returns
    -------
    PowerMatrix, float
    """
    key = str(scenario_id).upper()
    if key not in SCENARIO_ALPHAS:
        raise KeyError(f"unknown scenario {scenario_id!r}; expected one of {sorted(SCENARIO_ALPHAS)}")
    a1, a2, sir = SCENARIO_ALPHAS[key]
    traces = [sir / (1.0 + sir), 1.0 / (1.0 + sir)]
    pm = exponential_profile([a1, a2], traces, TABLE_RECEIVE_ANTENNAS)
    return pm, noise_power(pm, rho_db)


def noise_power(p, rho_db):
    """Noise power giving average SNR ``rho = P_T / sigma2`` where ``P_T = sum(P)``."""
    total = float(np.sum(np.asarray(p)))
    return total / 10.0 ** (float(rho_db) / 10.0)


@dataclass(frozen=True)
class CorrelationSpec:
    """Block-diagonal receive and transmit correlation.

    ``receive`` holds one unit-diagonal Hermitian PSD block per base station,
    ``transmit`` one per user. Block sizes must partition ``n_R`` and ``N``.
    """

    receive: tuple
    transmit: tuple

    def __post_init__(self):
        rx = tuple(_check_corr_block(b, f"receive[{j}]") for j, b in enumerate(self.receive))
        tx = tuple(_check_corr_block(b, f"transmit[{j}]") for j, b in enumerate(self.transmit))
        object.__setattr__(self, "receive", rx)
        object.__setattr__(self, "transmit", tx)


def _check_corr_block(block, name):
    a = _as_hermitian(block, name)
    if not np.allclose(np.diag(a).real, 1.0, atol=1e-10):
        raise DomainError(f"{name} must have unit diagonal")
    w, v = hermitian_eig(a)
    if w[-1] < -1e-10 * max(1.0, w[0]):
        raise DefinitenessError(f"{name} is not positive semidefinite (eigenvalue {w[-1]:.3g})")
    a.setflags(write=False)
    return a


def _block_eigs(blocks, total, what):
    sizes = [b.shape[0] for b in blocks]
    if sum(sizes) != total:
        raise ShapeError(f"{what} block sizes {sizes} do not partition dimension {total}")
    lams = [np.clip(hermitian_eig(b)[0], 0.0, None) for b in blocks]
    edges = np.cumsum([0] + sizes)
    return np.concatenate(lams), edges


def apply_correlation(p, corr):
    """Equivalent uncorrelated power matrix under block correlation.

    With ``H_ik = R_ri^{1/2} H_w R_tk^{1/2}`` and constant power inside each
    (base station, user) block, the capacity equals that of an uncorrelated
    channel whose entry ``(u, v)`` has power ``lambda_r(u) lambda_t(v) P_uv``.
    Eigenvalues are taken in descending order within each block.

    Raises
    ------
    ModelError
        If the power is not constant inside a block.
    """
    P = np.asarray(p, dtype=float)
    lr, redges = _block_eigs(corr.receive, P.shape[0], "receive")
    lt, tedges = _block_eigs(corr.transmit, P.shape[1], "transmit")
    for i0, i1 in zip(redges[:-1], redges[1:]):
        for k0, k1 in zip(tedges[:-1], tedges[1:]):
            blk = P[i0:i1, k0:k1]
            if np.ptp(blk) > 1e-12 * max(np.max(blk), 1e-300):
                raise ModelError(f"power is not constant in block rows {i0}:{i1}, cols {k0}:{k1}")
    return PowerMatrix(lr[:, None] * lt[None, :] * P)


@dataclass(frozen=True)
class DropGeometry:
    """Cluster layout in units of the coverage radius."""

    cell_radius: float = 1.0
    bs_radius: float = 0.6
    min_distance: float = 0.05

    def __post_init__(self):
        if not (self.cell_radius > 0 and self.bs_radius >= 0 and self.min_distance > 0):
            raise DomainError("geometry lengths must be positive")

    def bs_positions(self, n_bs):
        if n_bs == 1:
            return np.zeros((1, 2))
        ang = 2.0 * np.pi * np.arange(n_bs) / n_bs
        return self.bs_radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)


@dataclass(frozen=True)
class ScenarioSpec:
    """Declarative source of a power matrix plus an SNR grid.

    ``kind`` is ``"explicit"`` (``powers``), ``"exponential"`` (``alphas``,
    ``traces``, ``n_r``), ``"table"`` (``table_id``) or ``"random-drop"``
    (the remaining fields).
    """

    kind: str
    rho_db: tuple = (0.0,)
    powers: Optional[tuple] = None
    alphas: Optional[tuple] = None
    traces: Optional[tuple] = None
    n_r: Optional[int] = None
    table_id: Optional[str] = None
    n_bs: int = 3
    antennas_per_bs: int = 1
    n_users: int = 2
    antennas_per_user: int = 1
    shadowing_db: float = 8.0
    pathloss_exp: float = 3.5
    target_snr_db: float = 3.0
    coverage: float = 0.95
    calibration_samples: int = 10_000
    seed: int = 0
    geometry: DropGeometry = field(default_factory=DropGeometry)

    def power_matrix(self) -> PowerMatrix:
        if self.kind == "explicit":
            return PowerMatrix(self.powers)
        if self.kind == "exponential":
            return exponential_profile(self.alphas, self.traces, self.n_r)
        if self.kind == "table":
            return scenario_table1(self.table_id, 0.0)[0]
        if self.kind == "random-drop":
            return random_drop(self, self.seed)
        raise DomainError(f"unknown scenario kind {self.kind!r}")


def _drop_streams(seed):
    ss = np.random.SeedSequence(int(seed) & (2 ** 64 - 1))
    drop, calib = ss.spawn(2)
    return np.random.default_rng(drop), np.random.default_rng(calib)


def _uniform_disc(rng, n, radius):
    r = radius * np.sqrt(rng.random(n))
    th = 2.0 * np.pi * rng.random(n)
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)


def _gains(users, bs, spec, rng):
    """Per (user, BS) gain d^-gamma * 10^(X/10); ``users`` has shape (n, 2)."""
    d = np.linalg.norm(users[:, None, :] - bs[None, :, :], axis=-1)
    d = np.maximum(d, spec.geometry.min_distance)
    x = spec.shadowing_db * rng.standard_normal(d.shape)
    return d ** (-spec.pathloss_exp) * 10.0 ** (x / 10.0), d


def calibrate_transmit_power(spec, rng):
    """Transmit power so the best-BS SNR exceeds the target with the given coverage.

    Noise power is 1. The SNR quantile is estimated over
    ``spec.calibration_samples`` independent user positions and shadowing draws.
    """
    bs = spec.geometry.bs_positions(spec.n_bs)
    users = _uniform_disc(rng, spec.calibration_samples, spec.geometry.cell_radius)
    g, _ = _gains(users, bs, spec, rng)
    q = np.quantile(g.max(axis=1), 1.0 - spec.coverage)
    return 10.0 ** (spec.target_snr_db / 10.0) / q


def random_drop(spec, seed=None):
    """One random placement of users with lognormal shadowing and path loss.

    Users are uniform in the coverage disc; base stations sit on a ring.
    Antennas of one base station (or one user) are co-located, so each
    (base station, user) block shares a single distance and shadowing value.
    Entry ``P_ik = T * d^-gamma * 10^(X/10)``, ``X ~ N(0, shadowing_db^2)``,
    with ``T`` from :func:`calibrate_transmit_power`.

    Deterministic in ``seed`` (``spec.seed`` if not given). The calibration
    uses its own stream derived from the same seed.
    """
    if spec.n_bs < 1 or spec.antennas_per_bs < 1 or spec.n_users < 1 or spec.antennas_per_user < 1:
        raise DomainError("antenna and node counts must be positive")
    if spec.shadowing_db < 0 or not spec.pathloss_exp > 0:
        raise DomainError("need shadowing_db >= 0 and pathloss_exp > 0")
    if not 0 < spec.coverage < 1:
        raise DomainError("coverage must lie in (0, 1)")
    seed = spec.seed if seed is None else seed
    drop_rng, calib_rng = _drop_streams(seed)
    T = calibrate_transmit_power(spec, calib_rng)
    bs = spec.geometry.bs_positions(spec.n_bs)
    users = _uniform_disc(drop_rng, spec.n_users, spec.geometry.cell_radius)
    g, _ = _gains(users, bs, spec, drop_rng)  # (users, bs)
    block = T * g.T  # (bs, users)
    P = np.repeat(np.repeat(block, spec.antennas_per_bs, axis=0), spec.antennas_per_user, axis=1)
    return PowerMatrix(P)


def drop_samples(spec, n_drops, seed):
    """Raw ``(distance, gain)`` samples of ``n_drops`` users, for diagnostics."""
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    bs = spec.geometry.bs_positions(spec.n_bs)
    users = _uniform_disc(rng, n_drops, spec.geometry.cell_radius)
    g, d = _gains(users, bs, spec, rng)
    return d, g
