import numpy as np
import pytest

from macrocap.channel import (
    SCENARIO_ALPHAS,
    CorrelationSpec,
    DropGeometry,
    PowerMatrix,
    ScenarioSpec,
    _drop_streams,
    _gains,
    _uniform_disc,
    apply_correlation,
    calibrate_transmit_power,
    exponential_profile,
    noise_power,
    random_drop,
    scenario_table1,
)
from macrocap.errors import DefinitenessError, DomainError, ModelError, ShapeError
from macrocap.montecarlo import mc_capacity


def test_power_matrix_validation():
    pm = PowerMatrix([[1.0, 2.0], [0.0, 3.0]])
    assert (pm.n_r, pm.n_t, pm.total_power) == (2, 2, 6.0)
    assert np.array_equal(np.asarray(pm), [[1.0, 2.0], [0.0, 3.0]])
    with pytest.raises(ValueError):
        pm.P[0, 0] = 5.0
    with pytest.raises(DomainError):
        PowerMatrix([[1.0, -1.0]])
    with pytest.raises(DomainError):
        PowerMatrix([[0.0, 0.0]])
    with pytest.raises(DomainError):
        PowerMatrix([[np.nan]])
    assert PowerMatrix([1.0, 2.0]).P.shape == (2, 1)
    with pytest.raises(ShapeError):
        PowerMatrix(np.ones((2, 2, 2)))


def test_exponential_profile_shape_and_traces():
    pm = exponential_profile([0.5, 2.0], [3.0, 1.0], 4)
    P = pm.P
    assert P.shape == (4, 2)
    assert np.allclose(P.sum(axis=0), [3.0, 1.0], rtol=1e-15)
    assert np.allclose(P[1:, 0] / P[:-1, 0], 0.5)
    assert np.allclose(P[1:, 1] / P[:-1, 1], 2.0)


def test_exponential_profile_alpha_one_is_flat():
    assert np.allclose(exponential_profile([1.0], [3.0], 3).P, 1.0)


def test_exponential_profile_rejects_bad_input():
    with pytest.raises(DomainError):
        exponential_profile([0.0], [1.0], 3)
    with pytest.raises(DomainError):
        exponential_profile([1.0], [-1.0], 3)


@pytest.mark.parametrize("sid", sorted(SCENARIO_ALPHAS))
def test_table_scenarios(sid):
    pm, s2 = scenario_table1(sid, 10.0)
    a1, a2, ratio = SCENARIO_ALPHAS[sid]
    P = pm.P
    assert P.shape == (3, 2)
    assert P.sum() == pytest.approx(1.0, rel=1e-15)
    assert P[:, 0].sum() / P[:, 1].sum() == pytest.approx(ratio, rel=1e-14)
    assert P[1, 0] / P[0, 0] == pytest.approx(a1)
    assert P[1, 1] / P[0, 1] == pytest.approx(a2)
    assert s2 == pytest.approx(0.1, rel=1e-15)


def test_table_unknown_id():
    with pytest.raises(KeyError):
        scenario_table1("S9", 0.0)


def test_noise_power_definition():
    assert noise_power([[2.0, 2.0]], 3.0) == pytest.approx(4.0 / 10 ** 0.3)


def test_correlation_identity_is_noop():
    P = np.array([[1.0, 1.0, 2.0], [1.0, 1.0, 2.0]])
    corr = CorrelationSpec(receive=(np.eye(2),), transmit=(np.eye(2), np.eye(1)))
    assert np.allclose(apply_correlation(P, corr).P, P)


def test_correlation_eigenvalue_scaling():
    rho = 0.6
    R = np.array([[1.0, rho], [rho, 1.0]])
    corr = CorrelationSpec(receive=(R,), transmit=(np.eye(1),))
    out = apply_correlation(np.full((2, 1), 2.0), corr).P
    assert np.allclose(out[:, 0], [2 * (1 + rho), 2 * (1 - rho)])


def test_correlation_capacity_equivalence():
    # Monte Carlo capacity of the correlated channel equals that of the equivalent powers
    rng = np.random.default_rng(5)
    R = np.array([[1.0, 0.7j], [-0.7j, 1.0]])
    P = np.full((2, 2), 1.5)
    corr = CorrelationSpec(receive=(R,), transmit=(np.eye(1), np.eye(1)))
    eq = apply_correlation(P, corr).P
    w, v = np.linalg.eigh(R)
    root = v @ np.diag(np.sqrt(w)) @ v.conj().T
    n = 200_000
    Hw = (rng.standard_normal((n, 2, 2)) + 1j * rng.standard_normal((n, 2, 2))) * np.sqrt(0.75)
    H = root @ Hw
    G = np.eye(2) + H @ np.conj(np.swapaxes(H, 1, 2))
    c = np.log2(np.real(np.linalg.det(G)))
    ref = mc_capacity(eq, 1.0, n, seed=3)
    se = np.hypot(c.std(ddof=1) / np.sqrt(n), ref.stderr)
    assert abs(c.mean() - ref.mean) <= 3 * se


def test_correlation_validation():
    with pytest.raises(DomainError):
        CorrelationSpec(receive=(np.array([[2.0, 0], [0, 1.0]]),), transmit=(np.eye(1),))
    with pytest.raises(DefinitenessError):
        CorrelationSpec(receive=(np.array([[1.0, 2.0], [2.0, 1.0]]),), transmit=(np.eye(1),))
    corr = CorrelationSpec(receive=(np.eye(2),), transmit=(np.eye(1),))
    with pytest.raises(ShapeError):
        apply_correlation(np.ones((3, 1)), corr)
    with pytest.raises(ModelError):
        apply_correlation(np.array([[1.0], [2.0]]), corr)


def test_drop_single_bs_no_shadowing_is_pathloss():
    spec = ScenarioSpec(kind="random-drop", n_bs=1, n_users=1, shadowing_db=0.0, seed=4)
    P = random_drop(spec).P
    drop_rng, calib_rng = _drop_streams(4)
    T = calibrate_transmit_power(spec, calib_rng)
    user = _uniform_disc(drop_rng, 1, spec.geometry.cell_radius)
    d = max(np.linalg.norm(user[0]), spec.geometry.min_distance)
    assert P[0, 0] == pytest.approx(T * d ** -3.5, rel=1e-14)


def test_drop_deterministic_and_block_structured():
    spec = ScenarioSpec(kind="random-drop", n_bs=3, antennas_per_bs=2, n_users=2, antennas_per_user=2, seed=9)
    a, b = random_drop(spec), random_drop(spec)
    assert a == b
    P = a.P
    assert P.shape == (6, 4)
    assert np.all(P[0::2] == P[1::2])
    assert np.all(P[:, 0::2] == P[:, 1::2])
    assert random_drop(spec, seed=10) != a


def test_drop_calibration_meets_coverage_target():
    spec = ScenarioSpec(kind="random-drop", seed=2)
    _, calib = _drop_streams(2)
    T = calibrate_transmit_power(spec, calib)
    # fresh positions and shadowing, independent of the calibration draws
    rng = np.random.default_rng(77)
    users = _uniform_disc(rng, 10_000, spec.geometry.cell_radius)
    g, _ = _gains(users, spec.geometry.bs_positions(spec.n_bs), spec, rng)
    snr_db = 10 * np.log10(T * g.max(axis=1))
    assert np.quantile(snr_db, 0.05) == pytest.approx(3.0, abs=0.2)


def test_drop_geometry_validation():
    with pytest.raises(DomainError):
        DropGeometry(cell_radius=0.0)
    with pytest.raises(DomainError):
        random_drop(ScenarioSpec(kind="random-drop", coverage=1.5))


def test_scenario_spec_kinds():
    assert ScenarioSpec(kind="explicit", powers=((1.0, 2.0),)).power_matrix().P.shape == (1, 2)
    assert ScenarioSpec(kind="exponential", alphas=(0.5,), traces=(1.0,), n_r=3).power_matrix().n_r == 3
    assert ScenarioSpec(kind="table", table_id="S3").power_matrix() == scenario_table1("S3", 0)[0]
    with pytest.raises(DomainError):
        ScenarioSpec(kind="nope").power_matrix()
