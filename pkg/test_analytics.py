"""
Analytics tests: mixing matrix, exact covariance recursion, the eq8 closed
form, band construction and the ensemble comparison.
"""
import numpy as np
import pytest
from scipy import linalg

from beliefnet.acquisition.engine import engine as acquisition_engine
from beliefnet.acquisition.models import InitialBeliefs
from beliefnet.analytics.engine import (
    AnalyticsEngine,
    engine,
    eq8_gap,
    find_variance_increases,
    ordering_preserved,
)
from beliefnet.analytics.models import CovarianceState
from beliefnet.dynamics.engine import engine as dynamics_engine
from beliefnet.dynamics.ensemble import simulate_ensemble
from beliefnet.dynamics.models import SimConfig
from beliefnet.errors import DimensionMismatch, NumericalError, ProvenanceMismatch
from beliefnet.network.engine import engine as network_engine
from beliefnet.network.models import GraphSpec

SWAP = network_engine.validate_network([[0, 1], [1, 0]])
CYCLE3 = network_engine.validate_network([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
# agent 0 listens to 1; agents 1 and 2 listen to each other
WITNESS = network_engine.validate_network([[0, 1, 0], [0, 0, 1], [0, 1, 0]])
FIVE = network_engine.validate_network([
    [0, .5, .5, 0, 0],
    [.2, 0, .3, .5, 0],
    [0, 0, 0, .6, .4],
    [.25, .25, .25, 0, .25],
    [1, 0, 0, 0, 0],
])
FIVE_SIGMA2 = [0.02, 0.15, 0.05, 0.1, 0.009]


def _init(variances, theta=0.6, **kw):
    return InitialBeliefs(theta=theta, variances=list(variances), **kw)


# ============================================================================
# mixing_matrix
# ============================================================================

def test_mixing_matrix_example():
    M = engine.mixing_matrix([0.5, 0.25], SWAP)
    assert np.allclose(M, [[0.5, 0.5], [0.25, 0.75]])


def test_mixing_matrix_row_stochastic():
    rng = np.random.default_rng(1)
    for _ in range(20):
        alpha = rng.uniform(0.0, 1.0, 5)
        M = engine.mixing_matrix(alpha, FIVE)
        assert np.all(M >= 0.0)
        assert np.allclose(M.sum(axis=1), 1.0, atol=1e-12)


def test_mixing_matrix_rejects_bad_alpha():
    with pytest.raises(DimensionMismatch):
        engine.mixing_matrix([0.5], SWAP)
    with pytest.raises(ValueError):
        engine.mixing_matrix([0.5, 1.5], SWAP)


def test_identity_network_is_a_fixed_point():
    eye = network_engine.validate_network(np.eye(4), allow_self_loops=True)
    rng = np.random.default_rng(2)
    for _ in range(100):
        alpha = rng.uniform(0.0, 1.0, 4)
        pi = rng.uniform(0.0, 1.0, 4)
        M = engine.mixing_matrix(alpha, eye)
        assert np.allclose(M @ pi, pi, rtol=0.0, atol=1e-15)


def test_non_identity_network_moves_some_mean():
    for net in (SWAP, CYCLE3, FIVE):
        alpha = np.full(net.n, 0.5)
        M = engine.mixing_matrix(alpha, net)
        moved = [np.linalg.norm(M @ e - e) for e in np.eye(net.n)]
        assert max(moved) > 1e-6


# ============================================================================
# propagate_covariance / signal variances
# ============================================================================

def test_initial_covariance_is_zero():
    cov = CovarianceState.initial([0.1, 0.2])
    assert np.all(cov.P == 0.0)
    assert np.allclose(engine.signal_variance_exact(cov), [0.1, 0.2])


def test_two_agent_first_step():
    cov = CovarianceState.initial([0.1, 0.1])
    alpha = np.array([0.5, 0.5])
    nxt = engine.propagate_covariance(cov, SWAP, alpha)
    assert nxt.t == 1
    assert np.allclose(nxt.P, 0.025 * np.eye(2))
    assert np.allclose(nxt.sigma2, [0.05, 0.05])
    assert np.allclose(engine.signal_variance_exact(nxt), [0.075, 0.075])
    assert np.allclose(engine.signal_variance_eq8(cov, SWAP, alpha, nxt.sigma2), [0.075, 0.075])


def test_point_mass_stays_point_mass():
    traj = engine.analytic_moments(SWAP, _init([0.0, 0.0], allow_point_mass=True), horizon=4)
    assert np.all(traj.var_exact == 0.0)
    assert np.all(traj.band_lo == traj.band_hi)


def test_propagate_rejects_mismatched_state():
    with pytest.raises(DimensionMismatch):
        engine.propagate_covariance(CovarianceState.initial([0.1, 0.1, 0.1]), SWAP, [0.5, 0.5])


def test_check_covariance():
    with pytest.raises(NumericalError):
        engine.check_covariance(np.array([[-1.0, 0.0], [0.0, 1.0]]), t=3)
    with pytest.raises(NumericalError):
        engine.check_covariance(np.array([[np.nan, 0.0], [0.0, 1.0]]), t=3)
    engine.check_covariance(np.zeros((3, 3)), t=0)


def test_covariance_stays_psd():
    net = network_engine.generate(GraphSpec(kind="barabasi_albert", n=40, m=2, seed=9))
    init = acquisition_engine.sample_uniform_variances(40, theta=0.6, seed=9)
    schedule = dynamics_engine.variance_schedule(net, init.variances, 25)
    cov = CovarianceState.initial(init.variances)
    for t in range(schedule.stop):
        cov = engine.propagate_covariance(cov, net, schedule.alpha[t])
        assert np.allclose(cov.P, cov.P.T)
        assert linalg.eigvalsh(cov.P)[0] >= -1e-10
        assert np.all(cov.P >= -1e-15)
        assert np.allclose(cov.sigma2, schedule.sigma2[t + 1])


# ============================================================================
# analytic_moments
# ============================================================================

def test_eq8_matches_exact_after_one_step():
    traj = engine.analytic_moments(FIVE, _init(FIVE_SIGMA2), horizon=10)
    assert np.allclose(traj.var_eq8[:2], traj.var_exact[:2], rtol=1e-13, atol=0.0)


def test_eq8_never_exceeds_exact():
    traj = engine.analytic_moments(FIVE, _init(FIVE_SIGMA2), horizon=30)
    assert np.all(traj.var_eq8 <= traj.var_exact * (1.0 + 1e-12))
    assert eq8_gap(traj) > 0.0

    net = network_engine.generate(GraphSpec(kind="barabasi_albert", n=50, m=3, seed=4))
    init = acquisition_engine.sample_uniform_variances(50, theta=0.6, seed=4)
    traj = engine.analytic_moments(net, init, horizon=20)
    assert np.all(traj.var_eq8 <= traj.var_exact * (1.0 + 1e-12))


@pytest.mark.parametrize("net, sigma2", [
    (SWAP, [0.02, 0.1]),
    (CYCLE3, [0.03, 0.09, 0.15]),
])
def test_eq8_exact_with_single_neighbours(net, sigma2):
    traj = engine.analytic_moments(net, _init(sigma2), horizon=15)
    assert np.allclose(traj.var_eq8, traj.var_exact, rtol=1e-12, atol=0.0)
    assert eq8_gap(traj) < 1e-12


def test_mean_is_theta_everywhere():
    traj = engine.analytic_moments(FIVE, _init(FIVE_SIGMA2, theta=-1.25), horizon=12)
    assert traj.steps == 13 and traj.n == 5
    assert np.all(traj.mean == -1.25)
    assert np.all(traj.band_lo <= traj.mean) and np.all(traj.mean <= traj.band_hi)


def test_horizon_zero_band():
    traj = engine.analytic_moments(FIVE, _init(FIVE_SIGMA2), horizon=0)
    assert traj.var_exact.shape == (1, 5)
    assert np.allclose(traj.var_exact[0], FIVE_SIGMA2)
    assert np.allclose(traj.band_hi[0] - traj.band_lo[0], 6.0 * np.sqrt(FIVE_SIGMA2))


def test_band_source_eq8():
    eq8 = AnalyticsEngine(band_source="eq8").analytic_moments(FIVE, _init(FIVE_SIGMA2), horizon=8)
    half = 0.5 * (eq8.band_hi - eq8.band_lo)
    assert np.allclose(half, 3.0 * np.sqrt(eq8.var_eq8))
    with pytest.raises(ValueError):
        AnalyticsEngine(band_source="mc")


def test_analytic_moments_size_mismatch():
    with pytest.raises(DimensionMismatch):
        engine.analytic_moments(FIVE, _init([0.1, 0.1]), horizon=3)


def test_signal_variance_can_increase():
    traj = engine.analytic_moments(WITNESS, _init([0.001, 0.1, 0.1]), horizon=20)
    assert traj.var_exact[1, 0] == pytest.approx(0.00099990, rel=1e-4)
    assert traj.var_exact[2, 0] == pytest.approx(0.0010086, rel=1e-3)
    increases = find_variance_increases(traj)
    assert (0, 1) in increases
    assert (0, 0) not in increases


def test_complete_network_never_increases():
    net = network_engine.generate(GraphSpec(kind="complete", n=4))
    traj = engine.analytic_moments(net, _init([0.1] * 4), horizon=20)
    assert find_variance_increases(traj) == []


def test_ordering_preserved_on_swap():
    traj = engine.analytic_moments(SWAP, _init([0.02, 0.1]), horizon=10)
    assert np.allclose(traj.var_exact[1], [0.019444444, 0.030555556])
    assert ordering_preserved(traj)
    assert ordering_preserved(traj, agents=[1, 0])


# ============================================================================
# compare_moments
# ============================================================================

@pytest.fixture(scope="module")
def five_run():
    init = _init(FIVE_SIGMA2)
    traj = engine.analytic_moments(FIVE, init, horizon=10)
    cfg = SimConfig(theta=0.6, horizon=10, replicates=10_000, seed=77)
    ensemble = simulate_ensemble(FIVE, init, cfg, band=(traj.band_lo, traj.band_hi), workers=2)
    return traj, ensemble


def test_compare_self_consistent(five_run):
    traj, ensemble = five_run
    report = engine.compare_moments(ensemble, traj)
    assert report.coverage_exact
    assert report.replicates == 10_000
    assert len(report.records) == 55
    assert report.min_coverage >= 0.985
    assert report.max_abs_z <= 4.5
    assert report.max_rel_var_error < 0.07
    assert report.passed(coverage_floor=0.985, z_limit=4.5)

    frame = report.to_frame()
    assert list(frame.columns) == ["agent", "t", "rel_var_error", "coverage", "mean_z"]
    assert set(report.summary()) >= {"min_coverage", "max_abs_mean_z", "max_rel_var_error"}


def test_compare_gaussian_coverage_without_band(five_run):
    traj, _ = five_run
    cfg = SimConfig(theta=0.6, horizon=10, replicates=10_000, seed=77)
    ensemble = simulate_ensemble(FIVE, _init(FIVE_SIGMA2), cfg, workers=1)
    report = engine.compare_moments(ensemble, traj)
    assert not report.coverage_exact
    assert report.min_coverage >= 0.99


def test_compare_detects_theta_mismatch(five_run):
    traj, _ = five_run
    cfg = SimConfig(theta=0.8, horizon=10, replicates=2_000, seed=5)
    shifted = simulate_ensemble(FIVE, _init(FIVE_SIGMA2, theta=0.8), cfg,
                                band=(traj.band_lo, traj.band_hi), workers=1)
    report = engine.compare_moments(shifted, traj)
    assert not report.passed()
    assert report.max_abs_z > 4.0


def test_compare_shape_mismatch(five_run):
    traj, _ = five_run
    cfg = SimConfig(theta=0.6, horizon=5, replicates=100, seed=5)
    short = simulate_ensemble(FIVE, _init(FIVE_SIGMA2), cfg, workers=1)
    with pytest.raises(ProvenanceMismatch):
        engine.compare_moments(short, traj)


def test_compare_point_mass_run():
    init = _init([0.0, 0.0], allow_point_mass=True)
    traj = engine.analytic_moments(SWAP, init, horizon=3)
    ensemble = simulate_ensemble(SWAP, init, SimConfig(theta=0.6, horizon=3, replicates=50, seed=1), workers=1)
    report = engine.compare_moments(ensemble, traj)
    assert report.max_rel_var_error == 0.0
    assert report.max_abs_z == 0.0
    assert report.min_coverage == 1.0
