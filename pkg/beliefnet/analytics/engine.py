"""
Analytic moments of the belief and signal processes.

With s_t = pi_t + eps_t, eps_t ~ N(0, diag(sigma2_t)) independent of the past,
the mean dynamics are linear:

    pi_{t+1} = M_t pi_t + A_t W eps_t,     M_t = A_t W + (I - A_t)

so E(pi_t) = theta * 1 (M_t is row-stochastic) and the covariance obeys

    P_{t+1} = M_t P_t M_t^T + (A_t W) diag(sigma2_t) (A_t W)^T.

The signal variance is then D(s_t) = diag(P_t) + sigma2_t exactly.

signal_variance_eq8 is the closed-form vector approximation, taken literally:

    (I-A)^2 d + A^2 W∘W (d + sigma2) + 2 A (I-A) diag(W P) + sigma2_{t+1}

Its middle term only uses the diagonal of P (covariances between distinct
neighbours' means are dropped), so it matches the exact recursion at t = 1 and
drifts from it afterwards. A per-agent version of the same formula circulates
with w_ij instead of w_ij^2 in the middle term; that is treated as a typo and the
squared-weight form is used everywhere.
"""
import logging
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.stats import norm

from beliefnet.acquisition.models import InitialBeliefs
from beliefnet.analytics.models import (
    ComparisonRecord,
    ComparisonReport,
    CovarianceState,
    MomentTrajectory,
)
from beliefnet.dynamics.engine import engine as dynamics_engine, posterior_variance, social_variance
from beliefnet.dynamics.ensemble import Ensemble
from beliefnet.errors import DimensionMismatch, NumericalError, ProvenanceMismatch
from beliefnet.network.models import Network

logger = logging.getLogger(__name__)

PSD_FLOOR = -1e-10
BAND_WIDTH = 3.0
# empirical variances at or below this are round-off of a point mass
ZERO_VAR = 1e-20


class AnalyticsEngine:
    def __init__(self, psd_floor: float = PSD_FLOOR, band_width: float = BAND_WIDTH,
                 band_source: str = "exact"):
        if band_source not in ("exact", "eq8"):
            raise ValueError(f"band_source must be 'exact' or 'eq8', got {band_source!r}")
        self.psd_floor = psd_floor
        self.band_width = band_width
        self.band_source = band_source

    def mixing_matrix(self, alpha, net: Network) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=np.float64)
        if alpha.shape != (net.n,):
            raise DimensionMismatch(f"alpha has shape {alpha.shape}, network has {net.n} agents")
        if np.any((alpha < 0.0) | (alpha > 1.0)):
            raise ValueError("alpha entries must lie in [0, 1]")
        return alpha[:, None] * net.weights + np.diag(1.0 - alpha)

    def check_covariance(self, P: np.ndarray, t: int) -> None:
        if not np.all(np.isfinite(P)):
            raise NumericalError(f"covariance at t={t} has non-finite entries")
        smallest = float(linalg.eigvalsh(P, subset_by_index=[0, 0])[0]) if P.size else 0.0
        if smallest < self.psd_floor:
            raise NumericalError(f"covariance at t={t} is not PSD: smallest eigenvalue {smallest:.3e}")

    def propagate_covariance(self, cov: CovarianceState, net: Network, alpha) -> CovarianceState:
        alpha = np.asarray(alpha, dtype=np.float64)
        if cov.P.shape != (net.n, net.n) or cov.sigma2.shape != (net.n,):
            raise DimensionMismatch(f"covariance state of size {cov.sigma2.shape[0]} vs network of {net.n}")
        M = self.mixing_matrix(alpha, net)
        B = alpha[:, None] * net.weights
        P = M @ cov.P @ M.T + (B * cov.sigma2) @ B.T
        P = 0.5 * (P + P.T)
        self.check_covariance(P, cov.t + 1)
        sigma2_next = posterior_variance(cov.sigma2, social_variance(net, cov.sigma2))
        return CovarianceState(t=cov.t + 1, P=P, sigma2=sigma2_next)

    def signal_variance_exact(self, cov: CovarianceState) -> np.ndarray:
        return cov.delta2 + cov.sigma2

    def signal_variance_eq8(self, cov_prev: CovarianceState, net: Network, alpha, sigma2_next) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=np.float64)
        sigma2_next = np.asarray(sigma2_next, dtype=np.float64)
        n = net.n
        if alpha.shape != (n,) or sigma2_next.shape != (n,) or cov_prev.P.shape != (n, n):
            raise DimensionMismatch(f"inputs do not match a network of {n} agents")
        W = net.weights
        delta2 = cov_prev.delta2
        cross = (W * cov_prev.P.T).sum(axis=1)          # diag(W P)
        return (
            (1.0 - alpha) ** 2 * delta2
            + alpha ** 2 * ((W ** 2) @ (delta2 + cov_prev.sigma2))
            + 2.0 * alpha * (1.0 - alpha) * cross
            + sigma2_next
        )

    def analytic_moments(self, net: Network, init: InitialBeliefs, horizon: int) -> MomentTrajectory:
        if init.n != net.n:
            raise DimensionMismatch(f"network has {net.n} agents but {init.n} initial beliefs were given")
        schedule = dynamics_engine.variance_schedule(net, init.variances, horizon)
        n = net.n
        steps = schedule.stop + 1

        cov = CovarianceState.initial(init.variances)
        var_exact = np.empty((steps, n))
        var_eq8 = np.empty((steps, n))
        delta2 = np.empty((steps, n))
        var_exact[0] = var_eq8[0] = self.signal_variance_exact(cov)
        delta2[0] = cov.delta2
        for t in range(schedule.stop):
            alpha = schedule.alpha[t]
            nxt = self.propagate_covariance(cov, net, alpha)
            var_eq8[t + 1] = self.signal_variance_eq8(cov, net, alpha, nxt.sigma2)
            var_exact[t + 1] = self.signal_variance_exact(nxt)
            delta2[t + 1] = nxt.delta2
            cov = nxt

        band_var = var_exact if self.band_source == "exact" else var_eq8
        half = self.band_width * np.sqrt(np.maximum(band_var, 0.0))
        theta = init.theta
        logger.info(f"[ANALYTICS] {steps} steps x {n} agents, max eq8 gap {_rel_gap(var_eq8, var_exact):.3e}")
        return MomentTrajectory(
            theta=theta,
            mean=np.full((steps, n), theta),
            var_exact=var_exact,
            var_eq8=var_eq8,
            sigma2=schedule.sigma2.copy(),
            delta2=delta2,
            band_lo=theta - half,
            band_hi=theta + half,
            alpha=schedule.alpha.copy(),
        )

    def compare_moments(self, ensemble: Ensemble, analytic: MomentTrajectory) -> ComparisonReport:
        shape = (ensemble.steps, ensemble.n)
        if analytic.mean.shape != shape:
            raise ProvenanceMismatch(f"ensemble moments {shape} vs analytic {analytic.mean.shape}")

        count = ensemble.count
        emp_mean = ensemble.signals.mean
        emp_var = ensemble.signals.variance
        expected = analytic.var_exact

        rel = np.zeros(shape)
        np.divide(np.abs(emp_var - expected), expected, out=rel, where=expected > 0.0)
        rel[(expected <= 0.0) & (emp_var > ZERO_VAR)] = np.inf

        coverage = ensemble.coverage()
        exact = coverage is not None
        if not exact:
            coverage = _gaussian_coverage(emp_mean, emp_var, analytic.band_lo, analytic.band_hi)

        diff = emp_mean - analytic.mean
        point = emp_var <= ZERO_VAR
        se = np.sqrt(emp_var / max(count, 1))
        z = np.zeros(shape)
        np.divide(diff, se, out=z, where=~point)
        degenerate = point & (np.abs(diff) > _mean_tol(analytic.theta))
        z[degenerate] = np.copysign(np.inf, diff[degenerate])

        records = [
            ComparisonRecord(agent=i, t=t, rel_var_error=float(rel[t, i]),
                             coverage=float(coverage[t, i]), mean_z=float(z[t, i]))
            for i in range(shape[1]) for t in range(shape[0])
        ]
        report = ComparisonReport(theta=analytic.theta, replicates=count,
                                  coverage_exact=exact, records=records)
        logger.info(
            f"[ANALYTICS] compare: min coverage {report.min_coverage:.4f}, "
            f"max |z| {report.max_abs_z:.2f}, max rel var error {report.max_rel_var_error:.3%}"
        )
        return report


def _rel_gap(a: np.ndarray, b: np.ndarray) -> float:
    mask = b > 0.0
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(a[mask] - b[mask]) / b[mask]))


def _mean_tol(theta: float) -> float:
    return 1e-12 * max(1.0, abs(theta))


def _gaussian_coverage(mean, var, lo, hi) -> np.ndarray:
    """Mass of N(mean, var) inside [lo, hi]; point masses count as in or out."""
    point = var <= ZERO_VAR
    sd = np.sqrt(np.where(point, 1.0, var))
    cov = norm.cdf((hi - mean) / sd) - norm.cdf((lo - mean) / sd)
    tol = 1e-12 * np.maximum(1.0, np.abs(mean))
    inside = (mean >= lo - tol) & (mean <= hi + tol)
    return np.where(point, inside.astype(np.float64), cov)


def eq8_gap(traj: MomentTrajectory) -> float:
    """Largest relative gap between the eq8 variance and the exact recursion."""
    return _rel_gap(traj.var_eq8, traj.var_exact)


def find_variance_increases(traj: MomentTrajectory, rel_tol: float = 1e-12) -> List[Tuple[int, int]]:
    """(agent, t) pairs with D(s_{i,t+1}) > D(s_{i,t}) in the exact recursion."""
    v = traj.var_exact
    up = v[1:] > v[:-1] * (1.0 + rel_tol)
    ts, agents = np.nonzero(up)
    return sorted(zip(agents.tolist(), ts.tolist()))


def ordering_preserved(traj: MomentTrajectory, agents: Optional[Iterable[int]] = None,
                       rel_tol: float = 1e-12) -> bool:
    """True if D(s_{i,t}) never decreases along increasing sigma2_{i,0} among `agents`."""
    idx = np.arange(traj.n) if agents is None else np.asarray(list(agents))
    order = idx[np.argsort(traj.sigma2[0, idx], kind="stable")]
    v = traj.var_exact[:, order]
    return bool(np.all(v[:, 1:] >= v[:, :-1] * (1.0 - rel_tol)))


engine = AnalyticsEngine()
