"""
Belief-update stage.

At every round each agent publishes s_i ~ N(pi_i, sigma2_i), forms the social
signal y_i = sum_j w_ij s_j, treats it as N(eta_i, sigma2_y_i) with
sigma2_y_i = sum_j w_ij^2 sigma2_j, and applies the Gaussian conjugate update

    alpha  = sigma2 / (sigma2 + sigma2_y)
    pi'    = alpha * eta + (1 - alpha) * pi
    sigma2'= sigma2 * sigma2_y / (sigma2 + sigma2_y)

An agent whose own variance is 0 is frozen: alpha = 0 and nothing changes.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from beliefnet.dynamics.models import BeliefState, SignalVector, SocialSignal
from beliefnet.errors import DimensionMismatch, DomainError
from beliefnet.network.models import Network

logger = logging.getLogger(__name__)


def update_weights(sigma2: np.ndarray, sigma2_y: np.ndarray) -> np.ndarray:
    denom = sigma2 + sigma2_y
    alpha = np.zeros_like(denom)
    np.divide(sigma2, denom, out=alpha, where=(denom > 0.0) & (sigma2 > 0.0))
    return alpha


def posterior_variance(sigma2: np.ndarray, sigma2_y: np.ndarray) -> np.ndarray:
    denom = sigma2 + sigma2_y
    out = np.zeros_like(denom)
    np.divide(sigma2 * sigma2_y, denom, out=out, where=denom > 0.0)
    # frozen agents keep their (zero) variance
    return np.where(sigma2 > 0.0, out, sigma2)


def social_variance(net: Network, sigma2: np.ndarray) -> np.ndarray:
    return (net.weights ** 2) @ sigma2


@dataclass
class VarianceSchedule:
    """Signal-free sigma2_t / alpha_t schedule.

    sigma2 has shape (stop + 1, n); alpha has shape (stop, n), alpha[t] being the
    weight used to go from step t to t + 1.
    """
    sigma2: np.ndarray
    alpha: np.ndarray
    sigma2_y: np.ndarray
    stop: int
    converged: bool = False


class DynamicsEngine:
    def combine_social_signal(self, net: Network, signals: SignalVector, state: BeliefState) -> SocialSignal:
        n = net.n
        if signals.s.shape[0] != n or state.n != n:
            raise DimensionMismatch(f"network has {n} agents, signals {signals.s.shape[0]}, state {state.n}")
        eta = net.weights @ signals.s
        sigma2_y = social_variance(net, state.sigma2)
        alpha = update_weights(state.sigma2, sigma2_y)
        return SocialSignal(eta=eta, sigma2_y=sigma2_y, alpha=alpha)

    def bayesian_update(self, pi: float, sigma2: float, eta: float, sigma2_y: float) -> Tuple[float, float, float]:
        if sigma2 < 0.0 or sigma2_y < 0.0:
            raise DomainError(f"variances must be >= 0, got sigma2={sigma2!r}, sigma2_y={sigma2_y!r}")
        if sigma2 == 0.0:
            return pi, 0.0, 0.0
        alpha = sigma2 / (sigma2 + sigma2_y)
        new_pi = alpha * eta + (1.0 - alpha) * pi
        new_sigma2 = sigma2 * sigma2_y / (sigma2 + sigma2_y)
        return new_pi, new_sigma2, alpha

    def draw_signals(self, state: BeliefState, rng: np.random.Generator) -> SignalVector:
        s = rng.normal(state.pi, np.sqrt(state.sigma2))
        return SignalVector(t=state.t, s=s)

    def step(self, net: Network, state: BeliefState, signals: SignalVector) -> BeliefState:
        if state.t != signals.t:
            raise DimensionMismatch(f"state is at t={state.t} but signals are from t={signals.t}")
        if np.any(state.sigma2 < 0.0):
            raise DomainError("belief variances must be >= 0")
        social = self.combine_social_signal(net, signals, state)
        new_pi = social.alpha * social.eta + (1.0 - social.alpha) * state.pi
        new_sigma2 = posterior_variance(state.sigma2, social.sigma2_y)
        return BeliefState(t=state.t + 1, pi=new_pi, sigma2=new_sigma2)

    def variance_schedule(
        self,
        net: Network,
        sigma2_0,
        horizon: int,
        convergence_tol: Optional[float] = None,
    ) -> VarianceSchedule:
        sigma2 = np.asarray(sigma2_0, dtype=np.float64)
        if sigma2.shape != (net.n,):
            raise DimensionMismatch(f"network has {net.n} agents, got {sigma2.shape[0]} variances")
        if np.any(sigma2 < 0.0):
            raise DomainError("initial variances must be >= 0")

        sigmas = [sigma2]
        alphas = []
        social = []
        converged = convergence_tol is not None and sigma2.max() < convergence_tol
        t = 0
        while t < horizon and not converged:
            sigma2_y = social_variance(net, sigma2)
            alphas.append(update_weights(sigma2, sigma2_y))
            social.append(sigma2_y)
            sigma2 = posterior_variance(sigma2, sigma2_y)
            sigmas.append(sigma2)
            t += 1
            if convergence_tol is not None and sigma2.max() < convergence_tol:
                converged = True

        if converged and t < horizon:
            logger.info(f"[SIM] Variances below {convergence_tol:g} at t={t}; stopping before horizon {horizon}")
        n = net.n
        return VarianceSchedule(
            sigma2=np.vstack(sigmas),
            alpha=np.vstack(alphas) if alphas else np.empty((0, n)),
            sigma2_y=np.vstack(social) if social else np.empty((0, n)),
            stop=t,
            converged=bool(converged),
        )


engine = DynamicsEngine()
