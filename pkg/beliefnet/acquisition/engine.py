"""
Information-acquisition stage.

Each agent picks its initial belief variance x by maximizing
    E[-r (theta - s)^2 - a x^-b] = -r x - a x^-b,
whose unique maximizer over x > 0 is x* = (a b / r) ** (1 / (b + 1)).
"""
import logging
import math
from typing import List, Sequence

import numpy as np

from beliefnet.acquisition.models import InitialBeliefs, RIParams
from beliefnet.errors import DomainError

logger = logging.getLogger(__name__)

# Interval the source experiment draws initial variances from
DEFAULT_VARIANCE_RANGE = (0.009, 0.18)


def _check_variance(sigma2: float) -> None:
    if not (math.isfinite(sigma2) and sigma2 > 0.0):
        raise DomainError(f"variance must be finite and > 0, got {sigma2!r}")


class AcquisitionEngine:
    def acquisition_cost(self, sigma2: float, p: RIParams) -> float:
        _check_variance(sigma2)
        p.check()
        return p.a * sigma2 ** (-p.b)

    def expected_utility(self, sigma2: float, p: RIParams) -> float:
        _check_variance(sigma2)
        p.check()
        return -p.r * sigma2 - p.a * sigma2 ** (-p.b)

    def optimal_variance(self, p: RIParams) -> float:
        p.check()
        return (p.a * p.b / p.r) ** (1.0 / (p.b + 1.0))

    def form_initial_beliefs(self, params: Sequence[RIParams], theta: float) -> InitialBeliefs:
        variances: List[float] = []
        for i, p in enumerate(params):
            try:
                variances.append(self.optimal_variance(p))
            except DomainError as e:
                raise DomainError(str(e), agent=i)
        logger.info(
            f"[ACQ] Formed {len(variances)} initial beliefs, theta={theta}, "
            f"variance range [{min(variances):.4g}, {max(variances):.4g}]"
        )
        return InitialBeliefs(theta=theta, variances=variances)

    def sample_uniform_variances(
        self,
        n: int,
        theta: float,
        low: float = DEFAULT_VARIANCE_RANGE[0],
        high: float = DEFAULT_VARIANCE_RANGE[1],
        seed: int = 0,
    ) -> InitialBeliefs:
        """Draw sigma2_{i,0} ~ U[low, high] directly, bypassing the utility model."""
        if not (0.0 < low <= high and math.isfinite(high)):
            raise DomainError(f"need 0 < low <= high, got [{low}, {high}]")
        rng = np.random.default_rng(seed)
        variances = rng.uniform(low, high, size=n)
        return InitialBeliefs(theta=theta, variances=variances.tolist())


def select_tracked_agents(init: InitialBeliefs) -> dict:
    """Agents with the max, median and min initial variance."""
    v = np.asarray(init.variances)
    order = np.argsort(v, kind="stable")
    return {
        "max": int(order[-1]),
        "median": int(order[(len(order) - 1) // 2]),
        "min": int(order[0]),
    }


engine = AcquisitionEngine()
