"""
Fitting the information-acquisition model to experiment data.

Cost experiment: each condition fixes a cost (display time) and yields a report
variance; log(cost) = log(a) - b log(variance) is fitted by ordinary least squares.

Reward experiment: with a, b known, the accuracy weight for a reward level is the
r that makes the optimal variance equal the observed one, r = a b x^-(b+1).
Subjects are split into a training group (estimates r) and a test group (whose
variance is predicted).
"""
import logging
import math
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from beliefnet.acquisition.engine import engine as acquisition_engine
from beliefnet.acquisition.models import RIParams
from beliefnet.errors import (
    DegenerateFit,
    DimensionMismatch,
    DomainError,
    DuplicateAbscissa,
    TooFewPoints,
    TooFewReports,
)
from beliefnet.estimation.models import CostFit, CostObservation, RewardFit

logger = logging.getLogger(__name__)

# Display times (s) of the human-subject cost experiment
DISPLAY_TIMES = (10.0, 20.0, 40.0, 60.0, 90.0)


def _positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0.0):
        raise DomainError(f"{name} must be finite and > 0, got {value!r}")


class EstimationEngine:
    def __init__(self, error_ceiling: float = 0.10):
        self.error_ceiling = error_ceiling

    def sample_variance(self, reports: Sequence[float]) -> float:
        x = np.asarray(reports, dtype=np.float64)
        if x.size < 2:
            raise TooFewReports(f"need at least 2 reports, got {x.size}")
        return float(np.var(x, ddof=1))

    def fit_cost_power_law(self, obs: Sequence[CostObservation], weighted: bool = False) -> CostFit:
        if len(obs) < 2:
            raise TooFewPoints(f"need at least 2 observations, got {len(obs)}")
        variances = [o.variance for o in obs]
        if len(set(variances)) != len(variances):
            raise DuplicateAbscissa("two observations share the same variance")

        x = np.log(np.asarray(variances))
        y = np.log(np.asarray([o.cost for o in obs]))
        w = np.asarray([o.count for o in obs], dtype=np.float64) if weighted else np.ones_like(x)

        # polyfit weights multiply residuals, so pass sqrt of the count weights
        slope, intercept = np.polyfit(x, y, 1, w=np.sqrt(w))
        b = -float(slope)
        if not b > 0.0:
            raise DegenerateFit(f"cost must decrease with variance; fitted slope {slope:.4g} is not negative")

        fitted = intercept + slope * x
        residuals = y - fitted
        y_bar = np.average(y, weights=w)
        ss_tot = float(np.sum(w * (y - y_bar) ** 2))
        ss_res = float(np.sum(w * residuals ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0

        fit = CostFit(a=float(math.exp(intercept)), b=b, r2=r2,
                      residuals=residuals.tolist(), weighted=weighted)
        logger.info(f"[FIT] cost power law on {len(obs)} points: a={fit.a:.6g} b={fit.b:.6g} r2={fit.r2:.4f}")
        return fit

    def estimate_r(self, variance: float, a: float, b: float) -> float:
        _positive("variance", variance)
        _positive("a", a)
        _positive("b", b)
        return a * b * variance ** (-(b + 1.0))

    def predict_variance(self, r: float, a: float, b: float) -> float:
        return acquisition_engine.optimal_variance(RIParams(a=a, b=b, r=r))

    def evaluate_prediction(self, predicted: Sequence[float], actual: Sequence[float]) -> float:
        p = np.asarray(predicted, dtype=np.float64)
        q = np.asarray(actual, dtype=np.float64)
        if p.shape != q.shape:
            raise DimensionMismatch(f"{p.size} predictions vs {q.size} actual values")
        if q.size == 0:
            raise DimensionMismatch("nothing to evaluate")
        if np.any(~np.isfinite(q) | (q <= 0.0)):
            raise DomainError("actual variances must be finite and > 0")
        return float(np.mean(np.abs(p - q) / q))

    def run_reward_experiment(
        self,
        reports: pd.DataFrame,
        a: float,
        b: float,
        train_fraction: float = 0.5,
        seed: int = 0,
    ) -> RewardFit:
        """reports: columns reward, subject, report."""
        train, test = split_train_test(reports, train_fraction, seed)
        r_by_reward: Dict[float, float] = {}
        predicted: Dict[float, float] = {}
        actual: Dict[float, float] = {}
        for reward in sorted(reports["reward"].unique()):
            train_var = self.sample_variance(train.loc[train["reward"] == reward, "report"])
            r = self.estimate_r(train_var, a, b)
            r_by_reward[float(reward)] = r
            predicted[float(reward)] = self.predict_variance(r, a, b)
            actual[float(reward)] = self.sample_variance(test.loc[test["reward"] == reward, "report"])

        keys = sorted(actual)
        error = self.evaluate_prediction([predicted[k] for k in keys], [actual[k] for k in keys])
        if error > self.error_ceiling:
            logger.warning(f"[FIT] mean relative prediction error {error:.2%} above ceiling {self.error_ceiling:.0%}")
        else:
            logger.info(f"[FIT] mean relative prediction error {error:.2%}")
        return RewardFit(a=a, b=b, r=r_by_reward, predicted=predicted, actual=actual,
                         mean_relative_error=error)


def split_train_test(reports: pd.DataFrame, train_fraction: float = 0.5,
                     seed: int = 0) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Split by subject so each subject's reports land in one group only."""
    if not 0.0 < train_fraction < 1.0:
        raise DomainError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    subjects = np.sort(reports["subject"].unique())
    if subjects.size < 2:
        raise TooFewReports("need at least 2 subjects to split")
    rng = np.random.default_rng(seed)
    shuffled = rng.permutation(subjects)
    k = min(max(1, int(round(train_fraction * subjects.size))), subjects.size - 1)
    train_ids = set(shuffled[:k].tolist())
    mask = reports["subject"].isin(train_ids)
    return reports[mask], reports[~mask]


def synthetic_cost_observations(
    a: float,
    b: float,
    variances: Optional[Iterable[float]] = None,
    noise_sd: float = 0.0,
    count: int = 137,
    seed: int = 0,
    costs: Iterable[float] = DISPLAY_TIMES,
) -> list:
    """Observations lying on cost = a * variance**-b, with optional log-normal noise on the cost.

    Without `variances`, one observation per cost (display time) at the variance the law gives it.
    """
    if variances is None:
        variances = [(a / c) ** (1.0 / b) for c in costs]
    rng = np.random.default_rng(seed)
    out = []
    for v in variances:
        cost = a * v ** (-b)
        if noise_sd > 0.0:
            cost *= math.exp(rng.normal(0.0, noise_sd))
        out.append(CostObservation(cost=cost, variance=v, count=count))
    return out


def synthetic_reward_reports(
    a: float,
    b: float,
    r_by_reward: Dict[float, float],
    subjects: int = 100,
    rounds: int = 40,
    theta: float = 0.5,
    seed: int = 0,
) -> pd.DataFrame:
    """Reports of `subjects` subjects, `rounds` per reward level, drawn around theta
    with the variance the acquisition model predicts for that reward's r."""
    rng = np.random.default_rng(seed)
    frames = []
    for reward in sorted(r_by_reward):
        sd = math.sqrt(acquisition_engine.optimal_variance(RIParams(a=a, b=b, r=r_by_reward[reward])))
        draws = rng.normal(theta, sd, size=(subjects, rounds))
        frames.append(pd.DataFrame({
            "reward": float(reward),
            "subject": np.repeat(np.arange(subjects), rounds),
            "report": draws.reshape(-1),
        }))
    return pd.concat(frames, ignore_index=True)


def geometric_variances(low: float = 0.01, high: float = 0.16, points: int = 5) -> np.ndarray:
    return np.geomspace(low, high, points)


engine = EstimationEngine()
