from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, field_validator


class CovarianceState(BaseModel):
    """Covariance P_t of the belief-mean vector, with the belief variances carried alongside."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t: int = 0
    P: np.ndarray
    sigma2: np.ndarray

    @field_validator("P", "sigma2", mode="before")
    @classmethod
    def _array(cls, v):
        arr = np.array(v, dtype=np.float64, copy=True)
        arr.setflags(write=False)
        return arr

    @property
    def delta2(self) -> np.ndarray:
        return np.diag(self.P).copy()

    @classmethod
    def initial(cls, sigma2_0) -> "CovarianceState":
        sigma2 = np.asarray(sigma2_0, dtype=np.float64)
        # pi_0 = theta * 1 is deterministic
        return cls(t=0, P=np.zeros((sigma2.size, sigma2.size)), sigma2=sigma2)


@dataclass
class MomentTrajectory:
    """Analytic moments per step. Arrays are indexed [t, agent]."""
    theta: float
    mean: np.ndarray
    var_exact: np.ndarray
    var_eq8: np.ndarray
    sigma2: np.ndarray
    delta2: np.ndarray
    band_lo: np.ndarray
    band_hi: np.ndarray
    alpha: Optional[np.ndarray] = None

    @property
    def steps(self) -> int:
        return int(self.mean.shape[0])

    @property
    def n(self) -> int:
        return int(self.mean.shape[1])


class ComparisonRecord(BaseModel):
    agent: int
    t: int
    rel_var_error: float
    coverage: float
    mean_z: float


class ComparisonReport(BaseModel):
    theta: float
    replicates: int
    coverage_exact: bool            # False when coverage is the Gaussian estimate
    records: List[ComparisonRecord]

    @property
    def min_coverage(self) -> float:
        return min(r.coverage for r in self.records)

    @property
    def max_abs_z(self) -> float:
        return max(abs(r.mean_z) for r in self.records)

    @property
    def max_rel_var_error(self) -> float:
        return max(r.rel_var_error for r in self.records)

    def passed(self, coverage_floor: float = 0.985, z_limit: float = 4.0) -> bool:
        return self.min_coverage >= coverage_floor and self.max_abs_z <= z_limit

    def summary(self) -> dict:
        return {
            "theta": self.theta,
            "replicates": self.replicates,
            "coverage_exact": self.coverage_exact,
            "min_coverage": self.min_coverage,
            "max_abs_mean_z": self.max_abs_z,
            "max_rel_var_error": self.max_rel_var_error,
        }

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.model_dump() for r in self.records],
                            columns=["agent", "t", "rel_var_error", "coverage", "mean_z"])
