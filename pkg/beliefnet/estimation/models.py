import math
from typing import Dict, List

from pydantic import BaseModel, ConfigDict, model_validator


class CostObservation(BaseModel):
    """One cost condition: cost proxy (e.g. display time) and the spread of reports under it."""
    model_config = ConfigDict(frozen=True)

    cost: float
    variance: float
    count: int = 2

    @model_validator(mode="after")
    def _check(self):
        if not (math.isfinite(self.cost) and self.cost > 0.0):
            raise ValueError(f"cost must be > 0, got {self.cost!r}")
        if not (math.isfinite(self.variance) and self.variance > 0.0):
            raise ValueError(f"variance must be > 0, got {self.variance!r}")
        if self.count < 2:
            raise ValueError(f"count must be >= 2, got {self.count}")
        return self


class RewardObservation(BaseModel):
    model_config = ConfigDict(frozen=True)

    reward: float
    variance: float

    @model_validator(mode="after")
    def _check(self):
        if not (math.isfinite(self.reward) and self.reward > 0.0):
            raise ValueError(f"reward must be > 0, got {self.reward!r}")
        if not (math.isfinite(self.variance) and self.variance > 0.0):
            raise ValueError(f"variance must be > 0, got {self.variance!r}")
        return self


class CostFit(BaseModel):
    a: float
    b: float
    r2: float
    residuals: List[float]
    weighted: bool = False


class RewardFit(BaseModel):
    """Per reward level: r estimated on the training group, sigma2 predicted for the test group."""
    a: float
    b: float
    r: Dict[float, float]
    predicted: Dict[float, float]
    actual: Dict[float, float]
    mean_relative_error: float
