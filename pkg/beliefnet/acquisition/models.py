import math
from typing import List

from pydantic import BaseModel, ConfigDict, model_validator

from beliefnet.errors import DomainError


class RIParams(BaseModel):
    """Rational-inattention constants: cost C(x) = a * x**-b, accuracy weight r."""
    model_config = ConfigDict(frozen=True)

    a: float
    b: float
    r: float

    def check(self, agent: int = None) -> None:
        for name in ("a", "b", "r"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise DomainError(f"{name} must be finite and > 0, got {value!r}", agent=agent)


class InitialBeliefs(BaseModel):
    """Initial beliefs B_{i,0} ~ N(theta, variances[i]), independent across agents."""
    model_config = ConfigDict(frozen=True)

    theta: float
    variances: List[float]
    # zero variances are only for degenerate point-mass runs
    allow_point_mass: bool = False

    @model_validator(mode="after")
    def _check_variances(self):
        if not math.isfinite(self.theta):
            raise ValueError(f"theta must be finite, got {self.theta!r}")
        if not self.variances:
            raise ValueError("at least one agent is required")
        for i, v in enumerate(self.variances):
            ok = math.isfinite(v) and (v >= 0.0 if self.allow_point_mass else v > 0.0)
            if not ok:
                raise ValueError(f"agent {i}: invalid initial variance {v!r}")
        return self

    @property
    def n(self) -> int:
        return len(self.variances)
