import math
from typing import FrozenSet, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from beliefnet.errors import ConfigError

SERIES = frozenset({"signals", "means", "variances"})


def _as_vector(v) -> np.ndarray:
    arr = np.array(v, dtype=np.float64, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


class BeliefState(BaseModel):
    """Gaussian beliefs N(pi[i], sigma2[i]) of every agent at step t."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t: int = 0
    pi: np.ndarray
    sigma2: np.ndarray

    @field_validator("pi", "sigma2", mode="before")
    @classmethod
    def _vector(cls, v):
        return _as_vector(v)

    @property
    def n(self) -> int:
        return int(self.pi.shape[0])


class SignalVector(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t: int = 0
    s: np.ndarray

    @field_validator("s", mode="before")
    @classmethod
    def _vector(cls, v):
        return _as_vector(v)


class SocialSignal(BaseModel):
    """Gaussian approximation N(eta, sigma2_y) of the weighted neighbour signal, with update weights alpha."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    eta: np.ndarray
    sigma2_y: np.ndarray
    alpha: np.ndarray

    @field_validator("eta", "sigma2_y", "alpha", mode="before")
    @classmethod
    def _vector(cls, v):
        return _as_vector(v)


class SimConfig(BaseModel):
    theta: float = 0.6
    horizon: int = 30
    replicates: int = 10_000
    seed: int = 0
    record: FrozenSet[str] = Field(default_factory=lambda: SERIES)
    convergence_tol: Optional[float] = None

    # ensemble extras
    record_trajectories: bool = False
    histogram_steps: List[int] = Field(default_factory=list)
    track_agents: bool = False
    block_size: int = 500

    def check(self) -> None:
        if not math.isfinite(self.theta):
            raise ConfigError(f"theta must be finite, got {self.theta!r}")
        if self.horizon < 0:
            raise ConfigError(f"horizon must be >= 0, got {self.horizon}")
        if self.replicates < 1:
            raise ConfigError(f"replicates must be >= 1, got {self.replicates}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must fit in 64 bits, got {self.seed}")
        unknown = set(self.record) - SERIES
        if unknown:
            raise ConfigError(f"unknown record series {sorted(unknown)}; allowed {sorted(SERIES)}")
        if self.convergence_tol is not None and not self.convergence_tol > 0.0:
            raise ConfigError(f"convergence_tol must be > 0, got {self.convergence_tol!r}")
        if any(t < 0 or t > self.horizon for t in self.histogram_steps):
            raise ConfigError(f"histogram steps must lie in [0, {self.horizon}], got {self.histogram_steps}")
        if self.block_size < 1:
            raise ConfigError(f"block_size must be >= 1, got {self.block_size}")
