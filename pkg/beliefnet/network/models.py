from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from beliefnet.errors import InvalidSpec

GraphKind = Literal["barabasi_albert", "complete", "ring", "custom_file"]


class Network(BaseModel):
    """Directed influence network. weights[i, j] is agent j's influence on agent i.

    Build through NetworkEngine.validate_network / generate / load_network so the
    row-stochastic invariants are checked; the array is stored read-only.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    weights: np.ndarray
    allow_self_loops: bool = False

    @field_validator("weights", mode="before")
    @classmethod
    def _freeze(cls, v):
        arr = np.array(v, dtype=np.float64, copy=True)
        arr.setflags(write=False)
        return arr

    @property
    def n(self) -> int:
        return int(self.weights.shape[0])

    def out_degrees(self) -> np.ndarray:
        return np.count_nonzero(self.weights > 0.0, axis=1)

    def average_degree(self) -> float:
        return float(self.out_degrees().mean())

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.weights, np.eye(self.n)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.allow_self_loops == other.allow_self_loops
            and self.weights.shape == other.weights.shape
            and bool(np.array_equal(self.weights, other.weights))
        )

    __hash__ = None


class GraphSpec(BaseModel):
    kind: GraphKind
    n: int
    m: int = 3                  # BA attachment edges per new node
    k: int = 1                  # ring: neighbours on each side
    seed: int = 0
    path: Optional[str] = None  # custom_file only

    def check(self) -> None:
        if self.kind == "custom_file":
            if not self.path:
                raise InvalidSpec("custom_file requires a path")
            return
        if self.n < 2:
            raise InvalidSpec(f"n must be >= 2, got {self.n}")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidSpec(f"seed must fit in 64 bits, got {self.seed}")
        if self.kind == "barabasi_albert" and not 1 <= self.m < self.n:
            raise InvalidSpec(f"barabasi_albert needs 1 <= m < n, got m={self.m}, n={self.n}")
        if self.kind == "ring" and not (1 <= self.k and 2 * self.k < self.n):
            raise InvalidSpec(f"ring needs 1 <= k < n/2, got k={self.k}, n={self.n}")
