"""
Exception hierarchy shared by all beliefnet modules.

Everything derives from ValueError so callers that only care about
"bad input" can keep catching ValueError.
"""
from dataclasses import dataclass
from typing import List, Optional


class BeliefNetError(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    """One broken network constraint (row/col are 0-based)"""
    kind: str                   # NonStochasticRow, NegativeWeight, SelfLoop, IsolatedRow, NonSquare, NonFinite
    row: Optional[int] = None
    col: Optional[int] = None
    value: Optional[float] = None

    def __str__(self) -> str:
        if self.kind == "NonStochasticRow":
            return f"NonStochasticRow({self.row}, {self.value!r})"
        if self.kind == "NegativeWeight":
            return f"NegativeWeight({self.row},{self.col})"
        if self.kind in ("SelfLoop", "IsolatedRow", "NonFinite"):
            return f"{self.kind}({self.row})"
        return self.kind


class NetworkValidationError(BeliefNetError):
    def __init__(self, violations: List[Violation]):
        self.violations = list(violations)
        shown = ", ".join(str(v) for v in self.violations[:10])
        more = f" (+{len(self.violations) - 10} more)" if len(self.violations) > 10 else ""
        super().__init__(f"invalid network: {shown}{more}")

    def kinds(self) -> List[str]:
        return [v.kind for v in self.violations]


class InvalidSpec(BeliefNetError):
    pass


class NetworkParseError(BeliefNetError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class DomainError(BeliefNetError):
    def __init__(self, message: str, agent: Optional[int] = None):
        self.agent = agent
        if agent is not None:
            message = f"agent {agent}: {message}"
        super().__init__(message)


class DimensionMismatch(BeliefNetError):
    pass


class ConfigError(BeliefNetError):
    pass


class ProvenanceMismatch(BeliefNetError):
    pass


class TooFewReports(BeliefNetError):
    pass


class TooFewPoints(BeliefNetError):
    pass


class DegenerateFit(BeliefNetError):
    pass


class DuplicateAbscissa(BeliefNetError):
    pass


class NumericalError(BeliefNetError):
    pass


class CsvFormatError(BeliefNetError):
    """Missing columns, non-numeric cells or a ragged (t, agent) grid in an input CSV"""
    pass
