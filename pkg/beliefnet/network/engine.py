import logging
from typing import List

import networkx as nx
import numpy as np

from beliefnet.errors import InvalidSpec, NetworkValidationError, Violation
from beliefnet.network.models import GraphSpec, Network

logger = logging.getLogger(__name__)

# Row sums within ROW_TOL of 1 are accepted as-is. Loaded files may be off by up
# to RENORM_TOL (decimal rounding) and are renormalized with a warning.
ROW_TOL = 1e-9
RENORM_TOL = 1e-6


class NetworkEngine:
    def __init__(self, row_tol: float = ROW_TOL, renorm_tol: float = RENORM_TOL):
        self.row_tol = row_tol
        self.renorm_tol = renorm_tol

    def find_violations(self, weights, allow_self_loops: bool = False) -> List[Violation]:
        W = np.asarray(weights, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] != W.shape[1] or W.shape[0] == 0:
            return [Violation(kind="NonSquare")]

        violations: List[Violation] = []
        n = W.shape[0]
        for i in range(n):
            row = W[i]
            if not np.all(np.isfinite(row)):
                violations.append(Violation(kind="NonFinite", row=i))
                continue
            for j in np.flatnonzero(row < 0.0):
                violations.append(Violation(kind="NegativeWeight", row=i, col=int(j), value=float(row[j])))
            if not allow_self_loops and row[i] != 0.0:
                violations.append(Violation(kind="SelfLoop", row=i, col=i, value=float(row[i])))
            if not np.any(row > 0.0):
                violations.append(Violation(kind="IsolatedRow", row=i))
            total = float(row.sum())
            if abs(total - 1.0) > self.row_tol:
                violations.append(Violation(kind="NonStochasticRow", row=i, value=total))
        return violations

    def validate_network(self, weights, allow_self_loops: bool = False) -> Network:
        """Return a Network or raise NetworkValidationError listing every violation."""
        violations = self.find_violations(weights, allow_self_loops)
        if violations:
            raise NetworkValidationError(violations)
        return Network(weights=weights, allow_self_loops=allow_self_loops)

    def renormalize_rows(self, weights: np.ndarray) -> np.ndarray:
        """Rescale rows whose sum is off by at most renorm_tol; leave the rest for validation."""
        W = np.array(weights, dtype=np.float64, copy=True)
        sums = W.sum(axis=1)
        drift = np.abs(sums - 1.0)
        fix = (drift > self.row_tol) & (drift <= self.renorm_tol) & (sums > 0.0)
        if np.any(fix):
            rows = np.flatnonzero(fix)
            logger.warning(f"[NETWORK] Renormalizing {len(rows)} row(s) with sum drift <= {self.renorm_tol:g}: {rows.tolist()[:10]}")
            W[fix] = W[fix] / sums[fix, None]
        return W

    def generate(self, spec: GraphSpec) -> Network:
        spec.check()
        if spec.kind == "custom_file":
            from beliefnet.network.io import load_network
            return load_network(spec.path)

        n = spec.n
        if spec.kind == "complete":
            adjacency = np.ones((n, n)) - np.eye(n)
        elif spec.kind == "ring":
            adjacency = np.zeros((n, n))
            for i in range(n):
                for offset in range(1, spec.k + 1):
                    adjacency[i, (i + offset) % n] = 1.0
                    adjacency[i, (i - offset) % n] = 1.0
        elif spec.kind == "barabasi_albert":
            graph = nx.barabasi_albert_graph(n, spec.m, seed=spec.seed)
            # undirected edge -> both directions
            adjacency = nx.to_numpy_array(graph, nodelist=range(n), dtype=np.float64)
            adjacency = (adjacency > 0).astype(np.float64)
        else:
            raise InvalidSpec(f"unknown graph kind {spec.kind!r}")

        weights = adjacency / adjacency.sum(axis=1, keepdims=True)
        net = self.validate_network(weights)
        logger.info(f"[NETWORK] Generated {spec.kind} n={n} seed={spec.seed} avg_degree={net.average_degree():.3f}")
        return net


def is_strongly_connected(net: Network) -> bool:
    """Every agent reaches every other over positive-weight edges."""
    graph = nx.from_numpy_array((net.weights > 0.0).astype(np.int8), create_using=nx.DiGraph)
    return nx.is_strongly_connected(graph)


engine = NetworkEngine()
