"""
Edge-list text format for networks.

    # comment
    n 4
    0 1 0.33333333333333331
    ...

Indices are 0-based, one directed edge "i j w" per line (w = influence of j on i).
Pairs that are not listed have weight 0.
"""
import logging
from pathlib import Path
from typing import Union

import numpy as np

from beliefnet.errors import NetworkParseError
from beliefnet.network.engine import engine as network_engine
from beliefnet.network.models import Network

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def save_network(net: Network, path: PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# beliefnet network, avg_degree={net.average_degree():.6f}", f"n {net.n}"]
    rows, cols = np.nonzero(net.weights)
    for i, j in zip(rows.tolist(), cols.tolist()):
        lines.append(f"{i} {j} {net.weights[i, j]:.17g}")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    logger.info(f"[IO] Saved network n={net.n} edges={len(rows)} -> {path}")


def load_network(path: PathLike, allow_self_loops: bool = False) -> Network:
    n = None
    weights = None
    seen = set()

    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            tokens = text.split()

            if n is None:
                if len(tokens) != 2 or tokens[0] != "n":
                    raise NetworkParseError(lineno, f"expected header 'n <count>', got {text!r}")
                try:
                    n = int(tokens[1])
                except ValueError:
                    raise NetworkParseError(lineno, f"agent count is not an integer: {tokens[1]!r}")
                if n <= 0:
                    raise NetworkParseError(lineno, f"agent count must be positive, got {n}")
                weights = np.zeros((n, n))
                continue

            if len(tokens) != 3:
                raise NetworkParseError(lineno, f"expected 'i j w', got {text!r}")
            try:
                i, j = int(tokens[0]), int(tokens[1])
                w = float(tokens[2])
            except ValueError:
                raise NetworkParseError(lineno, f"non-numeric token in {text!r}")
            if not (0 <= i < n and 0 <= j < n):
                raise NetworkParseError(lineno, f"index out of range for n={n}: {i} {j}")
            if (i, j) in seen:
                raise NetworkParseError(lineno, f"duplicate edge {i} {j}")
            seen.add((i, j))
            weights[i, j] = w

    if n is None:
        raise NetworkParseError(1, "missing header 'n <count>'")

    weights = network_engine.renormalize_rows(weights)
    net = network_engine.validate_network(weights, allow_self_loops=allow_self_loops)
    logger.info(f"[IO] Loaded network n={n} edges={len(seen)} from {path}")
    return net
