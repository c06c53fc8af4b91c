"""
Network tests: validation, generators, edge-list file format.
"""
import logging

import numpy as np
import pytest

from beliefnet.errors import InvalidSpec, NetworkParseError, NetworkValidationError
from beliefnet.network.engine import ROW_TOL, engine, is_strongly_connected
from beliefnet.network.io import load_network, save_network
from beliefnet.network.models import GraphSpec, Network


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def _bfs_reachable(weights, start=0):
    """Independent reachability oracle over positive entries."""
    n = weights.shape[0]
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for i in frontier:
            for j in range(n):
                if weights[i, j] > 0 and j not in seen:
                    seen.add(j)
                    nxt.append(j)
        frontier = nxt
    return seen


# ============================================================================
# validate_network
# ============================================================================

def test_validate_symmetric_complete_3():
    W = [[0, .5, .5], [.5, 0, .5], [.5, .5, 0]]
    net = engine.validate_network(W)
    assert isinstance(net, Network)
    assert net.n == 3
    assert np.allclose(net.weights.sum(axis=1), 1.0)


def test_validate_reports_row_sum():
    W = [[0, .6, .6], [.5, 0, .5], [.5, .5, 0]]
    with pytest.raises(NetworkValidationError) as exc:
        engine.validate_network(W)
    (violation,) = exc.value.violations
    assert violation.kind == "NonStochasticRow"
    assert violation.row == 0
    assert violation.value == pytest.approx(1.2)
    assert "NonStochasticRow(0, 1.2" in str(exc.value)


def test_identity_needs_self_loop_flag():
    with pytest.raises(NetworkValidationError) as exc:
        engine.validate_network(np.eye(3))
    assert exc.value.kinds() == ["SelfLoop"] * 3
    assert [v.row for v in exc.value.violations] == [0, 1, 2]

    net = engine.validate_network(np.eye(3), allow_self_loops=True)
    assert net.is_identity()


def test_validate_lists_every_violation():
    W = [[0, 0, 0], [0, 1.5, -0.5], [0.5, 0.5, 0]]
    with pytest.raises(NetworkValidationError) as exc:
        engine.validate_network(W)
    kinds = exc.value.kinds()
    assert "IsolatedRow" in kinds
    assert "NegativeWeight" in kinds
    assert "SelfLoop" in kinds
    assert kinds.count("NonStochasticRow") == 1      # row 0 sums to 0; row 1 sums to 1
    negative = [v for v in exc.value.violations if v.kind == "NegativeWeight"][0]
    assert (negative.row, negative.col) == (1, 2)


def test_validate_non_square():
    with pytest.raises(NetworkValidationError) as exc:
        engine.validate_network(np.ones((2, 3)) / 3)
    assert exc.value.kinds() == ["NonSquare"]


def test_network_is_read_only():
    net = engine.validate_network([[0, 1], [1, 0]])
    with pytest.raises(ValueError):
        net.weights[0, 1] = 0.5


# ============================================================================
# generate
# ============================================================================

def test_complete_weights():
    net = engine.generate(GraphSpec(kind="complete", n=4))
    off = ~np.eye(4, dtype=bool)
    assert np.allclose(net.weights[off], 1 / 3)
    assert np.all(np.diag(net.weights) == 0)


def test_ring_weights():
    net = engine.generate(GraphSpec(kind="ring", n=6, k=1))
    for i in range(6):
        row = net.weights[i]
        assert np.count_nonzero(row) == 2
        assert row[(i + 1) % 6] == 0.5
        assert row[(i - 1) % 6] == 0.5


def test_ring_wider_span():
    net = engine.generate(GraphSpec(kind="ring", n=9, k=2))
    assert np.all(np.count_nonzero(net.weights, axis=1) == 4)
    assert np.allclose(net.weights[net.weights > 0], 0.25)


def test_barabasi_albert_properties():
    spec = GraphSpec(kind="barabasi_albert", n=100, m=3, seed=42)
    net = engine.generate(spec)
    W = net.weights

    assert np.all(np.abs(W.sum(axis=1) - 1.0) <= ROW_TOL)
    assert np.all(np.diag(W) == 0)
    # symmetrized: edge both ways, uniform over out-neighbours
    assert np.array_equal(W > 0, (W > 0).T)
    deg = net.out_degrees()
    for i in range(net.n):
        assert np.allclose(W[i][W[i] > 0], 1.0 / deg[i])

    assert len(_bfs_reachable(W)) == 100
    assert is_strongly_connected(net)
    assert net.average_degree() >= 3
    # m (n - m) undirected edges
    assert net.average_degree() == pytest.approx(2 * 3 * 97 / 100)


def test_generate_is_deterministic():
    spec = GraphSpec(kind="barabasi_albert", n=100, m=3, seed=42)
    assert engine.generate(spec) == engine.generate(spec)
    other = engine.generate(GraphSpec(kind="barabasi_albert", n=100, m=3, seed=43))
    assert other != engine.generate(spec)


@pytest.mark.parametrize("spec", [
    GraphSpec(kind="barabasi_albert", n=5, m=5),
    GraphSpec(kind="barabasi_albert", n=5, m=0),
    GraphSpec(kind="ring", n=6, k=3),
    GraphSpec(kind="complete", n=1),
    GraphSpec(kind="complete", n=4, seed=-1),
    GraphSpec(kind="custom_file", n=0),
])
def test_invalid_spec(spec):
    with pytest.raises(InvalidSpec):
        engine.generate(spec)


def test_strong_connectivity_detects_unheard_agent():
    # agent 2 listens to 0, nobody listens to 2
    net = engine.validate_network([[0, 1, 0], [1, 0, 0], [1, 0, 0]])
    assert not is_strongly_connected(net)
    assert len(_bfs_reachable(net.weights)) == 2


# ============================================================================
# save_network / load_network
# ============================================================================

def test_roundtrip_complete(tmp_path):
    net = engine.generate(GraphSpec(kind="complete", n=4))
    path = tmp_path / "net.txt"
    save_network(net, path)
    assert load_network(path) == net


def test_roundtrip_ba_bit_exact(tmp_path):
    net = engine.generate(GraphSpec(kind="barabasi_albert", n=60, m=2, seed=5))
    path = tmp_path / "ba.txt"
    save_network(net, path)
    loaded = load_network(path)
    assert np.array_equal(loaded.weights, net.weights)
    assert b"\r\n" not in path.read_bytes()


def test_roundtrip_identity_with_flag(tmp_path):
    net = engine.validate_network(np.eye(3), allow_self_loops=True)
    path = tmp_path / "eye.txt"
    save_network(net, path)
    assert load_network(path, allow_self_loops=True) == net
    with pytest.raises(NetworkValidationError):
        load_network(path)


def test_custom_file_kind(tmp_path):
    path = _write(tmp_path / "pair.txt", "n 2\n0 1 1\n1 0 1\n")
    net = engine.generate(GraphSpec(kind="custom_file", n=2, path=str(path)))
    assert np.array_equal(net.weights, [[0, 1], [1, 0]])


def test_load_row_sum_point_nine(tmp_path):
    path = _write(tmp_path / "bad.txt", "n 2\n0 1 0.9\n1 0 1\n")
    with pytest.raises(NetworkValidationError) as exc:
        load_network(path)
    assert exc.value.kinds() == ["NonStochasticRow"]


def test_load_renormalizes_small_drift(tmp_path, caplog):
    path = _write(tmp_path / "drift.txt", "n 3\n0 1 0.5\n0 2 0.5000001\n1 0 1\n2 0 1\n")
    with caplog.at_level(logging.WARNING, logger="beliefnet.network.engine"):
        net = load_network(path)
    assert abs(net.weights[0].sum() - 1.0) <= ROW_TOL
    assert any("Renormalizing" in r.message for r in caplog.records)


def test_load_non_numeric_token(tmp_path):
    path = _write(tmp_path / "nan.txt", "# two agents\nn 2\n0 1 abc\n1 0 1\n")
    with pytest.raises(NetworkParseError) as exc:
        load_network(path)
    assert exc.value.line == 3


@pytest.mark.parametrize("text, line", [
    ("", 1),
    ("0 1 1\n", 1),
    ("n 2\n0 1 1\n0 1 1\n", 3),
    ("n 2\n0 5 1\n", 2),
    ("n 2\n0 1\n", 2),
])
def test_load_parse_errors(tmp_path, text, line):
    path = _write(tmp_path / "broken.txt", text)
    with pytest.raises(NetworkParseError) as exc:
        load_network(path)
    assert exc.value.line == line
