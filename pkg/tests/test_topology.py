import numpy as np
import pytest

from bipadmm.graph import Graph, GraphError, is_connected
from bipadmm.topology import (
    bipartition,
    bipartition_traced,
    build_mst,
    build_mst_traced,
    simplify,
)
from bipadmm.testutil import random_connected


def test_mst_triangle_lowest_tie_break():
    g = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    tree = build_mst(g, root=0, tie_break="lowest")
    assert tree.edges == frozenset({(0, 1), (0, 2)})


def test_mst_is_spanning_tree_of_original():
    rng = np.random.default_rng(0)
    for _ in range(25):
        l = int(rng.integers(2, 30))
        g = random_connected(rng, l)
        tree = build_mst(g, root=int(rng.integers(l)), seed=int(rng.integers(1000)))
        assert tree.node_count == l
        assert tree.edge_count == l - 1
        assert is_connected(tree)  # l-1 edges + connected => acyclic
        assert tree.edges <= g.edges


def test_mst_seeded_determinism():
    rng = np.random.default_rng(1)
    g = random_connected(rng, 15)
    assert build_mst(g, root=2, seed=7) == build_mst(g, root=2, seed=7)


def test_mst_exactly_one_probe_broadcast_per_node():
    rng = np.random.default_rng(2)
    for _ in range(10):
        g = random_connected(rng, int(rng.integers(2, 25)))
        run = build_mst_traced(g, root=0, seed=3)
        assert [st.probe_broadcasts for st in run.states] == [1] * g.node_count


def test_mst_disconnected_graph_rejected():
    g = Graph.from_edges(4, [(0, 1), (2, 3)])
    with pytest.raises(GraphError, match="disconnected"):
        build_mst(g, root=0)


def test_mst_root_out_of_range():
    g = Graph.from_edges(2, [(0, 1)])
    with pytest.raises(GraphError):
        build_mst(g, root=5)


# --- two-coloring ----------------------------------------------------------

def test_bipartition_path_alternates():
    tree = Graph.from_edges(5, [(i, i + 1) for i in range(4)])
    sbg = bipartition(tree, root=0)
    assert sbg.labels == ("H", "T", "H", "T", "H")
    sbg = bipartition(tree, root=1)
    assert sbg.labels == ("T", "H", "T", "H", "T")


def test_bipartition_label_count():
    rng = np.random.default_rng(3)
    for _ in range(10):
        l = int(rng.integers(2, 30))
        tree = build_mst(random_connected(rng, l), root=0, seed=1)
        run = bipartition_traced(tree, root=0)
        # root labels itself; every other node hears exactly one Label
        expected = [0 if i == 0 else 1 for i in range(l)]
        assert run.labels_received == expected


def test_bipartition_rejects_cycle():
    g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    with pytest.raises(GraphError):
        bipartition(g, root=0)


def test_bipartition_rejects_forest():
    g = Graph.from_edges(4, [(0, 1), (2, 3)])
    with pytest.raises(GraphError):
        bipartition(g, root=0)


# --- end to end ------------------------------------------------------------

def test_simplify_produces_valid_sbg():
    rng = np.random.default_rng(4)
    for _ in range(15):
        g = random_connected(rng, int(rng.integers(2, 30)))
        sbg = simplify(g, seed=int(rng.integers(1000)))
        assert sbg.graph.edges <= g.edges
        assert sbg.graph.edge_count == g.node_count - 1
        for i, j in sbg.graph.edges:
            assert sbg.labels[i] != sbg.labels[j]


def test_simplify_seeded_determinism():
    rng = np.random.default_rng(5)
    g = random_connected(rng, 20)
    a = simplify(g, seed=11)
    b = simplify(g, seed=11)
    assert a.graph == b.graph and a.labels == b.labels
