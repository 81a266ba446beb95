import numpy as np
import pytest

from neseek.errors import DimensionError, DomainError
from neseek.graph import CommGraph, check_acyclic, check_connected, neighbors


def adjacency(g):
    M = np.zeros((g.agent_count, g.agent_count))
    for j, i in g.edges:
        M[i - 1, j - 1] = 1.0
    return M


def random_dag(rng, n):
    # Edges only from lower to higher label, then scrambled.
    perm = rng.permutation(n) + 1
    edges = []
    for a in range(1, n + 1):
        for b in range(a + 1, n + 1):
            if rng.random() < 0.4:
                edges.append((int(perm[a - 1]), int(perm[b - 1])))
    return CommGraph(n, directed=True, edges=edges)


def test_neighbors_directed():
    g = CommGraph(4, directed=True, edges=[(1, 2), (1, 3)])
    assert neighbors(g, 2) == {1}
    assert neighbors(g, 3) == {1}
    assert neighbors(g, 1) == set()


def test_neighbors_empty():
    g = CommGraph(3, directed=True, edges=[])
    for i in (1, 2, 3):
        assert neighbors(g, i) == set()


def test_neighbors_undirected_symmetric():
    g = CommGraph(2, directed=False, edges=[(1, 2), (2, 1)])
    assert neighbors(g, 1) == {2}
    assert neighbors(g, 2) == {1}


def test_neighbors_index_range():
    g = CommGraph(2, directed=True, edges=[])
    with pytest.raises(DimensionError):
        neighbors(g, 0)
    with pytest.raises(DimensionError):
        neighbors(g, 3)


def test_no_self_edges():
    with pytest.raises(DomainError):
        CommGraph(3, directed=True, edges=[(2, 2)])


def test_edge_endpoints_in_range():
    with pytest.raises(DomainError):
        CommGraph(3, directed=True, edges=[(1, 4)])


def test_undirected_requires_symmetry():
    with pytest.raises(DomainError):
        CommGraph(3, directed=False, edges=[(1, 2)])


def test_acyclic_diamond():
    g = CommGraph(4, directed=True, edges=[(1, 2), (1, 3), (2, 4), (3, 4)])
    ok, order = check_acyclic(g)
    assert ok
    assert list(order) == [1, 2, 3, 4]


def test_acyclic_two_cycle():
    g = CommGraph(2, directed=True, edges=[(1, 2), (2, 1)])
    ok, cycle = check_acyclic(g)
    assert not ok
    # The witness walks a closed directed loop.
    assert cycle[0] == cycle[-1]
    assert set(cycle) == {1, 2}


def test_acyclic_empty_graph():
    g = CommGraph(5, directed=True, edges=[])
    ok, order = check_acyclic(g)
    assert ok
    assert list(order) == [1, 2, 3, 4, 5]


def test_acyclic_rejects_undirected():
    g = CommGraph(2, directed=False, edges=[(1, 2), (2, 1)])
    with pytest.raises(DomainError):
        check_acyclic(g)


def test_acyclic_iff_relabeled_strictly_lower_triangular():
    rng = np.random.default_rng(17)
    for _ in range(50):
        n = int(rng.integers(2, 13))
        g = random_dag(rng, n)
        ok, order = check_acyclic(g)
        assert ok
        # Relabel agents by the topological order: receiving agents get
        # higher indices, so the adjacency becomes strictly lower
        # triangular (exact-zero pattern, not a tolerance test).
        pos = {agent: k for k, agent in enumerate(order)}
        P = np.zeros((n, n))
        for agent, k in pos.items():
            P[k, agent - 1] = 1.0
        M = P @ adjacency(g) @ P.T
        assert np.array_equal(np.triu(M), np.zeros((n, n)))


def test_cycle_detected_on_random_dag_plus_back_edge():
    rng = np.random.default_rng(23)
    found = 0
    for _ in range(50):
        n = int(rng.integers(3, 10))
        g = random_dag(rng, n)
        ok, order = check_acyclic(g)
        assert ok
        if len(g.edges) == 0:
            continue
        # Close a loop: add the reverse of a path endpoint pair.
        j, i = sorted(g.edges)[0]
        g2 = CommGraph(n, directed=True, edges=list(g.edges) + [(i, j)])
        ok2, cycle = check_acyclic(g2)
        assert not ok2
        assert cycle[0] == cycle[-1]
        found += 1
    assert found > 0


def test_connected_undirected_path():
    g = CommGraph(3, directed=False,
                  edges=[(1, 2), (2, 1), (2, 3), (3, 2)])
    assert check_connected(g) == "connected-undirected"


def test_disconnected_undirected():
    g = CommGraph(3, directed=False, edges=[(1, 2), (2, 1)])
    assert check_connected(g) == "disconnected"


def test_strongly_connected_ring():
    g = CommGraph(3, directed=True, edges=[(1, 2), (2, 3), (3, 1)])
    assert check_connected(g) == "strongly-connected"


def test_weakly_connected_chain():
    g = CommGraph(3, directed=True, edges=[(1, 2), (2, 3)])
    assert check_connected(g) == "weakly-connected"


def test_disconnected_digraph():
    g = CommGraph(4, directed=True, edges=[(1, 2)])
    assert check_connected(g) == "disconnected"


def test_strong_implies_weak_on_random_digraphs():
    rng = np.random.default_rng(29)
    strong_seen = 0
    for _ in range(100):
        n = int(rng.integers(2, 9))
        edges = []
        for a in range(1, n + 1):
            for b in range(1, n + 1):
                if a != b and rng.random() < 0.35:
                    edges.append((a, b))
        g = CommGraph(n, directed=True, edges=edges)
        verdict = check_connected(g)
        if verdict == "strongly-connected":
            strong_seen += 1
            skeleton = CommGraph(
                n, directed=True,
                edges=list({(a, b) for a, b in edges}
                           | {(b, a) for a, b in edges}),
            )
            assert check_connected(skeleton) != "disconnected"
    assert strong_seen > 0
