"""Tests for the oriented multigraph and the local-search family."""

import numpy as np
import pytest

from dyndisc.errors import UnknownEdge
from dyndisc.graph import (
    OrientedGraph,
    discrepancy_one_orientation,
    local_search,
    path_local_search,
    threshold_local_search,
    verify_local_opt,
)
from dyndisc.instances import gen_layered_graph, gen_random_regular


def random_graph(n, m, seed, multi=False):
    rng = np.random.default_rng(seed)
    g = OrientedGraph()
    eid = 0
    while eid < m:
        u, v = (int(x) for x in rng.integers(0, n, 2))
        if u == v:
            continue
        g.add_edge(eid, u, v)
        eid += 1
    return g


def test_flip_single_edge():
    g = OrientedGraph()
    g.add_edge(0, 1, 2)
    assert g.imbalance[1] == -1 and g.imbalance[2] == 1
    g.flip_edge(0)
    assert g.imbalance[1] == 1 and g.imbalance[2] == -1


def test_flip_directed_triangle_potential():
    g = OrientedGraph()
    g.add_edge(0, 0, 1)
    g.add_edge(1, 1, 2)
    g.add_edge(2, 2, 0)
    assert g.potential == 0
    g.flip_edge(1)
    assert g.potential == 8


def test_potential_matches_recomputation_after_random_flips():
    g = random_graph(40, 200, seed=0)
    rng = np.random.default_rng(5)
    for _ in range(100):
        g.flip_edge(int(rng.integers(0, 200)))
    assert g.potential == g.recompute_potential()
    assert sum(g.imbalance.values()) == 0


def test_self_loop_rejected_and_unknown_edge():
    g = OrientedGraph()
    with pytest.raises(ValueError):
        g.add_edge(0, 3, 3)
    g.add_edge(0, 1, 2)
    with pytest.raises(UnknownEdge):
        g.flip_edge(9)
    with pytest.raises(UnknownEdge):
        g.remove_edge(9)


def test_local_search_single_edge_never_flips():
    g = OrientedGraph()
    g.add_edge(0, 5, 6)
    assert local_search(g) == 0


def test_local_search_layered_instance_is_fixpoint():
    g, _ = gen_layered_graph(4, 1)
    assert local_search(g) == 0


def test_local_search_reaches_fixpoint_and_decreases_phi():
    g = random_graph(120, 700, seed=2)
    phi0 = g.potential
    flips = local_search(g)
    ok, witness = verify_local_opt(g, 1, 2)
    assert ok and witness is None
    assert g.potential <= phi0 - 4 * flips  # every flip pays >= 4
    assert flips <= phi0 / 4
    assert sum(g.imbalance.values()) == 0


def test_local_search_regular_expander_bound():
    rng = np.random.default_rng(7)
    edges = gen_random_regular(200, 6, rng)
    g = OrientedGraph()
    for eid, (u, v) in enumerate(edges):
        head = v if rng.random() < 0.5 else u
        g.add_edge(eid, u, v, head)
    local_search(g)
    ok, _ = verify_local_opt(g)
    assert ok
    assert g.max_disc() <= 30 * np.log2(len(edges))


def test_parity_invariance():
    g = random_graph(30, 120, seed=3)
    local_search(g)
    for v in g.incident:
        assert (g.imbalance[v] - g.degree(v)) % 2 == 0


def test_path_local_search_l1_equals_local_search():
    for seed in range(5):
        g1 = random_graph(40, 160, seed=seed)
        g2 = g1.copy()
        local_search(g1)
        path_local_search(g2, 1)
        assert verify_local_opt(g1, 1, 2)[0]
        assert verify_local_opt(g2, 1, 2)[0]


def test_path_local_search_layered_fixtures():
    for k, length in [(4, 1), (4, 3), (6, 3)]:
        g, _ = gen_layered_graph(k, length)
        assert path_local_search(g, length) == 0


def test_path_local_search_forest_low_discrepancy():
    rng = np.random.default_rng(11)
    n = 64
    g = OrientedGraph()
    # random tree, oriented toward the root initially
    for v in range(1, n):
        parent = int(rng.integers(0, v))
        g.add_edge(v, v, parent)
    path_local_search(g, max_len=6)
    assert g.max_disc() <= 3


def test_threshold_delta2_equals_local_search():
    g1 = random_graph(40, 160, seed=9)
    g2 = g1.copy()
    local_search(g1)
    threshold_local_search(g2, 2)
    assert verify_local_opt(g2, 1, 2)[0]
    assert g1.max_disc() == g2.max_disc()


def test_threshold_star_inward_no_flip_at_delta_n():
    g = OrientedGraph()
    n = 10
    for i in range(1, n):
        g.add_edge(i, i, 0, head=0)
    assert threshold_local_search(g, n) == 0


def test_threshold_sweep_bound():
    n = 500
    results = {}
    for delta in (2, 4, 8):
        g = random_graph(n, 2500, seed=21)
        threshold_local_search(g, delta)
        ok, _ = verify_local_opt(g, 1, delta)
        assert ok
        results[delta] = g.max_disc()
        assert g.max_disc() <= 2 * n ** (1 / 3) * delta ** (2 / 3)
    assert results[2] <= results[4] + 2 and results[4] <= results[8] + 2


def test_verify_local_opt_witness():
    g = OrientedGraph()
    g.add_edge(0, 1, 2)
    g.add_edge(1, 3, 2)
    g.add_edge(2, 4, 2)
    g.add_edge(3, 5, 2)  # vertex 2 has imbalance 4
    ok, witness = verify_local_opt(g, 1, 2)
    assert not ok and len(witness) == 1
    head = g.head(witness[0])
    tail = g.tail(witness[0])
    assert g.imbalance[head] - g.imbalance[tail] > 2


def test_discrepancy_one_even_cycle():
    g = OrientedGraph()
    for i in range(6):
        g.add_edge(i, i, (i + 1) % 6)
    discrepancy_one_orientation(g)
    assert set(g.imbalance.values()) == {0}


def test_discrepancy_one_tree():
    rng = np.random.default_rng(4)
    g = OrientedGraph()
    for v in range(1, 40):
        g.add_edge(v, v, int(rng.integers(0, v)))
    discrepancy_one_orientation(g)
    assert all(b in (-1, 0, 1) for b in g.imbalance.values())


def test_discrepancy_one_random_graph_parity_oracle():
    g = random_graph(300, 2000, seed=8, multi=True)
    discrepancy_one_orientation(g)
    assert g.max_disc() <= 1
    for v in g.incident:
        if g.degree(v) % 2 == 0:
            assert g.imbalance[v] == 0
        else:
            assert abs(g.imbalance[v]) == 1
    # also a local-search fixpoint
    assert verify_local_opt(g, 1, 2)[0]


def test_dump_load_roundtrip(tmp_path):
    g = random_graph(20, 50, seed=12)
    local_search(g)
    path = tmp_path / "graph.txt"
    g.dump(path)
    h = OrientedGraph.load(path)
    assert len(h.edges) == len(g.edges)
    assert h.max_disc() == g.max_disc()
    assert sorted(h.imbalance.values()) == sorted(g.imbalance.values())
