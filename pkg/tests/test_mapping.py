from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from promap.graph import from_edge_list
from promap.mapping import (
    BlockConnectivity,
    Mapping,
    apply_moves,
    brute_force_map,
    compute_block_weights,
    move_gain,
    random_balanced_assignment,
    total_cost,
    undirected_cost,
)
from promap.topology import Topology, flat_topology

from conftest import (
    graph_adj,
    oracle_conn,
    oracle_edge_cut,
    oracle_total_cost,
    random_assignment,
    random_graph,
)


def path3():
    return from_edge_list(3, [(0, 1, 1), (1, 2, 1)])


def four_cycle():
    return from_edge_list(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 3, 1)])


def test_mapping_block_weights_and_balance():
    g = from_edge_list(4, [(0, 1, 1)], vertex_weights=[2, 3, 4, 5])
    m = Mapping.from_assignment(g, np.array([0, 0, 1, 1]), 2)
    assert list(m.block_weights) == [5, 9]
    assert m.max_block_weight() == 9
    assert m.is_balanced(9)
    assert not m.is_balanced(8.9)
    c = m.copy()
    c.assignment[0] = 1
    assert m.assignment[0] == 0  # deep copy


def test_total_cost_path_example():
    t = Topology((2,), (10,))
    assert total_cost(path3(), t, np.array([0, 0, 1])) == 20


def test_total_cost_single_block_is_zero():
    t = Topology((2, 2), (1, 10))
    rng = np.random.default_rng(0)
    g = random_graph(rng, 15)
    assert total_cost(g, t, np.zeros(15, dtype=np.int64)) == 0


def test_total_cost_flat_topology_is_twice_edge_cut():
    g = four_cycle()
    t = flat_topology(2)
    assert total_cost(g, t, np.array([0, 0, 1, 1])) == 2 * 2
    rng = np.random.default_rng(1)
    for trial in range(10):
        h = random_graph(rng, 20)
        part = random_assignment(rng, 20, 4)
        assert total_cost(h, flat_topology(4), part) == \
            2 * oracle_edge_cut(graph_adj(h), part)


def test_total_cost_matches_double_loop_oracle():
    rng = np.random.default_rng(2)
    h, d = (2, 3), (2, 7)
    t = Topology(h, d)
    for trial in range(10):
        g = random_graph(rng, 12)
        a = random_assignment(rng, 12, t.k)
        assert total_cost(g, t, a) == oracle_total_cost(graph_adj(g), 12, h, d, a)


def test_total_cost_stays_integral_only_for_integral_distances():
    g = path3()
    assert isinstance(total_cost(g, Topology((2,), (3,)), np.array([0, 1, 0])), int)
    assert isinstance(total_cost(g, Topology((2,), (2.5,)), np.array([0, 1, 0])), float)


def test_undirected_cost_halves():
    assert undirected_cost(20) == 10
    assert isinstance(undirected_cost(20), int)
    assert undirected_cost(5.0) == 2.5


def test_move_gain_identity_move_is_zero():
    rng = np.random.default_rng(3)
    g = random_graph(rng, 10)
    t = Topology((2, 2), (1, 10))
    a = random_assignment(rng, 10, 4)
    for v in range(10):
        assert move_gain(g, t, a, v, int(a[v])) == 0


def test_move_gain_single_neighbor_example():
    g = from_edge_list(2, [(0, 1, 3)])
    t = Topology((2, 2), (1, 10))
    a = np.array([0, 0])
    # moving vertex 0 beside its neighbor costs the new distance
    assert move_gain(g, t, a, 0, 2) == 3 * (0 - 10)


def test_move_gain_equals_half_cost_delta():
    rng = np.random.default_rng(4)
    t = Topology((2, 2), (1, 10))
    for trial in range(5):
        g = random_graph(rng, 12)
        a = random_assignment(rng, 12, t.k)
        j0 = total_cost(g, t, a)
        for v in range(12):
            for b in range(t.k):
                a2 = a.copy()
                a2[v] = b
                assert 2 * move_gain(g, t, a, v, b) == j0 - total_cost(g, t, a2)


# ---------------------------------------------------------------------------
# block connectivity


def test_connectivity_matches_oracle():
    rng = np.random.default_rng(5)
    g = random_graph(rng, 25)
    a = random_assignment(rng, 25, 5)
    conn = BlockConnectivity(g, a, 5)
    expect = oracle_conn(graph_adj(g), 25, a, 5)
    assert conn.as_dicts() == expect
    for v in range(25):
        for b in range(5):
            assert conn.conn(v, b) == expect[v].get(b, 0)


def test_connectivity_capacity_is_adjacent_blocks_plus_two():
    g = path3()
    a = np.array([0, 1, 1])
    conn = BlockConnectivity(g, a, 2)
    caps = np.diff(conn.offsets)
    # vertex 1 sees blocks {0, 1}; the endpoints each see one block
    assert list(caps) == [3, 4, 3]


def test_connectivity_add_frees_zero_slots():
    g = path3()
    conn = BlockConnectivity(g, np.array([0, 0, 0]), 2)
    conn.add(1, 0, -1)  # vertex 1 sees block 0 with weight 2
    assert conn.conn(1, 0) == 1
    conn.add(1, 0, -1)
    assert conn.conn(1, 0) == 0
    assert conn.blocks_of(1) == []
    conn.add(1, 1, 4)
    assert conn.conn(1, 1) == 4


def test_connectivity_overflow_rebuild_restores_exact_state():
    # a hub vertex with capacity for 3 distinct blocks is pushed through a
    # move sequence that touches 6 blocks
    star = from_edge_list(7, [(0, i, 1) for i in range(1, 7)])
    a = np.zeros(7, dtype=np.int64)
    conn = BlockConnectivity(star, a, 7)
    m = Mapping.from_assignment(star, a, 7)
    vertices = np.arange(1, 7)
    targets = np.arange(1, 7)
    apply_moves(star, m, conn, vertices, targets)
    assert not conn.overflowed  # rebuild ran inside apply_moves
    expect = oracle_conn(graph_adj(star), 7, m.assignment, 7)
    assert conn.as_dicts() == expect


def test_apply_moves_empty_and_block_weight_recount():
    rng = np.random.default_rng(6)
    g = random_graph(rng, 20)
    a = random_assignment(rng, 20, 4)
    m = Mapping.from_assignment(g, a, 4)
    conn = BlockConnectivity(g, a, 4)
    before = m.assignment.copy()
    apply_moves(g, m, conn, np.array([], dtype=np.int64), np.array([], dtype=np.int64))
    assert (m.assignment == before).all()
    vs = rng.choice(20, size=8, replace=False)
    ts = rng.integers(0, 4, size=8)
    apply_moves(g, m, conn, vs, ts)
    assert (m.block_weights ==
            compute_block_weights(g.vertex_weights, m.assignment, 4)).all()
    assert conn.as_dicts() == oracle_conn(graph_adj(g), 20, m.assignment, 4)


def test_apply_moves_order_independent():
    rng = np.random.default_rng(7)
    g = random_graph(rng, 18)
    a = random_assignment(rng, 18, 4)
    vs = rng.choice(18, size=9, replace=False)
    ts = rng.integers(0, 4, size=9)
    states = []
    for order in (None, list(range(8, -1, -1)), list(rng.permutation(9))):
        m = Mapping.from_assignment(g, a.copy(), 4)
        conn = BlockConnectivity(g, a, 4)
        apply_moves(g, m, conn, vs, ts, _move_order=order)
        states.append((m.assignment.tolist(), conn.as_dicts()))
    assert states[0] == states[1] == states[2]


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30, deadline=None)
def test_connectivity_random_move_sequences_stay_exact(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 14))
    k = int(rng.integers(2, 5))
    g = random_graph(rng, n)
    a = random_assignment(rng, n, k)
    m = Mapping.from_assignment(g, a, k)
    conn = BlockConnectivity(g, a, k)
    for _ in range(4):
        size = int(rng.integers(1, n + 1))
        vs = rng.choice(n, size=size, replace=False)
        ts = rng.integers(0, k, size=size)
        apply_moves(g, m, conn, vs, ts)
        assert conn.as_dicts() == oracle_conn(graph_adj(g), n, m.assignment, k)
        assert (m.block_weights ==
                compute_block_weights(g.vertex_weights, m.assignment, k)).all()


# ---------------------------------------------------------------------------
# exhaustive reference solver


def test_brute_force_two_vertex_path():
    g = from_edge_list(2, [(0, 1, 1)])
    t = flat_topology(2)
    a, j = brute_force_map(g, t, 0.0)
    assert j == 2  # balance forces the split, each direction pays 1
    assert sorted(a.tolist()) == [0, 1]


def test_brute_force_never_above_any_feasible_assignment():
    rng = np.random.default_rng(8)
    g = random_graph(rng, 8, unit_vertex_weights=True)
    t = Topology((2, 2), (1, 10))
    a, j = brute_force_map(g, t, 0.03)
    bw = compute_block_weights(g.vertex_weights, a, t.k)
    l_max = 1.03 * g.total_weight / t.k
    assert bw.max() <= l_max
    for seed in range(5):
        rnd = random_balanced_assignment(g, t, 0.03, seed)
        assert j <= total_cost(g, t, rnd)


def test_brute_force_symmetric_instance_has_twin_optimum():
    g = four_cycle()
    t = flat_topology(2)
    a, j = brute_force_map(g, t, 0.0)
    swapped = 1 - a
    assert total_cost(g, t, swapped) == j
    assert compute_block_weights(g.vertex_weights, swapped, 2).max() == 2


def test_brute_force_guards():
    rng = np.random.default_rng(9)
    g = random_graph(rng, 12, unit_vertex_weights=True)
    with pytest.raises(ValueError):
        brute_force_map(g, flat_topology(12), 0.03, limit=10 ** 6)
    heavy = from_edge_list(2, [(0, 1, 1)], vertex_weights=[100, 1])
    with pytest.raises(ValueError):
        brute_force_map(heavy, flat_topology(2), 0.0)  # no balanced split


def test_random_balanced_assignment_is_balanced():
    rng_graph = random_graph(np.random.default_rng(10), 32, unit_vertex_weights=True)
    t = Topology((2, 2), (1, 10))
    for seed in range(5):
        a = random_balanced_assignment(rng_graph, t, 0.03, seed)
        bw = compute_block_weights(rng_graph.vertex_weights, a, t.k)
        assert bw.max() <= 1.03 * rng_graph.total_weight / t.k
