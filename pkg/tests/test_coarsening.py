from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from promap.coarsening import (
    MatchingState,
    build_level_stack,
    coarse_map_from_matching,
    contract,
    heavy_edge_matching_round,
    match_graph,
    project,
    rate_edge,
    two_hop_matching,
)
from promap.graph import from_edge_list, gen_grid
from promap.mapping import Mapping, total_cost
from promap.topology import Topology

from conftest import graph_adj, oracle_contract, random_graph

L_BIG = 10 ** 9  # weight bound that never restricts matching


def test_rate_edge_values():
    g = from_edge_list(4, [(0, 1, 2), (1, 2, 3)], vertex_weights=[1, 1, 3, 1])
    r01, _ = rate_edge(g, 0, 1, 2, seed=0)
    assert r01 == Fraction(4, 1)
    r12, _ = rate_edge(g, 1, 2, 3, seed=0)
    assert r12 == Fraction(9, 3) == 3
    assert r01 > r12  # exact comparison, no float division


def test_rate_edge_tie_break_is_deterministic_and_symmetric():
    g = from_edge_list(4, [(0, 1, 2), (2, 3, 2)])
    a = rate_edge(g, 0, 1, 2, seed=9)
    b = rate_edge(g, 2, 3, 2, seed=9)
    assert a[0] == b[0]
    assert a[1] != b[1]  # hash separates equal ratings
    assert rate_edge(g, 1, 0, 2, seed=9) == a  # unordered pair
    assert rate_edge(g, 0, 1, 2, seed=9) == a  # repeatable


def test_heavy_edge_matching_single_edge():
    g = from_edge_list(2, [(0, 1, 1)])
    state = heavy_edge_matching_round(g, MatchingState.empty(2), L_BIG, seed=0)
    assert state.matched_partner[0] == 1
    assert state.matched_partner[1] == 0


def test_heavy_edge_matching_prefers_heavy_edge():
    g = from_edge_list(3, [(0, 1, 5), (1, 2, 1)])
    state = heavy_edge_matching_round(g, MatchingState.empty(3), L_BIG, seed=0)
    assert state.matched_partner[0] == 1
    assert state.matched_partner[2] == -1


def test_heavy_edge_matching_star_matches_one_leaf():
    g = from_edge_list(5, [(0, i, 1) for i in range(1, 5)])
    state = heavy_edge_matching_round(g, MatchingState.empty(5), L_BIG, seed=3)
    partner = int(state.matched_partner[0])
    assert partner in {1, 2, 3, 4}
    assert state.matched_partner[partner] == 0
    assert sum(state.matched_partner >= 0) == 2
    again = heavy_edge_matching_round(g, MatchingState.empty(5), L_BIG, seed=3)
    assert (again.matched_partner == state.matched_partner).all()


def test_heavy_edge_matching_respects_weight_bound():
    g = from_edge_list(2, [(0, 1, 1)], vertex_weights=[3, 3])
    state = heavy_edge_matching_round(g, MatchingState.empty(2), 5, seed=0)
    assert (state.matched_partner == -1).all()


def test_two_hop_leaves_pair_up():
    g = from_edge_list(5, [(0, i, 1) for i in range(1, 5)])
    state = two_hop_matching(g, MatchingState.empty(5), L_BIG)
    assert state.matched_partner[1] == 2
    assert state.matched_partner[3] == 4
    assert state.matched_partner[0] == -1


def test_two_hop_twins_match():
    # 0 and 1 share the neighborhood {2, 3} without a mutual edge
    g = from_edge_list(4, [(0, 2, 1), (0, 3, 1), (1, 2, 1), (1, 3, 1)])
    state = two_hop_matching(g, MatchingState.empty(4), L_BIG)
    assert state.matched_partner[0] == 1


def test_two_hop_noop_when_fraction_already_met():
    g = from_edge_list(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])
    state = heavy_edge_matching_round(g, MatchingState.empty(3), L_BIG, seed=0)
    assert state.match_fraction >= 2 / 3
    before = state.matched_partner.copy()
    two_hop_matching(g, state, L_BIG)
    assert (state.matched_partner == before).all()


def test_match_graph_validity_and_determinism():
    rng = np.random.default_rng(0)
    for trial in range(5):
        g = random_graph(rng, 40)
        l_max = 1.03 * g.total_weight / 2
        state = match_graph(g, l_max, seed=trial)
        partner = state.matched_partner
        for v in range(g.n):
            p = int(partner[v])
            if p >= 0:
                assert p != v
                assert partner[p] == v
                assert g.vertex_weights[v] + g.vertex_weights[p] <= l_max
        repeat = match_graph(g, l_max, seed=trial)
        assert (repeat.matched_partner == partner).all()


def test_match_graph_reaches_target_fraction_on_grids():
    g = gen_grid(16, 16)
    state = match_graph(g, L_BIG, seed=1)
    assert state.match_fraction >= 0.40


def test_coarse_map_from_matching_prefix_ids():
    state = MatchingState.empty(5)
    state.match(1, 3)
    cm, n_c = coarse_map_from_matching(state)
    # roots in vertex order: 0, 1(pair), 2, 4
    assert n_c == 4
    assert list(cm) == [0, 1, 2, 1, 3]


def test_contract_path_pair():
    g = from_edge_list(3, [(0, 1, 1), (1, 2, 1)])
    coarse = contract(g, np.array([0, 0, 1]), 2)
    assert coarse.n == 2 and coarse.m == 1
    assert graph_adj(coarse) == {(0, 1): 1}
    assert list(coarse.vertex_weights) == [2, 1]


def test_contract_triangle_fuses_parallel_edges():
    g = from_edge_list(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])
    coarse = contract(g, np.array([0, 0, 1]), 2)
    assert graph_adj(coarse) == {(0, 1): 2}


def test_contract_matches_serial_oracle():
    rng = np.random.default_rng(1)
    for trial in range(5):
        g = random_graph(rng, 50)
        cm = rng.integers(0, 20, size=50)
        cm[np.random.default_rng(trial).permutation(50)[:20]] = np.arange(20)
        coarse = contract(g, cm, 20)
        coarse.validate()
        cvw, cadj = oracle_contract(graph_adj(g), g.vertex_weights, cm, 20)
        assert list(coarse.vertex_weights) == cvw
        assert graph_adj(coarse) == cadj


def test_contract_is_edge_order_independent():
    rng = np.random.default_rng(2)
    g = random_graph(rng, 30)
    cm = rng.integers(0, 12, size=30)
    cm[:12] = np.arange(12)
    base = contract(g, cm, 12)
    for seed in range(3):
        order = np.random.default_rng(seed).permutation(len(g.edge_targets))
        shuffled = contract(g, cm, 12, _edge_order=order)
        assert graph_adj(shuffled) == graph_adj(base)
        assert (shuffled.vertex_weights == base.vertex_weights).all()


def test_contract_rejects_out_of_range():
    g = from_edge_list(2, [(0, 1, 1)])
    with pytest.raises(ValueError):
        contract(g, np.array([0, 5]), 2)


def test_build_level_stack_small_graph_single_level():
    g = from_edge_list(3, [(0, 1, 1), (1, 2, 1)])
    stack = build_level_stack(g, L_BIG, stop_threshold=100, seed=0)
    assert len(stack) == 1
    assert stack.levels[0].graph is g
    assert stack.levels[0].coarse_map is None


def test_build_level_stack_grid_monotone_and_conserving():
    g = gen_grid(64, 64)
    l_max = 1.03 * g.total_weight / 4
    stack = build_level_stack(g, l_max, stop_threshold=512, seed=0)
    counts = [lvl.graph.n for lvl in stack.levels]
    assert counts[0] == 4096
    assert all(a > b for a, b in zip(counts, counts[1:]))
    assert counts[-1] < 512
    assert all(lvl.graph.total_weight == g.total_weight for lvl in stack.levels)
    for fine, coarse in zip(stack.levels, stack.levels[1:]):
        assert fine.coarse_map is not None
        assert fine.n_c == coarse.graph.n
        assert set(fine.coarse_map.tolist()) == set(range(fine.n_c))


def test_project_preserves_cost_and_weights():
    rng = np.random.default_rng(3)
    g = random_graph(rng, 60)
    t = Topology((2, 2), (1, 10))
    l_max = 1.03 * g.total_weight / 4
    stack = build_level_stack(g, l_max, stop_threshold=16, seed=0)
    assert len(stack) >= 2
    level = stack.levels[0]
    coarse_graph = stack.levels[1].graph
    a_c = np.random.default_rng(4).integers(0, 4, size=coarse_graph.n)
    m_c = Mapping.from_assignment(coarse_graph, a_c, 4)
    j_coarse = total_cost(coarse_graph, t, m_c.assignment)
    m_f = project(m_c, level)
    assert total_cost(level.graph, t, m_f.assignment) == j_coarse
    assert (m_f.block_weights == m_c.block_weights).all()


def test_project_identity_map():
    g = from_edge_list(3, [(0, 1, 1), (1, 2, 1)])
    from promap.coarsening import Level

    lvl = Level(g, np.array([0, 1, 2]), 3)
    m = Mapping.from_assignment(g, np.array([0, 1, 0]), 2)
    out = project(m, lvl)
    assert (out.assignment == m.assignment).all()


def test_project_raises_on_coarsest_level():
    g = from_edge_list(2, [(0, 1, 1)])
    from promap.coarsening import Level

    lvl = Level(g, None, g.n)
    m = Mapping.from_assignment(g, np.array([0, 1]), 2)
    with pytest.raises(ValueError):
        project(m, lvl)
