"""Multilevel coarsening: matching, edge contraction, and the level stack.

Heavy-edge matching rates each edge by weight squared over the product of
the endpoint weights and pairs mutually preferring vertices.  Unmatched
vertices then get a chance through two-hop matching (leaf, twin, relative).
Matched pairs are contracted with a hash-table scheme that fuses parallel
edges and drops self-loops.  Repeating this yields a stack of ever smaller
graphs that downstream pipelines refine from coarsest to finest.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graph import Graph
from .util import hash2, splitmix64

# matching stops once this fraction of vertices is matched; going higher
# leaves fewer levels for refinement and hurt quality in tuning
TARGET_MATCH_FRACTION = 0.40
HEAVY_EDGE_ROUNDS = 2
TWO_HOP_REPS = 3
MATCHMAKER_MAX_DEGREE = 8
# a matching round that shrinks the graph by less than this factor stalls
STALL_FACTOR = 1.02


@dataclass
class MatchingState:
    preferred: np.ndarray        # int64, -1 = no preference
    matched_partner: np.ndarray  # int64, -1 = unmatched

    @classmethod
    def empty(cls, n: int) -> "MatchingState":
        return cls(np.full(n, -1, dtype=np.int64), np.full(n, -1, dtype=np.int64))

    @property
    def match_fraction(self) -> float:
        n = len(self.matched_partner)
        if n == 0:
            return 1.0
        return float((self.matched_partner >= 0).sum()) / n

    def match(self, u: int, v: int) -> None:
        self.matched_partner[u] = v
        self.matched_partner[v] = u


def rate_edge(g: Graph, u: int, v: int, w: int, seed: int) -> tuple[Fraction, int]:
    """Comparable rating of edge {u,v}: weight² over endpoint weight product.

    Fractions compare exactly (integer cross multiplication, no float
    division).  The second key is a deterministic pair hash that breaks
    ties between equal ratings without ever reordering distinct ones.
    """
    rating = Fraction(int(w) * int(w), int(g.vertex_weights[u]) * int(g.vertex_weights[v]))
    return rating, hash2(seed, min(u, v), max(u, v))


def heavy_edge_matching_round(
    g: Graph, state: MatchingState, l_max: float, seed: int
) -> MatchingState:
    """One round of mutual-preference matching on the rated edges.

    Every unmatched vertex picks its best unmatched neighbor (pairs whose
    combined weight would break L_max are skipped); v and u match iff they
    picked each other.
    """
    matched = state.matched_partner
    preferred = np.full(g.n, -1, dtype=np.int64)
    for v in range(g.n):
        if matched[v] >= 0:
            continue
        c_v = int(g.vertex_weights[v])
        best_key = None
        best_u = -1
        for u, w in zip(g.neighbors(v), g.neighbor_weights(v)):
            u = int(u)
            if matched[u] >= 0:
                continue
            if c_v + int(g.vertex_weights[u]) > l_max:
                continue
            key = rate_edge(g, v, u, int(w), seed)
            if best_key is None or key > best_key:
                best_key, best_u = key, u
        preferred[v] = best_u
    state.preferred = preferred
    for v in range(g.n):
        u = preferred[v]
        if u >= 0 and v < u and preferred[u] == v:
            state.match(v, int(u))
    return state


def _pair_up(state: MatchingState, group: list[int], vw: np.ndarray, l_max: float) -> None:
    """Greedily match consecutive eligible vertices of an id-sorted group."""
    i = 0
    while i + 1 < len(group):
        a, b = group[i], group[i + 1]
        if state.matched_partner[a] >= 0:
            i += 1
            continue
        if state.matched_partner[b] >= 0 or int(vw[a]) + int(vw[b]) > l_max:
            i += 1
            continue
        state.match(a, b)
        i += 2


def two_hop_matching(
    g: Graph, state: MatchingState, l_max: float,
    max_reps: int = TWO_HOP_REPS, target: float = TARGET_MATCH_FRACTION,
) -> MatchingState:
    """Match vertices that share structure but no direct heavy edge.

    Three sub-phases per repetition, each checked against the target
    fraction before running: leaf pairs hanging off one common neighbor,
    twin pairs with identical neighborhoods, and relative pairs introduced
    by a low-degree matchmaker vertex.
    """
    vw = g.vertex_weights
    degrees = np.diff(g.offsets)
    for _ in range(max_reps):
        if state.match_fraction >= target:
            return state
        # leaves: unmatched degree-1 vertices grouped by their only neighbor
        leaves: dict[int, list[int]] = {}
        for v in range(g.n):
            if degrees[v] == 1 and state.matched_partner[v] < 0:
                leaves.setdefault(int(g.neighbors(v)[0]), []).append(v)
        for _, group in sorted(leaves.items()):
            _pair_up(state, group, vw, l_max)
        if state.match_fraction >= target:
            return state
        # twins: identical sorted neighborhoods (a mutual edge makes the
        # neighborhoods differ, so twins are never adjacent)
        twins: dict[tuple, list[int]] = {}
        for v in range(g.n):
            if degrees[v] >= 1 and state.matched_partner[v] < 0:
                twins.setdefault(tuple(sorted(g.neighbors(v).tolist())), []).append(v)
        for key in sorted(twins):
            _pair_up(state, twins[key], vw, l_max)
        if state.match_fraction >= target:
            return state
        # relatives: a low-degree matchmaker pairs up its unmatched neighbors
        progressed = False
        for mm in range(g.n):
            if degrees[mm] > MATCHMAKER_MAX_DEGREE:
                continue
            group = sorted(
                int(u) for u in g.neighbors(mm) if state.matched_partner[u] < 0
            )
            before = state.match_fraction
            _pair_up(state, group, vw, l_max)
            progressed = progressed or state.match_fraction > before
        if not progressed:
            return state
    return state


def match_graph(g: Graph, l_max: float, seed: int) -> MatchingState:
    """Heavy-edge rounds followed by two-hop matching if still too sparse."""
    state = MatchingState.empty(g.n)
    for r in range(HEAVY_EDGE_ROUNDS):
        if state.match_fraction >= TARGET_MATCH_FRACTION:
            break
        heavy_edge_matching_round(g, state, l_max, splitmix64(seed ^ (r + 1)))
    if state.match_fraction < TARGET_MATCH_FRACTION:
        two_hop_matching(g, state, l_max)
    return state


def coarse_map_from_matching(state: MatchingState) -> tuple[np.ndarray, int]:
    """Coarse vertex ids by prefix scan over match roots in vertex order.

    The root of a pair is its lower endpoint; unmatched vertices are their
    own root.  Scanning roots in vertex order keeps ids deterministic.
    """
    n = len(state.matched_partner)
    roots = np.arange(n, dtype=np.int64)
    matched = state.matched_partner >= 0
    roots[matched] = np.minimum(roots[matched], state.matched_partner[matched])
    is_root = roots == np.arange(n)
    ids = np.cumsum(is_root) - 1
    return ids[roots], int(is_root.sum())


def contract(g: Graph, coarse_map: np.ndarray, n_c: int, _edge_order=None) -> Graph:
    """Contract a graph along a coarse map, fusing parallel edges.

    Works in hash-table space sized by a per-coarse-vertex degree-sum upper
    bound: offsets from an exclusive prefix sum, then every directed edge
    inserts (or accumulates onto) its coarse target in the slot range of
    its coarse source, probing linearly from a hash of the target.
    Self-loops are skipped; CSR extraction drops the empty slots.  Edge
    processing order (``_edge_order``) never changes the resulting graph
    as a labeled weighted graph, only the within-CSR edge order.
    """
    coarse_map = np.asarray(coarse_map, dtype=np.int64)
    if len(coarse_map) != g.n:
        raise ValueError("coarse map length mismatch")
    if g.n and (coarse_map.min() < 0 or coarse_map.max() >= n_c):
        raise ValueError(f"coarse id out of range [0,{n_c})")
    degrees = np.diff(g.offsets)
    bound = np.bincount(coarse_map, weights=degrees, minlength=n_c).astype(np.int64)
    table_offsets = np.zeros(n_c + 1, dtype=np.int64)
    np.cumsum(bound, out=table_offsets[1:])
    size = int(table_offsets[-1])
    h_v = np.full(size, -1, dtype=np.int64)
    h_w = np.zeros(size, dtype=np.int64)

    cu_all = coarse_map[g.edge_sources]
    cv_all = coarse_map[g.edge_targets]
    order = range(len(g.edge_targets)) if _edge_order is None else _edge_order
    for e in order:
        cu = int(cu_all[e])
        cv = int(cv_all[e])
        if cu == cv:
            continue
        lo = int(table_offsets[cu])
        cap = int(table_offsets[cu + 1]) - lo
        j = splitmix64(cv) % cap
        for _ in range(cap):
            s = lo + j
            if h_v[s] == cv:
                h_w[s] += g.edge_weights[e]
                break
            if h_v[s] == -1:
                h_v[s] = cv
                h_w[s] = g.edge_weights[e]
                break
            j = (j + 1) % cap
        else:
            raise AssertionError("degree-sum bound violated")

    occupied = h_v != -1
    coarse_vw = np.zeros(n_c, dtype=np.int64)
    np.add.at(coarse_vw, coarse_map, g.vertex_weights)
    if size:
        slot_owner = np.repeat(np.arange(n_c, dtype=np.int64), bound)
        counts = np.bincount(slot_owner[occupied], minlength=n_c).astype(np.int64)
    else:
        counts = np.zeros(n_c, dtype=np.int64)
    offsets = np.zeros(n_c + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return Graph(offsets, h_v[occupied], h_w[occupied], coarse_vw)


@dataclass
class Level:
    """One rung of the multilevel ladder: a graph plus its map one level up."""

    graph: Graph
    coarse_map: np.ndarray | None  # None on the coarsest level
    n_c: int


@dataclass
class LevelStack:
    levels: list[Level]  # finest (the input) first

    def __len__(self) -> int:
        return len(self.levels)


def project(m_coarse, level: Level):
    """Pull a coarse mapping down one level: every fine vertex inherits the
    block of its coarse image.  Cost and block weights are unchanged."""
    from .mapping import Mapping

    if level.coarse_map is None:
        raise ValueError("coarsest level has nothing to project from")
    return Mapping(m_coarse.assignment[level.coarse_map],
                   m_coarse.block_weights.copy())


def build_level_stack(g: Graph, l_max: float, stop_threshold: int, seed: int) -> LevelStack:
    """Coarsen until below the vertex threshold or the reduction stalls."""
    if stop_threshold < 1:
        raise ValueError("stop_threshold must be >= 1")
    levels: list[Level] = []
    current = g
    while current.n >= stop_threshold:
        state = match_graph(current, l_max, splitmix64(seed ^ len(levels)))
        coarse_map, n_c = coarse_map_from_matching(state)
        if n_c * STALL_FACTOR > current.n:
            break
        coarse = contract(current, coarse_map, n_c)
        levels.append(Level(current, coarse_map, n_c))
        current = coarse
    levels.append(Level(current, None, current.n))
    return LevelStack(levels)
