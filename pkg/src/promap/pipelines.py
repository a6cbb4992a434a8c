"""End-to-end mapping pipelines.

``hierarchical_multisection`` recursively partitions the task graph along
the machine hierarchy, top level first; block identifiers accumulated on
the way down turn into PE ids at the leaves.  ``integrated_map`` instead
coarsens once, seeds the coarsest graph with a multisection mapping, and
refines the mapping cost directly at every level on the way back up.
Both rely on ``internal_partitioner``, a self-contained multilevel
edge-cut partitioner built from the same coarsening and refinement
machinery run on a flat (single-level) topology.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass

import numpy as np

from .coarsening import build_level_stack, project
from .graph import Graph, extract_subgraphs
from .mapping import BlockConnectivity, Mapping, compute_block_weights
from .refinement import config_for_level, refine
from .topology import Topology, adaptive_imbalance, calc_id, flat_topology
from .util import hash2

log = logging.getLogger(__name__)

# coarsest-graph size target for the internal edge-cut partitioner; the
# mapping pipeline itself uses the larger factor-128 threshold
PARTITIONER_COARSEST_FACTOR = 64


@dataclass
class SplitRecord:
    """Bookkeeping for one partitioning step inside the multisection tree."""

    level: int
    identifier: tuple[int, ...]
    parts: int
    eps_local: float
    subgraph_weight: int
    block_weights: list[int]
    budget_met: bool


def hierarchical_multisection(
    g: Graph,
    t: Topology,
    eps: float,
    partitioner=None,
    seed: int = 0,
    trace: list | None = None,
) -> Mapping:
    """Recursive multisection along the machine hierarchy.

    At hierarchy level i the current subgraph is split into a_i parts with
    a per-step imbalance budget rescaled so that meeting every budget
    keeps the final mapping within the original eps.  Reaching level 0,
    all vertices of the subgraph land on the PE addressed by the branch
    indices collected on the way down.  ``trace``, if given, records one
    entry per partitioning step (including whether its budget was met).
    """
    if g.n == 0:
        raise ValueError("cannot map an empty graph")
    if partitioner is None:
        partitioner = internal_partitioner
    k = t.k
    total = g.total_weight
    assignment = np.zeros(g.n, dtype=np.int64)

    def descend(sub: Graph, level: int, ident: tuple[int, ...],
                translation: np.ndarray, node_seed: int) -> None:
        if sub.n == 0:
            return
        if level == 0:
            assignment[translation] = calc_id(t, list(ident))
            return
        parts = t.hierarchy[level - 1]
        k_sub = math.prod(t.hierarchy[:level])
        eps_local = adaptive_imbalance(eps, total, sub.total_weight, k, k_sub, level)
        if parts == 1:
            part = np.zeros(sub.n, dtype=np.int64)
        else:
            try:
                part = np.asarray(partitioner(sub, parts, eps_local, node_seed),
                                  dtype=np.int64)
            except Exception as exc:
                raise RuntimeError(
                    f"partitioner failed at hierarchy node {list(ident)}"
                ) from exc
            if len(part) != sub.n or part.min() < 0 or part.max() >= parts:
                raise RuntimeError(
                    f"partitioner returned an invalid assignment at node {list(ident)}"
                )
        if trace is not None:
            bw = compute_block_weights(sub.vertex_weights, part, parts)
            budget = (1.0 + eps_local) * sub.total_weight / parts
            trace.append(SplitRecord(
                level, ident, parts, eps_local, sub.total_weight,
                [int(x) for x in bw], bool(bw.max() <= budget),
            ))
        for j, (piece, local_ids) in enumerate(extract_subgraphs(sub, part, parts)):
            descend(piece, level - 1, ident + (j,), translation[local_ids],
                    hash2(node_seed, level, j))

    descend(g, t.levels, (), np.arange(g.n, dtype=np.int64), seed)
    return Mapping.from_assignment(g, assignment, k)


def _multi_source_bfs(g: Graph, sources: list[int]) -> np.ndarray:
    """Hop distances from a source set; -1 where unreachable."""
    dist = np.full(g.n, -1, dtype=np.int64)
    frontier = [s for s in sources]
    for s in frontier:
        dist[s] = 0
    d = 0
    while frontier:
        nxt = []
        d += 1
        for v in frontier:
            for u in g.neighbors(v):
                if dist[u] < 0:
                    dist[u] = d
                    nxt.append(int(u))
        frontier = nxt
    return dist


def greedy_graph_growing(g: Graph, k: int) -> np.ndarray:
    """Deterministic k-way initial partition by simultaneous region growth.

    Seeds come from a farthest-first hop traversal; then the lightest block
    repeatedly claims the frontier vertex it is most strongly connected to,
    falling back to the lowest unassigned vertex when its frontier dries
    up (disconnected graphs).
    """
    n = g.n
    if k == 1:
        return np.zeros(n, dtype=np.int64)
    first = _multi_source_bfs(g, [0])
    unreached = first < 0
    s0 = int(np.flatnonzero(unreached)[0]) if unreached.any() else int(first.argmax())
    seeds = [s0]
    while len(seeds) < k:
        dist = _multi_source_bfs(g, seeds)
        far = dist < 0
        if far.any():
            seeds.append(int(np.flatnonzero(far)[0]))
        else:
            seeds.append(int(dist.argmax()))

    assignment = np.full(n, -1, dtype=np.int64)
    block_weight = [0] * k
    conn: list[dict[int, int]] = [{} for _ in range(k)]
    frontiers: list[list] = [[] for _ in range(k)]
    assigned = 0

    def claim(v: int, b: int) -> None:
        nonlocal assigned
        assignment[v] = b
        block_weight[b] += int(g.vertex_weights[v])
        assigned += 1
        for u, w in zip(g.neighbors(v), g.neighbor_weights(v)):
            u = int(u)
            if assignment[u] < 0:
                c = conn[b].get(u, 0) + int(w)
                conn[b][u] = c
                heapq.heappush(frontiers[b], (-c, u))

    for b, s in enumerate(seeds):
        claim(s, b)
    while assigned < n:
        b = min(range(k), key=lambda x: (block_weight[x], x))
        heap = frontiers[b]
        v = -1
        while heap:
            negc, u = heapq.heappop(heap)
            if assignment[u] >= 0 or conn[b].get(u) != -negc:
                continue  # stale entry
            v = u
            break
        if v < 0:
            v = int(np.flatnonzero(assignment < 0)[0])
        claim(v, b)
    return assignment


def internal_partitioner(g: Graph, k: int, eps_local: float, seed: int = 0) -> np.ndarray:
    """Self-contained multilevel edge-cut partitioner.

    Coarsens with the shared matching machinery, grows k regions on the
    coarsest graph, and refines upward on a flat topology, where the
    mapping cost degenerates to twice the edge cut.  Balance toward
    eps_local is best effort; callers verify the result.
    """
    n = g.n
    if k <= 1 or n == 0:
        return np.zeros(n, dtype=np.int64)
    if n <= k:
        return np.arange(n, dtype=np.int64)
    t_flat = flat_topology(k)
    l_max = (1.0 + eps_local) * g.total_weight / k
    stack = build_level_stack(g, l_max, max(PARTITIONER_COARSEST_FACTOR * k, 2), seed)
    n_levels = len(stack.levels)
    coarsest = stack.levels[-1].graph
    m = Mapping.from_assignment(coarsest, greedy_graph_growing(coarsest, k), k)
    for li in range(n_levels - 1, -1, -1):
        level = stack.levels[li]
        if li < n_levels - 1:
            m = project(m, level)
        conn = BlockConnectivity(level.graph, m.assignment, k)
        cfg = config_for_level(li, n_levels, filter_mode="jet",
                               seed=hash2(seed, 101, li))
        m = refine(level.graph, t_flat, m, conn, cfg, l_max)
    return m.assignment


def integrated_map(
    g: Graph,
    t: Topology,
    eps: float,
    seed: int = 0,
    *,
    coarsest_factor: int = 128,
    phi: float = 0.999,
    rho: int = 2,
    filter_mode: str = "nonneg",
    jet_filter_c: float = 0.25,
    sigma_coarse: float = 0.065,
    sigma_fine: float = 0.005,
    iw_max_finest: int = 10,
) -> Mapping:
    """Multilevel mapping: coarsen, map the coarsest graph, refine upward.

    The coarsest graph (below ``coarsest_factor * k`` vertices) receives
    its mapping from hierarchical multisection over the internal
    partitioner; every level on the way back up is refined against the
    real topology.  An imbalanced final mapping is returned but logged as
    a warning; callers decide how hard to fail.
    """
    if g.n == 0:
        raise ValueError("cannot map an empty graph")
    k = t.k
    l_max = (1.0 + eps) * g.total_weight / k
    stack = build_level_stack(g, l_max, max(coarsest_factor * k, 1), seed)
    n_levels = len(stack.levels)
    m = hierarchical_multisection(stack.levels[-1].graph, t, eps,
                                  internal_partitioner, seed=hash2(seed, 7, 7))
    for li in range(n_levels - 1, -1, -1):
        level = stack.levels[li]
        if li < n_levels - 1:
            m = project(m, level)
        conn = BlockConnectivity(level.graph, m.assignment, k)
        cfg = config_for_level(
            li, n_levels, phi=phi, rho=rho, filter_mode=filter_mode,
            jet_filter_c=jet_filter_c, sigma_coarse=sigma_coarse,
            sigma_fine=sigma_fine, iw_max_finest=iw_max_finest,
            seed=hash2(seed, 211, li),
        )
        m = refine(level.graph, t, m, conn, cfg, l_max)
    if not m.is_balanced(l_max):
        log.warning(
            "integrated mapping left imbalanced: max block weight %d > L_max %.3f",
            m.max_block_weight(), l_max,
        )
    return m
