"""Shared test oracles and instance generators.

Every oracle here is an independent reimplementation of the quantity it
checks: slow, double-loop, dictionary-based Python, kept deliberately far
from the package's CSR/vectorized code paths.
"""

from __future__ import annotations

import math

import numpy as np

from promap.graph import Graph, from_edge_list

# ---------------------------------------------------------------------------
# topology oracles


def oracle_digits(hierarchy, x):
    """Mixed-radix digits of a PE id, least significant (level 1) first."""
    digs = []
    for a in hierarchy:
        x, r = divmod(x, a)
        digs.append(r)
    return digs


def oracle_pe_distance(hierarchy, distances, x, y):
    if x == y:
        return 0
    dx = oracle_digits(hierarchy, x)
    dy = oracle_digits(hierarchy, y)
    for i in range(len(hierarchy) - 1, -1, -1):
        if dx[i] != dy[i]:
            return distances[i]
    return 0


def oracle_calc_id(hierarchy, identifier):
    """Find the unique PE whose top-down digit list equals the identifier."""
    k = math.prod(hierarchy)
    for pe in range(k):
        if list(reversed(oracle_digits(hierarchy, pe))) == list(identifier):
            return pe
    raise AssertionError(f"no PE matches identifier {identifier}")


# ---------------------------------------------------------------------------
# graph and objective oracles


def graph_adj(g: Graph) -> dict[tuple[int, int], int]:
    """Undirected edge dict {(min,max): weight} straight off the CSR arrays."""
    adj = {}
    for u in range(g.n):
        for e in range(int(g.offsets[u]), int(g.offsets[u + 1])):
            v = int(g.edge_targets[e])
            key = (min(u, v), max(u, v))
            w = int(g.edge_weights[e])
            if key in adj:
                assert adj[key] == w, "asymmetric weight"
            else:
                adj[key] = w
    return adj


def oracle_total_cost(adj, n, hierarchy, distances, assignment):
    """J as the literal double loop over ordered vertex pairs."""
    j = 0
    for i in range(n):
        for jx in range(n):
            if i == jx:
                continue
            w = adj.get((min(i, jx), max(i, jx)), 0)
            if w:
                j += w * oracle_pe_distance(
                    hierarchy, distances, int(assignment[i]), int(assignment[jx])
                )
    return j


def oracle_edge_cut(adj, assignment):
    return sum(w for (u, v), w in adj.items() if assignment[u] != assignment[v])


def oracle_conn(adj, n, assignment, k):
    """Per-vertex dict block -> summed incident edge weight."""
    tables = [dict() for _ in range(n)]
    for (u, v), w in adj.items():
        bu, bv = int(assignment[u]), int(assignment[v])
        tables[u][bv] = tables[u].get(bv, 0) + w
        tables[v][bu] = tables[v].get(bu, 0) + w
    return tables


def oracle_contract(adj, vertex_weights, coarse_map, n_c):
    """Serial dictionary contraction: fused parallel edges, dropped loops."""
    cvw = [0] * n_c
    for v, w in enumerate(vertex_weights):
        cvw[coarse_map[v]] += int(w)
    cadj: dict[tuple[int, int], int] = {}
    for (u, v), w in adj.items():
        cu, cv = int(coarse_map[u]), int(coarse_map[v])
        if cu == cv:
            continue
        key = (min(cu, cv), max(cu, cv))
        cadj[key] = cadj.get(key, 0) + w
    return cvw, cadj


# ---------------------------------------------------------------------------
# bucket-slot oracle: linear range scan over the published slot labels

BUCKET_NUMERIC_LABELS = (
    [0]
    + list(range(-1, -11, -1))
    + list(range(-20, -101, -10))
    + list(range(-200, -1001, -100))
)


def oracle_bucket_slot(gain) -> int:
    if gain > 0:
        return 0
    if gain <= -1000:
        return len(BUCKET_NUMERIC_LABELS) + 1
    labels = BUCKET_NUMERIC_LABELS
    for idx, lab in enumerate(labels):
        lower = labels[idx + 1] if idx + 1 < len(labels) else -1000
        if lab >= gain > lower:
            return 1 + idx
    raise AssertionError(f"gain {gain} matched no slot")


# ---------------------------------------------------------------------------
# instance generators


def random_graph(rng: np.random.Generator, n: int, p: float = 0.35,
                 wmax: int = 9, unit_vertex_weights: bool = False) -> Graph:
    """Random undirected graph with a spanning path, weights 1..wmax."""
    edges = {}
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges[(u, v)] = int(rng.integers(1, wmax + 1))
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in edges and rng.random() < p:
                edges[(u, v)] = int(rng.integers(1, wmax + 1))
    triples = [(u, v, w) for (u, v), w in sorted(edges.items())]
    if unit_vertex_weights:
        vw = np.ones(n, dtype=np.int64)
    else:
        vw = rng.integers(1, wmax + 1, size=n).astype(np.int64)
    return from_edge_list(n, triples, vw)


def random_hierarchy(rng: np.random.Generator, max_levels: int = 3):
    ell = int(rng.integers(1, max_levels + 1))
    hierarchy = tuple(int(rng.integers(1, 5)) for _ in range(ell))
    start = int(rng.integers(0, 4))
    distances = []
    d = start
    for _ in range(ell):
        distances.append(d)
        d += int(rng.integers(0, 10))
    return hierarchy, tuple(distances)


def random_assignment(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    return rng.integers(0, k, size=n).astype(np.int64)
