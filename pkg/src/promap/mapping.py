"""Mapping objective, move gains, and the block-connectivity structure.

A mapping assigns every vertex of a task graph to one block (= PE of the
target machine).  Its communication cost is

    J = sum over ordered vertex pairs (u, v) of w(u, v) * dist(block(u), block(v))

so every undirected edge is counted twice; with unit distances J is twice
the edge cut.  The balance constraint bounds every block weight by
``L_max = (1 + eps) * c(V) / k``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .graph import Graph
from .topology import (
    _MATRIX_CACHE_LIMIT,
    Topology,
    distance_matrix,
    pe_distance,
    pe_distance_array,
)
from .util import splitmix64


def dist_lookup(t: Topology):
    """Dense distance matrix when small enough, else None (use the oracle)."""
    if t.k <= _MATRIX_CACHE_LIMIT:
        return distance_matrix(t)
    return None


def compute_block_weights(
    vertex_weights: np.ndarray, assignment: np.ndarray, k: int
) -> np.ndarray:
    bw = np.zeros(k, dtype=np.int64)
    np.add.at(bw, assignment, vertex_weights)
    return bw


@dataclass
class Mapping:
    """Vertex-to-block assignment plus its per-block weights."""

    assignment: np.ndarray     # int64, shape (n,)
    block_weights: np.ndarray  # int64, shape (k,)

    @classmethod
    def from_assignment(cls, graph: Graph, assignment, k: int) -> "Mapping":
        assignment = np.ascontiguousarray(assignment, dtype=np.int64)
        if len(assignment) != graph.n:
            raise ValueError("assignment length mismatch")
        if graph.n and (assignment.min() < 0 or assignment.max() >= k):
            raise ValueError(f"block id out of range [0,{k})")
        return cls(assignment, compute_block_weights(graph.vertex_weights, assignment, k))

    @property
    def k(self) -> int:
        return len(self.block_weights)

    def copy(self) -> "Mapping":
        return Mapping(self.assignment.copy(), self.block_weights.copy())

    def max_block_weight(self) -> int:
        return int(self.block_weights.max()) if len(self.block_weights) else 0

    def is_balanced(self, l_max: float) -> bool:
        return self.max_block_weight() <= l_max


def total_cost(graph: Graph, t: Topology, assignment: np.ndarray):
    """Total communication cost J; exact int when distances are integral."""
    assignment = np.asarray(assignment, dtype=np.int64)
    if len(graph.edge_targets) == 0:
        return 0 if t.integral_distances else 0.0
    bu = assignment[graph.edge_sources]
    bv = assignment[graph.edge_targets]
    dm = dist_lookup(t)
    if dm is not None:
        d = dm[bu, bv]
    else:
        d = pe_distance_array(t, bu, bv)
    total = (d * graph.edge_weights).sum()
    if t.integral_distances:
        return int(total)
    return float(total)


def undirected_cost(j):
    """J counts ordered pairs, so halving gives the per-edge total."""
    if isinstance(j, int):
        return j // 2
    return j / 2


def move_gain(graph: Graph, t: Topology, assignment: np.ndarray, v: int, b: int):
    """Cost reduction of moving vertex v to block b (positive = J shrinks).

    gain = sum over neighbors u of w(v,u) * (dist(block(v), block(u)) -
    dist(b, block(u))); J changes by exactly twice the gain because both
    edge directions are affected.
    """
    dm = dist_lookup(t)
    bv = int(assignment[v])
    g = 0
    for u, w in zip(graph.neighbors(v), graph.neighbor_weights(v)):
        bu = int(assignment[u])
        if dm is not None:
            g += int(w) * (dm[bv, bu] - dm[b, bu])
        else:
            g += int(w) * (pe_distance(t, bv, bu) - pe_distance(t, b, bu))
    return g


# ---------------------------------------------------------------------------
# Block connectivity


class BlockConnectivity:
    """Per-vertex table of total edge weight toward each adjacent block.

    Slots live in one flat pair of arrays; vertex v owns the slot range
    ``offsets[v]:offsets[v+1]``.  A slot holds (block id, weight); free
    slots carry block id -1.  The initial capacity per vertex is the number
    of distinct adjacent blocks plus two.  Incremental inserts start
    probing at a hash of the block id and wrap around; lookups scan the
    vertex's whole range, so slot placement never affects semantics and
    freeing a slot (weight hits zero) cannot break probe chains.  When an
    insert finds no free slot the vertex is marked overflowed and the
    caller must trigger :meth:`rebuild_overflowed` after its bulk update;
    rebuilt vertices get fresh capacity, all others keep their slots.
    """

    __slots__ = ("offsets", "slot_blocks", "slot_weights", "overflowed", "_n")

    def __init__(self, graph: Graph, assignment: np.ndarray, k: int):
        assignment = np.asarray(assignment, dtype=np.int64)
        n = graph.n
        self._n = n
        if len(graph.edge_targets):
            key = graph.edge_sources * np.int64(k) + assignment[graph.edge_targets]
            uniq, inv = np.unique(key, return_inverse=True)
            wsum = np.zeros(len(uniq), dtype=np.int64)
            np.add.at(wsum, inv, graph.edge_weights)
            owner = (uniq // k).astype(np.int64)
            blocks = (uniq % k).astype(np.int64)
            counts = np.bincount(owner, minlength=n)
        else:
            owner = blocks = wsum = np.empty(0, dtype=np.int64)
            counts = np.zeros(n, dtype=np.int64)
        cap = counts + 2
        self.offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(cap, out=self.offsets[1:])
        total = int(self.offsets[-1])
        self.slot_blocks = np.full(total, -1, dtype=np.int64)
        self.slot_weights = np.zeros(total, dtype=np.int64)
        # bulk fill: entries go at the start of each range (placement is
        # arbitrary for correctness, see class docstring)
        pos = self.offsets[owner] + np.arange(len(owner)) - np.repeat(
            np.cumsum(counts) - counts, counts
        ) if len(owner) else np.empty(0, dtype=np.int64)
        self.slot_blocks[pos] = blocks
        self.slot_weights[pos] = wsum
        self.overflowed: set[int] = set()

    def conn(self, v: int, b: int) -> int:
        lo, hi = self.offsets[v], self.offsets[v + 1]
        for s in range(lo, hi):
            if self.slot_blocks[s] == b:
                return int(self.slot_weights[s])
        return 0

    def blocks_of(self, v: int) -> list[tuple[int, int]]:
        """Nonzero (block, weight) entries of vertex v."""
        lo, hi = self.offsets[v], self.offsets[v + 1]
        out = []
        for s in range(lo, hi):
            if self.slot_blocks[s] != -1:
                out.append((int(self.slot_blocks[s]), int(self.slot_weights[s])))
        return out

    def add(self, v: int, b: int, delta: int) -> None:
        """Accumulate delta onto conn(v, b); frees the slot at weight zero."""
        lo = int(self.offsets[v])
        hi = int(self.offsets[v + 1])
        cap = hi - lo
        if cap == 0:
            self.overflowed.add(v)
            return
        for s in range(lo, hi):
            if self.slot_blocks[s] == b:
                self.slot_weights[s] += delta
                if self.slot_weights[s] == 0:
                    self.slot_blocks[s] = -1
                return
        if delta == 0:
            return
        start = splitmix64(b) % cap
        for i in range(cap):
            s = lo + (start + i) % cap
            if self.slot_blocks[s] == -1:
                self.slot_blocks[s] = b
                self.slot_weights[s] = delta
                return
        self.overflowed.add(v)

    def rebuild_overflowed(self, graph: Graph, assignment: np.ndarray) -> None:
        """Recompute overflowed vertices from scratch with fresh capacity.

        Must run after the assignment update that caused the overflow is
        complete; untouched vertices keep their slot ranges verbatim.
        """
        if not self.overflowed:
            return
        fresh: dict[int, dict[int, int]] = {}
        for v in self.overflowed:
            acc: dict[int, int] = {}
            for u, w in zip(graph.neighbors(v), graph.neighbor_weights(v)):
                b = int(assignment[u])
                acc[b] = acc.get(b, 0) + int(w)
            fresh[v] = acc
        new_cap = np.diff(self.offsets)
        for v, acc in fresh.items():
            new_cap[v] = len(acc) + 2
        new_offsets = np.zeros(self._n + 1, dtype=np.int64)
        np.cumsum(new_cap, out=new_offsets[1:])
        nb = np.full(int(new_offsets[-1]), -1, dtype=np.int64)
        nw = np.zeros(int(new_offsets[-1]), dtype=np.int64)
        for v in range(self._n):
            dst = int(new_offsets[v])
            if v in fresh:
                for b, w in fresh[v].items():
                    nb[dst], nw[dst] = b, w
                    dst += 1
            else:
                lo, hi = self.offsets[v], self.offsets[v + 1]
                nb[dst:dst + hi - lo] = self.slot_blocks[lo:hi]
                nw[dst:dst + hi - lo] = self.slot_weights[lo:hi]
        self.offsets, self.slot_blocks, self.slot_weights = new_offsets, nb, nw
        self.overflowed = set()

    def as_dicts(self) -> list[dict[int, int]]:
        """Snapshot as one {block: weight} dict per vertex (for tests)."""
        return [dict(self.blocks_of(v)) for v in range(self._n)]


def apply_moves(
    graph: Graph,
    mapping: Mapping,
    conn: BlockConnectivity | None,
    vertices,
    targets,
    _move_order=None,
) -> None:
    """Apply a bulk move set in place: assignment, block weights, and conn.

    Every per-edge update is a commutative add, so any processing order
    yields the same state; ``_move_order`` exists to let tests check that.
    """
    idx = range(len(vertices)) if _move_order is None else _move_order
    a = mapping.assignment
    for i in idx:
        v = int(vertices[i])
        b = int(targets[i])
        old = int(a[v])
        if old == b:
            continue
        w_v = int(graph.vertex_weights[v])
        mapping.block_weights[old] -= w_v
        mapping.block_weights[b] += w_v
        if conn is not None:
            for u, w in zip(graph.neighbors(v), graph.neighbor_weights(v)):
                conn.add(int(u), old, -int(w))
                conn.add(int(u), b, int(w))
        a[v] = b
    if conn is not None:
        conn.rebuild_overflowed(graph, a)


# ---------------------------------------------------------------------------
# Exhaustive reference solver


def brute_force_map(graph: Graph, t: Topology, eps: float, limit: int = 10_000_000):
    """Exact optimum by enumerating every balanced assignment.

    Enumeration order is lexicographic in the assignment vector (vertex 0
    most significant), and ties keep the first optimum found.  Only for
    tiny instances: k**n must not exceed ``limit``.
    """
    n, k = graph.n, t.k
    if k ** n > limit:
        raise ValueError(f"k**n = {k ** n} exceeds limit {limit}")
    l_max = (1.0 + eps) * graph.total_weight / k
    dm = dist_lookup(t)
    vw = graph.vertex_weights
    eu, ev, ew = graph.edge_sources, graph.edge_targets, graph.edge_weights
    place = k ** np.arange(n - 1, -1, -1, dtype=np.int64) if n else np.empty(0, np.int64)
    best_j = None
    best_a = None
    chunk = 1 << 14
    for lo in range(0, k ** n, chunk):
        ids = np.arange(lo, min(lo + chunk, k ** n), dtype=np.int64)
        digits = (ids[:, None] // place[None, :]) % k if n else np.zeros((len(ids), 0), np.int64)
        bw = np.zeros((len(ids), k), dtype=np.int64)
        for b in range(k):
            bw[:, b] = ((digits == b) * vw[None, :]).sum(axis=1)
        ok = bw.max(axis=1) <= l_max
        if not ok.any():
            continue
        digits = digits[ok]
        cost = (dm[digits[:, eu], digits[:, ev]] * ew[None, :]).sum(axis=1) \
            if len(eu) else np.zeros(len(digits), dtype=np.int64)
        i = int(cost.argmin())
        j = cost[i]
        j = int(j) if t.integral_distances else float(j)
        if best_j is None or j < best_j:
            best_j = j
            best_a = digits[i].copy()
    if best_j is None:
        raise ValueError("no balanced assignment exists")
    return best_a, best_j


def random_balanced_assignment(graph: Graph, t: Topology, eps: float, seed: int,
                               max_tries: int = 10_000) -> np.ndarray:
    """Uniform-ish balanced assignment by rejection sampling (baselines)."""
    rng = np.random.default_rng(seed)
    l_max = (1.0 + eps) * graph.total_weight / t.k
    for _ in range(max_tries):
        a = rng.integers(0, t.k, size=graph.n, dtype=np.int64)
        bw = compute_block_weights(graph.vertex_weights, a, t.k)
        if bw.max() <= l_max:
            return a
    # fall back to a round-robin over a random permutation, balanced by
    # construction for unit weights
    perm = rng.permutation(graph.n)
    a = np.empty(graph.n, dtype=np.int64)
    a[perm] = np.arange(graph.n, dtype=np.int64) % t.k
    return a
