"""Refinement: unconstrained label propagation plus weak/strong rebalancing.

One refinement round proposes a bulk set of vertex moves.  While the
mapping is balanced, label propagation greedily picks the best-gain target
block per vertex, filters twice (raw gain, then gain under an approximate
future state ordered by descending gain) and locks moved vertices for one
round to prevent oscillation.  When a block exceeds L_max, rebalancing
pushes vertices out of overloaded blocks (weak) or lets underloaded blocks
pull a bounded prefix (strong), both driven by approximately sorted gain
bucket lists.  The outer loop keeps the best mapping seen.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .graph import Graph
from .mapping import BlockConnectivity, Mapping, apply_moves, total_cost
from .topology import Topology, pe_distance
from .util import hash2

# Bucket slot layout: [+, 0, -1..-10, -20..-100, -200..-1000, X].
# A gain g lands in slot i iff label[i] >= g > label[i+1]; "+" catches all
# positive gains and X everything <= -1000 (which makes the trailing -1000
# slot structurally empty; X wins that range).
SLOT_LABELS = (
    ["+"]
    + list(range(0, -11, -1))
    + list(range(-20, -101, -10))
    + list(range(-200, -1001, -100))
    + ["X"]
)
SLOT_COUNT = len(SLOT_LABELS)  # 31
_ASC_BOUNDS = [0] + list(range(1, 11)) + list(range(20, 101, 10)) + list(range(200, 1001, 100))


def slot_for_gain(g) -> int:
    """Bucket slot index for a gain value, slot 0 best, slot 30 worst."""
    if g > 0:
        return 0
    if g <= -1000:
        return SLOT_COUNT - 1
    return bisect_right(_ASC_BOUNDS, -g)


@dataclass
class RefinementConfig:
    phi: float = 0.999          # relative J improvement that resets the clock
    i_max: int = 12             # iteration cap (12 + level in the pipeline)
    i_w_max: int = 2            # weak passes before one strong (10 at level 0)
    sigma_fraction: float = 0.005  # dead zone: sigma = L_max * (1 - fraction)
    rho: int = 2                # mini-buckets per slot
    filter_mode: str = "nonneg"  # "nonneg" or "jet"
    jet_filter_c: float = 0.25  # jet-mode slack constant; local default, not tuned
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.phi <= 1):
            raise ValueError(f"phi must be in (0,1], got {self.phi}")
        if self.rho < 1:
            raise ValueError(f"rho must be >= 1, got {self.rho}")
        if not (0 <= self.sigma_fraction < 1):
            raise ValueError(f"sigma_fraction must be in [0,1), got {self.sigma_fraction}")
        if self.filter_mode not in ("nonneg", "jet"):
            raise ValueError(f"unknown filter_mode {self.filter_mode!r}")
        if self.i_max < 1 or self.i_w_max < 1:
            raise ValueError("iteration caps must be >= 1")


def config_for_level(
    level: int,
    n_levels: int,
    *,
    phi: float = 0.999,
    rho: int = 2,
    filter_mode: str = "nonneg",
    jet_filter_c: float = 0.25,
    sigma_coarse: float = 0.065,
    sigma_fine: float = 0.005,
    iw_max_finest: int = 10,
    seed: int = 0,
) -> RefinementConfig:
    """Level-dependent knobs: more iterations and an elevated weak-pass cap
    on the finest level, the balance dead zone shrinking toward it."""
    span = max(n_levels - 1, 1)
    frac = level / span if n_levels > 1 else 0.0
    delta = sigma_fine + (sigma_coarse - sigma_fine) * frac
    return RefinementConfig(
        phi=phi,
        i_max=12 + level,
        i_w_max=iw_max_finest if level == 0 else 2,
        sigma_fraction=delta,
        rho=rho,
        filter_mode=filter_mode,
        jet_filter_c=jet_filter_c,
        seed=seed,
    )


class BucketList:
    """Approximately sorted move list: 31 gain slots × rho mini-buckets.

    Built in four phases (count, allocate, prefix-sum, insert); a vertex's
    mini-bucket is its id modulo rho.  Iterating ``ordered()`` yields
    vertices best slot first, mini-buckets in order, insertion order within.
    """

    def __init__(self, vertices, gains, rho: int):
        self.rho = rho
        cells = SLOT_COUNT * rho
        counts = [0] * cells
        located = []
        for v, g in zip(vertices, gains):
            cell = slot_for_gain(g) * rho + v % rho
            counts[cell] += 1
            located.append((v, cell))
        offsets = [0] * (cells + 1)
        for i in range(cells):
            offsets[i + 1] = offsets[i] + counts[i]
        entries = [0] * len(located)
        cursor = list(offsets[:cells])
        for v, cell in located:
            entries[cursor[cell]] = v
            cursor[cell] += 1
        self.counts = counts
        self.offsets = offsets
        self.entries = entries

    def ordered(self) -> list[int]:
        return self.entries


@dataclass
class MoveProposal:
    """One bulk move set: who may move, where to, and who moves."""

    candidates: np.ndarray    # bool, passed the first filter
    destinations: np.ndarray  # int64 target per vertex (= current if none)
    to_move: np.ndarray       # bool, the selected moves
    locked: np.ndarray        # bool, locks for the next pass
    incomplete: bool = False  # rebalancing found no eligible destination

    def move_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        idx = np.flatnonzero(self.to_move)
        return idx, self.destinations[idx]


def _distance_rows(t: Topology):
    """Distance matrix as Python lists for fast scalar loops, or None."""
    from .mapping import dist_lookup

    dm = dist_lookup(t)
    if dm is None:
        return None
    return dm.tolist()


def _dist(dmat, t: Topology, x: int, y: int):
    if dmat is not None:
        return dmat[x][y]
    return pe_distance(t, x, y)


def _best_target(v, own, slots, dmat, t, bw=None, sigma=None):
    """Highest-gain target block among v's adjacent blocks, lowest id on
    ties; optionally restricted to blocks with weight below sigma."""
    own_row = dmat[own] if dmat is not None else None
    cur = 0
    for b2, w in slots:
        cur += w * (own_row[b2] if own_row is not None else pe_distance(t, own, b2))
    best_gain = None
    best_b = -1
    for b, _ in slots:
        if b == own:
            continue
        if sigma is not None and bw[b] >= sigma:
            continue
        row = dmat[b] if dmat is not None else None
        cost_b = 0
        for b2, w in slots:
            cost_b += w * (row[b2] if row is not None else pe_distance(t, b, b2))
        gain = cur - cost_b
        if best_gain is None or gain > best_gain or (gain == best_gain and b < best_b):
            best_gain, best_b = gain, b
        # ties resolved toward the lowest block id
    return best_b, best_gain


def _gain_to(v, own, target, slots, dmat, t):
    """Gain of moving v from its own block to target, via the slot table."""
    g = 0
    for b2, w in slots:
        g += w * (_dist(dmat, t, own, b2) - _dist(dmat, t, target, b2))
    return g


def label_propagation_pass(
    g: Graph,
    t: Topology,
    m: Mapping,
    conn: BlockConnectivity,
    locked: np.ndarray,
    cfg: RefinementConfig,
) -> MoveProposal:
    """Propose unconstrained moves: best target per vertex, filtered twice.

    The first filter keeps non-negative gains (or, in jet mode, small
    losses relative to the vertex's internal connectivity).  The second
    filter re-evaluates each candidate assuming every candidate ordered
    before it (higher gain, then lower id) has already moved, and keeps it
    only if the re-evaluated gain stays non-negative.  Selected vertices
    come back locked so the next pass cannot oscillate them.
    """
    n = g.n
    from .mapping import dist_lookup

    dm_np = dist_lookup(t)
    dmat = dm_np.tolist() if dm_np is not None else None
    a = m.assignment
    cand = np.zeros(n, dtype=bool)
    dest = a.copy()
    gains = [0] * n
    for v in range(n):
        if locked[v]:
            continue
        slots = conn.blocks_of(v)
        own = int(a[v])
        b, gain = _best_target(v, own, slots, dmat, t)
        if b < 0:
            continue
        if gain >= 0:
            ok = True
        elif cfg.filter_mode == "jet":
            ok = -gain < math.floor(cfg.jet_filter_c * conn.conn(v, own))
        else:
            ok = False
        if ok:
            cand[v] = True
            dest[v] = b
            gains[v] = gain

    # second filter, evaluated edge-parallel: a neighbor u ordered before v
    # (higher first-pass gain, then lower id) is assumed already moved
    to_move = np.zeros(n, dtype=bool)
    if cand.any() and len(g.edge_targets):
        gain_dtype = np.int64 if t.integral_distances else np.float64
        gain_arr = np.asarray(gains, dtype=gain_dtype)
        vv = g.edge_sources   # the vertex being re-evaluated
        uu = g.edge_targets   # its neighbor
        earlier = cand[uu] & (
            (gain_arr[uu] > gain_arr[vv])
            | ((gain_arr[uu] == gain_arr[vv]) & (uu < vv))
        )
        pos = np.where(earlier, dest[uu], a[uu])
        if dm_np is not None:
            delta = dm_np[a[vv], pos] - dm_np[dest[vv], pos]
        else:
            from .topology import pe_distance_array

            delta = pe_distance_array(t, a[vv], pos) - pe_distance_array(t, dest[vv], pos)
        future = np.zeros(n, dtype=delta.dtype)
        np.add.at(future, vv, g.edge_weights * delta)
        to_move = cand & (future >= 0)
    else:
        to_move = cand.copy()
    return MoveProposal(cand, dest, to_move, to_move.copy())


def _rebalance_candidates(
    g: Graph,
    t: Topology,
    m: Mapping,
    conn: BlockConnectivity,
    sigma: float,
    l_max: float,
    cfg: RefinementConfig,
    pass_counter: int,
):
    """Best eligible move for every vertex in an overloaded block.

    Eligible destinations hold weight strictly below sigma.  A vertex with
    no eligible adjacent block falls back to a hash-chosen eligible block;
    with no eligible block anywhere the proposal is flagged incomplete.
    Returns (moves: list of (vertex, source, target, gain), incomplete).
    """
    dmat = _distance_rows(t)
    bw = m.block_weights
    a = m.assignment
    overloaded = [b for b in range(m.k) if bw[b] > l_max]
    eligible = [b for b in range(m.k) if bw[b] < sigma]
    moves = []
    incomplete = False
    for b in overloaded:
        for v in np.flatnonzero(a == b):
            v = int(v)
            slots = conn.blocks_of(v)
            target, gain = _best_target(v, b, slots, dmat, t, bw=bw, sigma=sigma)
            if target < 0:
                if not eligible:
                    incomplete = True
                    continue
                target = eligible[hash2(cfg.seed, v, pass_counter) % len(eligible)]
                gain = _gain_to(v, b, target, slots, dmat, t)
            moves.append((v, b, target, gain))
    return moves, incomplete


def weak_rebalance(
    g: Graph,
    t: Topology,
    m: Mapping,
    conn: BlockConnectivity,
    sigma: float,
    l_max: float,
    cfg: RefinementConfig,
    pass_counter: int = 0,
) -> MoveProposal:
    """Push moves out of each overloaded block until it would be balanced.

    Per overloaded block the candidate moves go into a gain bucket list and
    a prefix is taken whose total weight reaches the block's excess.
    Destinations can end up overloaded; later passes handle that.
    """
    n = g.n
    cand = np.zeros(n, dtype=bool)
    dest = m.assignment.copy()
    to_move = np.zeros(n, dtype=bool)
    moves, incomplete = _rebalance_candidates(g, t, m, conn, sigma, l_max, cfg, pass_counter)
    per_source: dict[int, list[tuple[int, int, object]]] = {}
    for v, b, target, gain in moves:
        cand[v] = True
        dest[v] = target
        per_source.setdefault(b, []).append((v, target, gain))
    for b, entries in sorted(per_source.items()):
        excess = int(m.block_weights[b]) - l_max
        bl = BucketList([v for v, _, _ in entries], [gn for _, _, gn in entries], cfg.rho)
        moved = 0
        for v in bl.ordered():
            if moved >= excess:
                break
            to_move[v] = True
            moved += int(g.vertex_weights[v])
    return MoveProposal(cand, dest, to_move, np.zeros(n, dtype=bool), incomplete)


def strong_rebalance(
    g: Graph,
    t: Topology,
    m: Mapping,
    conn: BlockConnectivity,
    sigma: float,
    l_max: float,
    cfg: RefinementConfig,
    pass_counter: int = 0,
) -> MoveProposal:
    """Let each destination block accept a prefix it can absorb.

    Same candidates as weak rebalancing, but bucketed by target block; a
    target takes entries in list order until the next one would push it
    past L_max, so accepting blocks never become overloaded.
    """
    n = g.n
    cand = np.zeros(n, dtype=bool)
    dest = m.assignment.copy()
    to_move = np.zeros(n, dtype=bool)
    moves, incomplete = _rebalance_candidates(g, t, m, conn, sigma, l_max, cfg, pass_counter)
    per_target: dict[int, list[tuple[int, object]]] = {}
    for v, _, target, gain in moves:
        cand[v] = True
        dest[v] = target
        per_target.setdefault(target, []).append((v, gain))
    for b, entries in sorted(per_target.items()):
        room = l_max - int(m.block_weights[b])
        bl = BucketList([v for v, _ in entries], [gn for _, gn in entries], cfg.rho)
        accepted = 0
        for v in bl.ordered():
            w_v = int(g.vertex_weights[v])
            if accepted + w_v > room:
                break
            to_move[v] = True
            accepted += w_v
    return MoveProposal(cand, dest, to_move, np.zeros(n, dtype=bool), incomplete)


def refine(
    g: Graph,
    t: Topology,
    m: Mapping,
    conn: BlockConnectivity,
    cfg: RefinementConfig,
    l_max: float,
) -> Mapping:
    """Alternate label propagation and rebalancing, returning the best
    mapping encountered.

    While the working mapping is balanced, label propagation runs and the
    iteration clock resets only on a relative improvement beyond phi.
    Otherwise locks are cleared and weak rebalancing runs, replaced by one
    strong pass after i_w_max consecutive weak ones.  A balanced result is
    preferred over any imbalanced one; among balanced results lower J wins,
    among imbalanced ones lower maximum block weight wins.  The input
    mapping object and connectivity are consumed (mutated in place); the
    returned mapping is a fresh copy and never worse than a balanced input.
    """
    sigma = l_max * (1.0 - cfg.sigma_fraction)
    best = m.copy()
    best_balanced = best.is_balanced(l_max)
    best_j = total_cost(g, t, best.assignment) if best_balanced else None
    best_maxw = best.max_block_weight()
    locks = np.zeros(g.n, dtype=bool)
    i = 0
    i_w = 0
    pass_counter = 0
    while i < cfg.i_max:
        balanced_now = m.is_balanced(l_max)
        entry_locks_empty = not locks.any()
        if balanced_now:
            prop = label_propagation_pass(g, t, m, conn, locks, cfg)
            i_w = 0
        else:
            locks[:] = False
            if i_w < cfg.i_w_max:
                prop = weak_rebalance(g, t, m, conn, sigma, l_max, cfg, pass_counter)
                i_w += 1
            else:
                prop = strong_rebalance(g, t, m, conn, sigma, l_max, cfg, pass_counter)
                i_w = 0
            pass_counter += 1
        vertices, targets = prop.move_pairs()
        if len(vertices) == 0:
            if balanced_now and entry_locks_empty:
                break  # fixed point: the same empty proposal would repeat
            if not balanced_now and prop.incomplete:
                break  # no eligible destination exists; rebalancing is stuck
        apply_moves(g, m, conn, vertices, targets)
        locks = prop.locked
        reset = False
        if m.is_balanced(l_max):
            j_now = total_cost(g, t, m.assignment)
            if not best_balanced:
                # a balanced mapping always beats an imbalanced best
                best = m.copy()
                best_balanced = True
                best_j = j_now
                best_maxw = best.max_block_weight()
                reset = True
            elif j_now < best_j:
                # both checks compare against the best *before* this update
                reset = j_now < cfg.phi * best_j
                best = m.copy()
                best_j = j_now
                best_maxw = best.max_block_weight()
        else:
            maxw = m.max_block_weight()
            if not best_balanced and maxw < best_maxw:
                best = m.copy()
                best_maxw = maxw
                reset = True
        i = 0 if reset else i + 1
    return best
