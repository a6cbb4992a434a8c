"""Hierarchical machine model.

A machine is described by a hierarchy ``a_1 : ... : a_l`` (each processor
has ``a_1`` PEs, each node ``a_2`` processors, and so on; in total
``k = prod(a_i)`` processing elements) together with a distance vector
``d_1 : ... : d_l``: two PEs whose lowest common level is ``i`` communicate
with cost factor ``d_i``.  Distances between PEs are answered from the
mixed-radix digit expansion of the PE ids, so no ``k x k`` matrix is needed;
a cached matrix is built only as an optimization for small ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Largest k for which a dense distance matrix may be cached. The digit
# oracle remains the source of truth at every size.
_MATRIX_CACHE_LIMIT = 1024


@dataclass(frozen=True)
class Topology:
    """Homogeneous machine hierarchy with per-level cost factors."""

    hierarchy: tuple[int, ...]
    distances: tuple[int | float, ...]

    def __post_init__(self):
        if len(self.hierarchy) < 1:
            raise ValueError("hierarchy must have at least one level")
        if len(self.hierarchy) != len(self.distances):
            raise ValueError(
                f"hierarchy has {len(self.hierarchy)} levels but "
                f"{len(self.distances)} distances given"
            )
        if any(a < 1 for a in self.hierarchy):
            raise ValueError(f"hierarchy factors must be >= 1: {self.hierarchy}")
        if any(d < 0 for d in self.distances):
            raise ValueError(f"distances must be nonnegative: {self.distances}")
        if any(a > b for a, b in zip(self.distances, self.distances[1:])):
            raise ValueError(f"distances must be nondecreasing: {self.distances}")

    @property
    def levels(self) -> int:
        return len(self.hierarchy)

    @property
    def k(self) -> int:
        """Total number of processing elements."""
        return math.prod(self.hierarchy)

    @property
    def integral_distances(self) -> bool:
        return all(isinstance(d, int) for d in self.distances)

    def digits(self, x: int) -> tuple[int, ...]:
        """Mixed-radix expansion of PE id ``x``, least-significant level first."""
        out = []
        for a in self.hierarchy:
            out.append(x % a)
            x //= a
        return tuple(out)

    def describe(self) -> str:
        h = ":".join(str(a) for a in self.hierarchy)
        d = ":".join(str(x) for x in self.distances)
        return f"H={h} D={d}"


def flat_topology(k: int) -> Topology:
    """Single-level machine: all distinct PEs at distance 1.

    Under this topology the mapping cost equals twice the edge-cut, which
    turns the mapping machinery into a plain graph partitioner.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return Topology((k,), (1,))


def parse_hierarchy(text: str) -> tuple[int, ...]:
    """Parse ``"4:8:6"`` into ``(4, 8, 6)``."""
    try:
        parts = tuple(int(p) for p in text.split(":"))
    except ValueError:
        raise ValueError(f"invalid hierarchy string {text!r}") from None
    if not parts or any(a < 1 for a in parts):
        raise ValueError(f"invalid hierarchy string {text!r}")
    return parts


def parse_distances(text: str) -> tuple[int | float, ...]:
    """Parse ``"1:10:100"``; integral entries stay exact Python ints."""
    out: list[int | float] = []
    for p in text.split(":"):
        try:
            out.append(int(p))
        except ValueError:
            try:
                out.append(float(p))
            except ValueError:
                raise ValueError(f"invalid distance string {text!r}") from None
    if not out:
        raise ValueError(f"invalid distance string {text!r}")
    return tuple(out)


def pe_distance(t: Topology, x: int, y: int) -> int | float:
    """Cost factor between PEs ``x`` and ``y``; 0 for ``x == y``.

    The distance is ``d_j`` where ``j`` is the highest hierarchy level at
    which the mixed-radix expansions of the two ids differ.
    """
    k = t.k
    if not (0 <= x < k and 0 <= y < k):
        raise ValueError(f"PE id out of range [0,{k}): {x}, {y}")
    if x == y:
        return 0
    level = 0
    for i, a in enumerate(t.hierarchy):
        if x % a != y % a:
            level = i
        x //= a
        y //= a
    return t.distances[level]


def pe_distance_array(t: Topology, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized ``pe_distance`` over broadcastable id arrays."""
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    if xs.size and (xs.min() < 0 or xs.max() >= t.k):
        raise ValueError("PE id out of range")
    if ys.size and (ys.min() < 0 or ys.max() >= t.k):
        raise ValueError("PE id out of range")
    rx, ry = np.broadcast_arrays(xs, ys)
    rx, ry = rx.copy(), ry.copy()
    dist_values = np.asarray(t.distances)
    # level index of the highest differing digit, -1 when identical
    top = np.full(rx.shape, -1, dtype=np.int64)
    for i, a in enumerate(t.hierarchy):
        top[rx % a != ry % a] = i
        rx //= a
        ry //= a
    out = np.where(top >= 0, dist_values[np.maximum(top, 0)], 0)
    if t.integral_distances:
        return out.astype(np.int64)
    return out.astype(np.float64)


@lru_cache(maxsize=8)
def distance_matrix(t: Topology) -> np.ndarray:
    """Dense ``k x k`` PE distance matrix (small ``k`` only)."""
    k = t.k
    if k > _MATRIX_CACHE_LIMIT:
        raise ValueError(f"refusing to materialize {k}x{k} distance matrix")
    ids = np.arange(k, dtype=np.int64)
    return pe_distance_array(t, ids[:, None], ids[None, :])


def calc_id(t: Topology, identifier: list[int] | tuple[int, ...]) -> int:
    """Mixed-radix PE/block id of a hierarchy position.

    ``identifier`` lists branch indices from the topmost level down to
    level 1 (the order in which a recursive descent extends it).  Siblings
    under one parent receive consecutive ids.
    """
    ell = t.levels
    if len(identifier) != ell:
        raise ValueError(f"identifier must have length {ell}, got {len(identifier)}")
    out = 0
    place = 1
    # entry identifier[ell - 1 - (i-1)] belongs to level i (1-based)
    for i, a in enumerate(t.hierarchy):
        branch = identifier[ell - 1 - i]
        if not (0 <= branch < a):
            raise ValueError(f"branch index {branch} out of range [0,{a}) at level {i + 1}")
        out += branch * place
        place *= a
    return out


def adaptive_imbalance(
    eps: float, total: float, sub: float, k: int, k_sub: int, depth: int
) -> float:
    """Rescaled imbalance for one partitioning step of a recursive multisection.

    ``total`` is the whole task graph weight, ``sub`` the weight of the
    subgraph being split, ``k`` the final number of blocks, ``k_sub`` the
    number of final blocks this subgraph will be divided into, and
    ``depth`` the number of remaining recursion levels.  Composing the
    returned value along any root-to-leaf path keeps the final partition
    within the original ``eps``.  Clamped at 0 when the subgraph is already
    overweight (the partitioner then does its best and downstream
    rebalancing must recover).
    """
    if sub <= 0:
        raise ValueError(f"subgraph weight must be positive, got {sub}")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if not (1 <= k_sub <= k):
        raise ValueError(f"k_sub must be in [1, {k}], got {k_sub}")
    value = ((1.0 + eps) * (k_sub * total) / (k * sub)) ** (1.0 / depth) - 1.0
    return max(value, 0.0)


@dataclass(frozen=True)
class BalanceSpec:
    """Balance constraint ``c(block) <= L_max = (1 + eps) * total / k``."""

    epsilon: float
    total_weight: int
    k: int

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")

    @property
    def l_max(self) -> float:
        return (1.0 + self.epsilon) * self.total_weight / self.k
