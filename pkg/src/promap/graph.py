"""Task graphs in CSR form, METIS-format I/O, generators, subgraph extraction.

Graphs are undirected with positive integer vertex and edge weights.  The
CSR arrays store every edge twice (once per direction); ``edge_sources``
materializes the source vertex of each directed edge slot so that whole
edge arrays can be processed with numpy without walking ``offsets``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Graph:
    """Undirected weighted graph in CSR + directed-edge-array form."""

    offsets: np.ndarray        # int64, shape (n+1,)
    edge_targets: np.ndarray   # int64, shape (2m,)
    edge_weights: np.ndarray   # int64, shape (2m,)
    vertex_weights: np.ndarray  # int64, shape (n,)
    edge_sources: np.ndarray = field(default=None)  # int64, shape (2m,)

    def __post_init__(self):
        self.offsets = np.ascontiguousarray(self.offsets, dtype=np.int64)
        self.edge_targets = np.ascontiguousarray(self.edge_targets, dtype=np.int64)
        self.edge_weights = np.ascontiguousarray(self.edge_weights, dtype=np.int64)
        self.vertex_weights = np.ascontiguousarray(self.vertex_weights, dtype=np.int64)
        if self.edge_sources is None:
            degrees = np.diff(self.offsets)
            self.edge_sources = np.repeat(
                np.arange(self.n, dtype=np.int64), degrees
            )
        else:
            self.edge_sources = np.ascontiguousarray(self.edge_sources, dtype=np.int64)
        self._total_weight = None

    @property
    def n(self) -> int:
        return len(self.offsets) - 1

    @property
    def m(self) -> int:
        """Number of undirected edges."""
        return len(self.edge_targets) // 2

    @property
    def total_weight(self) -> int:
        """Exact total vertex weight as a Python int."""
        if self._total_weight is None:
            self._total_weight = int(self.vertex_weights.astype(object).sum())
        return self._total_weight

    def neighbors(self, v: int) -> np.ndarray:
        return self.edge_targets[self.offsets[v]:self.offsets[v + 1]]

    def neighbor_weights(self, v: int) -> np.ndarray:
        return self.edge_weights[self.offsets[v]:self.offsets[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.offsets[v + 1] - self.offsets[v])

    def to_adjacency(self) -> dict[int, dict[int, int]]:
        """Adjacency as nested dicts; canonical form for equality checks."""
        adj: dict[int, dict[int, int]] = {v: {} for v in range(self.n)}
        for u, v, w in zip(self.edge_sources, self.edge_targets, self.edge_weights):
            adj[int(u)][int(v)] = int(w)
        return adj

    def validate(self) -> None:
        """Check structural invariants; raises ValueError on the first breach."""
        n = self.n
        if self.offsets[0] != 0 or self.offsets[-1] != len(self.edge_targets):
            raise ValueError("offsets do not span the edge arrays")
        if np.any(np.diff(self.offsets) < 0):
            raise ValueError("offsets must be nondecreasing")
        if len(self.edge_targets) != len(self.edge_weights):
            raise ValueError("edge_targets and edge_weights length mismatch")
        if len(self.vertex_weights) != n:
            raise ValueError("vertex_weights length mismatch")
        if n and (np.any(self.vertex_weights <= 0)):
            raise ValueError("vertex weights must be positive")
        if len(self.edge_targets):
            if self.edge_targets.min() < 0 or self.edge_targets.max() >= n:
                raise ValueError("edge target out of range")
            if np.any(self.edge_weights <= 0):
                raise ValueError("edge weights must be positive")
            if np.any(self.edge_sources == self.edge_targets):
                raise ValueError("self-loops are not allowed")
        adj = self.to_adjacency()
        for v, nbrs in adj.items():
            if len(nbrs) != self.degree(v):
                raise ValueError(f"vertex {v} repeats a neighbor")
            for u, w in nbrs.items():
                if adj[u].get(v) != w:
                    raise ValueError(f"edge ({v},{u}) is not symmetric")


def from_edge_list(
    n: int,
    edges: list[tuple[int, int, int]],
    vertex_weights: np.ndarray | list[int] | None = None,
) -> Graph:
    """Build a Graph from undirected ``(u, v, w)`` triples.

    Each triple inserts both directed slots; neighbor lists come out sorted
    by target id.
    """
    if vertex_weights is None:
        vertex_weights = np.ones(n, dtype=np.int64)
    srcs = np.empty(2 * len(edges), dtype=np.int64)
    tgts = np.empty(2 * len(edges), dtype=np.int64)
    wgts = np.empty(2 * len(edges), dtype=np.int64)
    for i, (u, v, w) in enumerate(edges):
        if u == v:
            raise ValueError(f"self-loop at vertex {u}")
        srcs[2 * i], tgts[2 * i], wgts[2 * i] = u, v, w
        srcs[2 * i + 1], tgts[2 * i + 1], wgts[2 * i + 1] = v, u, w
    order = np.lexsort((tgts, srcs))
    srcs, tgts, wgts = srcs[order], tgts[order], wgts[order]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(srcs, minlength=n), out=offsets[1:])
    return Graph(offsets, tgts, wgts, np.asarray(vertex_weights), srcs)


def as_graph(X, vertex_weights=None) -> Graph:
    """Coerce an adjacency-like input into a Graph.

    Accepts a Graph (passed through), a scipy sparse matrix, or a dense
    square array.  Matrix entries are edge weights: they must be symmetric,
    nonnegative integers with a zero diagonal.
    """
    if isinstance(X, Graph):
        if vertex_weights is not None:
            g = Graph(X.offsets, X.edge_targets, X.edge_weights,
                      np.asarray(vertex_weights), X.edge_sources)
            g.validate()
            return g
        return X
    import scipy.sparse as sp

    if sp.issparse(X):
        A = sp.csr_matrix(X)
    else:
        A = sp.csr_matrix(np.asarray(X))
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"adjacency matrix must be square, got {A.shape}")
    if (A != A.T).nnz != 0:
        raise ValueError("adjacency matrix must be symmetric")
    A = sp.triu(A, k=1).tocoo()
    w = A.data
    if np.any(w != np.round(w)) or np.any(w < 0):
        raise ValueError("edge weights must be nonnegative integers")
    edges = [(int(u), int(v), int(x)) for u, v, x in zip(A.row, A.col, w) if x > 0]
    n = A.shape[0]
    if vertex_weights is None:
        vertex_weights = np.ones(n, dtype=np.int64)
    g = from_edge_list(n, edges, vertex_weights)
    g.validate()
    return g


# ---------------------------------------------------------------------------
# METIS-format I/O


class MetisFormatError(ValueError):
    """Raised for malformed graph files; message includes a 1-based line number."""


def _tokenize(path: str) -> list[tuple[int, list[str]]]:
    """Non-comment lines with their original line numbers."""
    out = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            if raw.lstrip().startswith("%"):
                continue
            out.append((lineno, raw.split()))
    return out


def load_metis(path: str) -> Graph:
    """Read a graph in METIS ascii format.

    Header is ``n m [fmt]``; ``fmt`` has up to three digits, last digit =
    edge weights present, middle = vertex weights present.  Vertex sizes
    (first digit) are not supported.  ``%`` comment lines are ignored and a
    blank data line is an isolated vertex.
    """
    lines = _tokenize(path)
    if not lines:
        raise MetisFormatError("line 1: empty graph file")
    header_line, header = lines[0]
    if len(header) not in (2, 3):
        raise MetisFormatError(f"line {header_line}: header must be 'n m [fmt]'")
    try:
        n, m = int(header[0]), int(header[1])
        fmt = header[2] if len(header) == 3 else "0"
        int(fmt)
    except ValueError:
        raise MetisFormatError(f"line {header_line}: malformed header") from None
    if n < 0 or m < 0:
        raise MetisFormatError(f"line {header_line}: negative counts in header")
    fmt = fmt.zfill(3)
    if len(fmt) != 3 or fmt[0] != "0":
        raise MetisFormatError(
            f"line {header_line}: unsupported format code {header[2]!r}"
        )
    has_vweights = fmt[1] == "1"
    has_eweights = fmt[2] == "1"

    data = lines[1:]
    # trailing blank lines beyond the n data lines are tolerated
    while len(data) > n and not data[-1][1]:
        data.pop()
    if len(data) != n:
        last = data[-1][0] if data else header_line
        raise MetisFormatError(
            f"line {last}: expected {n} vertex lines, found {len(data)}"
        )

    vweights = np.ones(n, dtype=np.int64)
    seen: dict[tuple[int, int], tuple[int, int]] = {}
    srcs, tgts, wgts = [], [], []
    for v, (lineno, tokens) in enumerate(data):
        pos = 0
        if has_vweights:
            if not tokens:
                raise MetisFormatError(f"line {lineno}: missing vertex weight")
            try:
                cv = int(tokens[0])
            except ValueError:
                raise MetisFormatError(
                    f"line {lineno}: bad vertex weight {tokens[0]!r}"
                ) from None
            if cv <= 0:
                raise MetisFormatError(f"line {lineno}: nonpositive vertex weight {cv}")
            vweights[v] = cv
            pos = 1
        rest = tokens[pos:]
        step = 2 if has_eweights else 1
        if len(rest) % step:
            raise MetisFormatError(f"line {lineno}: dangling edge token")
        for j in range(0, len(rest), step):
            try:
                u = int(rest[j]) - 1
                w = int(rest[j + 1]) if has_eweights else 1
            except ValueError:
                raise MetisFormatError(f"line {lineno}: bad edge token") from None
            if not (0 <= u < n):
                raise MetisFormatError(
                    f"line {lineno}: neighbor {u + 1} out of range [1,{n}]"
                )
            if u == v:
                raise MetisFormatError(f"line {lineno}: self-loop at vertex {v + 1}")
            if w <= 0:
                raise MetisFormatError(f"line {lineno}: nonpositive edge weight {w}")
            if (v, u) in seen:
                raise MetisFormatError(
                    f"line {lineno}: duplicate neighbor {u + 1} for vertex {v + 1}"
                )
            seen[(v, u)] = (w, lineno)
            srcs.append(v)
            tgts.append(u)
            wgts.append(w)

    for (v, u), (w, lineno) in seen.items():
        back = seen.get((u, v))
        if back is None:
            raise MetisFormatError(
                f"line {lineno}: edge ({v + 1},{u + 1}) has no reverse entry"
            )
        if back[0] != w:
            raise MetisFormatError(
                f"line {lineno}: edge ({v + 1},{u + 1}) weight {w} != reverse weight {back[0]}"
            )
    if len(srcs) != 2 * m:
        raise MetisFormatError(
            f"line {header_line}: header claims {m} edges, file has {len(srcs) // 2}"
        )

    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(np.asarray(srcs, dtype=np.int64), minlength=n), out=offsets[1:])
    # file order within each vertex line is preserved
    return Graph(
        offsets,
        np.asarray(tgts, dtype=np.int64),
        np.asarray(wgts, dtype=np.int64),
        vweights,
        np.asarray(srcs, dtype=np.int64),
    )


def write_metis(graph: Graph, path: str) -> None:
    """Write a graph in METIS ascii format, always with explicit weights."""
    with open(path, "w") as fh:
        if graph.n == 0:
            fh.write("0 0\n")
            return
        fh.write(f"{graph.n} {graph.m} 11\n")
        for v in range(graph.n):
            parts = [str(int(graph.vertex_weights[v]))]
            for u, w in zip(graph.neighbors(v), graph.neighbor_weights(v)):
                parts.append(str(int(u) + 1))
                parts.append(str(int(w)))
            fh.write(" ".join(parts) + "\n")


# ---------------------------------------------------------------------------
# Generators


def gen_grid(rows: int, cols: int) -> Graph:
    """2D grid with 4-neighborhoods and unit weights."""
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be positive")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1, 1))
            if r + 1 < rows:
                edges.append((v, v + cols, 1))
    return from_edge_list(rows * cols, edges)


def gen_rgg(n: int, radius_factor: float = 1.0, seed: int = 0) -> Graph:
    """Random geometric graph on the unit square with unit weights.

    Points closer than ``radius_factor * sqrt(ln(n) / n)`` are connected,
    the classic threshold scaling for connectivity.
    """
    if n < 1:
        raise ValueError("n must be positive")
    from scipy.spatial import cKDTree

    rng = np.random.default_rng(seed)
    points = rng.random((n, 2))
    radius = radius_factor * math.sqrt(math.log(max(n, 2)) / n)
    tree = cKDTree(points)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    if len(pairs):
        dist = np.linalg.norm(points[pairs[:, 0]] - points[pairs[:, 1]], axis=1)
        pairs = pairs[dist < radius]
    edges = [(int(u), int(v), 1) for u, v in pairs]
    return from_edge_list(n, edges)


# ---------------------------------------------------------------------------
# Subgraph extraction


def extract_subgraphs(
    graph: Graph, part: np.ndarray, k: int
) -> list[tuple[Graph, np.ndarray]]:
    """Split a graph into the k vertex-induced subgraphs of a partition.

    Returns one ``(subgraph, global_ids)`` pair per block.  Local vertex
    ids preserve the global order, and each vertex keeps its surviving
    incident edges in original CSR order.  Cut edges are dropped.
    """
    part = np.asarray(part, dtype=np.int64)
    if len(part) != graph.n:
        raise ValueError("partition length mismatch")
    if graph.n and (part.min() < 0 or part.max() >= k):
        raise ValueError(f"block id out of range [0,{k})")
    pu = part[graph.edge_sources] if len(graph.edge_sources) else graph.edge_sources
    pv = part[graph.edge_targets] if len(graph.edge_targets) else graph.edge_targets
    internal = pu == pv
    out = []
    local = np.empty(graph.n, dtype=np.int64)
    for i in range(k):
        global_ids = np.flatnonzero(part == i)
        n_i = len(global_ids)
        local[global_ids] = np.arange(n_i, dtype=np.int64)
        emask = internal & (pu == i)
        srcs = local[graph.edge_sources[emask]]
        tgts = local[graph.edge_targets[emask]]
        wgts = graph.edge_weights[emask]
        offsets = np.zeros(n_i + 1, dtype=np.int64)
        if n_i:
            np.cumsum(np.bincount(srcs, minlength=n_i), out=offsets[1:])
        sub = Graph(offsets, tgts, wgts, graph.vertex_weights[global_ids], srcs)
        out.append((sub, global_ids))
    return out
