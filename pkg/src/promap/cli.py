"""Command-line interface.

Subcommands:
    map      run a mapping pipeline on a graph file, write the mapping
    eval     score an existing mapping file against a graph and topology
    bench    repeated seeded runs over instances, raw + averaged CSV
    profile  performance-profile CSV from an averaged bench CSV

Exit codes: 0 success, 1 file I/O or format trouble, 2 invalid
configuration or arguments, 3 balance violation (the mapping file is
still written).
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .bench import (
    bench,
    performance_profile,
    read_avg_csv,
    write_avg_csv,
    write_profile_csv,
    write_raw_csv,
)
from .graph import MetisFormatError, load_metis
from .mapping import total_cost, undirected_cost
from .pipelines import hierarchical_multisection, integrated_map
from .topology import Topology, parse_distances, parse_hierarchy

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_BALANCE = 3


def _add_topology_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--hierarchy", default="4:8:6",
                   help="PEs per level, colon-separated, e.g. 4:8:6")
    p.add_argument("--distance", default="1:10:100",
                   help="communication distance per level, e.g. 1:10:100")
    p.add_argument("--epsilon", type=float, default=0.03,
                   help="allowed relative block overweight (default 0.03)")


def _add_refinement_flags(p: argparse.ArgumentParser) -> None:
    # These tune the integrated pipeline (--algo im); hm ignores them.
    p.add_argument("--phi", type=float, default=0.999,
                   help="cost ratio below which the refinement round counter resets")
    p.add_argument("--iw-max", type=int, default=10,
                   help="weak rebalance passes per round at the finest level "
                        "(coarser levels use 2)")
    p.add_argument("--rho", type=int, default=2,
                   help="mini-bucket count per gain bucket")
    p.add_argument("--sigma-coarse", type=float, default=0.065,
                   help="rebalance headroom fraction at the coarsest level")
    p.add_argument("--sigma-fine", type=float, default=0.005,
                   help="rebalance headroom fraction at the finest level")
    p.add_argument("--filter", choices=("nonneg", "jet"), default="nonneg",
                   help="label propagation first-stage filter")
    p.add_argument("--coarsest-factor", type=int, default=128,
                   help="stop coarsening below this many vertices per PE")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="promap",
        description="Map task graphs onto hierarchical processor topologies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_map = sub.add_parser("map", help="compute a mapping for one graph")
    p_map.add_argument("--graph", required=True, help="graph file (METIS format)")
    _add_topology_flags(p_map)
    p_map.add_argument("--algo", choices=("hm", "im"), default="im",
                       help="hm = recursive multisection, im = integrated multilevel")
    p_map.add_argument("--seed", type=int, default=0)
    p_map.add_argument("--out", required=True,
                       help="output mapping file, one PE id per line")
    p_map.add_argument("--stats", default=None,
                       help="optional JSON stats file")
    _add_refinement_flags(p_map)

    p_eval = sub.add_parser("eval", help="evaluate an existing mapping")
    p_eval.add_argument("--graph", required=True)
    p_eval.add_argument("--mapping", required=True,
                        help="mapping file, one PE id per line")
    _add_topology_flags(p_eval)

    p_bench = sub.add_parser("bench", help="seed-repeated benchmark runs")
    p_bench.add_argument("--instances", nargs="+", required=True,
                         help="graph files or grid:RxC / rgg:N:SEED specs")
    p_bench.add_argument("--algos", nargs="+", choices=("hm", "im"),
                         default=["hm", "im"])
    p_bench.add_argument("--seeds", type=int, default=5,
                         help="seeds 0..N-1 per (instance, algo)")
    _add_topology_flags(p_bench)
    p_bench.add_argument("--out-raw", required=True, help="raw per-run CSV")
    p_bench.add_argument("--out-avg", required=True, help="averaged CSV")

    p_prof = sub.add_parser("profile", help="performance profile from averaged CSV")
    p_prof.add_argument("--avg", required=True, help="averaged bench CSV")
    p_prof.add_argument("--out", required=True, help="profile CSV")
    p_prof.add_argument("--taus", type=float, nargs="+", default=None,
                        help="quality ratios (default: 21 geometric points 1.0..2.0)")

    return parser


def _topology_from(args: argparse.Namespace) -> Topology:
    return Topology(parse_hierarchy(args.hierarchy), parse_distances(args.distance))


def _write_mapping(path: str, assignment: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(str(int(b)) for b in assignment))
        if len(assignment):
            fh.write("\n")


def _read_mapping(path: str, n: int, k: int) -> np.ndarray:
    values = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                values.append(int(line))
    if len(values) != n:
        raise ValueError(f"mapping has {len(values)} entries, graph has {n} vertices")
    arr = np.asarray(values, dtype=np.int64)
    if len(arr) and (arr.min() < 0 or arr.max() >= k):
        raise ValueError(f"mapping ids must lie in [0, {k})")
    return arr


def cmd_map(args: argparse.Namespace) -> int:
    try:
        t = _topology_from(args)
        if args.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        g = load_metis(args.graph)
    except (OSError, MetisFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    if args.algo == "hm":
        start = time.perf_counter()
        m = hierarchical_multisection(g, t, args.epsilon, seed=args.seed)
        runtime = time.perf_counter() - start
    else:
        start = time.perf_counter()
        m = integrated_map(
            g, t, args.epsilon, seed=args.seed,
            coarsest_factor=args.coarsest_factor,
            phi=args.phi, rho=args.rho, filter_mode=args.filter,
            sigma_coarse=args.sigma_coarse, sigma_fine=args.sigma_fine,
            iw_max_finest=args.iw_max,
        )
        runtime = time.perf_counter() - start

    j = total_cost(g, t, m.assignment)
    l_max = (1.0 + args.epsilon) * g.total_weight / t.k
    balanced = bool(m.is_balanced(l_max))
    try:
        _write_mapping(args.out, m.assignment)
        if args.stats:
            stats = {
                "J": j,
                "J_undirected": undirected_cost(j),
                "runtime_s": runtime,
                "balanced": balanced,
                "max_block_weight": m.max_block_weight(),
                "k": t.k,
                "seed": args.seed,
            }
            with open(args.stats, "w") as fh:
                json.dump(stats, fh, indent=2)
                fh.write("\n")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    print(f"J={j} balanced={balanced} runtime_s={runtime:.4f}")
    if not balanced:
        print(f"error: mapping exceeds the balance limit "
              f"(max block weight {m.max_block_weight()}, limit {l_max:.3f})",
              file=sys.stderr)
        return EXIT_BALANCE
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    try:
        t = _topology_from(args)
        if args.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        g = load_metis(args.graph)
    except (OSError, MetisFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        assignment = _read_mapping(args.mapping, g.n, t.k)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    j = total_cost(g, t, assignment)
    weights = np.zeros(t.k, dtype=np.int64)
    np.add.at(weights, assignment, g.vertex_weights)
    max_w = int(weights.max()) if t.k else 0
    l_max = (1.0 + args.epsilon) * g.total_weight / t.k
    balanced = max_w <= l_max
    print(f"J={j}")
    print(f"J_undirected={undirected_cost(j)}")
    print(f"max_block_weight={max_w}")
    print(f"L_max={l_max}")
    print(f"balanced={balanced}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        t = _topology_from(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seeds < 1:
        print("error: --seeds must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        raw, avg = bench(args.instances, args.algos, args.seeds, t, args.epsilon)
        write_raw_csv(args.out_raw, raw)
        write_avg_csv(args.out_avg, avg)
    except (OSError, MetisFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {len(raw)} raw rows, {len(avg)} averaged rows")
    return EXIT_OK


def cmd_profile(args: argparse.Namespace) -> int:
    try:
        avg = read_avg_csv(args.avg)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (KeyError, ValueError) as exc:
        print(f"error: malformed averaged CSV: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not avg:
        print("error: averaged CSV contains no rows", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows = performance_profile(avg, args.taus)
        write_profile_csv(args.out, rows)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote {len(rows)} profile rows")
    return EXIT_OK


_COMMANDS = {
    "map": cmd_map,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "profile": cmd_profile,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses exit 2 for bad arguments, matching EXIT_CONFIG
        return int(exc.code or 0)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
