"""Benchmark harness: seed-repeated runs, CSV output, performance profiles.

Every (instance, algorithm, seed) run yields one raw record; records are
averaged per (instance, algorithm) and the averaged costs feed the
performance profile: for each quality ratio tau, the fraction of instances
on which an algorithm stays within tau times the best averaged cost.
Schemas (CSV headers) are stable:

    raw:      instance,algo,seed,j,runtime_s,balanced,max_block_weight
    averaged: instance,algo,seeds,j_mean,runtime_mean_s,balanced_all
    profile:  tau,algo,fraction
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass

import numpy as np

from .graph import Graph, gen_grid, gen_rgg, load_metis
from .mapping import total_cost
from .pipelines import hierarchical_multisection, integrated_map
from .topology import Topology

RAW_FIELDS = ["instance", "algo", "seed", "j", "runtime_s", "balanced", "max_block_weight"]
AVG_FIELDS = ["instance", "algo", "seeds", "j_mean", "runtime_mean_s", "balanced_all"]
PROFILE_FIELDS = ["tau", "algo", "fraction"]

ALGORITHMS = ("hm", "im")


@dataclass
class RunRecord:
    instance: str
    algo: str
    seed: int
    j: float
    runtime_s: float
    balanced: bool
    max_block_weight: int


@dataclass
class AveragedRecord:
    instance: str
    algo: str
    seeds: int
    j_mean: float
    runtime_mean_s: float
    balanced_all: bool


def load_instance(spec: str) -> tuple[str, Graph]:
    """Resolve an instance spec: a graph file path, ``grid:RxC``, or
    ``rgg:N:SEED`` (random geometric graph, unit radius factor)."""
    if spec.startswith("grid:"):
        dims = spec[len("grid:"):]
        rows, _, cols = dims.partition("x")
        return f"grid_{rows}x{cols}", gen_grid(int(rows), int(cols))
    if spec.startswith("rgg:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"rgg spec must be rgg:N:SEED, got {spec!r}")
        n, seed = int(parts[1]), int(parts[2])
        return f"rgg_{n}_{seed}", gen_rgg(n, seed=seed)
    name = os.path.splitext(os.path.basename(spec))[0]
    return name, load_metis(spec)


def run_once(name: str, g: Graph, t: Topology, eps: float, algo: str, seed: int,
             **pipeline_kwargs) -> RunRecord:
    """One timed pipeline run; the clock covers computation only."""
    if algo == "hm":
        start = time.perf_counter()
        m = hierarchical_multisection(g, t, eps, seed=seed)
        runtime = time.perf_counter() - start
    elif algo == "im":
        start = time.perf_counter()
        m = integrated_map(g, t, eps, seed=seed, **pipeline_kwargs)
        runtime = time.perf_counter() - start
    else:
        raise ValueError(f"unknown algorithm {algo!r}")
    l_max = (1.0 + eps) * g.total_weight / t.k
    return RunRecord(
        instance=name,
        algo=algo,
        seed=seed,
        j=total_cost(g, t, m.assignment),
        runtime_s=runtime,
        balanced=bool(m.is_balanced(l_max)),
        max_block_weight=m.max_block_weight(),
    )


def bench(instances: list[str], algos: list[str], n_seeds: int, t: Topology,
          eps: float, **pipeline_kwargs) -> tuple[list[RunRecord], list[AveragedRecord]]:
    """Run every (instance, algo, seed) combination, seeds 0..n_seeds-1."""
    raw: list[RunRecord] = []
    for spec in instances:
        name, g = load_instance(spec)
        for algo in algos:
            for seed in range(n_seeds):
                raw.append(run_once(name, g, t, eps, algo, seed, **pipeline_kwargs))
    return raw, average_records(raw)


def average_records(raw: list[RunRecord]) -> list[AveragedRecord]:
    """Arithmetic mean of cost and runtime per (instance, algo)."""
    groups: dict[tuple[str, str], list[RunRecord]] = {}
    for r in raw:
        groups.setdefault((r.instance, r.algo), []).append(r)
    out = []
    for (instance, algo), records in sorted(groups.items()):
        out.append(AveragedRecord(
            instance=instance,
            algo=algo,
            seeds=len(records),
            j_mean=sum(r.j for r in records) / len(records),
            runtime_mean_s=sum(r.runtime_s for r in records) / len(records),
            balanced_all=all(r.balanced for r in records),
        ))
    return out


def default_tau_grid() -> list[float]:
    """21 geometrically spaced quality ratios from 1.0 to 2.0."""
    return [float(x) for x in np.geomspace(1.0, 2.0, 21)]


def performance_profile(
    avg: list[AveragedRecord], taus: list[float] | None = None
) -> list[tuple[float, str, float]]:
    """Fraction of instances per algorithm within tau of the best cost.

    Best is the minimum averaged cost over all algorithms on that
    instance; ties count for every tying algorithm.  An algorithm missing
    an instance simply never covers it.  Rows come out sorted by
    (tau, algo).
    """
    if taus is None:
        taus = default_tau_grid()
    if any(tau < 1 for tau in taus):
        raise ValueError("tau values must be >= 1")
    instances = sorted({r.instance for r in avg})
    algos = sorted({r.algo for r in avg})
    cost = {(r.instance, r.algo): r.j_mean for r in avg}
    best = {
        i: min(cost[(i, a)] for a in algos if (i, a) in cost) for i in instances
    }
    rows = []
    for tau in taus:
        for a in algos:
            covered = sum(
                1 for i in instances
                if (i, a) in cost and cost[(i, a)] <= tau * best[i]
            )
            rows.append((float(tau), a, covered / len(instances)))
    return rows


# ---------------------------------------------------------------------------
# CSV plumbing


def write_raw_csv(path: str, records: list[RunRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RAW_FIELDS)
        for r in records:
            w.writerow([r.instance, r.algo, r.seed, r.j, f"{r.runtime_s:.6f}",
                        int(r.balanced), r.max_block_weight])


def write_avg_csv(path: str, records: list[AveragedRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(AVG_FIELDS)
        for r in records:
            w.writerow([r.instance, r.algo, r.seeds, r.j_mean,
                        f"{r.runtime_mean_s:.6f}", int(r.balanced_all)])


def read_avg_csv(path: str) -> list[AveragedRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(AveragedRecord(
                instance=row["instance"],
                algo=row["algo"],
                seeds=int(row["seeds"]),
                j_mean=float(row["j_mean"]),
                runtime_mean_s=float(row["runtime_mean_s"]),
                balanced_all=bool(int(row["balanced_all"])),
            ))
    return out


def write_profile_csv(path: str, rows: list[tuple[float, str, float]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PROFILE_FIELDS)
        for tau, algo, fraction in rows:
            w.writerow([tau, algo, fraction])
