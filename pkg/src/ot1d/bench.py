"""Operation-count benchmark on random unit instances."""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cost import CostSpec
from .decomposition import solve
from .model import Problem

log = logging.getLogger(__name__)

INSTANCE_KINDS = ("chain", "independent")


@dataclass
class BenchConfig:
    """Benchmark parameters.

    ``instance`` selects how points are drawn: ``"chain"`` pools 2N uniform
    draws and labels them alternately supply/demand from the left, so the
    instance is one balanced chain of N pairs; ``"independent"`` draws N
    supplies and N demands independently, which splits into many shorter
    chains.
    """

    sizes: list[int]
    reps: int = 100
    cost: CostSpec = field(default_factory=lambda: CostSpec.power(0.5))
    seed: int = 0
    output: Path | None = None
    instance: str = "chain"

    def __post_init__(self):
        if not self.sizes or any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError("sizes must be nonempty and increasing")
        if min(self.sizes) < 1:
            raise ValueError("sizes must be positive")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.instance not in INSTANCE_KINDS:
            raise ValueError(f"instance must be one of {INSTANCE_KINDS}")


@dataclass
class BenchRow:
    N: int
    additions: list[int]
    cost_evals: list[int]

    @property
    def mean_additions(self) -> float:
        return float(np.mean(self.additions))

    @property
    def mean_cost_evals(self) -> float:
        return float(np.mean(self.cost_evals))


@dataclass
class BenchResult:
    config: BenchConfig
    rows: list[BenchRow]
    additions_slope: float
    evals_slope: float

    def bound_violations(self) -> list[str]:
        """Runs exceeding additions <= 3N^2 - 6N (N >= 3) or evaluations <= N(N+1)/2."""
        out = []
        for row in self.rows:
            N = row.N
            for r, (a, e) in enumerate(zip(row.additions, row.cost_evals)):
                if N >= 3 and a > 3 * N * N - 6 * N:
                    out.append(f"N={N} rep={r}: additions {a} > {3 * N * N - 6 * N}")
                if e > N * (N + 1) // 2:
                    out.append(f"N={N} rep={r}: cost evaluations {e} > {N * (N + 1) // 2}")
        return out


def draw_instance(N: int, rng: np.random.Generator, instance: str = "chain") -> Problem:
    """Random unit problem with N supplies and N demands in [0, 1]; coincident draws are redrawn."""
    while True:
        if instance == "chain":
            x = np.sort(rng.random(2 * N))
            sup, dem = x[0::2], x[1::2]
            if np.all(np.diff(x) > 0):
                break
        else:
            sup, dem = rng.random(N), rng.random(N)
            if len(np.unique(np.concatenate((sup, dem)))) == 2 * N:
                break
    return Problem.unitary(sup.tolist(), dem.tolist())


def _rep_seed(seed: int, N: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, N, rep])


def _one_run(args) -> tuple[int, int]:
    N, rep, seed, cost, instance = args
    rng = np.random.default_rng(_rep_seed(seed, N, rep))
    _, stats = solve(draw_instance(N, rng, instance), cost)
    return stats.additions, stats.cost_evaluations


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    lx, ly = np.log(np.asarray(xs, dtype=float)), np.log(np.asarray(ys, dtype=float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, _), *_ = np.linalg.lstsq(A, ly, rcond=None)
    return float(slope)


def _workers() -> int:
    try:
        return max(0, int(os.environ.get("OT1D_THREADS", "0")))
    except ValueError:
        return 0


def run_bench(config: BenchConfig, *, workers: int | None = None) -> BenchResult:
    """Solve ``reps`` random instances per size and fit log-log slopes of the mean counts.

    Each run's generator is seeded from (seed, N, rep), so results do not
    depend on scheduling. Writes the CSV when ``config.output`` is set.
    """
    workers = _workers() if workers is None else workers
    jobs = [(N, r, config.seed, config.cost, config.instance)
            for N in config.sizes for r in range(config.reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_one_run, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        counts = [_one_run(job) for job in jobs]
    rows = []
    for n_idx, N in enumerate(config.sizes):
        chunk = counts[n_idx * config.reps:(n_idx + 1) * config.reps]
        rows.append(BenchRow(N, [a for a, _ in chunk], [e for _, e in chunk]))
    sizes = [r.N for r in rows]
    result = BenchResult(config, rows,
                         loglog_slope(sizes, [r.mean_additions for r in rows]) if len(rows) > 1 else float("nan"),
                         loglog_slope(sizes, [r.mean_cost_evals for r in rows]) if len(rows) > 1 else float("nan"))
    if config.output is not None:
        write_csv(result, config.output)
    return result


def write_csv(result: BenchResult, path: Path | str):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "mean_additions", "mean_cost_evals", "reps", "seed"])
        for row in result.rows:
            w.writerow([row.N, repr(row.mean_additions), repr(row.mean_cost_evals),
                        result.config.reps, result.config.seed])
