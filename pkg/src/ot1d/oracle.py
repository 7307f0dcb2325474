"""Brute-force reference solvers for small instances."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cost import CostSpec
from .model import Chain, ChainKind, Problem, TransportPlan, plan_cost

MAX_DEMANDS = 8
MAX_SUPPLIES = 9


class OracleSizeError(ValueError):
    """The instance is too large for exhaustive enumeration."""


@dataclass(frozen=True)
class OracleResult:
    min_cost: float
    argmin_plans: tuple[TransportPlan, ...]


@lru_cache(maxsize=None)
def _injections(m: int, n: int) -> np.ndarray:
    """All injective maps {0..n-1} -> {0..m-1}, one per row."""
    rows = list(itertools.permutations(range(m), n))
    return np.array(rows, dtype=np.int8).reshape(len(rows), n)


def oracle_unitary(problem: Problem, cost: CostSpec) -> OracleResult:
    """Exhaustive minimum over all injective demand -> supply maps.

    All masses must be 1. Coincident points are allowed. With fewer supplies
    than demands the roles are exchanged (the cost is symmetric) and the
    returned plans still use (supply, demand) indices.
    """
    for _, m in problem.supplies + problem.demands:
        if abs(m - 1.0) > 1e-12:
            raise ValueError("oracle_unitary needs unit masses")
    sup = np.array([x for x, _ in problem.supplies], dtype=float)
    dem = np.array([x for x, _ in problem.demands], dtype=float)
    swapped = len(sup) < len(dem)
    if swapped:
        sup, dem = dem, sup
    M, N = len(sup), len(dem)
    if N > MAX_DEMANDS or M > MAX_SUPPLIES:
        raise OracleSizeError(f"{M} x {N} exceeds the oracle guard "
                              f"({MAX_SUPPLIES} x {MAX_DEMANDS})")
    if N == 0:
        return OracleResult(0.0, (TransportPlan((), 0.0),))
    dist = np.abs(dem[:, None] - sup[None, :])
    with np.errstate(divide="ignore"):
        table = np.where(dist == 0, cost.zero_value, cost.g_array(np.where(dist == 0, 1.0, dist)))
    maps = _injections(M, N)
    totals = table[np.arange(N), maps].sum(axis=1)
    best = float(totals.min())
    if math.isinf(best):
        hits = np.flatnonzero(totals == best)
    else:
        hits = np.flatnonzero(totals <= best + 1e-12 * max(1.0, abs(best)))
    plans = []
    for row in hits:
        pairs = [(int(s), j) for j, s in enumerate(maps[row])]
        if swapped:
            pairs = [(j, s) for s, j in pairs]
        entries = tuple(sorted((s, j, 1.0) for s, j in pairs))
        plans.append(TransportPlan(entries, float(totals[row])))
    # report the minimum with compensated summation for the best plan
    best = min(plan_cost(p, problem, cost) for p in plans)
    return OracleResult(best, tuple(plans))


def expand_to_unitary(problem: Problem, denominator: int) -> Problem:
    """Replace each point of mass m by m * denominator unit atoms at the same place."""
    if denominator < 1 or int(denominator) != denominator:
        raise ValueError("denominator must be a positive integer")

    def atoms(points):
        out = []
        for x, m in points:
            k = m * denominator
            n = round(k)
            if abs(k - n) > 1e-9 or n < 1:
                raise ValueError(f"mass {m} is not a multiple of 1/{denominator}")
            out.extend([x] * n)
        return out

    return Problem.unitary(atoms(problem.supplies), atoms(problem.demands))


def oracle_nesting_free_unbalanced(chain: Chain, cost: CostSpec) -> OracleResult:
    """Direct evaluation of the N + 1 plans that match in place around one exposed supply.

    Plans use chain-local (supply, demand) indices.
    """
    if chain.kind is ChainKind.LONE_SUPPLY:
        return OracleResult(0.0, (TransportPlan((), 0.0),))
    if chain.kind is not ChainKind.UNBALANCED:
        raise ValueError("expected an unbalanced chain")
    p, q = chain.supply_pos, chain.demand_pos
    N = len(q)
    scored = []
    for m in range(N + 1):
        pairs = [(i if i < m else i + 1, i) for i in range(N)]
        total = math.fsum(cost(p[s], q[d]) for s, d in pairs)
        scored.append((total, TransportPlan(tuple((s, d, 1.0) for s, d in pairs), total)))
    best = min(t for t, _ in scored)
    plans = tuple(pl for t, pl in scored if t <= best + 1e-12 * max(1.0, abs(best)))
    return OracleResult(best, plans)
