"""Reduction of a weighted problem to independent unit chains.

Picture the graph of the cumulative function F of the signed measure
sum s_i delta(p_i) - sum d_j delta(q_j): each supply is a vertical segment
going up by s_i, each demand one going down by d_j. A mass element (x, y) of a
point at height y sees, looking right along the horizontal line at height y,
its right neighbor: the first point whose segment crosses that line.

The neighbor structure is stored compactly as a list of entries
``(origin, y, right)``: for supplies, ``right`` is the neighbor from height
``y`` up to the next entry of the same supply; for demands, from ``y`` down to
the next one. Horizontal bands between consecutive break levels are strata;
inside a stratum all neighbors are constant, so the problem restricted to it
is a unit problem whose chains can be solved independently.
"""

from __future__ import annotations

import bisect
import logging
import math
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .chain_solver import MatchEvent, solve_chain
from .cost import CostSpec
from .model import (Chain, ChainKind, Problem, SolveStats, StratifiedPlan, Stratum,
                    TransportPlan, canonicalize, to_original_plan)

log = logging.getLogger(__name__)


class PointId(NamedTuple):
    side: str  # "p", "q", or a sentinel
    index: int

    def __repr__(self):
        return self.side if self.index < 0 else f"{self.side}{self.index + 1}"


PLUS_INF = PointId("+inf", -1)
MINUS_INF = PointId("-inf", -1)


class NeighborLookupError(LookupError):
    """A (point, level) pair that is not a mass element of the problem."""


class NeighborEntry(NamedTuple):
    origin: PointId
    y: float
    right: PointId


@dataclass
class StackState:
    """What the right-to-left sweep leaves behind.

    ``supplies``/``demands`` are the two stacks of ``(point, level)`` pairs
    (tops of supplies, bottoms of demands), ``f`` the running level after the
    sweep (F at -inf, i.e. 0 up to rounding). ``positions`` and ``segments``
    map every point to its abscissa and to its vertical range ``(low, high)``.
    """

    supplies: list[tuple[PointId, float]]
    demands: list[tuple[PointId, float]]
    f: float
    positions: dict[PointId, float]
    segments: dict[PointId, tuple[float, float]]
    operations: int = 0


@dataclass
class LeftmostList:
    """Leftmost point of the chain at each level, as seen from -inf.

    ``entries`` holds the upper part (supplies, tops decreasing), one middle
    entry at level ``f``, then the lower part (demands, bottoms decreasing).
    """

    entries: list[NeighborEntry]
    f: float
    n_upper: int

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def at(self, y: float) -> PointId:
        """Leftmost point at level y, or +inf when no segment reaches that level."""
        upper = self.entries[:self.n_upper]
        lower = self.entries[self.n_upper + 1:]
        if y > self.f:
            # upper entry j covers (top_{j+1}, top_j], the last one down to f
            for j in range(len(upper) - 1, -1, -1):
                if y <= upper[j].y:
                    return upper[j].right
            return PLUS_INF
        if y == self.f:
            return self.entries[self.n_upper].right if len(self.entries) > self.n_upper else PLUS_INF
        # lower entry j covers [bottom_j, bottom_{j-1}), the first one up to f
        for e in lower:
            if y >= e.y:
                return e.right
        return PLUS_INF


def _sorted_points(problem: Problem) -> list[tuple[float, float, PointId]]:
    pts = [(x, m, PointId("p", i)) for i, (x, m) in enumerate(problem.supplies)]
    pts += [(x, m, PointId("q", j)) for j, (x, m) in enumerate(problem.demands)]
    pts.sort(key=lambda t: t[0])
    for a, b in zip(pts, pts[1:]):
        if a[0] == b[0]:
            raise ValueError("neighbor lists need a canonical problem (distinct positions)")
    return pts


def build_neighbor_list(problem: Problem) -> tuple[list[NeighborEntry], StackState]:
    """Right-to-left sweep producing the neighbor list and the final stacks.

    The running level starts at S - D (the value of F on the right of every
    point), so every stored y is a value of F. Each supply pops the demands
    whose bottoms it covers; each demand pops the supplies whose tops it
    covers. Every push is popped at most once, so the sweep is linear.
    """
    if not problem.canonical:
        problem = canonicalize(problem)
    pts = _sorted_points(problem)
    f = problem.total_supply - problem.total_demand
    sp: list[tuple[PointId, float]] = []
    sq: list[tuple[PointId, float]] = []
    out: deque[NeighborEntry] = deque()
    positions: dict[PointId, float] = {}
    segments: dict[PointId, tuple[float, float]] = {}
    ops = 0
    for x, m, pid in reversed(pts):
        positions[pid] = x
        if pid.side == "p":
            low = f - m
            segments[pid] = (low, f)
            block: list[NeighborEntry] = []
            while True:
                ops += 1
                if not sq:
                    block.append(NeighborEntry(pid, low, PLUS_INF))
                    break
                q, fq = sq.pop()
                if fq <= low:
                    block.append(NeighborEntry(pid, low, q))
                    if fq < low:
                        sq.append((q, fq))
                    break
                block.append(NeighborEntry(pid, fq, q))
            # entries of one supply are stored by increasing y
            out.extendleft(block)
            sp.append((pid, f))
            f = low
        else:
            high = f + m
            segments[pid] = (f, high)
            block = []
            while True:
                ops += 1
                if not sp:
                    block.append(NeighborEntry(pid, high, PLUS_INF))
                    break
                p, fp = sp.pop()
                if fp >= high:
                    block.append(NeighborEntry(pid, high, p))
                    if fp > high:
                        sp.append((p, fp))
                    break
                block.append(NeighborEntry(pid, fp, p))
            # entries of one demand are stored by decreasing y
            out.extendleft(block)
            sq.append((pid, f))
            f = high
    return list(out), StackState(sp, sq, f, positions, segments, ops)


def build_leftmost_list(state: StackState) -> LeftmostList:
    """Leftmost point at every level, read off the stacks left by the sweep.

    Supplies still on their stack are visible from -inf above the exit level,
    demands below it. The stacks in ``state`` are not modified.
    """
    sp, sq = list(state.supplies), list(state.demands)
    upper: list[NeighborEntry] = []
    lower: list[NeighborEntry] = []
    while sq:
        q, fq = sq.pop()
        lower.append(NeighborEntry(MINUS_INF, fq, q))
    while sp:
        p, fp = sp.pop()
        upper.insert(0, NeighborEntry(MINUS_INF, fp, p))
    if not upper and not lower:
        return LeftmostList([], state.f, 0)
    if not upper:
        mid = lower[0].right
    elif not lower:
        mid = upper[-1].right
    else:
        a, b = upper[-1].right, lower[0].right
        mid = a if state.positions[a] < state.positions[b] else b
    return LeftmostList(upper + [NeighborEntry(MINUS_INF, state.f, mid)] + lower,
                        state.f, len(upper))


class NeighborIndex:
    """Binary-search view of a neighbor list ordered by (position, level)."""

    def __init__(self, entries: Sequence[NeighborEntry], state: StackState):
        self.entries = list(entries)
        self.state = state
        self._keys = [self._key(e.origin, e.y) for e in self.entries]
        if any(a > b for a, b in zip(self._keys, self._keys[1:])):
            raise ValueError("neighbor list is not in sweep order")

    def _key(self, point: PointId, y: float):
        x = self.state.positions[point]
        return (x, y if point.side == "p" else -y)

    def lookup(self, point: PointId, y: float) -> PointId:
        seg = self.state.segments.get(point)
        if seg is None or not seg[0] <= y <= seg[1]:
            raise NeighborLookupError(f"no mass element ({point!r}, {y})")
        k = bisect.bisect_right(self._keys, self._key(point, y)) - 1
        if k < 0 or self.entries[k].origin != point:
            raise NeighborLookupError(f"no entry for ({point!r}, {y})")
        return self.entries[k].right


def lookup_right_neighbor(entries, point: PointId, y: float, state: StackState | None = None
                          ) -> PointId:
    """Right neighbor of the mass element (point, y).

    ``entries`` is a :class:`NeighborIndex` or a raw list together with the
    sweep ``state``. Supplies use the last entry with entry.y <= y, demands the
    last entry with entry.y >= y.
    """
    if not isinstance(entries, NeighborIndex):
        if state is None:
            raise TypeError("a raw neighbor list needs the sweep state")
        entries = NeighborIndex(entries, state)
    return entries.lookup(point, y)


def compute_strata(entries: Sequence[NeighborEntry], leftmost: LeftmostList | None = None,
                   scale: float | None = None) -> list[Stratum]:
    """Bands between consecutive distinct break levels, top to bottom.

    Levels come from the neighbor list and, when given, the leftmost list
    (which contributes the top and bottom of F). Levels closer than
    1e-12 * scale are merged.
    """
    levels = [e.y for e in entries]
    if leftmost is not None:
        levels += [e.y for e in leftmost.entries]
    levels.sort(reverse=True)
    if not levels:
        return []
    if scale is None:
        scale = max(abs(levels[0]), abs(levels[-1]), 1.0)
    tol = 1e-12 * scale
    kept = [levels[0]]
    for y in levels[1:]:
        if y == kept[-1]:
            continue
        if kept[-1] - y <= tol:
            log.info("merging near-equal break levels %r and %r", kept[-1], y)
            continue
        kept.append(y)
    return [Stratum(k + 1, kept[k], kept[k + 1]) for k in range(len(kept) - 1)]


def extract_chains(index: NeighborIndex, leftmost: LeftmostList, stratum: Stratum
                   ) -> list[Chain]:
    """The chain crossing a stratum, followed from its leftmost point.

    Chain ids index the canonical problem's supplies and demands.
    """
    y = stratum.midpoint
    cur = leftmost.at(y)
    if cur == PLUS_INF:
        return []
    seq = [cur]
    limit = len(index.state.positions)
    while True:
        cur = index.lookup(cur, y)
        if cur == PLUS_INF:
            break
        seq.append(cur)
        if len(seq) > limit:
            raise RuntimeError("cycle while following right neighbors")
    sides = [pid.side for pid in seq]
    if any(a == b for a, b in zip(sides, sides[1:])):
        raise RuntimeError(f"chain does not alternate at level {y}: {seq}")
    pos = index.state.positions
    sup = [pid for pid in seq if pid.side == "p"]
    dem = [pid for pid in seq if pid.side == "q"]
    if len(sup) == len(dem):
        kind = ChainKind.BALANCED
    elif len(sup) == len(dem) + 1 and sides[0] == "p":
        kind = ChainKind.LONE_SUPPLY if not dem else ChainKind.UNBALANCED
    else:
        raise RuntimeError(f"unexpected chain shape at level {y}: {seq}")
    return [Chain(kind, tuple(p.index for p in sup), tuple(q.index for q in dem),
                  tuple(pos[p] for p in sup), tuple(pos[q] for q in dem),
                  demand_first=sides[0] == "q")]


@dataclass
class Decomposition:
    """Cost-independent structure of a canonical problem."""

    problem: Problem
    entries: list[NeighborEntry]
    state: StackState
    leftmost: LeftmostList
    strata: list[Stratum]
    chains: list[tuple[Stratum, Chain]]


def decompose(problem: Problem) -> Decomposition:
    """Neighbor lists, strata and per-stratum chains; never evaluates the cost."""
    canon = canonicalize(problem)
    entries, state = build_neighbor_list(canon)
    leftmost = build_leftmost_list(state)
    scale = max(canon.total_supply, canon.total_demand, 1e-300)
    strata = compute_strata(entries, leftmost, scale)
    index = NeighborIndex(entries, state)
    chains = [(s, ch) for s in strata for ch in extract_chains(index, leftmost, s)]
    return Decomposition(canon, entries, state, leftmost, strata, chains)


@dataclass
class Solution:
    plan: TransportPlan
    stats: SolveStats
    decomposition: Decomposition
    stratified: StratifiedPlan
    events: list[list[MatchEvent]] = field(default_factory=list)

    @property
    def lone_supplies(self) -> int:
        return sum(ch.kind is ChainKind.LONE_SUPPLY for _, ch in self.decomposition.chains)

    def diagnostics(self) -> dict:
        kinds = [ch.kind.value for _, ch in self.decomposition.chains]
        return {
            "strata": len(self.decomposition.strata),
            "chains": len(kinds),
            "balanced_chains": kinds.count("balanced"),
            "unbalanced_chains": kinds.count("unbalanced"),
            "lone_supplies_dropped": kinds.count("lone_supply"),
            "neighbor_entries": len(self.decomposition.entries),
        }


def _workers() -> int:
    try:
        return max(0, int(os.environ.get("OT1D_THREADS", "0")))
    except ValueError:
        return 0


def solve_detailed(problem: Problem, cost: CostSpec, *, workers: int | None = None,
                   debug: bool = False) -> Solution:
    """Solve and keep the intermediate structure (strata, chains, events)."""
    dec = decompose(problem)
    todo = [(s, ch) for s, ch in dec.chains if ch.kind is not ChainKind.LONE_SUPPLY]
    work = lambda item: solve_chain(item[1], cost, debug=debug)  # noqa: E731
    workers = _workers() if workers is None else workers
    if workers > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, todo))
    else:
        results = [work(item) for item in todo]

    stats = SolveStats()
    per_stratum: dict[int, list[tuple[int, int, float]]] = {s.index: [] for s in dec.strata}
    events = []
    for (stratum, chain), (assignment, chain_stats, chain_events) in zip(todo, results):
        stats = stats + chain_stats
        events.append(chain_events)
        m = stratum.capacity
        for d, s in assignment.sigma_inverse.items():
            per_stratum[stratum.index].append((chain.supply_ids[s], chain.demand_ids[d], m))
    stratified = StratifiedPlan(tuple(dec.strata),
                                tuple(tuple(per_stratum[s.index]) for s in dec.strata))
    merged = stratified.project()
    plan = to_original_plan(dec.problem, ((i, j, m) for (i, j), m in sorted(merged.items())),
                            cost)
    return Solution(plan, stats, dec, stratified, events)


def solve(problem: Problem, cost: CostSpec) -> tuple[TransportPlan, SolveStats]:
    """Optimal transport plan (in the input's indexing) and operation counts."""
    sol = solve_detailed(problem, cost)
    return sol.plan, sol.stats


def _graph_segments(problem: Problem):
    canon = canonicalize(problem)
    f = 0.0
    segs = []
    for x, m, pid in _sorted_points(canon):
        nf = f + m if pid.side == "p" else f - m
        segs.append((x, min(f, nf), max(f, nf), pid))
        f = nf
    return segs


def brute_force_right_neighbor(problem: Problem, point: PointId, y: float) -> PointId:
    """Right neighbor by a direct scan of the cumulative graph, O(M + N).

    Meant for levels strictly inside a stratum, where no segment ends.
    """
    segs = _graph_segments(problem)
    x0 = next(x for x, _, _, pid in segs if pid == point)
    for x, lo, hi, pid in segs:
        if x > x0 and lo < y < hi:
            return pid
    return PLUS_INF


def brute_force_leftmost(problem: Problem, y: float) -> PointId:
    """First point from the left whose segment crosses level y (strictly)."""
    for _, lo, hi, pid in _graph_segments(problem):
        if lo < y < hi:
            return pid
    return PLUS_INF


def total_levels(problem: Problem) -> tuple[float, float]:
    """(max F, min F) over the line, F(-inf) = 0."""
    canon = canonicalize(problem)
    f, hi, lo = 0.0, 0.0, 0.0
    for _, m, pid in _sorted_points(canon):
        f = f + m if pid.side == "p" else f - m
        hi, lo = max(hi, f), min(lo, f)
    return hi, lo


def fsum_capacity(strata: Sequence[Stratum]) -> float:
    return math.fsum(s.capacity for s in strata)
