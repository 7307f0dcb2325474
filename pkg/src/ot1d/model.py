"""Core domain types: problems, plans, chains, strata and solve counters."""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

if TYPE_CHECKING:
    from .cost import CostSpec

Point = tuple[float, float]  # (position, mass)


class ValidationError(ValueError):
    """Raised on malformed problem data (nonpositive mass, non-finite values)."""


@dataclass
class SolveStats:
    """Deterministic operation counters for one solve."""

    additions: int = 0
    cost_evaluations: int = 0

    def merge(self, other: SolveStats) -> SolveStats:
        return SolveStats(self.additions + other.additions,
                          self.cost_evaluations + other.cost_evaluations)

    __add__ = merge

    def as_dict(self) -> dict[str, int]:
        return {"additions": self.additions, "cost_evaluations": self.cost_evaluations}


@dataclass(frozen=True)
class Problem:
    """Weighted supplies and demands on the line.

    A raw problem may hold unsorted or repeated positions. ``canonicalize``
    returns a problem with ``canonical=True`` whose supplies and demands are
    sorted, merged, disjoint, and satisfy total supply >= total demand. The
    canonical form remembers the raw problem so plans can be reported in the
    caller's original indexing.
    """

    supplies: tuple[Point, ...]
    demands: tuple[Point, ...]
    orientation_swapped: bool = False
    canonical: bool = False
    # (position, mass) cancelled in place when a point sat on both sides
    in_place: tuple[Point, ...] = ()
    raw: Problem | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "supplies", tuple((float(x), float(m)) for x, m in self.supplies))
        object.__setattr__(self, "demands", tuple((float(x), float(m)) for x, m in self.demands))
        for side in (self.supplies, self.demands):
            for x, m in side:
                if not math.isfinite(x):
                    raise ValidationError(f"non-finite position {x!r}")
                if not math.isfinite(m) or m <= 0:
                    raise ValidationError(f"mass must be positive and finite, got {m!r}")

    @classmethod
    def unitary(cls, supply_positions: Iterable[float], demand_positions: Iterable[float]) -> Problem:
        return cls(tuple((x, 1.0) for x in supply_positions),
                   tuple((x, 1.0) for x in demand_positions))

    @property
    def total_supply(self) -> float:
        return math.fsum(m for _, m in self.supplies)

    @property
    def total_demand(self) -> float:
        return math.fsum(m for _, m in self.demands)

    @property
    def M(self) -> int:
        return len(self.supplies)

    @property
    def N(self) -> int:
        return len(self.demands)


@dataclass(frozen=True)
class TransportPlan:
    """Sparse plan: ``entries`` are ``(supply_index, demand_index, mass)``."""

    entries: tuple[tuple[int, int, float], ...]
    total_cost: float = 0.0

    def __len__(self):
        return len(self.entries)

    def as_dict(self) -> dict[tuple[int, int], float]:
        out: dict[tuple[int, int], float] = defaultdict(float)
        for i, j, m in self.entries:
            out[i, j] += m
        return dict(out)


class ChainKind(enum.Enum):
    BALANCED = "balanced"
    UNBALANCED = "unbalanced"
    LONE_SUPPLY = "lone_supply"


@dataclass(frozen=True)
class Chain:
    """Alternating run of unit supplies and demands.

    ``supply_ids``/``demand_ids`` index into the parent problem and
    ``supply_pos``/``demand_pos`` carry the matching positions, both sorted by
    position. ``demand_first`` marks a balanced chain that starts with a
    demand (q, p, ..., q, p); solvers handle it by reflection.
    """

    kind: ChainKind
    supply_ids: tuple[int, ...]
    demand_ids: tuple[int, ...]
    supply_pos: tuple[float, ...]
    demand_pos: tuple[float, ...]
    demand_first: bool = False

    def __post_init__(self):
        M, N = len(self.supply_ids), len(self.demand_ids)
        expected = {ChainKind.BALANCED: N, ChainKind.UNBALANCED: N + 1, ChainKind.LONE_SUPPLY: 1}
        if M != expected[self.kind] or (self.kind is ChainKind.LONE_SUPPLY and N):
            raise ValueError(f"{self.kind.value} chain with {M} supplies and {N} demands")
        if self.demand_first and self.kind is not ChainKind.BALANCED:
            raise ValueError("only balanced chains may start with a demand")
        pts = self.points()
        for (a, sa), (b, sb) in zip(pts, pts[1:]):
            if not a < b or sa == sb:
                raise ValueError("chain points must strictly increase and alternate")

    @classmethod
    def from_positions(cls, supply_pos: Sequence[float], demand_pos: Sequence[float]) -> Chain:
        """Build a chain on its own (ids are 0..M-1 / 0..N-1)."""
        M, N = len(supply_pos), len(demand_pos)
        if N == 0 and M == 1:
            kind = ChainKind.LONE_SUPPLY
        elif M == N:
            kind = ChainKind.BALANCED
        elif M == N + 1:
            kind = ChainKind.UNBALANCED
        else:
            raise ValueError(f"cannot form a chain from {M} supplies and {N} demands")
        demand_first = bool(N) and M == N and demand_pos[0] < supply_pos[0]
        return cls(kind, tuple(range(M)), tuple(range(N)),
                   tuple(map(float, supply_pos)), tuple(map(float, demand_pos)), demand_first)

    def points(self) -> list[tuple[float, str]]:
        pts = [(x, "p") for x in self.supply_pos] + [(x, "q") for x in self.demand_pos]
        return sorted(pts)

    @property
    def size(self) -> int:
        return len(self.demand_ids)


@dataclass(frozen=True)
class Assignment:
    """Chain-local matching: demand index -> supply index, plus unmatched supplies."""

    sigma_inverse: dict[int, int]
    exposed_supplies: frozenset[int] = frozenset()

    def pairs(self) -> list[tuple[int, int]]:
        """``(supply, demand)`` pairs sorted by demand."""
        return [(s, d) for d, s in sorted(self.sigma_inverse.items())]


@dataclass(frozen=True)
class Stratum:
    index: int
    y_top: float
    y_bottom: float

    @property
    def capacity(self) -> float:
        return self.y_top - self.y_bottom

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.y_top + self.y_bottom)


@dataclass(frozen=True)
class StratifiedPlan:
    """Per-stratum unit plans; entry masses are bounded by the stratum capacity."""

    strata: tuple[Stratum, ...]
    entries: tuple[tuple[tuple[int, int, float], ...], ...]

    def project(self) -> dict[tuple[int, int], float]:
        out: dict[tuple[int, int], float] = defaultdict(float)
        for rows in self.entries:
            for i, j, m in rows:
                out[i, j] += m
        return dict(out)


def _merge(points: Iterable[Point]) -> dict[float, float]:
    merged: dict[float, list[float]] = defaultdict(list)
    for x, m in points:
        merged[x].append(m)
    return {x: math.fsum(ms) for x, ms in merged.items()}


def canonicalize(raw: Problem) -> Problem:
    """Sort, merge duplicates, cancel common points in place, orient so S >= D.

    Positions are compared exactly. Mass shared by a supply and a demand at
    the same position stays there; only the residual on the heavier side is
    kept. If the remaining supply is smaller than the demand, roles are
    swapped (the cost is symmetric) and ``orientation_swapped`` is set.
    """
    if raw.canonical:
        return raw
    sup, dem = _merge(raw.supplies), _merge(raw.demands)
    in_place = []
    for x in sorted(sup.keys() & dem.keys()):
        common = min(sup[x], dem[x])
        in_place.append((x, common))
        sup[x] -= common
        dem[x] -= common
        # exact equality is fine: the smaller side was subtracted from itself
        if sup[x] <= 0:
            del sup[x]
        if dem[x] <= 0:
            del dem[x]
    supplies = tuple(sorted(sup.items()))
    demands = tuple(sorted(dem.items()))
    swapped = math.fsum(m for _, m in supplies) < math.fsum(m for _, m in demands)
    if swapped:
        supplies, demands = demands, supplies
    return Problem(supplies, demands, orientation_swapped=swapped, canonical=True,
                   in_place=tuple(in_place), raw=raw)


def to_original_plan(canon: Problem, entries: Iterable[tuple[int, int, float]],
                     cost: CostSpec | None = None) -> TransportPlan:
    """Map a plan on a canonical problem back onto the raw problem's indexing.

    In-place cancelled mass is re-emitted as zero-distance entries. Mass on a
    merged position is spread greedily over the raw points at that position.
    """
    raw = canon.raw if canon.raw is not None else canon
    cap_s: dict[float, list[list]] = defaultdict(list)
    cap_d: dict[float, list[list]] = defaultdict(list)
    for i, (x, m) in enumerate(raw.supplies):
        cap_s[x].append([i, m])
    for j, (x, m) in enumerate(raw.demands):
        cap_d[x].append([j, m])

    moves: list[tuple[float, float, float]] = [(x, x, m) for x, m in canon.in_place]
    for i, j, m in entries:
        xs, xd = canon.supplies[i][0], canon.demands[j][0]
        if canon.orientation_swapped:
            xs, xd = xd, xs
        moves.append((xs, xd, m))

    out: dict[tuple[int, int], float] = defaultdict(float)
    for xs, xd, m in moves:
        srcs, dsts = cap_s[xs], cap_d[xd]
        left = m
        while left > 0:
            # drop exhausted raw points; tolerate round-off on the last one
            while len(srcs) > 1 and srcs[0][1] <= 0:
                srcs.pop(0)
            while len(dsts) > 1 and dsts[0][1] <= 0:
                dsts.pop(0)
            s, d = srcs[0], dsts[0]
            step = min(left, s[1], d[1])
            if step <= 0 or (len(srcs) == 1 and len(dsts) == 1):
                step = left
            out[s[0], d[0]] += step
            s[1] -= step
            d[1] -= step
            left -= step
    plan_entries = tuple((i, j, m) for (i, j), m in sorted(out.items()) if m > 0)
    total = plan_cost(TransportPlan(plan_entries), raw, cost) if cost is not None else 0.0
    return TransportPlan(plan_entries, total)


def plan_cost(plan: TransportPlan, problem: Problem, cost: CostSpec) -> float:
    """Total cost sum(mass * g(|p - q|)); -inf if any zero-distance entry has g(0) = -inf."""
    terms = []
    M, N = problem.M, problem.N
    for i, j, m in plan.entries:
        if not (0 <= i < M and 0 <= j < N):
            raise IndexError(f"plan entry ({i}, {j}) out of range for {M}x{N} problem")
        g = cost.g(abs(problem.supplies[i][0] - problem.demands[j][0]))
        if g == -math.inf:
            return -math.inf
        terms.append(m * g)
    return math.fsum(terms)


def marginal_violation(plan: TransportPlan, problem: Problem) -> float:
    """Largest relative violation of the transport constraints.

    Uses the symmetric form: row sums <= s_i, column sums <= d_j and total
    moved mass = min(S, D). For S >= D this is equivalent to every demand
    being exactly filled.
    """
    rows = [0.0] * problem.M
    cols = [0.0] * problem.N
    for i, j, m in plan.entries:
        if m < 0:
            return math.inf
        rows[i] += m
        cols[j] += m
    worst = 0.0
    for (_, s), r in zip(problem.supplies, rows):
        worst = max(worst, (r - s) / s)
    for (_, d), c in zip(problem.demands, cols):
        worst = max(worst, (c - d) / d)
    target = min(problem.total_supply, problem.total_demand)
    moved = math.fsum(rows)
    if target > 0:
        worst = max(worst, abs(moved - target) / target)
    elif moved > 0:
        worst = math.inf
    return worst


def spans_non_crossing(spans: Iterable[tuple[float, float]]) -> bool:
    """True iff the open intervals spanned by the arcs are pairwise disjoint or nested.

    Stack sweep over intervals sorted by (left, -right).
    """
    intervals = sorted(((min(a, b), max(a, b)) for a, b in spans), key=lambda t: (t[0], -t[1]))
    stack: list[float] = []
    for lo, hi in intervals:
        if lo == hi:
            continue
        while stack and stack[-1] <= lo:
            stack.pop()
        if stack and stack[-1] < hi:
            return False
        stack.append(hi)
    return True


def plan_non_crossing(plan: TransportPlan, problem: Problem) -> bool:
    return spans_non_crossing(
        (problem.supplies[i][0], problem.demands[j][0]) for i, j, _ in plan.entries)
