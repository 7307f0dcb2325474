"""Optimal assignment on a single alternating chain.

The solver scans the indicator table line by line. A negative indicator
certifies a block of adjacent matchings of some optimal plan; those points
are matched, removed, and the scan restarts at order 1 on the shorter chain.
When no line has a negative entry, a balanced chain is matched in place
(q_i <- p_i) and an unbalanced one leaves out the supply that minimizes the
resulting nesting-free cost.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .cost import CostSpec
from .indicators import IndicatorTable, rebuild_after_removal, removal_span
from .model import Assignment, Chain, ChainKind, SolveStats, spans_non_crossing

log = logging.getLogger(__name__)

P_NESTING = "p"  # sigma(i) = i - 1 on the block: q_{i0} .. p_{i0+k0}
Q_NESTING = "q"  # sigma(i) = i on the block: p_{i0+1} .. q_{i0+k0}


class SoundnessError(AssertionError):
    """A consumed indicator did not satisfy the certificate's hypotheses."""


@dataclass(frozen=True)
class MatchEvent:
    """One consumed negative indicator.

    ``anchor`` is the 1-based index i0 in the chain as renamed at that moment;
    ``pairs`` are ``(supply, demand)`` indices into the chain being solved.
    """

    kind: str
    order: int
    anchor: int
    pairs: tuple[tuple[int, int], ...]


def _oriented(chain: Chain):
    """Supply-first positions plus maps back to the chain's own indexing."""
    p = np.asarray(chain.supply_pos, dtype=float)
    q = np.asarray(chain.demand_pos, dtype=float)
    if chain.demand_first:
        # reflect x -> -x: q_1 < p_1 < ... becomes -p_N < -q_N < ...
        return -p[::-1], -q[::-1], np.arange(len(p))[::-1], np.arange(len(q))[::-1]
    return p, q, np.arange(len(p)), np.arange(len(q))


def _check_certificate(table: IndicatorTable, kind: str, k0: int, i0: int):
    """Re-verify the hypotheses behind consuming I^kind_{k0}(i0).

    Every lower-order indicator supported inside the consumed block must be
    known and nonnegative. For a p-block on an unbalanced chain the q-range
    reaches one step further, onto the trailing supply.
    """
    value = table.value(kind, k0, i0)
    if value is None or not value < 0:
        raise SoundnessError(f"I^{kind}_{k0}({i0}) = {value} is not a known negative value")
    for k in range(1, k0):
        if kind == P_NESTING:
            p_range = range(i0, i0 + k0 - k + 1)
            q_hi = i0 + k0 - k if table.unbalanced else i0 + k0 - k - 1
            q_range = range(i0, q_hi + 1)
        else:
            p_range = range(i0 + 1, i0 + k0 - k + 1)
            q_range = range(i0, i0 + k0 - k + 1)
        for sub, idx in ((P_NESTING, p_range), (Q_NESTING, q_range)):
            for i in idx:
                v = table.value(sub, k, i)
                if v is None or v < 0:
                    raise SoundnessError(
                        f"consuming I^{kind}_{k0}({i0}) but I^{sub}_{k}({i}) = {v}")


def _pick_disjoint(neg_p: np.ndarray, neg_q: np.ndarray, k: int):
    """Negative indicators of one line, left to right, skipping overlapping blocks."""
    found = [(*removal_span(P_NESTING, k, i + 1), P_NESTING, i + 1) for i in neg_p.tolist()]
    found += [(*removal_span(Q_NESTING, k, i + 1), Q_NESTING, i + 1) for i in neg_q.tolist()]
    found.sort()
    chosen, last = [], -1
    for first, end, kind, i0 in found:
        if first > last:
            chosen.append((first, end, kind, i0))
            last = end
    return chosen


def _run_indicator_loop(table: IndicatorTable, debug: bool):
    """Consume negative indicators until none is left; return (table, pairs, events).

    Pairs are expressed in the memo ids of the initial table.
    """
    pairs: list[tuple[int, int]] = []
    events: list[MatchEvent] = []
    k = 1
    while table.n >= 2 and k < table.n:
        ip, iq = table.fill_line_arrays(k)
        neg_p = np.flatnonzero(ip < 0)
        neg_q = np.flatnonzero(iq < 0)
        if not len(neg_p) and not len(neg_q):
            k += 1
            continue
        spans = []
        for first, last, kind, i0 in _pick_disjoint(neg_p, neg_q, k):
            if debug:
                _check_certificate(table, kind, k, i0)
            shift = 1 if kind == P_NESTING else 0
            block = [(int(table.p_ids[i - 1]), int(table.q_ids[i - 1 - shift]))
                     for i in range(i0 + 1, i0 + k + 1)]
            pairs.extend(block)
            events.append(MatchEvent(kind, k, i0, tuple(block)))
            spans.append((first, last))
        table = rebuild_after_removal(table, spans)
        k = 1
    return table, pairs, events


def _require(chain: Chain, kind: ChainKind):
    if chain.kind is not kind:
        raise ValueError(f"expected a {kind.value} chain, got {chain.kind.value}")


def _to_assignment(pairs, exposed, pmap, qmap) -> Assignment:
    sigma_inv = {int(qmap[d]): int(pmap[s]) for s, d in pairs}
    return Assignment(sigma_inv, frozenset(int(pmap[s]) for s in exposed))


def _map_events(events, pmap, qmap) -> list[MatchEvent]:
    return [MatchEvent(e.kind, e.order, e.anchor,
                       tuple((int(pmap[s]), int(qmap[d])) for s, d in e.pairs)) for e in events]


def solve_balanced_chain(chain: Chain, cost: CostSpec, *, debug: bool = False
                         ) -> tuple[Assignment, SolveStats, list[MatchEvent]]:
    """Optimal matching of a balanced chain.

    Indices in the result and in the events refer to ``chain.supply_ids`` /
    ``chain.demand_ids`` positions (0-based). With ``debug`` each consumed
    indicator is re-checked against the table before matching.
    """
    _require(chain, ChainKind.BALANCED)
    p, q, pmap, qmap = _oriented(chain)
    stats = SolveStats()
    table, pairs, events = _run_indicator_loop(IndicatorTable(p, q, cost, stats), debug)
    pairs.extend(zip(table.p_ids.tolist(), table.q_ids.tolist()))
    return _to_assignment(pairs, (), pmap, qmap), stats, _map_events(events, pmap, qmap)


def _exposure_costs(diag: np.ndarray, shift: np.ndarray, stats: SolveStats) -> np.ndarray:
    """Cost of the nesting-free plan leaving supply m out, for m = 0..n.

    total[m] = sum_{i<m} diag[i] + sum_{i>=m} shift[i], from running sums.
    Each running-sum extension and each nontrivial combination is one addition.
    """
    n = len(diag)
    head = np.concatenate(([0.0], np.cumsum(diag)))
    tail = np.concatenate((np.cumsum(shift[::-1])[::-1], [0.0]))
    if n:
        stats.additions += 3 * (n - 1)
    return head + tail


def _isolation_mask(diag: np.ndarray, shift: np.ndarray) -> np.ndarray:
    n = len(diag)
    ok = np.ones(n + 1, dtype=bool)
    # supply m can stay unmatched only if q_{m-1} prefers it no more than p_{m-1},
    # and q_m prefers it no more than p_{m+1}
    ok[1:] &= shift >= diag
    ok[:-1] &= diag >= shift
    return ok


def prefilter_exposed(chain: Chain, cost: CostSpec) -> set[int]:
    """Supplies of an unbalanced chain that pass the isolation rule."""
    _require(chain, ChainKind.UNBALANCED)
    p = np.asarray(chain.supply_pos, dtype=float)
    q = np.asarray(chain.demand_pos, dtype=float)
    diag = cost.g_array(q - p[:-1])
    shift = cost.g_array(p[1:] - q)
    return set(np.flatnonzero(_isolation_mask(diag, shift)).tolist())


def solve_unbalanced_chain(chain: Chain, cost: CostSpec, *, debug: bool = False
                           ) -> tuple[Assignment, SolveStats]:
    """Optimal matching of a chain p_1 < q_1 < ... < q_N < p_{N+1}; one supply stays exposed."""
    assignment, stats, _ = _solve_unbalanced(chain, cost, debug)
    return assignment, stats


def _solve_unbalanced(chain: Chain, cost: CostSpec, debug: bool):
    _require(chain, ChainKind.UNBALANCED)
    p, q, pmap, qmap = _oriented(chain)
    stats = SolveStats()
    table, pairs, events = _run_indicator_loop(IndicatorTable(p, q, cost, stats), debug)
    n = table.n
    if n == 0:
        exposed = int(table.p_ids[0])
    else:
        idx = np.arange(n)
        diag = table._diag(0, idx)
        shift = table._shift(1, idx)
        totals = _exposure_costs(diag, shift, stats)
        allowed = _isolation_mask(diag, shift)
        if not allowed.any():
            log.warning("isolation rule rejected every supply; using the unfiltered minimum")
            allowed[:] = True
        m = int(np.flatnonzero(allowed)[np.argmin(totals[allowed])])
        exposed = int(table.p_ids[m])
        rest = np.delete(table.p_ids, m)
        pairs.extend(zip(rest.tolist(), table.q_ids.tolist()))
    return _to_assignment(pairs, (exposed,), pmap, qmap), stats, _map_events(events, pmap, qmap)


def solve_chain(chain: Chain, cost: CostSpec, *, debug: bool = False
                ) -> tuple[Assignment, SolveStats, list[MatchEvent]]:
    """Dispatch on the chain kind; a lone supply is simply left exposed."""
    if chain.kind is ChainKind.BALANCED:
        return solve_balanced_chain(chain, cost, debug=debug)
    if chain.kind is ChainKind.UNBALANCED:
        return _solve_unbalanced(chain, cost, debug)
    return Assignment({}, frozenset({0})), SolveStats(), []


def verify_no_crossing(assignment: Assignment, chain: Chain) -> bool:
    """True iff all matched intervals are pairwise disjoint or nested."""
    return spans_non_crossing((chain.supply_pos[s], chain.demand_pos[d])
                              for d, s in assignment.sigma_inverse.items())


def assignment_cost(assignment: Assignment, chain: Chain, cost: CostSpec) -> float:
    return math.fsum(cost(chain.supply_pos[s], chain.demand_pos[d])
                     for d, s in assignment.sigma_inverse.items())
