"""Local matching indicators on a chain and the incremental indicator table.

Chain indexing is 1-based in the public API, as in the usual statement of
the indicators: a balanced chain is p_1 < q_1 < ... < p_N < q_N, an
unbalanced one has an extra trailing supply p_{N+1}.

    I^p_k(i) = c(p_i, q_{i+k}) + sum_{j<k} c(p_{i+j+1}, q_{i+j}) - sum_{j<=k} c(p_{i+j}, q_{i+j})
    I^q_k(i) = c(p_{i+k+1}, q_i) + sum_{1<=j<=k} c(p_{i+j}, q_{i+j}) - sum_{j<=k} c(p_{i+j+1}, q_{i+j})

The table caches two families of partial sums per line,

    diag(k, i)  = sum_{j=0..k}   c(p_{i+j}, q_{i+j})
    shift(k, i) = sum_{j=0..k-1} c(p_{i+j+1}, q_{i+j})

so that each new indicator costs one sum extension plus two additions to
assemble; cached reads are free. Pairwise costs are memoized by the chain's
original point ids, so a pair is evaluated at most once per chain solve even
across removals.

Internally arrays are 0-based; a NaN marks a value that is not known yet.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .cost import CostSpec
from .model import SolveStats

_DENSE_MEMO_LIMIT = 1 << 23


class CostMemo:
    """Pairwise cost cache keyed by (supply id, demand id); counts misses."""

    def __init__(self, supply_pos, demand_pos, cost: CostSpec, stats: SolveStats):
        self.supply_pos = np.asarray(supply_pos, dtype=float)
        self.demand_pos = np.asarray(demand_pos, dtype=float)
        self.cost = cost
        self.stats = stats
        M, N = len(self.supply_pos), len(self.demand_pos)
        self._dense = M * N <= _DENSE_MEMO_LIMIT
        if self._dense:
            self._values = np.full((M, N), np.nan)
        else:
            self._table: dict[int, float] = {}
            self._ncols = N

    def __len__(self):
        if self._dense:
            return int(np.count_nonzero(~np.isnan(self._values)))
        return len(self._table)

    def get(self, si: np.ndarray, di: np.ndarray) -> np.ndarray:
        si = np.asarray(si, dtype=np.intp)
        di = np.asarray(di, dtype=np.intp)
        if self._dense:
            vals = self._values[si, di]
            miss = np.isnan(vals)
            if miss.any():
                ms, md = si[miss], di[miss]
                new = self.cost.g_array(np.abs(self.supply_pos[ms] - self.demand_pos[md]))
                self._values[ms, md] = new
                vals[miss] = new
                self.stats.cost_evaluations += len(np.unique(ms * len(self.demand_pos) + md))
            return vals
        out = np.empty(len(si))
        for n, (a, b) in enumerate(zip(si.tolist(), di.tolist())):
            key = a * self._ncols + b
            v = self._table.get(key)
            if v is None:
                v = self.cost.g(abs(self.supply_pos[a] - self.demand_pos[b]))
                self._table[key] = v
                self.stats.cost_evaluations += 1
            out[n] = v
        return out


def _block_diag(k, i):
    return 2 * i, 2 * (i + k) + 1


def _block_shift(k, i):
    return 2 * i + 1, 2 * (i + k)


def _block_iq(k, i):
    return 2 * i + 1, 2 * (i + k + 1)


# (cache attribute, block function, parity of the block's first point)
_FAMILIES = (
    ("diag", _block_diag, 0),
    ("shift", _block_shift, 1),
    ("ip", _block_diag, 0),
    ("iq", _block_iq, 1),
)


class IndicatorTable:
    """Indicator values, partial sums and cost memo for one chain solve.

    ``supply_ids``/``demand_ids`` are the points' ids in the memo; they
    survive removals, while positions in the current chain get renamed.
    """

    def __init__(self, supply_pos: Sequence[float], demand_pos: Sequence[float], cost: CostSpec,
                 stats: SolveStats | None = None, *, memo: CostMemo | None = None,
                 supply_ids=None, demand_ids=None):
        self.p = np.asarray(supply_pos, dtype=float)
        self.q = np.asarray(demand_pos, dtype=float)
        self.n = len(self.q)
        if len(self.p) not in (self.n, self.n + 1):
            raise ValueError("chain needs N or N+1 supplies for N demands")
        self.unbalanced = len(self.p) == self.n + 1
        self.cost = cost
        self.stats = stats if stats is not None else SolveStats()
        self.memo = memo if memo is not None else CostMemo(self.p, self.q, cost, self.stats)
        self.p_ids = np.arange(len(self.p)) if supply_ids is None else np.asarray(supply_ids)
        self.q_ids = np.arange(self.n) if demand_ids is None else np.asarray(demand_ids)
        self.diag: dict[int, np.ndarray] = {}
        self.shift: dict[int, np.ndarray] = {}
        self.ip: dict[int, np.ndarray] = {}
        self.iq: dict[int, np.ndarray] = {}
        self.line_additions: dict[int, int] = {}

    # ---- sizes -------------------------------------------------------

    def _length(self, family: str, k: int) -> int:
        n = self.n
        if family in ("diag", "ip"):
            return n - k
        if family == "shift":
            return n - k + 1 if self.unbalanced else n - k
        return n - k if self.unbalanced else n - k - 1

    def max_order(self) -> int:
        return self.n - 1

    def _store(self, family: str, k: int) -> np.ndarray:
        store = getattr(self, family)
        arr = store.get(k)
        if arr is None:
            arr = np.full(max(self._length(family, k), 0), np.nan)
            store[k] = arr
        return arr

    def _c(self, pi, qi) -> np.ndarray:
        return self.memo.get(self.p_ids[pi], self.q_ids[qi])

    # ---- cached sums -------------------------------------------------

    def _diag(self, k: int, idx: np.ndarray) -> np.ndarray:
        arr = self._store("diag", k)
        miss = idx[np.isnan(arr[idx])]
        if len(miss):
            if k == 0:
                arr[miss] = self._c(miss, miss)
            else:
                arr[miss] = self._diag(k - 1, miss) + self._c(miss + k, miss + k)
                self.stats.additions += len(miss)
        return arr[idx]

    def _shift(self, k: int, idx: np.ndarray) -> np.ndarray:
        arr = self._store("shift", k)
        miss = idx[np.isnan(arr[idx])]
        if len(miss):
            if k == 1:
                arr[miss] = self._c(miss + 1, miss)
            else:
                arr[miss] = self._shift(k - 1, miss) + self._c(miss + k, miss + k - 1)
                self.stats.additions += len(miss)
        return arr[idx]

    def _ip(self, k: int, idx: np.ndarray) -> np.ndarray:
        arr = self._store("ip", k)
        miss = idx[np.isnan(arr[idx])]
        if len(miss):
            arc = self._c(miss, miss + k)
            arr[miss] = (arc + self._shift(k, miss)) - self._diag(k, miss)
            self.stats.additions += 2 * len(miss)
        return arr[idx]

    def _iq(self, k: int, idx: np.ndarray) -> np.ndarray:
        arr = self._store("iq", k)
        miss = idx[np.isnan(arr[idx])]
        if len(miss):
            arc = self._c(miss + k + 1, miss)
            arr[miss] = (arc + self._diag(k - 1, miss + 1)) - self._shift(k + 1, miss)
            self.stats.additions += 2 * len(miss)
        return arr[idx]

    def _check(self, kind: str, k: int, i: int):
        if not 1 <= k <= self.max_order():
            raise IndexError(f"order {k} out of range 1..{self.max_order()}")
        hi = self._length("ip" if kind == "p" else "iq", k)
        if not 1 <= i <= hi:
            raise IndexError(f"I^{kind}_{k}({i}) out of range 1..{hi}")

    # ---- public API --------------------------------------------------

    def fill_line_arrays(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Make every order-k indicator known; return (I^p_k, I^q_k) as 0-based arrays."""
        if not 1 <= k <= self.max_order():
            raise IndexError(f"order {k} out of range 1..{self.max_order()}")
        before = self.stats.additions
        ip = self._ip(k, np.arange(self._length("ip", k)))
        iq = self._iq(k, np.arange(max(self._length("iq", k), 0)))
        self.line_additions[k] = self.stats.additions - before
        return ip, iq

    def known(self, kind: str, k: int) -> int:
        arr = (self.ip if kind == "p" else self.iq).get(k)
        return 0 if arr is None else int(np.count_nonzero(~np.isnan(arr)))

    def value(self, kind: str, k: int, i: int) -> float | None:
        """Cached value of I^kind_k(i) or None if not computed."""
        self._check(kind, k, i)
        arr = (self.ip if kind == "p" else self.iq).get(k)
        if arr is None or math.isnan(arr[i - 1]):
            return None
        return float(arr[i - 1])

    def support(self, kind: str, k: int, i: int) -> tuple[int, int]:
        """0-based positions (first, last) in chain order of the indicator's points."""
        return (_block_diag if kind == "p" else _block_iq)(k, i - 1)


def indicator_p(table: IndicatorTable, k: int, i: int) -> float:
    """I^p_k(i), computed from cached partial sums when available."""
    table._check("p", k, i)
    return float(table._ip(k, np.array([i - 1]))[0])


def indicator_q(table: IndicatorTable, k: int, i: int) -> float:
    """I^q_k(i), computed from cached partial sums when available."""
    table._check("q", k, i)
    return float(table._iq(k, np.array([i - 1]))[0])


def fill_line(table: IndicatorTable, k: int) -> list[tuple[str, int, float]]:
    """All order-k indicators as ``(kind, i, value)`` in table order.

    The order is I^p_k(1), I^q_k(1), I^p_k(2), ..., 1-based.
    """
    ip, iq = table.fill_line_arrays(k)
    out = []
    for i in range(max(len(ip), len(iq))):
        if i < len(ip):
            out.append(("p", i + 1, float(ip[i])))
        if i < len(iq):
            out.append(("q", i + 1, float(iq[i])))
    return out


def removal_span(kind: str, k0: int, i0: int) -> tuple[int, int]:
    """0-based chain-order positions (first, last) of the 2*k0 points matched by a
    negative I^kind_{k0}(i0)."""
    i = i0 - 1
    if kind == "p":
        # q_{i0} .. p_{i0+k0}
        return 2 * i + 1, 2 * (i + k0)
    # p_{i0+1} .. q_{i0+k0}
    return 2 * (i + 1), 2 * (i + k0) + 1


def rebuild_after_removal(table: IndicatorTable, matched_span, kind: str | None = None
                          ) -> IndicatorTable:
    """Table for the chain left after removing the matched points.

    ``matched_span`` is an inclusive 0-based range ``(first, last)`` of chain
    positions (see :func:`removal_span`) or a list of disjoint ranges. ``kind``
    is informational; the surviving entries depend only on positions. Cached sums and indicators whose points avoid every
    removed span keep their values under the new names; everything else is
    dropped. The cost memo and the stats object are shared.
    """
    spans = [matched_span] if np.isscalar(matched_span[0]) else list(matched_span)
    n_points = len(table.p) + len(table.q)
    removed = np.zeros(n_points, dtype=bool)
    for first, last in spans:
        if (last - first) % 2 == 0 or first < 0 or last >= n_points:
            raise ValueError(f"bad removal span {(first, last)}")
        removed[first:last + 1] = True
    before = np.concatenate(([0], np.cumsum(removed)))
    keep_p = ~removed[0::2]
    keep_q = ~removed[1::2]

    new = IndicatorTable(table.p[keep_p], table.q[keep_q], table.cost, table.stats,
                         memo=table.memo, supply_ids=table.p_ids[keep_p],
                         demand_ids=table.q_ids[keep_q])
    for family, block, parity in _FAMILIES:
        target = getattr(new, family)
        for k, arr in getattr(table, family).items():
            length = new._length(family, k)
            if length <= 0:
                continue
            i = np.arange(len(arr))
            start, end = block(k, i)
            ok = (before[end + 1] - before[start] == 0) & ~np.isnan(arr)
            if not ok.any():
                continue
            new_i = (start[ok] - before[start[ok]] - parity) // 2
            out = np.full(length, np.nan)
            out[new_i] = arr[ok]
            target[k] = out
    return new


def indicator_from_scratch(cost: CostSpec, p: Sequence[float], q: Sequence[float],
                           kind: str, k: int, i: int) -> tuple[float, float]:
    """Direct evaluation of the indicator definition (1-based).

    Returns ``(value, scale)`` where scale is the sum of absolute terms, the
    natural yardstick for rounding error.
    """
    c = lambda a, b: cost.g(abs(p[a - 1] - q[b - 1]))  # noqa: E731
    if kind == "p":
        plus = [c(i, i + k)] + [c(i + j + 1, i + j) for j in range(k)]
        minus = [c(i + j, i + j) for j in range(k + 1)]
    else:
        plus = [c(i + k + 1, i)] + [c(i + j, i + j) for j in range(1, k + 1)]
        minus = [c(i + j + 1, i + j) for j in range(k + 1)]
    return math.fsum(plus) - math.fsum(minus), math.fsum(map(abs, plus + minus))
