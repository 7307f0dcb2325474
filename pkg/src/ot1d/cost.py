"""Concave distance costs c(p, q) = g(|p - q|)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .model import SolveStats


@dataclass(frozen=True)
class CostSpec:
    """A strictly concave, nondecreasing function of the distance.

    ``kind`` is ``"power"`` (g(x) = x**alpha, 0 < alpha < 1), ``"log"``
    (g(0) = -inf) or ``"custom"``. Custom functions are trusted to be concave;
    run :func:`concavity_probe` to spot-check. A finite custom ``g0`` is
    subtracted so that g(0) = 0.
    """

    kind: str
    alpha: float = 0.5
    func: Optional[Callable[[float], float]] = None
    g0: float = 0.0

    def __post_init__(self):
        if self.kind == "power":
            if not 0.0 < self.alpha < 1.0:
                raise ValueError(f"power cost needs 0 < alpha < 1, got {self.alpha}")
        elif self.kind == "custom":
            if self.func is None:
                raise ValueError("custom cost needs a function")
        elif self.kind != "log":
            raise ValueError(f"unknown cost kind {self.kind!r}")

    @classmethod
    def power(cls, alpha: float) -> CostSpec:
        return cls("power", alpha=float(alpha))

    @classmethod
    def log(cls) -> CostSpec:
        return cls("log")

    @classmethod
    def custom(cls, func: Callable[[float], float], g0: float | None = None) -> CostSpec:
        if g0 is None:
            g0 = func(0.0)
        return cls("custom", func=func, g0=g0)

    @classmethod
    def parse(cls, text: str) -> CostSpec:
        """Parse ``power:<alpha>`` or ``log``."""
        name, _, arg = text.strip().partition(":")
        name = name.lower()
        if name == "log" and not arg:
            return cls.log()
        if name == "power" and arg:
            try:
                alpha = float(arg)
            except ValueError:
                raise ValueError(f"bad exponent in cost spec {text!r}") from None
            return cls.power(alpha)
        raise ValueError(f"unrecognized cost spec {text!r} (expected power:<alpha> or log)")

    def __str__(self):
        if self.kind == "power":
            return f"power:{self.alpha:g}"
        return self.kind

    def g(self, x: float) -> float:
        if x == 0:
            return self.zero_value
        if self.kind == "power":
            return x ** self.alpha
        if self.kind == "log":
            return math.log(x)
        return self.func(x) - self.g0

    @property
    def zero_value(self) -> float:
        if self.kind == "log":
            return -math.inf
        if self.kind == "custom" and self.g0 == -math.inf:
            return -math.inf
        return 0.0

    def g_array(self, x: np.ndarray) -> np.ndarray:
        """Vectorized g for strictly positive distances."""
        x = np.asarray(x, dtype=float)
        if self.kind == "power":
            return np.power(x, self.alpha)
        if self.kind == "log":
            return np.log(x)
        return np.fromiter((self.func(v) - self.g0 for v in x), dtype=float, count=x.size)

    def __call__(self, p: float, q: float) -> float:
        return self.g(abs(p - q))


def eval_c(cost: CostSpec, p: float, q: float, stats: SolveStats | None = None) -> float:
    """Evaluate c(p, q) and charge one cost evaluation.

    Callers that memoize (the indicator table) only call this on a miss.
    """
    if stats is not None:
        stats.cost_evaluations += 1
    return cost.g(abs(p - q))


def power_sign_function(a: float, b: float, c: float) -> Callable[[float], float]:
    """f(alpha) = b**alpha + 1 - a**alpha - c**alpha for normalized gaps a + b + c = 1.

    With four chain points p, q, p', q' scaled so that q' - p = 1, a, b, c are
    the successive gaps and f(alpha) is the order-one indicator under the cost
    |x - y|**alpha.
    """
    return lambda alpha: b ** alpha + 1.0 - a ** alpha - c ** alpha


def alpha_threshold(a: float, b: float, c: float, tol: float = 1e-12) -> float | None:
    """Exponent below which the order-one indicator of a 4-point chain turns negative.

    Returns None when b >= a*c: f is then positive on (0, 1] and the
    indicator never goes negative for a power cost. Otherwise returns the
    unique root alpha0 of f in (0, 1), located by bisection; f < 0 on
    (0, alpha0) and f >= 0 on [alpha0, 1].
    """
    if min(a, b, c) <= 0:
        raise ValueError("gaps must be positive")
    if abs(a + b + c - 1.0) > 1e-9:
        raise ValueError(f"gaps must sum to 1, got {a + b + c!r}")
    # b < ac already forces b < min(a, c); for b >= ac,
    # f >= (1 - a**alpha)(1 - c**alpha) > 0
    if b >= a * c:
        return None
    f = power_sign_function(a, b, c)
    # f(0) = 0 with f'(0) < 0, and f(1) = 2b > 0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return hi


def concavity_probe(cost: CostSpec, xs: Sequence[float], tol: float = 1e-12) -> bool:
    """Spot-check midpoint concavity and monotonicity of g on all sampled pairs."""
    xs = sorted(float(x) for x in xs)
    gs = [cost.g(x) for x in xs]
    for k in range(len(xs) - 1):
        if gs[k + 1] < gs[k]:
            return False
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            mid = cost.g(0.5 * (xs[i] + xs[j]))
            if mid < 0.5 * (gs[i] + gs[j]) - tol:
                return False
    return True
