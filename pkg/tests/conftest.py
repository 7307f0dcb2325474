from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from ot1d.cost import CostSpec
from ot1d.model import Problem

# Two unit supplies and two unit demands where the optimal plan flips
# between nested and parallel as the cost exponent crosses about 0.62.
FLIP_SUPPLIES = (0.0, 1.2)
FLIP_DEMANDS = (1.0, 2.2)

# Four supplies and four demands with masses chosen so that the cumulative
# graph has eight distinct bands, two of which carry 3 supplies and 2 demands.
HISTOGRAM = Problem(
    supplies=((0.0, 4.75), (2.25, 3.75), (5.75, 3.75), (8.0, 1.5)),
    demands=((1.5, 3.25), (3.25, 4.75), (4.5, 1.75), (6.5, 3.0)),
)

COSTS = [CostSpec.power(0.3), CostSpec.power(0.5), CostSpec.power(0.9), CostSpec.log()]


@pytest.fixture
def flip_problem() -> Problem:
    return Problem.unitary(FLIP_SUPPLIES, FLIP_DEMANDS)


def brute_chain_min(p, q, cost) -> float:
    """Minimum over all injective maps of demands into supplies, by plain loops."""
    best = math.inf
    for perm in itertools.permutations(range(len(p)), len(q)):
        best = min(best, math.fsum(cost(p[s], q[d]) for d, s in enumerate(perm)))
    return best


def random_chain(rng: np.random.Generator, n: int, extra_supply: bool = False):
    """Sorted alternating positions p_1 < q_1 < ... (plus a trailing supply)."""
    while True:
        x = np.sort(rng.random(2 * n + int(extra_supply)))
        if np.all(np.diff(x) > 0):
            return x[0::2].tolist(), x[1::2].tolist()


def close(a: float, b: float, rel: float = 1e-9) -> bool:
    if a == b:
        return True
    return abs(a - b) <= rel * max(abs(a), abs(b))


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[str, str] = {}


def report(criterion: str, ok: bool, detail: str) -> None:
    line = f"{criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k.split()[1])):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
