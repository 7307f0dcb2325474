import math

import numpy as np
import pytest
from conftest import FLIP_DEMANDS, FLIP_SUPPLIES

from ot1d.cost import CostSpec
from ot1d.model import Chain, Problem, marginal_violation, plan_non_crossing
from ot1d.oracle import (OracleSizeError, expand_to_unitary, oracle_nesting_free_unbalanced,
                         oracle_unitary)


def test_flip_instance():
    pr = Problem.unitary(FLIP_SUPPLIES, FLIP_DEMANDS)
    res = oracle_unitary(pr, CostSpec.power(0.5))
    assert res.min_cost == pytest.approx(1.9304532929190905, rel=1e-12)
    assert len(res.argmin_plans) == 1
    assert res.argmin_plans[0].as_dict() == {(1, 0): 1.0, (0, 1): 1.0}


def test_single_pair():
    res = oracle_unitary(Problem.unitary([0], [2]), CostSpec.power(0.5))
    assert res.min_cost == pytest.approx(math.sqrt(2))
    assert res.argmin_plans[0].entries == ((0, 0, 1.0),)


def test_symmetric_instance_compares_both_maps():
    pr = Problem.unitary([0, 2], [-1, 3])
    cost = CostSpec.power(0.5)
    res = oracle_unitary(pr, cost)
    ident = math.sqrt(1) + math.sqrt(1)
    swap = math.sqrt(3) + math.sqrt(3)
    assert res.min_cost == pytest.approx(min(ident, swap))


def test_size_guard():
    with pytest.raises(OracleSizeError):
        oracle_unitary(Problem.unitary(range(10), range(9)), CostSpec.log())


def test_fewer_supplies_than_demands():
    res = oracle_unitary(Problem.unitary([0.0], [1.0, 5.0]), CostSpec.power(0.5))
    assert res.min_cost == pytest.approx(1.0)
    assert res.argmin_plans[0].entries == ((0, 0, 1.0),)


def test_invariant_under_relabeling_and_translation():
    rng = np.random.default_rng(4)
    cost = CostSpec.power(0.4)
    for _ in range(20):
        s, d = rng.random(5).tolist(), rng.random(4).tolist()
        base = oracle_unitary(Problem.unitary(s, d), cost).min_cost
        perm = oracle_unitary(Problem.unitary(s[::-1], d[::-1]), cost).min_cost
        moved = oracle_unitary(Problem.unitary([x + 3 for x in s], [x + 3 for x in d]), cost).min_cost
        assert perm == pytest.approx(base, rel=1e-12)
        assert moved == pytest.approx(base, rel=1e-9)


def test_argmin_plans_are_feasible_and_non_crossing():
    rng = np.random.default_rng(5)
    for _ in range(30):
        pr = Problem.unitary(rng.random(4).tolist(), rng.random(4).tolist())
        for plan in oracle_unitary(pr, CostSpec.power(0.5)).argmin_plans:
            assert marginal_violation(plan, pr) == 0.0
            assert plan_non_crossing(plan, pr)


def test_expand():
    out = expand_to_unitary(Problem(((0.0, 1.5),), ()), 2)
    assert out.supplies == ((0.0, 1.0),) * 3
    unit = Problem.unitary([0, 1], [2, 3])
    assert expand_to_unitary(unit, 1) == unit
    with pytest.raises(ValueError):
        expand_to_unitary(Problem(((0.0, 1 / 3),), ()), 2)


def test_nesting_free_candidates():
    res = oracle_nesting_free_unbalanced(Chain.from_positions([0, 10, 20], [9, 19]),
                                         CostSpec.power(0.5))
    assert res.min_cost == pytest.approx(2.0)
    assert res.argmin_plans[0].as_dict() == {(1, 0): 1.0, (2, 1): 1.0}
    lone = oracle_nesting_free_unbalanced(Chain.from_positions([1.0], []), CostSpec.log())
    assert lone.min_cost == 0.0 and lone.argmin_plans[0].entries == ()


def test_nesting_free_agrees_with_exhaustive_when_optimum_is_nesting_free():
    rng = np.random.default_rng(6)
    cost = CostSpec.power(0.95)
    agreed = 0
    for _ in range(40):
        x = np.sort(rng.random(7))
        p, q = x[0::2].tolist(), x[1::2].tolist()
        full = oracle_unitary(Problem.unitary(p, q), cost)
        free = oracle_nesting_free_unbalanced(Chain.from_positions(p, q), cost)
        assert free.min_cost >= full.min_cost - 1e-12
        if any(plan_non_crossing(pl, Problem.unitary(p, q)) and _in_place(pl)
               for pl in full.argmin_plans):
            assert free.min_cost == pytest.approx(full.min_cost, rel=1e-12)
            agreed += 1
    assert agreed > 0


def _in_place(plan):
    return all(s - d in (0, 1) for s, d, _ in plan.entries)
