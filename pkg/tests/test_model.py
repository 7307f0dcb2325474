import math

import pytest

from ot1d.cost import CostSpec
from ot1d.model import (Chain, ChainKind, Problem, TransportPlan, ValidationError, canonicalize,
                        marginal_violation, plan_cost, plan_non_crossing, spans_non_crossing,
                        to_original_plan)


def test_canonical_problem_is_unchanged(flip_problem):
    canon = canonicalize(flip_problem)
    assert canon.supplies == ((0.0, 1.0), (1.2, 1.0))
    assert canon.demands == ((1.0, 1.0), (2.2, 1.0))
    assert not canon.orientation_swapped
    assert canon.in_place == ()


def test_common_point_cancels_in_place():
    canon = canonicalize(Problem(((0.0, 2.0),), ((0.0, 1.0),)))
    assert canon.supplies == ((0.0, 1.0),)
    assert canon.demands == ()
    assert canon.in_place == ((0.0, 1.0),)


def test_roles_swap_when_demand_exceeds_supply():
    canon = canonicalize(Problem(((0.0, 1.0),), ((1.0, 1.0), (2.0, 1.0))))
    assert canon.orientation_swapped
    assert canon.supplies == ((1.0, 1.0), (2.0, 1.0))
    assert canon.demands == ((0.0, 1.0),)


def test_duplicates_merge_and_sort():
    canon = canonicalize(Problem(((3.0, 1.0), (1.0, 0.5), (1.0, 0.25)), ((2.0, 1.75),)))
    assert canon.supplies == ((1.0, 0.75), (3.0, 1.0))


@pytest.mark.parametrize("mass", [0.0, -1.0, math.nan, math.inf])
def test_bad_mass_rejected(mass):
    with pytest.raises(ValidationError):
        Problem(((0.0, mass),), ())


def test_nonfinite_position_rejected():
    with pytest.raises(ValidationError):
        Problem(((math.inf, 1.0),), ())


def test_plan_cost_values(flip_problem):
    parallel = TransportPlan(((0, 0, 1.0), (1, 1, 1.0)))
    nested = TransportPlan(((1, 0, 1.0), (0, 1, 1.0)))
    assert plan_cost(parallel, flip_problem, CostSpec.power(0.9)) == pytest.approx(2.0, rel=1e-12)
    assert plan_cost(nested, flip_problem, CostSpec.power(0.5)) == pytest.approx(
        1.9304532929190905, rel=1e-12)
    assert plan_cost(TransportPlan(()), flip_problem, CostSpec.power(0.5)) == 0.0


def test_plan_cost_rejects_bad_index(flip_problem):
    with pytest.raises(IndexError):
        plan_cost(TransportPlan(((5, 0, 1.0),)), flip_problem, CostSpec.log())


def test_plan_cost_log_zero_distance():
    pr = Problem(((0.0, 1.0),), ((0.0, 1.0),))
    assert plan_cost(TransportPlan(((0, 0, 1.0),)), pr, CostSpec.log()) == -math.inf


def test_marginals(flip_problem):
    good = TransportPlan(((0, 0, 1.0), (1, 1, 1.0)))
    short = TransportPlan(((0, 0, 1.0),))
    assert marginal_violation(good, flip_problem) == 0.0
    assert marginal_violation(short, flip_problem) == pytest.approx(0.5)


def test_non_crossing_fixture():
    assert not spans_non_crossing([(0, 2), (1, 3)])
    assert spans_non_crossing([(0, 3), (1, 2)])
    assert spans_non_crossing([(0, 1), (2, 3)])
    assert spans_non_crossing([(0, 1), (1, 2)])


def test_plan_non_crossing(flip_problem):
    assert plan_non_crossing(TransportPlan(((1, 0, 1.0), (0, 1, 1.0))), flip_problem)


def test_to_original_plan_spreads_merged_points():
    raw = Problem(((0.0, 1.0), (0.0, 1.0)), ((1.0, 2.0),))
    canon = canonicalize(raw)
    plan = to_original_plan(canon, [(0, 0, 2.0)], CostSpec.power(0.5))
    assert plan.as_dict() == {(0, 0): 1.0, (1, 0): 1.0}
    assert plan.total_cost == pytest.approx(2.0)


def test_to_original_plan_unswaps():
    raw = Problem(((0.0, 1.0),), ((1.0, 1.0), (2.0, 1.0)))
    canon = canonicalize(raw)
    # canonical supply 1 (raw demand at 2.0) serves canonical demand 0 (raw supply)
    plan = to_original_plan(canon, [(1, 0, 1.0)])
    assert plan.entries == ((0, 1, 1.0),)


def test_chain_kinds():
    assert Chain.from_positions([0, 2], [1, 3]).kind is ChainKind.BALANCED
    assert Chain.from_positions([0, 2, 4], [1, 3]).kind is ChainKind.UNBALANCED
    assert Chain.from_positions([0], []).kind is ChainKind.LONE_SUPPLY
    assert Chain.from_positions([1, 3], [0, 2]).demand_first
    with pytest.raises(ValueError):
        Chain.from_positions([0, 1], [2, 3])
