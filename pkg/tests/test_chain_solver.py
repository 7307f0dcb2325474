import numpy as np
import pytest
from conftest import FLIP_DEMANDS, FLIP_SUPPLIES, brute_chain_min, close, random_chain

from ot1d.chain_solver import (assignment_cost, prefilter_exposed, solve_balanced_chain,
                               solve_chain, solve_unbalanced_chain, verify_no_crossing)
from ot1d.cost import CostSpec
from ot1d.model import Assignment, Chain
from ot1d.oracle import oracle_nesting_free_unbalanced


def test_flip_chain_nested_under_square_root():
    chain = Chain.from_positions(FLIP_SUPPLIES, FLIP_DEMANDS)
    a, stats, events = solve_balanced_chain(chain, CostSpec.power(0.5), debug=True)
    assert a.sigma_inverse == {0: 1, 1: 0}
    assert assignment_cost(a, chain, CostSpec.power(0.5)) == pytest.approx(1.9304532929190905)
    assert len(events) == 1 and events[0].kind == "p" and events[0].pairs == ((1, 0),)


def test_flip_chain_parallel_under_near_linear():
    chain = Chain.from_positions(FLIP_SUPPLIES, FLIP_DEMANDS)
    a, _, events = solve_balanced_chain(chain, CostSpec.power(0.9))
    assert a.sigma_inverse == {0: 0, 1: 1}
    assert assignment_cost(a, chain, CostSpec.power(0.9)) == pytest.approx(2.0)
    assert events == []


def test_single_pair():
    a, stats, events = solve_balanced_chain(Chain.from_positions([0], [5]), CostSpec.log())
    assert a.sigma_inverse == {0: 0}
    assert stats.additions == 0 and events == []


def test_kind_contracts():
    with pytest.raises(ValueError):
        solve_balanced_chain(Chain.from_positions([0, 2, 4], [1, 3]), CostSpec.log())
    with pytest.raises(ValueError):
        solve_unbalanced_chain(Chain.from_positions([0, 2], [1, 3]), CostSpec.log())


def test_demand_first_chain_by_reflection():
    chain = Chain.from_positions([1.0, 2.2], [0.0, 1.2])
    a, _, _ = solve_balanced_chain(chain, CostSpec.power(0.5), debug=True)
    want = brute_chain_min(chain.supply_pos, chain.demand_pos, CostSpec.power(0.5))
    assert close(assignment_cost(a, chain, CostSpec.power(0.5)), want)


@pytest.mark.parametrize("cost", [CostSpec.power(0.5), CostSpec.power(0.2), CostSpec.log()])
def test_balanced_matches_brute_force(cost):
    rng = np.random.default_rng(21)
    for _ in range(100):
        p, q = random_chain(rng, int(rng.integers(1, 8)))
        chain = Chain.from_positions(p, q)
        a, _, _ = solve_balanced_chain(chain, cost, debug=True)
        assert close(assignment_cost(a, chain, cost), brute_chain_min(p, q, cost))
        assert verify_no_crossing(a, chain)


def test_unbalanced_example():
    chain = Chain.from_positions([0, 10, 20], [9, 19])
    a, _ = solve_unbalanced_chain(chain, CostSpec.power(0.5))
    assert a.exposed_supplies == {0}
    assert a.sigma_inverse == {0: 1, 1: 2}
    assert assignment_cost(a, chain, CostSpec.power(0.5)) == pytest.approx(2.0)


def test_lone_supply():
    a, stats, _ = solve_chain(Chain.from_positions([3.0], []), CostSpec.power(0.5))
    assert a.exposed_supplies == {0} and a.sigma_inverse == {}
    assert stats.additions == 0


@pytest.mark.parametrize("cost", [CostSpec.power(0.5), CostSpec.log()])
def test_unbalanced_matches_brute_force(cost):
    rng = np.random.default_rng(22)
    for _ in range(100):
        p, q = random_chain(rng, int(rng.integers(1, 7)), extra_supply=True)
        chain = Chain.from_positions(p, q)
        a, _, _ = solve_chain(chain, cost, debug=True)
        assert len(a.exposed_supplies) == 1
        assert a.exposed_supplies <= prefilter_exposed(chain, cost)
        assert close(assignment_cost(a, chain, cost), brute_chain_min(p, q, cost))
        assert verify_no_crossing(a, chain)


def test_fallback_agrees_with_direct_enumeration_when_no_indicator_fires():
    # near-linear cost rarely produces negative indicators, so most runs reach the fallback
    rng = np.random.default_rng(23)
    cost = CostSpec.power(0.97)
    hits = 0
    for _ in range(60):
        p, q = random_chain(rng, int(rng.integers(1, 7)), extra_supply=True)
        chain = Chain.from_positions(p, q)
        a, _, events = solve_chain(chain, cost)
        if events:
            continue
        hits += 1
        ref = oracle_nesting_free_unbalanced(chain, cost)
        assert close(assignment_cost(a, chain, cost), ref.min_cost, 1e-12)
    assert hits > 20


def test_prefilter_examples():
    cost = CostSpec.power(0.5)
    assert 1 not in prefilter_exposed(Chain.from_positions([0, 10, 20], [9, 19]), cost)
    assert 1 in prefilter_exposed(Chain.from_positions([0, 2, 4], [1, 3]), cost)


def test_verify_no_crossing_fixtures():
    chain = Chain.from_positions(FLIP_SUPPLIES, FLIP_DEMANDS)
    assert verify_no_crossing(Assignment({0: 0, 1: 1}), chain)
    assert verify_no_crossing(Assignment({0: 1, 1: 0}), chain)
    crossing = Chain.from_positions([0, 1], [0.5, 3])
    # arcs (0, 3) and (0.5, 1) nest; arcs (0, 0.5) and (1, 3) are disjoint
    assert verify_no_crossing(Assignment({0: 1, 1: 0}), crossing)
    wide = Chain.from_positions([0, 2], [1, 3])
    # q_1 <- p_1 spans (0, 1) and q_2 <- p_2 spans (2, 3); swapping gives (1, 2) inside (0, 3)
    assert verify_no_crossing(Assignment({0: 1, 1: 0}), wide)


def test_counts_stay_within_full_table_totals():
    # a chain whose indicators are all positive runs the full table
    x = np.arange(20, dtype=float)
    chain = Chain.from_positions(x[0::2], x[1::2])
    _, stats, events = solve_balanced_chain(chain, CostSpec.power(0.999))
    N = 10
    assert events == []
    assert stats.additions == 3 * (N - 1) ** 2
    assert stats.cost_evaluations == N * N
