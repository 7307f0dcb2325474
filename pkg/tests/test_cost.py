import math

import numpy as np
import pytest

from ot1d.cost import CostSpec, alpha_threshold, concavity_probe, eval_c, power_sign_function
from ot1d.model import SolveStats


def test_eval_values_and_counter():
    stats = SolveStats()
    assert eval_c(CostSpec.power(0.5), 0.0, 2.2, stats) == pytest.approx(1.4832396974191326)
    assert eval_c(CostSpec.log(), 1.0, 3.0, stats) == pytest.approx(math.log(2))
    assert eval_c(CostSpec.power(0.3), 1.5, 1.5, stats) == 0.0
    assert stats.cost_evaluations == 3


def test_log_zero_distance_is_minus_infinity():
    assert CostSpec.log()(2.0, 2.0) == -math.inf


def test_custom_normalized_to_zero_at_origin():
    cost = CostSpec.custom(lambda x: math.sqrt(x) + 5.0)
    assert cost(0.0, 0.0) == 0.0
    assert cost(0.0, 4.0) == pytest.approx(2.0)


@pytest.mark.parametrize("text,kind", [("power:0.5", "power"), ("log", "log"), ("LOG", "log")])
def test_parse(text, kind):
    assert CostSpec.parse(text).kind == kind


@pytest.mark.parametrize("text", ["power", "power:1.5", "power:x", "cubic", "log:2"])
def test_parse_rejects(text):
    with pytest.raises(ValueError):
        CostSpec.parse(text)


def test_g_array_matches_scalar():
    xs = np.linspace(0.01, 3, 17)
    for cost in (CostSpec.power(0.7), CostSpec.log(), CostSpec.custom(lambda x: math.log1p(x))):
        assert np.allclose(cost.g_array(xs), [cost.g(x) for x in xs], rtol=1e-14)


def test_threshold_exists_below_product():
    a = c = 0.45
    b = 0.10
    alpha0 = alpha_threshold(a, b, c)
    assert alpha0 == pytest.approx(0.5688622904593859, abs=1e-10)
    f = power_sign_function(a, b, c)
    assert abs(f(alpha0)) < 1e-10
    grid = np.linspace(1e-3, 1, 1000)
    vals = np.array([f(x) for x in grid])
    assert np.all(vals[grid < alpha0 - 1e-9] < 0)
    assert np.all(vals[grid > alpha0 + 1e-9] >= 0)


def test_threshold_none_when_middle_gap_large():
    assert alpha_threshold(0.25, 0.50, 0.25) is None


def test_threshold_between_the_two_flip_exponents():
    alpha0 = alpha_threshold(1 / 2.2, 0.2 / 2.2, 1 / 2.2)
    assert 0.5 < alpha0 < 0.9
    assert alpha0 == pytest.approx(0.6212974019833504, abs=1e-10)


@pytest.mark.parametrize("gaps", [(0.5, 0.2, 0.2), (0.3, 0.3, 0.3), (-0.1, 0.2, 0.9), (0.0, 0.5, 0.5)])
def test_threshold_rejects_bad_gaps(gaps):
    with pytest.raises(ValueError):
        alpha_threshold(*gaps)


def test_concavity_probe():
    assert concavity_probe(CostSpec.power(0.5), [0.1 * k for k in range(1, 101)])
    assert not concavity_probe(CostSpec.custom(lambda x: x * x), [0.5, 1, 2, 3])
    assert concavity_probe(CostSpec.log(), [0.5, 1, 2, 4])
