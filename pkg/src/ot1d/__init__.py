"""One-dimensional optimal transport under strictly concave costs."""

from .chain_solver import (MatchEvent, prefilter_exposed, solve_balanced_chain, solve_chain,
                           solve_unbalanced_chain, verify_no_crossing)
from .cost import CostSpec, alpha_threshold, concavity_probe, eval_c
from .decomposition import solve, solve_detailed
from .model import (Assignment, Chain, ChainKind, Problem, SolveStats, TransportPlan,
                    ValidationError, canonicalize, marginal_violation, plan_cost,
                    plan_non_crossing)
from .oracle import expand_to_unitary, oracle_unitary

__all__ = [
    "Assignment", "Chain", "ChainKind", "CostSpec", "MatchEvent", "Problem", "SolveStats",
    "TransportPlan", "ValidationError", "alpha_threshold", "canonicalize", "concavity_probe",
    "eval_c", "expand_to_unitary", "marginal_violation", "oracle_unitary", "plan_cost",
    "plan_non_crossing", "prefilter_exposed", "solve", "solve_balanced_chain", "solve_chain",
    "solve_detailed", "solve_unbalanced_chain", "verify_no_crossing",
]
