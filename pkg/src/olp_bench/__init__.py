"""Infrequent-resolving policies and regret benchmarks for online linear programming."""

from .errors import ConfigError, InputError
from .lp_core import Instance, LpSolution, max_coord_over_optima, solve_fluid
from .policies import PolicySpec, PolicyState
from .schedules import (
    Schedule,
    finite_schedule,
    known_prob_finite_schedule,
    known_prob_schedule,
    learning_approx_schedule,
    midpoint_schedule,
    periodic_schedule,
)
from .simulation import compare_policies, estimate_regret, run_policy, sample_path

__all__ = [
    "ConfigError", "InputError", "Instance", "LpSolution", "PolicySpec", "PolicyState",
    "Schedule", "compare_policies", "estimate_regret", "finite_schedule",
    "known_prob_finite_schedule", "known_prob_schedule", "learning_approx_schedule",
    "max_coord_over_optima", "midpoint_schedule", "periodic_schedule", "run_policy",
    "sample_path", "solve_fluid",
]
