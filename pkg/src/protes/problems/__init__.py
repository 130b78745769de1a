"""Benchmark problems behind a single batched black-box interface."""

from .analytic import FUNCTIONS as ANALYTIC_FUNCTIONS
from .analytic import analytic_problem
from .base import Problem, all_indices, brute_force_min
from .control import ControlInstance, constrained_control_problem, control_problem
from .qubo import KINDS as QUBO_KINDS
from .qubo import QuboInstance, qubo_instance, qubo_problem
from .synthetic import planted_problem

__all__ = [
    "ANALYTIC_FUNCTIONS",
    "QUBO_KINDS",
    "ControlInstance",
    "Problem",
    "QuboInstance",
    "all_indices",
    "analytic_problem",
    "brute_force_min",
    "constrained_control_problem",
    "control_problem",
    "planted_problem",
    "qubo_instance",
    "qubo_problem",
]
