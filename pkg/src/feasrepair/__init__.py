"""Feasibility-preserving repair operators for evolutionary optimization."""
from .core import (BoxBounds, BudgetExhausted, ConstrainedProblem, CountedEvaluator,
                   EvaluationError, Inequality, RunResult, UsageError, in_box, is_feasible,
                   make_rng)
from .repair import RepairKind, RepairStrategy, VelocityPolicy, apply_repair, repair_ip

__version__ = "0.1.0"
