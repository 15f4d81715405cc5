from __future__ import annotations

import numpy as np

from ..constraints import RootFinderConfig, feasible_initialize, repair_general_rows
from ..core import ConstrainedProblem, UsageError, rows_in_box
from ..repair import RepairKind, RepairStrategy, apply_repair


class Repairer:
    """Binds a repair strategy to a problem.

    Box-only problems use the closed-form operators; problems with general
    constraints go through the ray root-finding path, which supports the IP
    strategies only.
    """

    def __init__(self, problem: ConstrainedProblem, strategy: RepairStrategy,
                 rng: np.random.Generator, cfg: RootFinderConfig = RootFinderConfig()):
        self.problem = problem
        self.strategy = strategy
        self.rng = rng
        self.cfg = cfg
        self.general = problem.has_general_constraints
        self.failures = 0
        if self.general and not strategy.kind.is_ip:
            raise UsageError(
                f"{problem.name} has nonlinear constraints; only ip-c and ip-s can repair it")

    def infeasible(self, X: np.ndarray) -> np.ndarray:
        if self.general:
            return ~self.problem.feasible_rows(X)
        return ~rows_in_box(self.problem.bounds, X)

    def __call__(self, X: np.ndarray, parents: np.ndarray) -> np.ndarray:
        bad = self.infeasible(X)
        if not np.any(bad):
            return X
        Y = X.copy()
        P = np.broadcast_to(parents, X.shape)[bad]
        if self.general:
            mode = "confined" if self.strategy.kind is RepairKind.IP_CONFINED else "spread"
            Y[bad], failed = repair_general_rows(self.problem, X[bad], P, mode,
                                                 self.strategy.alpha, self.rng, self.cfg)
            self.failures += failed
        else:
            Y[bad] = apply_repair(self.strategy, X[bad], P, self.problem.bounds, self.rng)
        return Y


def initial_population(problem: ConstrainedProblem, size: int, rng: np.random.Generator,
                       alpha: float = 1.2, cfg: RootFinderConfig = RootFinderConfig()) -> np.ndarray:
    if not problem.has_general_constraints:
        return problem.bounds.sample(rng, size)
    if problem.seed_point is None:
        raise UsageError(f"{problem.name} needs a feasible seed point to initialize")
    return feasible_initialize(problem, problem.seed_point, size, alpha, cfg, rng)
