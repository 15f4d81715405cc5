from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import ConstrainedProblem, CountedEvaluator, RunResult, UsageError
from ..repair import RepairKind, RepairStrategy, VelocityPolicy, _hyperbolic, parse_velocity_policy
from ._common import Repairer, initial_population

_BOUNDARY_POLICIES = (VelocityPolicy.REFLECTED, VelocityPolicy.ZERO)


@dataclass
class PsoConfig:
    population: int = 100
    inertia: float = 0.7298
    cognitive: float = 1.49618
    social: float = 1.49618
    repair: RepairStrategy = field(default_factory=lambda: RepairStrategy(RepairKind.IP_SPREAD))
    velocity_policy: VelocityPolicy = VelocityPolicy.RECOMPUTED

    def __post_init__(self):
        if isinstance(self.repair, str):
            self.repair = RepairStrategy.parse(self.repair)
        self.velocity_policy = parse_velocity_policy(self.velocity_policy)
        if self.population < 2:
            raise UsageError("PSO needs at least two particles")
        kind = self.repair.kind
        if (self.velocity_policy in _BOUNDARY_POLICIES
                and kind not in (RepairKind.SET_ON_BOUNDARY, RepairKind.SHRINK)):
            raise UsageError(f"velocity policy {self.velocity_policy.value!r} pairs only with "
                             "setonboundary or shrink")


def run_pso(problem: ConstrainedProblem, config: PsoConfig, evaluator: CountedEvaluator,
            rng: np.random.Generator) -> RunResult:
    """Global-best PSO with synchronous updates and a pluggable boundary treatment.

    After a move, infeasible particles are repaired with the previous position as
    parent; the velocity is then reset according to ``config.velocity_policy``.
    The hyperbolic strategy instead shrinks offending velocity components before
    the move, so positions never leave the box.  Personal and global bests only
    ever hold repaired, feasible positions.
    """
    hyperbolic = config.repair.kind is RepairKind.HYPERBOLIC
    if hyperbolic and problem.has_general_constraints:
        raise UsageError("the hyperbolic strategy handles variable bounds only")
    repair = None if hyperbolic else Repairer(problem, config.repair, rng)
    lo, hi = problem.bounds.lower, problem.bounds.upper
    policy = config.velocity_policy
    w, c1, c2 = config.inertia, config.cognitive, config.social

    X = initial_population(problem, config.population, rng, config.repair.alpha)
    V = np.zeros_like(X)
    f = evaluator.evaluate_batch(X)
    pbest, pbest_f = X.copy(), f.copy()
    g = int(np.argmin(pbest_f))

    while not evaluator.done:
        r1 = rng.random(X.shape)
        r2 = rng.random(X.shape)
        V = w * V + c1 * r1 * (pbest - X) + c2 * r2 * (pbest[g] - X)
        moved = X + V
        if hyperbolic:
            out = (moved < lo) | (moved > hi)
            if np.any(out):
                V = np.where(out, _hyperbolic(V, X, lo, hi), V)
                moved = np.clip(X + V, lo, hi)
            Y = moved
        else:
            viol = (moved < lo) | (moved > hi)
            Y = repair(moved, X)
            if policy is VelocityPolicy.RECOMPUTED:
                V = Y - X
            elif policy is VelocityPolicy.REFLECTED:
                V = np.where(viol, -V, V)
            elif policy is VelocityPolicy.ZERO:
                V = np.where(viol, 0.0, V)
            # UNCHANGED keeps V = moved - X
        X = Y
        f = evaluator.evaluate_batch(X)
        better = f < pbest_f
        pbest[better] = X[better]
        pbest_f[better] = f[better]
        g = int(np.argmin(pbest_f))

    return RunResult.from_evaluator(evaluator, 0 if repair is None else repair.failures)
