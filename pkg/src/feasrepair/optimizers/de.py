from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import ConstrainedProblem, CountedEvaluator, RunResult, UsageError
from ..repair import RepairKind, RepairStrategy
from ._common import Repairer, initial_population


@dataclass
class DeConfig:
    population: int = 50
    scale: float = 0.7
    crossover: float = 0.5
    repair: RepairStrategy = field(default_factory=lambda: RepairStrategy(RepairKind.IP_SPREAD))
    # reference point for repairs: "best" (base vector) or "target"
    repair_parent: str = "target"
    # "exp" copies a contiguous run of mutant coordinates, "bin" independent ones
    crossover_kind: str = "exp"

    def __post_init__(self):
        if isinstance(self.repair, str):
            self.repair = RepairStrategy.parse(self.repair)
        if self.crossover_kind not in ("exp", "bin"):
            raise UsageError("crossover_kind must be 'exp' or 'bin'")
        if self.repair_parent not in ("best", "target"):
            raise UsageError("repair_parent must be 'best' or 'target'")
        if self.population < 4:
            raise UsageError("DE needs a population of at least 4")
        if not 0.0 <= self.crossover <= 1.0:
            raise UsageError("crossover rate must lie in [0, 1]")
        if self.repair.kind is RepairKind.HYPERBOLIC:
            raise UsageError("the hyperbolic strategy is specific to PSO")


def distinct_pair(rng: np.random.Generator, n: int):
    """For every index i draw r1 != r2, both different from i."""
    i = np.arange(n)
    r1 = rng.integers(0, n - 1, n)
    r1 += r1 >= i
    a, b = np.minimum(i, r1), np.maximum(i, r1)
    r2 = rng.integers(0, n - 2, n)
    r2 += r2 >= a
    r2 += r2 >= b
    return r1, r2


def de_trials(pop: np.ndarray, best: int, F: float, CR: float,
              rng: np.random.Generator, kind: str = "exp") -> np.ndarray:
    """best/1 trial vectors with exponential or binomial crossover.

    Exponential crossover takes a cyclic run of mutant coordinates from a random
    start; the run length L has P(L >= k) = CR**(k-1), capped at n.  Binomial
    crossover takes each coordinate with probability CR.  Either way at least
    one coordinate per row comes from the mutant.
    """
    NP, n = pop.shape
    r1, r2 = distinct_pair(rng, NP)
    mutant = pop[best] + F * (pop[r1] - pop[r2])
    start = rng.integers(0, n, NP)
    if kind == "exp":
        length = (np.full(NP, n) if CR >= 1.0
                  else np.minimum(rng.geometric(1.0 - CR, NP), n))
        offset = (np.arange(n)[None, :] - start[:, None]) % n
        cross = offset < length[:, None]
    else:
        cross = rng.random((NP, n)) < CR
        cross[np.arange(NP), start] = True
    return np.where(cross, mutant, pop)


def run_de(problem: ConstrainedProblem, config: DeConfig, evaluator: CountedEvaluator,
           rng: np.random.Generator) -> RunResult:
    """Generational DE/best/1 with greedy one-to-one selection.

    Infeasible trials are repaired towards their target vector, or towards the
    current best with ``repair_parent="best"``.
    """
    repair = Repairer(problem, config.repair, rng)
    pop = initial_population(problem, config.population, rng, config.repair.alpha)
    fit = evaluator.evaluate_batch(pop)
    while not evaluator.done:
        best = int(np.argmin(fit))
        trial = de_trials(pop, best, config.scale, config.crossover, rng,
                          config.crossover_kind)
        trial = repair(trial, pop[best] if config.repair_parent == "best" else pop)
        tf = evaluator.evaluate_batch(trial)
        keep = tf <= fit
        pop[keep] = trial[keep]
        fit[keep] = tf[keep]
    return RunResult.from_evaluator(evaluator, repair.failures)
