from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import BoxBounds, ConstrainedProblem, CountedEvaluator, RunResult, UsageError
from ..repair import RepairKind, RepairStrategy
from ._common import Repairer, initial_population

_TINY = 1e-14


@dataclass
class RgaConfig:
    population: int = 100
    crossover_rate: float = 0.9
    mutation_rate: float = 0.05
    eta_c: float = 2.0
    eta_m: float = 100.0
    elitist: bool = False
    rigid_bounds: bool = False
    repair: RepairStrategy = field(default_factory=lambda: RepairStrategy(RepairKind.IP_SPREAD))

    def __post_init__(self):
        if isinstance(self.repair, str):
            self.repair = RepairStrategy.parse(self.repair)
        if self.population < 2 or self.population % 2:
            raise UsageError("RGA population must be an even number >= 2")
        if self.repair.kind is RepairKind.HYPERBOLIC:
            raise UsageError("the hyperbolic strategy is specific to PSO")


def _spread_factor(u, eta):
    return np.where(u <= 0.5, (2 * u) ** (1 / (eta + 1)),
                    (1 / (2 * (1 - u))) ** (1 / (eta + 1)))


def _bounded_spread(u, beta, eta):
    alpha = 2.0 - beta ** -(eta + 1)
    ua = u * alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(u <= 1.0 / alpha, ua ** (1 / (eta + 1)),
                        (1.0 / (2.0 - ua)) ** (1 / (eta + 1)))


def sbx_crossover(p1, p2, eta_c: float, rng: np.random.Generator,
                  bounds: BoxBounds | None = None, rigid: bool = False, var_prob: float = 0.5):
    """Simulated binary crossover on row pairs.

    Each variable is recombined with probability ``var_prob``; identical parent
    values are copied.  In rigid mode the spread distribution is truncated so
    both children stay inside ``bounds``.  The children's sum equals the
    parents' sum for every unclipped variable.
    """
    p1 = np.atleast_2d(np.asarray(p1, dtype=float))
    p2 = np.atleast_2d(np.asarray(p2, dtype=float))
    if rigid and bounds is None:
        raise UsageError("rigid SBX needs bounds")
    y1, y2 = np.minimum(p1, p2), np.maximum(p1, p2)
    diff = y2 - y1
    active = (rng.random(p1.shape) < var_prob) & (diff > _TINY)
    u = rng.random(p1.shape)
    mid = 0.5 * (y1 + y2)
    if rigid:
        safe = np.where(active, diff, 1.0)
        bl = _bounded_spread(u, 1.0 + 2.0 * (y1 - bounds.lower) / safe, eta_c)
        bu = _bounded_spread(u, 1.0 + 2.0 * (bounds.upper - y2) / safe, eta_c)
        c1 = np.clip(mid - 0.5 * bl * diff, bounds.lower, bounds.upper)
        c2 = np.clip(mid + 0.5 * bu * diff, bounds.lower, bounds.upper)
    else:
        b = _spread_factor(u, eta_c)
        c1 = mid - 0.5 * b * diff
        c2 = mid + 0.5 * b * diff
    swap = rng.random(p1.shape) < 0.5
    c1, c2 = np.where(swap, c2, c1), np.where(swap, c1, c2)
    return np.where(active, c1, p1), np.where(active, c2, p2)


def polynomial_mutation(x, eta_m: float, rate: float, rng: np.random.Generator,
                        bounds: BoxBounds, rigid: bool = False) -> np.ndarray:
    """Polynomial mutation; each variable mutates with probability ``rate``.

    The step is scaled by the box width.  Rigid mode uses the bounded form,
    whose result always stays in the box.
    """
    x = np.asarray(x, dtype=float)
    mask = rng.random(x.shape) < rate
    u = rng.random(x.shape)
    width = bounds.width
    p = 1.0 / (eta_m + 1)
    if rigid:
        d1 = np.clip((x - bounds.lower) / width, 0.0, 1.0)
        d2 = np.clip((bounds.upper - x) / width, 0.0, 1.0)
        lo_part = 2 * u + (1 - 2 * u) * (1 - d1) ** (eta_m + 1)
        hi_part = 2 * (1 - u) + 2 * (u - 0.5) * (1 - d2) ** (eta_m + 1)
        delta = np.where(u < 0.5, lo_part ** p - 1, 1 - hi_part ** p)
        y = np.clip(x + delta * width, bounds.lower, bounds.upper)
    else:
        delta = np.where(u < 0.5, (2 * u) ** p - 1, 1 - (2 * (1 - u)) ** p)
        y = x + delta * width
    return np.where(mask, y, x)


def _offspring(P1, P2, config: RgaConfig, bounds: BoxBounds, repair: Repairer, rng):
    m = len(P1)
    cross = rng.random(m) < config.crossover_rate
    C1, C2 = P1.copy(), P2.copy()
    if np.any(cross):
        C1[cross], C2[cross] = sbx_crossover(P1[cross], P2[cross], config.eta_c, rng,
                                             bounds, config.rigid_bounds)
    C = np.vstack([C1, C2])
    C = polynomial_mutation(C, config.eta_m, config.mutation_rate, rng, bounds,
                            config.rigid_bounds)
    A, B = np.vstack([P1, P2]), np.vstack([P2, P1])
    nearer = np.where((np.sum((C - A) ** 2, axis=1) <= np.sum((C - B) ** 2, axis=1))[:, None],
                      A, B)
    return repair(C, nearer)


def run_rga(problem: ConstrainedProblem, config: RgaConfig, evaluator: CountedEvaluator,
            rng: np.random.Generator) -> RunResult:
    """Real-coded GA with SBX and polynomial mutation.

    Standard mode: binary tournament selection and full generational
    replacement.  Elitist mode: random pairing, and the best two of each
    parent pair plus its two children survive.  Infeasible children are
    repaired with the nearer parent as reference.
    """
    repair = Repairer(problem, config.repair, rng)
    bounds = problem.bounds
    N = config.population
    half = N // 2
    pop = initial_population(problem, N, rng, config.repair.alpha)
    fit = evaluator.evaluate_batch(pop)
    while not evaluator.done:
        if config.elitist:
            perm = rng.permutation(N)
            i1, i2 = perm[:half], perm[half:]
            C = _offspring(pop[i1], pop[i2], config, bounds, repair, rng)
            fc = evaluator.evaluate_batch(C)
            fam = np.stack([i1, i2], axis=1)
            cand = np.concatenate([pop[fam], np.stack([C[:half], C[half:]], axis=1)], axis=1)
            cf = np.concatenate([fit[fam], np.stack([fc[:half], fc[half:]], axis=1)], axis=1)
            order = np.argsort(cf, axis=1, kind="stable")[:, :2]
            rows = np.arange(half)[:, None]
            pop[fam] = cand[rows, order]
            fit[fam] = cf[rows, order]
        else:
            a = rng.integers(0, N, N)
            b = rng.integers(0, N, N)
            win = np.where(fit[a] <= fit[b], a, b)
            C = _offspring(pop[win[:half]], pop[win[half:]], config, bounds, repair, rng)
            pop = C
            fit = evaluator.evaluate_batch(C)
    return RunResult.from_evaluator(evaluator, repair.failures)
