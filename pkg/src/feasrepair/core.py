"""Points, box bounds, constrained problems and counted evaluation.

Every callable attached to a problem (objective and constraints) is expected to be
vectorized over the last axis: given an array of shape ``(..., n)`` it returns an
array of shape ``(...)``.  Optimizers rely on this to evaluate whole populations
in one call.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

Vectorized = Callable[[np.ndarray], np.ndarray]

DEFAULT_SUCCESS_THRESHOLD = 1e-10
DEFAULT_EQUALITY_TOLERANCE = 1e-4


class UsageError(ValueError):
    """Invalid arguments (dimension mismatch, bad ids, violated preconditions)."""


class BudgetExhausted(RuntimeError):
    """Raised when an evaluation is requested after the budget is spent."""


class EvaluationError(ArithmeticError):
    """Raised when an objective or constraint returns a non-finite value."""


def as_point(x, n: Optional[int] = None) -> np.ndarray:
    """Return ``x`` as a finite float vector, checking its dimension."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise UsageError(f"expected a non-empty 1-d vector, got shape {x.shape}")
    if n is not None and x.size != n:
        raise UsageError(f"dimension mismatch: expected {n}, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise UsageError("vector has non-finite entries")
    return x


def make_rng(seed: int) -> np.random.Generator:
    """Independent, bit-reproducible stream for one run."""
    return np.random.Generator(np.random.PCG64(int(seed) % 2**64))


@dataclass(frozen=True)
class BoxBounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape or lo.size == 0:
            raise UsageError("lower and upper bounds must have the same non-zero size")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise UsageError("bounds must be finite")
        if np.any(lo >= hi):
            raise UsageError("every lower bound must be strictly below its upper bound")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def uniform(cls, lower: float, upper: float, n: int) -> "BoxBounds":
        return cls(np.full(n, float(lower)), np.full(n, float(upper)))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.lower + rng.random((size, self.dim)) * self.width

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)


def in_box(bounds: BoxBounds, x) -> bool:
    """Closed-box membership; points on the boundary are inside."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != bounds.dim:
        raise UsageError(f"dimension mismatch: bounds have {bounds.dim}, point has {x.shape[-1]}")
    return bool(np.all((x >= bounds.lower) & (x <= bounds.upper)))


def rows_in_box(bounds: BoxBounds, X: np.ndarray) -> np.ndarray:
    """Row-wise :func:`in_box` for a 2-d array."""
    return np.all((X >= bounds.lower) & (X <= bounds.upper), axis=-1)


@dataclass(frozen=True)
class Inequality:
    """``func(x) <sense> rhs`` with sense ``'>='`` or ``'<='``."""

    func: Vectorized
    sense: str = ">="
    rhs: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.sense not in (">=", "<="):
            raise UsageError(f"unknown constraint sense {self.sense!r}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Normalized value: non-negative means satisfied."""
        v = self.func(x)
        return v - self.rhs if self.sense == ">=" else self.rhs - v

    @property
    def scale(self) -> float:
        return max(1.0, abs(self.rhs))


@dataclass(frozen=True)
class ConstrainedProblem:
    name: str
    objective: Vectorized
    bounds: BoxBounds
    inequalities: tuple = ()
    equalities: tuple = ()
    equality_tolerance: tuple = ()
    known_optimum_value: Optional[float] = None
    known_optimum_point: Optional[np.ndarray] = None
    # False when the box only serves to sample initial points (no explicit bounds).
    enforce_bounds: bool = True
    # A feasible point used as the repair reference during initialization.
    seed_point: Optional[np.ndarray] = None
    description: str = ""
    _tol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ineqs = tuple(g if isinstance(g, Inequality) else Inequality(g) for g in self.inequalities)
        object.__setattr__(self, "inequalities", ineqs)
        eqs = tuple(self.equalities)
        object.__setattr__(self, "equalities", eqs)
        tol = tuple(self.equality_tolerance) or (DEFAULT_EQUALITY_TOLERANCE,) * len(eqs)
        if len(tol) != len(eqs):
            raise UsageError("one equality tolerance per equality constraint is required")
        if any(t < 0 for t in tol):
            raise UsageError("equality tolerances must be non-negative")
        object.__setattr__(self, "equality_tolerance", tol)
        object.__setattr__(self, "_tol", np.asarray(tol, dtype=float))
        for attr in ("known_optimum_point", "seed_point"):
            p = getattr(self, attr)
            if p is not None:
                p = as_point(p, self.dim)
                p.setflags(write=False)
                object.__setattr__(self, attr, p)
        if (self.known_optimum_point is not None and self.enforce_bounds
                and not in_box(self.bounds, self.known_optimum_point)):
            raise UsageError("known optimum point lies outside the bounds")

    @property
    def dim(self) -> int:
        return self.bounds.dim

    @property
    def has_general_constraints(self) -> bool:
        return bool(self.inequalities or self.equalities)

    def inequality_values(self, X: np.ndarray) -> np.ndarray:
        """Normalized inequality values, shape ``(..., J)``; >= 0 is feasible."""
        X = np.asarray(X, dtype=float)
        if not self.inequalities:
            return np.zeros(X.shape[:-1] + (0,))
        return np.stack([np.asarray(g(X), dtype=float) for g in self.inequalities], axis=-1)

    def equality_values(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if not self.equalities:
            return np.zeros(X.shape[:-1] + (0,))
        return np.stack([np.asarray(h(X), dtype=float) for h in self.equalities], axis=-1)

    def feasible_rows(self, X: np.ndarray) -> np.ndarray:
        """Row-wise feasibility of a 2-d array of points."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ok = rows_in_box(self.bounds, X) if self.enforce_bounds else np.ones(len(X), bool)
        if self.inequalities:
            G = self.inequality_values(X)
            if not np.all(np.isfinite(G)):
                raise EvaluationError(f"{self.name}: non-finite inequality value")
            ok &= np.all(G >= 0.0, axis=-1)
        if self.equalities:
            H = self.equality_values(X)
            if not np.all(np.isfinite(H)):
                raise EvaluationError(f"{self.name}: non-finite equality value")
            ok &= np.all(np.abs(H) <= self._tol, axis=-1)
        return ok


def is_feasible(problem: ConstrainedProblem, x) -> bool:
    x = as_point(x, problem.dim)
    return bool(problem.feasible_rows(x[None, :])[0])


class CountedEvaluator:
    """Objective wrapper that counts calls, enforces a budget and tracks success.

    A run is *solved* the moment an evaluated point reaches
    ``f - f* <= threshold``; evaluations after that point in the same batch are
    not counted, so the reported count is exact.
    """

    def __init__(self, problem: ConstrainedProblem, budget: int,
                 threshold: Optional[float] = DEFAULT_SUCCESS_THRESHOLD,
                 record_trace: bool = False, trace_cap: int = 100_000):
        if budget < 1:
            raise UsageError("budget must be a positive integer")
        self.problem = problem
        self.budget = int(budget)
        self.threshold = threshold
        self.target = (None if threshold is None or problem.known_optimum_value is None
                       else problem.known_optimum_value + threshold)
        self.evaluations_used = 0
        self.best_value = np.inf
        self.best_point: Optional[np.ndarray] = None
        self.solved_at: Optional[int] = None
        self.trace: Optional[list] = [] if record_trace else None
        self._trace_cap = trace_cap

    @property
    def exhausted(self) -> bool:
        return self.evaluations_used >= self.budget

    @property
    def solved(self) -> bool:
        return self.solved_at is not None

    @property
    def done(self) -> bool:
        return self.solved or self.exhausted

    def __call__(self, x) -> float:
        x = as_point(x, self.problem.dim)
        return float(self.evaluate_batch(x[None, :])[0])

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        """Evaluate rows in order; rows past the budget come back as ``inf``."""
        if self.done:
            raise BudgetExhausted(
                f"evaluation requested after {'success' if self.solved else 'budget'} "
                f"({self.evaluations_used}/{self.budget})")
        X = np.asarray(X, dtype=float)
        m = min(len(X), self.budget - self.evaluations_used)
        out = np.full(len(X), np.inf)
        vals = np.asarray(self.problem.objective(X[:m]), dtype=float).reshape(m)
        if not np.all(np.isfinite(vals)):
            raise EvaluationError(f"{self.problem.name}: non-finite objective value")
        out[:m] = vals

        running = np.minimum.accumulate(vals)
        counted = m
        if self.target is not None:
            hit = np.flatnonzero(running <= self.target)
            if hit.size:
                counted = int(hit[0]) + 1
        self._record(X[:counted], vals[:counted])
        self.evaluations_used += counted
        if counted < m or (self.target is not None and self.best_value <= self.target):
            self.solved_at = self.evaluations_used
        return out

    def _record(self, X: np.ndarray, vals: np.ndarray) -> None:
        if vals.size == 0:
            return
        if self.trace is None:
            k = int(np.argmin(vals))
            if vals[k] < self.best_value:
                self.best_value = float(vals[k])
                self.best_point = X[k].copy()
            return
        base = self.evaluations_used
        for k in np.flatnonzero(vals < np.minimum.accumulate(np.r_[self.best_value, vals])[:-1]):
            self.best_value = float(vals[k])
            self.best_point = X[k].copy()
            if len(self.trace) < self._trace_cap:
                self.trace.append((base + int(k) + 1, self.best_value))


def evaluate_counted(evaluator: CountedEvaluator, x) -> float:
    return evaluator(x)


@dataclass
class RunResult:
    success: bool
    evaluations: int
    best_fitness: float
    best_point: np.ndarray
    trace: Optional[Sequence[tuple]] = None
    repair_failures: int = 0

    @classmethod
    def from_evaluator(cls, ev: CountedEvaluator, repair_failures: int = 0) -> "RunResult":
        return cls(success=ev.solved,
                   evaluations=ev.evaluations_used,
                   best_fitness=ev.best_value,
                   best_point=None if ev.best_point is None else ev.best_point.copy(),
                   trace=None if ev.trace is None else list(ev.trace),
                   repair_failures=repair_failures)
