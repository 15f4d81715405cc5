"""Inverse-parabolic repair for general nonlinear constraints.

Points along the repair ray are parametrized by their distance from the child,
``x(a) = child + a * (parent - child) / |parent - child|``.  The feasible interval
around the parent is found numerically: a grid scan brackets sign changes and a
bracket refinement pins them down to ``bisection_tolerance``.

Variable bounds and equalities enter the scan as ordinary ``>= 0`` inequalities:
``(x_i - L_i)(U_i - x_i)`` and ``eps^2 - h(x)^2``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import BoxBounds, ConstrainedProblem, UsageError, as_point
from .repair import DEFAULT_IP_ALPHA, degenerate_entry, ip_sample_distance


class RepairFailureWarning(RuntimeWarning):
    """A general repair could not produce a feasible point and returned the parent."""


@dataclass(frozen=True)
class RootFinderConfig:
    scan_steps: int = 64
    bisection_tolerance: float = 1e-10
    max_ray_extent: float = 10.0
    max_retries: int = 8
    # interior probes per refinement sweep; 1 is plain bisection
    sections: int = 16

    def __post_init__(self):
        if self.scan_steps < 16:
            raise UsageError("scan_steps must be at least 16")
        if not self.bisection_tolerance > 0:
            raise UsageError("bisection_tolerance must be positive")
        if not self.max_ray_extent >= 1:
            raise UsageError("max_ray_extent must be >= 1")
        if self.sections < 1:
            raise UsageError("sections must be >= 1")


@dataclass(frozen=True)
class AlphaBounds:
    alpha_v: float
    alpha_p: float
    alpha_u: float


def point_on_ray(child, parent, alpha) -> np.ndarray:
    child = np.asarray(child, dtype=float)
    parent = np.asarray(parent, dtype=float)
    d = parent - child
    norm = np.linalg.norm(d, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise UsageError("parent and child coincide; the ray has no direction")
    alpha = np.asarray(alpha, dtype=float)
    return child + alpha[..., None] * (d / norm) if alpha.ndim else child + alpha * d / norm


def bounds_as_quadratic(bounds: BoxBounds, i: int) -> Callable[[np.ndarray], np.ndarray]:
    if not 0 <= i < bounds.dim:
        raise UsageError(f"coordinate index {i} out of range")
    lo, hi = float(bounds.lower[i]), float(bounds.upper[i])

    def g(x):
        xi = np.asarray(x, dtype=float)[..., i]
        return (xi - lo) * (hi - xi)

    return g


def relax_equality(h: Callable, epsilon: float) -> Callable[[np.ndarray], np.ndarray]:
    if not epsilon > 0:
        raise UsageError("epsilon must be positive")
    eps2 = float(epsilon) ** 2

    def g(x):
        return eps2 - np.asarray(h(x), dtype=float) ** 2

    return g


def find_constraint_roots(constraint: Callable, child, parent, range_=None,
                          cfg: RootFinderConfig = RootFinderConfig()) -> list:
    """All sign changes of ``constraint(x(a))`` on ``range_`` (default ``[0, extent * |p - c|]``).

    The parent's distance is always a grid point.  Roots where the function
    touches zero without changing sign are not reported.
    """
    child = np.asarray(child, dtype=float)
    parent = np.asarray(parent, dtype=float)
    a_p = float(np.linalg.norm(parent - child))
    if a_p == 0:
        raise UsageError("parent and child coincide; the ray has no direction")
    unit = (parent - child) / a_p
    lo, hi = (0.0, cfg.max_ray_extent * a_p) if range_ is None else map(float, range_)

    def f(a):
        a = np.asarray(a, dtype=float)
        return np.asarray(constraint(child + a[..., None] * unit), dtype=float)

    grid = np.linspace(lo, hi, cfg.scan_steps + 1)
    if lo < a_p < hi:
        # the parent splits a feasible stretch, so a short chord is not skipped over
        grid = np.union1d(grid, [a_p])
    vals = f(grid)
    roots = []
    for k in range(len(grid) - 1):
        fa, fb = vals[k], vals[k + 1]
        if fa == 0.0:
            roots.append(grid[k])
            continue
        if fa * fb >= 0:
            continue
        a, b = grid[k], grid[k + 1]
        while b - a > cfg.bisection_tolerance:
            m = 0.5 * (a + b)
            fm = float(f(m))
            if fm == 0.0:
                a = b = m
            elif (fm < 0) == (fa < 0):
                a, fa = m, fm
            else:
                b = m
        roots.append(0.5 * (a + b))
    if vals[-1] == 0.0:
        roots.append(grid[-1])
    return sorted(roots)


# ---------------------------------------------------------------- batched machinery

def _phi(problem: ConstrainedProblem, X: np.ndarray) -> np.ndarray:
    """Smallest normalized constraint value; negative or non-finite means infeasible."""
    with np.errstate(all="ignore"):
        parts = []
        if problem.inequalities:
            parts.append(problem.inequality_values(X))
        if problem.equalities:
            H = problem.equality_values(X)
            parts.append(np.asarray(problem.equality_tolerance) ** 2 - H * H)
        if problem.enforce_bounds:
            b = problem.bounds
            parts.append((X - b.lower) * (b.upper - X))
        if not parts:
            return np.ones(X.shape[:-1])
        G = np.concatenate(parts, axis=-1)
        G = np.where(np.isfinite(G), G, -np.inf)
        return G.min(axis=-1)


def _refine(problem, C, U, feas, infeas, cfg: RootFinderConfig) -> np.ndarray:
    """Shrink brackets [feasible end, infeasible end] towards the crossing nearest the feasible end."""
    feas = feas.copy()
    infeas = infeas.copy()
    K = cfg.sections
    frac = np.arange(1, K + 1) / (K + 1)
    while True:
        width = np.abs(infeas - feas)
        live = width > cfg.bisection_tolerance
        if not np.any(live):
            return feas
        a, b = feas[live], infeas[live]
        S = a[:, None] + (b - a)[:, None] * frac
        vals = _phi(problem, C[live][:, None, :] + S[..., None] * U[live][:, None, :])
        bad = vals < 0
        first = np.where(bad.any(axis=1), bad.argmax(axis=1), K)
        ext = np.concatenate([a[:, None], S, b[:, None]], axis=1)
        rows = np.arange(len(a))
        feas[live] = ext[rows, first]
        infeas[live] = ext[rows, first + 1]


def alpha_bounds_rows(problem: ConstrainedProblem, C: np.ndarray, P: np.ndarray,
                      cfg: RootFinderConfig = RootFinderConfig(), upper: bool = True):
    """Vectorized alpha bounds for rows of (infeasible child, feasible parent).

    Returns ``(alpha_v, alpha_p, alpha_u, unit, ok)``; ``ok`` is False where the
    parent tested infeasible so no bracket exists.  With ``upper=False`` the
    scan beyond the parent is skipped and ``alpha_u`` equals ``alpha_p``.
    """
    D = P - C
    a_p = np.linalg.norm(D, axis=1)
    U = D / a_p[:, None]
    m = len(C)
    S = cfg.scan_steps
    t = np.linspace(0.0, 1.0, S + 1)
    a_max = cfg.max_ray_extent * a_p

    # low grid runs child -> parent, high grid parent -> a_max; both pinned to P exactly
    low = t * a_p[:, None]
    grids = [low]
    if upper:
        grids.append(a_p[:, None] + t * (a_max - a_p)[:, None])
    A = np.concatenate(grids)
    CC = np.concatenate([C] * len(grids))
    UU = np.concatenate([U] * len(grids))
    pts = CC[:, None, :] + A[..., None] * UU[:, None, :]
    pts[:m, -1] = P
    if upper:
        pts[m:, 0] = P
    neg = _phi(problem, pts) < 0
    ok = ~neg[:m, -1]

    k = S - np.argmax(neg[:m, ::-1], axis=1)     # last infeasible index below the parent
    lo_rows = np.flatnonzero(neg[:m].any(axis=1) & ok)
    feas = [low[lo_rows, k[lo_rows] + 1]]
    infeas = [low[lo_rows, k[lo_rows]]]
    rows = [lo_rows]
    if upper:
        j = np.argmax(neg[m:], axis=1)           # first infeasible index beyond the parent
        hi_rows = np.flatnonzero(neg[m:].any(axis=1) & ok)
        high = A[m:]
        feas.append(high[hi_rows, j[hi_rows] - 1])
        infeas.append(high[hi_rows, j[hi_rows]])
        rows.append(hi_rows + m)
    rows = np.concatenate(rows)
    roots = np.empty(0)
    if rows.size:
        roots = _refine(problem, CC[rows], UU[rows], np.concatenate(feas),
                        np.concatenate(infeas), cfg)

    alpha_v = np.zeros(m)
    alpha_v[lo_rows] = roots[:lo_rows.size]
    if not upper:
        return alpha_v, a_p, a_p.copy(), U, ok
    alpha_u = a_max.copy()
    alpha_u[hi_rows] = roots[lo_rows.size:]
    return alpha_v, a_p, np.maximum(alpha_u, a_p), U, ok


def compute_alpha_bounds(problem: ConstrainedProblem, child, parent,
                         cfg: RootFinderConfig = RootFinderConfig()) -> AlphaBounds:
    child = as_point(child, problem.dim)
    parent = as_point(parent, problem.dim)
    if np.array_equal(child, parent):
        raise UsageError("parent and child coincide; the ray has no direction")
    if not problem.feasible_rows(parent[None])[0]:
        raise UsageError("parent must be feasible")
    a_v, a_p, a_u, _, ok = alpha_bounds_rows(problem, child[None], parent[None], cfg)
    if not ok[0]:
        raise UsageError("parent must be feasible")
    return AlphaBounds(float(a_v[0]), float(a_p[0]), float(a_u[0]))


def repair_general_rows(problem: ConstrainedProblem, C: np.ndarray, P: np.ndarray, mode: str,
                        alpha: float, rng: np.random.Generator,
                        cfg: RootFinderConfig = RootFinderConfig(), r=None):
    """Repair the infeasible rows of ``C`` towards the matching rows of ``P``.

    Returns ``(Y, failures)`` where ``failures`` counts rows that fell back to the
    parent after the retry budget.
    """
    if mode not in ("confined", "spread"):
        raise UsageError(f"unknown IP mode {mode!r}")
    C = np.atleast_2d(np.asarray(C, dtype=float))
    P = np.broadcast_to(np.atleast_2d(np.asarray(P, dtype=float)), C.shape)
    Y = C.copy()
    bad = ~problem.feasible_rows(C)
    if not np.any(bad):
        return Y, 0
    rows = np.flatnonzero(bad & ~np.all(C == P, axis=1))
    a_v, a_p, a_u, U, ok = alpha_bounds_rows(problem, C[rows], P[rows], cfg,
                                             upper=mode == "spread")
    a = a_p if mode == "confined" else a_u
    d_v = degenerate_entry(a_v, a)

    pending = np.flatnonzero(ok)
    for attempt in range(cfg.max_retries):
        u = (rng.random(pending.size) if r is None or attempt
             else np.broadcast_to(np.asarray(r, float), (pending.size,)))
        d = np.atleast_1d(ip_sample_distance(d_v[pending], a[pending], alpha, u))
        cand = C[rows[pending]] + d[:, None] * U[pending]
        good = problem.feasible_rows(cand)
        Y[rows[pending[good]]] = cand[good]
        pending = pending[~good]
        if pending.size == 0:
            break
    pending = np.union1d(pending, np.flatnonzero(~ok))
    Y[rows[pending]] = P[rows[pending]]
    failed = int(pending.size) + int(bad.sum() - rows.size)
    Y[bad & np.all(C == P, axis=1)] = P[bad & np.all(C == P, axis=1)]
    return Y, failed


def repair_general_ip(child, parent, problem: ConstrainedProblem, mode: str = "spread",
                      alpha_param: float = DEFAULT_IP_ALPHA,
                      cfg: RootFinderConfig = RootFinderConfig(),
                      rng: Optional[np.random.Generator] = None, r=None) -> np.ndarray:
    """Inverse-parabolic repair of one point (or rows) under general constraints.

    With ``r`` given, the first draw uses it instead of the generator.  If no
    feasible draw is found within ``cfg.max_retries`` the parent is returned and a
    :class:`RepairFailureWarning` is issued.
    """
    child = np.asarray(child, dtype=float)
    single = child.ndim == 1
    parent = np.asarray(parent, dtype=float)
    if not np.all(problem.feasible_rows(np.atleast_2d(parent))):
        raise UsageError("parent must be feasible")
    if rng is None:
        rng = np.random.default_rng()
    Y, failed = repair_general_rows(problem, child, parent, mode, alpha_param, rng, cfg, r)
    if failed:
        warnings.warn(f"{failed} repair(s) fell back to the parent", RepairFailureWarning,
                      stacklevel=2)
    return Y[0] if single else Y


def feasible_initialize(problem: ConstrainedProblem, seed_solution, pop_size: int,
                        alpha_param: float = DEFAULT_IP_ALPHA,
                        cfg: RootFinderConfig = RootFinderConfig(),
                        rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Uniform sample in the box with infeasible draws pulled towards a feasible seed (IP-S)."""
    seed = as_point(seed_solution, problem.dim)
    if not problem.feasible_rows(seed[None])[0]:
        raise UsageError("seed solution is infeasible")
    if pop_size < 1:
        raise UsageError("pop_size must be positive")
    if rng is None:
        rng = np.random.default_rng()
    X = problem.bounds.sample(rng, pop_size)
    Y, _ = repair_general_rows(problem, X, seed, "spread", alpha_param, rng, cfg)
    return Y
