"""Boundary-repair operators for box-constrained search.

Group A operators (random, periodic, set-on-boundary, exp-c, exp-s) touch only the
coordinates that violate their own bound.  Group B operators (shrink, ip-c, ip-s)
move the whole point along the ray from the infeasible child towards a feasible
parent.

All operators accept either one point of shape ``(n,)`` or a stack of points of
shape ``(m, n)``; rows that are already inside the box are returned unchanged.
Stochastic operators take a ``numpy.random.Generator`` and optionally an explicit
``r`` (uniform draw(s) in [0, 1]) which replaces the generator draw; that hook
exists so the inverse transforms can be checked at fixed quantiles.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import BoxBounds, UsageError, rows_in_box

DEFAULT_IP_ALPHA = 1.2


class RepairKind(enum.Enum):
    RANDOM = "random"
    PERIODIC = "periodic"
    SET_ON_BOUNDARY = "setonboundary"
    EXP_CONFINED = "exp-c"
    EXP_SPREAD = "exp-s"
    SHRINK = "shrink"
    IP_CONFINED = "ip-c"
    IP_SPREAD = "ip-s"
    HYPERBOLIC = "hyperbolic"

    @property
    def group_b(self) -> bool:
        return self in (RepairKind.SHRINK, RepairKind.IP_CONFINED, RepairKind.IP_SPREAD)

    @property
    def needs_parent(self) -> bool:
        return self.group_b or self is RepairKind.EXP_CONFINED

    @property
    def is_ip(self) -> bool:
        return self in (RepairKind.IP_CONFINED, RepairKind.IP_SPREAD)


BOX_REPAIRS = tuple(k for k in RepairKind if k is not RepairKind.HYPERBOLIC)


class VelocityPolicy(enum.Enum):
    UNCHANGED = "unchanged"
    RECOMPUTED = "recomputed"
    REFLECTED = "reflected"
    ZERO = "zero"


@dataclass(frozen=True)
class RepairStrategy:
    kind: RepairKind
    alpha: float = DEFAULT_IP_ALPHA

    def __post_init__(self):
        if not isinstance(self.kind, RepairKind):
            object.__setattr__(self, "kind", parse_repair_kind(self.kind))
        if not self.alpha > 0:
            raise UsageError("alpha must be positive")

    @classmethod
    def parse(cls, name: str, alpha: float = DEFAULT_IP_ALPHA) -> "RepairStrategy":
        return cls(parse_repair_kind(name), alpha)

    @property
    def name(self) -> str:
        return self.kind.value

    def apply(self, X, parents, bounds: BoxBounds, rng: np.random.Generator) -> np.ndarray:
        return apply_repair(self, X, parents, bounds, rng)


def parse_repair_kind(name) -> RepairKind:
    if isinstance(name, RepairKind):
        return name
    try:
        return RepairKind(str(name).strip().lower())
    except ValueError:
        valid = ", ".join(k.value for k in RepairKind)
        raise UsageError(f"unknown repair strategy {name!r} (expected one of {valid})") from None


def parse_velocity_policy(name) -> VelocityPolicy:
    if isinstance(name, VelocityPolicy):
        return name
    try:
        return VelocityPolicy(str(name).strip().lower())
    except ValueError:
        valid = ", ".join(p.value for p in VelocityPolicy)
        raise UsageError(f"unknown velocity policy {name!r} (expected one of {valid})") from None


def _as_rows(x, n: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.ndim != 2 or X.shape[1] != n:
        raise UsageError(f"dimension mismatch: bounds have {n}, points have shape {x.shape}")
    return X, single


def _out(Y: np.ndarray, single: bool) -> np.ndarray:
    return Y[0] if single else Y


def _draws(rng: Optional[np.random.Generator], r, size: int) -> np.ndarray:
    if r is not None:
        return np.broadcast_to(np.asarray(r, dtype=float), (size,)).copy()
    if rng is None:
        raise UsageError("a random generator or explicit draw r is required")
    return rng.random(size)


def _exp_offset(span: np.ndarray, r: np.ndarray) -> np.ndarray:
    """ln(1 + r (e^span - 1)), evaluated without overflow for wide spans."""
    with np.errstate(divide="ignore"):
        return np.logaddexp(np.log1p(-r), np.log(r) + span)


# ---------------------------------------------------------------- Group A

def repair_random(x, bounds: BoxBounds, rng: np.random.Generator) -> np.ndarray:
    X, single = _as_rows(x, bounds.dim)
    Y = X.copy()
    rows, cols = np.nonzero((X < bounds.lower) | (X > bounds.upper))
    Y[rows, cols] = bounds.lower[cols] + rng.random(rows.size) * bounds.width[cols]
    return _out(Y, single)


def repair_periodic(x, bounds: BoxBounds) -> np.ndarray:
    """Wrap violated coordinates as if the landscape repeated with period U - L."""
    X, single = _as_rows(x, bounds.dim)
    Y = X.copy()
    lo = np.broadcast_to(bounds.lower, X.shape)
    hi = np.broadcast_to(bounds.upper, X.shape)
    p = np.broadcast_to(bounds.width, X.shape)
    below = X < lo
    above = X > hi
    Y[below] = hi[below] - np.fmod(lo[below] - X[below], p[below])
    Y[above] = lo[above] + np.fmod(X[above] - hi[above], p[above])
    return _out(Y, single)


def repair_set_on_boundary(x, bounds: BoxBounds) -> np.ndarray:
    X, single = _as_rows(x, bounds.dim)
    return _out(np.clip(X, bounds.lower, bounds.upper), single)


def repair_exp_confined(x, parent, bounds: BoxBounds, rng: Optional[np.random.Generator] = None,
                        r=None) -> np.ndarray:
    """Exponential re-sampling between the parent coordinate and the violated bound.

    Density rises towards the violated bound; ``r = 0`` returns the parent
    coordinate and ``r = 1`` the bound itself.
    """
    X, single = _as_rows(x, bounds.dim)
    P, _ = _as_rows(parent, bounds.dim)
    P = np.broadcast_to(P, X.shape)
    lo = np.broadcast_to(bounds.lower, X.shape)
    hi = np.broadcast_to(bounds.upper, X.shape)
    below = X < lo
    above = X > hi
    viol = below | above
    if np.any(viol & ((P < lo) | (P > hi))):
        raise UsageError("exp-c needs the parent inside the box on every violated axis")
    Y = X.copy()
    rows, cols = np.nonzero(viol)
    u = _draws(rng, r, rows.size)
    pv = P[rows, cols]
    is_low = below[rows, cols]
    span = np.where(is_low, pv - lo[rows, cols], hi[rows, cols] - pv)
    step = _exp_offset(span, u)
    Y[rows, cols] = np.where(is_low, pv - step, pv + step)
    return _out(np.clip(Y, bounds.lower, bounds.upper), single)


def repair_exp_spread(x, bounds: BoxBounds, rng: Optional[np.random.Generator] = None,
                      r=None) -> np.ndarray:
    """Exponential re-sampling over the whole range, densest at the violated bound."""
    X, single = _as_rows(x, bounds.dim)
    lo = np.broadcast_to(bounds.lower, X.shape)
    hi = np.broadcast_to(bounds.upper, X.shape)
    below = X < lo
    rows, cols = np.nonzero(below | (X > hi))
    u = _draws(rng, r, rows.size)
    step = _exp_offset(hi[rows, cols] - lo[rows, cols], u)
    Y = X.copy()
    Y[rows, cols] = np.where(below[rows, cols], hi[rows, cols] - step, lo[rows, cols] + step)
    return _out(np.clip(Y, bounds.lower, bounds.upper), single)


# ---------------------------------------------------------------- Group B

def repair_shrink(x, reference, bounds: BoxBounds) -> np.ndarray:
    """Pull an infeasible point back along the line to ``reference`` onto the box surface.

    The reference must lie in the closed box.  Intercepts are taken over violated
    coordinates only; a reference sitting on the violated bound gives a zero
    intercept and the reference itself is returned.
    """
    X, single = _as_rows(x, bounds.dim)
    R, _ = _as_rows(reference, bounds.dim)
    R = np.broadcast_to(R, X.shape)
    bad = ~rows_in_box(bounds, X)
    if not np.any(bad):
        return _out(X.copy(), single)
    if not np.all(rows_in_box(bounds, R[bad])):
        raise UsageError("shrink reference must lie inside the box")
    Xb, Rb = X[bad], R[bad]
    lo, hi = bounds.lower, bounds.upper
    target = np.where(Xb < lo, lo, np.where(Xb > hi, hi, np.nan))
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = (target - Rb) / (Xb - Rb)
    beta = np.where(np.isnan(target), np.inf, beta)
    k = np.argmin(beta, axis=1)
    idx = np.arange(len(Xb))
    b = beta[idx, k][:, None]
    Yb = Rb + b * (Xb - Rb)
    Yb[idx, k] = target[idx, k]
    Y = X.copy()
    Y[bad] = np.clip(Yb, lo, hi)
    return _out(Y, single)


def ip_sample_distance(d_v, a, alpha, r):
    """Inverse-parabolic draw of a distance in ``[d_v, a]`` from quantile ``r``.

    The density is proportional to ``1 / ((d - d_v)^2 + alpha^2 d_v^2)``, peaked at
    the violated boundary ``d_v``; its width scales with ``alpha * d_v``.
    """
    d_v = np.asarray(d_v, dtype=float)
    a = np.asarray(a, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(d_v <= 0) or np.any(a < d_v):
        raise UsageError("ip_sample_distance needs 0 < d_v <= a")
    if np.any(np.asarray(alpha) <= 0):
        raise UsageError("alpha must be positive")
    w = alpha * d_v
    d = d_v + w * np.tan(r * np.arctan((a - d_v) / w))
    d = np.clip(d, d_v, a)
    return float(d) if d.ndim == 0 else d


def ip_distance_cdf(d, d_v, a, alpha):
    """Analytic CDF of :func:`ip_sample_distance` (used as an independent check)."""
    w = alpha * d_v
    return np.arctan((np.asarray(d, dtype=float) - d_v) / w) / np.arctan((a - d_v) / w)


@dataclass(frozen=True)
class RaySegment:
    """Distances from the child along the unit ray towards the parent."""

    d_v: np.ndarray
    d_p: np.ndarray
    d_u: np.ndarray
    unit_direction: np.ndarray


def _segment_rows(C: np.ndarray, P: np.ndarray, bounds: BoxBounds) -> RaySegment:
    D = P - C
    d_p = np.linalg.norm(D, axis=1)
    U = D / d_p[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (bounds.lower - C) / U
        t2 = (bounds.upper - C) / U
    flat = U == 0.0
    enter = np.where(flat, -np.inf, np.minimum(t1, t2))
    leave = np.where(flat, np.inf, np.maximum(t1, t2))
    d_v = np.clip(enter.max(axis=1), 0.0, d_p)
    d_u = np.maximum(leave.min(axis=1), d_p)
    return RaySegment(d_v, d_p, d_u, U)


def box_ray_segment(child, parent, bounds: BoxBounds) -> RaySegment:
    """Entry (d_v) and exit (d_u) distances of the child->parent ray through the box."""
    C, single = _as_rows(child, bounds.dim)
    P, _ = _as_rows(parent, bounds.dim)
    P = np.broadcast_to(P, C.shape)
    if np.any(np.all(C == P, axis=1)):
        raise UsageError("parent and child coincide; no ray exists")
    if not np.all(rows_in_box(bounds, P)):
        raise UsageError("parent must be feasible")
    seg = _segment_rows(C, P, bounds)
    if single:
        return RaySegment(float(seg.d_v[0]), float(seg.d_p[0]), float(seg.d_u[0]),
                          seg.unit_direction[0])
    return seg


def degenerate_entry(d_v: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Replace a zero entry distance so the inverse-parabolic density is defined."""
    return np.where(d_v > 0, d_v, np.minimum(np.maximum(1e-12, 1e-6 * a), a))


def repair_ip(child, parent, bounds: BoxBounds, mode: str = "spread",
              alpha: float = DEFAULT_IP_ALPHA, rng: Optional[np.random.Generator] = None,
              r=None) -> np.ndarray:
    """Inverse-parabolic repair along the child->parent ray.

    ``mode='confined'`` samples between the entry point and the parent,
    ``mode='spread'`` between the entry point and the far side of the box.
    Rows whose parent is infeasible or equal to the child fall back to
    :func:`repair_random`.
    """
    if mode not in ("confined", "spread"):
        raise UsageError(f"unknown IP mode {mode!r}")
    C, single = _as_rows(child, bounds.dim)
    P, _ = _as_rows(parent, bounds.dim)
    P = np.broadcast_to(P, C.shape)
    Y = C.copy()
    bad = ~rows_in_box(bounds, C)
    if not np.any(bad):
        return _out(Y, single)
    usable = bad & rows_in_box(bounds, P) & ~np.all(C == P, axis=1)
    fallback = bad & ~usable
    if np.any(usable):
        seg = _segment_rows(C[usable], P[usable], bounds)
        a = seg.d_p if mode == "confined" else seg.d_u
        d_v = degenerate_entry(seg.d_v, a)
        u = _draws(rng, r, int(usable.sum()))
        d = ip_sample_distance(d_v, a, alpha, u)
        Y[usable] = np.clip(C[usable] + np.atleast_1d(d)[:, None] * seg.unit_direction,
                            bounds.lower, bounds.upper)
    if np.any(fallback):
        if rng is None:
            raise UsageError("random fallback needs a generator")
        Y[fallback] = repair_random(C[fallback], bounds, rng)
    return _out(Y, single)


# ---------------------------------------------------------------- PSO velocity

def hyperbolic_clamp_velocity(v, x, lower, upper):
    """Shrink velocity so that ``x + v`` stays strictly inside ``(lower, upper)``."""
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(x <= lower) or np.any(x >= upper):
        raise UsageError("hyperbolic clamp needs the position strictly inside the bounds")
    out = _hyperbolic(v, x, np.asarray(lower, float), np.asarray(upper, float))
    return float(out) if out.ndim == 0 else out


def _hyperbolic(v, x, lower, upper):
    room = np.minimum(upper - x, x - lower)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = v / (1.0 + np.abs(v) / room)
    return np.where(room > 0, out, 0.0)


# ---------------------------------------------------------------- dispatch

def apply_repair(strategy: RepairStrategy, X, parents, bounds: BoxBounds,
                 rng: np.random.Generator) -> np.ndarray:
    """Repair every infeasible row of ``X``; ``parents`` is ignored by parent-free kinds."""
    kind = strategy.kind
    if kind is RepairKind.RANDOM:
        return repair_random(X, bounds, rng)
    if kind is RepairKind.PERIODIC:
        return repair_periodic(X, bounds)
    if kind is RepairKind.SET_ON_BOUNDARY:
        return repair_set_on_boundary(X, bounds)
    if kind is RepairKind.EXP_SPREAD:
        return repair_exp_spread(X, bounds, rng)
    if kind is RepairKind.EXP_CONFINED:
        return repair_exp_confined(X, parents, bounds, rng)
    if kind is RepairKind.SHRINK:
        return repair_shrink(X, parents, bounds)
    if kind is RepairKind.IP_CONFINED:
        return repair_ip(X, parents, bounds, "confined", strategy.alpha, rng)
    if kind is RepairKind.IP_SPREAD:
        return repair_ip(X, parents, bounds, "spread", strategy.alpha, rng)
    raise UsageError(f"{kind.value} is not a post-hoc repair operator")
