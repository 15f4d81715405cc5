"""Test functions and problem catalog.

The four scalable functions are vectorized over the last axis.  Catalog ids:

* ``elp``, ``sch``, ``ack``, ``ros`` with an optional ``:boundary``, ``:center`` or
  ``:close`` suffix (default ``:boundary``) and an optional ``@n`` dimension
  suffix (default 20), e.g. ``ros:close@50``;
* ``sphere-<fn>-<o>`` for the unit-ball constrained variants;
* ``tp5``, ``tp8``, ``weld``.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass

import numpy as np

from .core import BoxBounds, ConstrainedProblem, Inequality, UsageError


def eval_elp(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    i = np.arange(1, x.shape[-1] + 1)
    return np.sum(i * x * x, axis=-1)


def eval_sch(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sum(np.cumsum(x, axis=-1) ** 2, axis=-1)


def eval_ack(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    rms = np.sqrt(np.mean(x * x, axis=-1))
    cos = np.mean(np.cos(2.0 * np.pi * x), axis=-1)
    # 20 + e - 20 - 1 leaves a rounding residue at the optimum; clamp it.
    return np.maximum(-20.0 * np.exp(-0.2 * rms) - np.exp(cos) + 20.0 + np.e, 0.0)


def eval_ros(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 2:
        raise UsageError("Rosenbrock needs n >= 2")
    a, b = x[..., :-1], x[..., 1:]
    return np.sum(100.0 * (a * a - b) ** 2 + (a - 1.0) ** 2, axis=-1)


FUNCTIONS = {"elp": eval_elp, "sch": eval_sch, "ack": eval_ack, "ros": eval_ros}


class Placement(enum.Enum):
    ON_BOUNDARY = "boundary"
    AT_CENTER = "center"
    CLOSE_TO_BOUNDARY = "close"


_SCENARIO_RANGES = {
    "elp": {Placement.ON_BOUNDARY: (0, 10), Placement.AT_CENTER: (-10, 10),
            Placement.CLOSE_TO_BOUNDARY: (-1, 10)},
    "ros": {Placement.ON_BOUNDARY: (1, 10), Placement.AT_CENTER: (-8, 10),
            Placement.CLOSE_TO_BOUNDARY: (0, 10)},
}
_SCENARIO_RANGES["sch"] = _SCENARIO_RANGES["ack"] = _SCENARIO_RANGES["elp"]


def parse_placement(name) -> Placement:
    if isinstance(name, Placement):
        return name
    aliases = {"onboundary": "boundary", "on-boundary": "boundary", "atcenter": "center",
               "at-center": "center", "closetoboundary": "close", "close-to-boundary": "close"}
    key = str(name).strip().lower()
    try:
        return Placement(aliases.get(key, key))
    except ValueError:
        raise UsageError(f"unknown placement {name!r} (expected boundary, center or close)") from None


@dataclass(frozen=True)
class ScenarioSpec:
    function_id: str
    n: int
    placement: Placement
    bounds: BoxBounds
    f_star: float
    x_star: np.ndarray

    def problem(self) -> ConstrainedProblem:
        return ConstrainedProblem(
            name=f"{self.function_id}:{self.placement.value}@{self.n}",
            objective=FUNCTIONS[self.function_id],
            bounds=self.bounds,
            known_optimum_value=self.f_star,
            known_optimum_point=self.x_star,
        )


def make_scenario(function_id: str, n: int, placement) -> ScenarioSpec:
    if function_id not in FUNCTIONS:
        raise UsageError(f"unknown function {function_id!r}")
    if n < (2 if function_id == "ros" else 1):
        raise UsageError(f"dimension {n} too small for {function_id}")
    placement = parse_placement(placement)
    lo, hi = _SCENARIO_RANGES[function_id][placement]
    x_star = np.full(n, 1.0 if function_id == "ros" else 0.0)
    return ScenarioSpec(function_id, n, placement, BoxBounds.uniform(lo, hi, n), 0.0, x_star)


def make_hypersphere(function_id: str, n: int, center) -> ConstrainedProblem:
    """Minimize a test function inside the unit ball around ``center``.

    The problem carries no explicit variable bounds; the box ``center +/- 10`` is
    attached only so initial points can be sampled.  The center is the seed point.
    """
    if function_id not in ("elp", "sch", "ack"):
        raise UsageError(f"hypersphere variant not defined for {function_id!r}")
    o = np.broadcast_to(np.asarray(center, dtype=float), (n,)).copy()

    def ball(x):
        return np.sum((np.asarray(x) - o) ** 2, axis=-1)

    at_origin = not np.any(o)
    return ConstrainedProblem(
        name=f"sphere-{function_id}-{o[0]:g}" if np.all(o == o[0]) else f"sphere-{function_id}",
        objective=FUNCTIONS[function_id],
        bounds=BoxBounds(o - 10.0, o + 10.0),
        inequalities=(Inequality(ball, "<=", 1.0, "ball"),),
        known_optimum_value=0.0 if at_origin else None,
        known_optimum_point=np.zeros(n) if at_origin else None,
        enforce_bounds=False,
        seed_point=o,
    )


# ---------------------------------------------------------------- TP5 / TP8 / Weld

def _tp5_f(x):
    x = np.asarray(x, dtype=float)
    x1, x2, x3, x4, x5, x6, x7 = np.moveaxis(x, -1, 0)
    return ((x1 - 10) ** 2 + 5 * (x2 - 12) ** 2 + x3 ** 4 + 3 * (x4 - 11) ** 2
            + 10 * x5 ** 6 + 7 * x6 ** 2 + x7 ** 4 - 4 * x6 * x7 - 10 * x6 - 8 * x7)


def _cols(x):
    return np.moveaxis(np.asarray(x, dtype=float), -1, 0)


# Feasible reference points found offline by random search, stored so runs are deterministic.
TP5_SEED = np.array([1.0, 2.0, 0.0, 4.0, 0.0, 1.0, 1.0])
TP8_SEED = np.array([2.23, 1.87, 6.67, 6.42, -0.49, 4.4, 4.15, 3.56, 6.32, 7.91])
WELD_SEED = np.array([1.0, 2.0, 9.0, 1.5])


def make_tp5() -> ConstrainedProblem:
    def g1(x):
        x1, x2, x3, x4, x5, *_ = _cols(x)
        return 2 * x1 ** 2 + 3 * x2 ** 4 + x3 + 4 * x4 ** 2 + 5 * x5

    def g2(x):
        x1, x2, x3, x4, x5, *_ = _cols(x)
        return 7 * x1 + 3 * x2 + 10 * x3 ** 2 + x4 - x5

    def g3(x):
        x1, x2, _, _, _, x6, x7 = _cols(x)
        return 23 * x1 + x2 ** 2 + 6 * x6 ** 2 - 8 * x7

    def g4(x):
        x1, x2, x3, _, _, x6, x7 = _cols(x)
        return 4 * x1 ** 2 + x2 ** 2 - 3 * x1 * x2 + 2 * x3 ** 2 + 5 * x6 - 11 * x7

    return ConstrainedProblem(
        name="tp5", objective=_tp5_f, bounds=BoxBounds.uniform(-10, 10, 7),
        inequalities=(Inequality(g1, "<=", 127, "g1"), Inequality(g2, "<=", 282, "g2"),
                      Inequality(g3, "<=", 196, "g3"), Inequality(g4, "<=", 0, "g4")),
        known_optimum_value=680.63,
        known_optimum_point=np.array([2.330, 1.953, -0.473, 4.362, -0.628, 1.035, 1.591]),
        seed_point=TP5_SEED,
    )


def _tp8_f(x):
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10 = _cols(x)
    return (x1 ** 2 + x2 ** 2 + x1 * x2 - 14 * x1 - 16 * x2 + 2 * (x9 - 10) ** 2
            + 2 * (x6 - 1) ** 2 + 5 * x7 ** 2 + 7 * (x8 - 11) ** 2 + 45 + (x10 - 7) ** 2
            + (x3 - 10) ** 2 + 4 * (x4 - 5) ** 2 + (x5 - 3) ** 2)


def make_tp8() -> ConstrainedProblem:
    def g1(x):
        x1, x2, *_, x7, x8, _, _ = _cols(x)
        return 4 * x1 + 5 * x2 - 3 * x7 + 9 * x8

    def g2(x):
        x1, x2, *_, x7, x8, _, _ = _cols(x)
        return 10 * x1 - 8 * x2 - 17 * x7 + 2 * x8

    def g3(x):
        x1, x2, *_, x9, x10 = _cols(x)
        return -8 * x1 + 2 * x2 + 5 * x9 - 2 * x10

    def g4(x):
        x1, x2, x3, x4, *_ = _cols(x)
        return 3 * (x1 - 2) ** 2 + 4 * (x2 - 3) ** 2 + 2 * x3 ** 2 - 7 * x4

    def g5(x):
        x1, x2, x3, x4, *_ = _cols(x)
        return 5 * x1 ** 2 + 8 * x2 + (x3 - 6) ** 2 - 2 * x4

    def g6(x):
        x1, x2, _, _, x5, x6, *_ = _cols(x)
        return x1 ** 2 + 2 * (x2 - 2) ** 2 - 2 * x1 * x2 + 14 * x5 - 6 * x6

    def g7(x):
        x1, x2, _, _, x5, x6, *_ = _cols(x)
        return 0.5 * (x1 - 8) ** 2 + 2 * (x2 - 4) ** 2 + 3 * x5 ** 2 - x6

    def g8(x):
        x1, x2, *_, x9, x10 = _cols(x)
        return -3 * x1 + 6 * x2 + 12 * (x9 - 8) ** 2 - 7 * x10

    return ConstrainedProblem(
        name="tp8", objective=_tp8_f, bounds=BoxBounds.uniform(-10, 10, 10),
        inequalities=(Inequality(g1, "<=", 105, "g1"), Inequality(g2, "<=", 0, "g2"),
                      Inequality(g3, "<=", 12, "g3"), Inequality(g4, "<=", 120, "g4"),
                      Inequality(g5, "<=", 40, "g5"), Inequality(g6, "<=", 0, "g6"),
                      Inequality(g7, "<=", 30, "g7"), Inequality(g8, "<=", 0, "g8")),
        known_optimum_value=24.33,
        # printed to three decimals; it violates g1, g2, g4-g6 by up to 1e-2
        known_optimum_point=None,
        seed_point=TP8_SEED,
        description="x* = (2.160, 2.393, 8.777, 5.088, 0.999, 1.437, 1.298, 9.810, 8.209, 8.277)",
    )


TP8_REPORTED_POINT = np.array([2.160, 2.393, 8.777, 5.088, 0.999, 1.437, 1.298, 9.810, 8.209, 8.277])
WELD_REPORTED_POINT = np.array([0.244, 6.219, 8.291, 0.244])

_WELD_LOAD = 6000.0


def weld_quantities(x) -> dict:
    """Shear stress, bending stress, deflection and buckling load; variables (h, l, t, b)."""
    h, l, t, b = _cols(x)
    tau_p = _WELD_LOAD / (np.sqrt(2.0) * h * l)
    radius = np.sqrt(0.25 * (l * l + (h + t) ** 2))
    tau_pp = (_WELD_LOAD * (14.0 + 0.5 * l) * radius
              / (2.0 * (0.707 * h * l * (l * l / 12.0 + 0.25 * (h + t) ** 2))))
    tau = np.sqrt(tau_p ** 2 + tau_pp ** 2 + l * tau_p * tau_pp / radius)
    return {
        "tau": tau,
        "sigma": 504000.0 / (t * t * b),
        "delta": 2.1952 / (t ** 3 * b),
        "p_c": 64746.022 * (1.0 - 0.0282346 * t) * t * b ** 3,
    }


def _weld_f(x):
    h, l, t, b = _cols(x)
    return 1.10471 * h * h * l + 0.04811 * t * b * (14.0 + l)


def make_weld() -> ConstrainedProblem:
    def hb(x):
        h, _, _, b = _cols(x)
        return h - b

    return ConstrainedProblem(
        name="weld", objective=_weld_f,
        bounds=BoxBounds([0.125, 0.1, 0.1, 0.125], [5.0, 10.0, 10.0, 5.0]),
        inequalities=(Inequality(lambda x: weld_quantities(x)["tau"], "<=", 13600, "g1"),
                      Inequality(lambda x: weld_quantities(x)["sigma"], "<=", 30000, "g2"),
                      Inequality(hb, "<=", 0, "g3"),
                      Inequality(lambda x: weld_quantities(x)["p_c"], ">=", _WELD_LOAD, "g4"),
                      Inequality(lambda x: weld_quantities(x)["delta"], "<=", 0.25, "g5")),
        known_optimum_value=2.38,
        seed_point=WELD_SEED,
        description="variables (h, l, t, b)",
    )


ACTIVE_CONSTRAINTS = {
    "tp5": ("g1", "g4"),
    "tp8": ("g1", "g2", "g3", "g4", "g5", "g6"),
    "weld": ("g1", "g2", "g3", "g4"),
}

_NAMED = {"tp5": make_tp5, "tp8": make_tp8, "weld": make_weld}
_SPHERE = re.compile(r"^sphere-(elp|sch|ack)-(-?\d+(?:\.\d+)?)(?:@(\d+))?$")
_SCEN = re.compile(r"^(elp|sch|ack|ros)(?::([a-z-]+))?(?:@(\d+))?$")

CATALOG_IDS = ("elp", "sch", "ack", "ros", "sphere-elp-0", "sphere-elp-2", "sphere-sch-0",
               "sphere-sch-2", "sphere-ack-0", "sphere-ack-2", "tp5", "tp8", "weld")


def get_problem(problem_id: str, n: int = 20) -> ConstrainedProblem:
    """Resolve a catalog id (see module docstring) to a problem."""
    pid = problem_id.strip().lower()
    if pid in _NAMED:
        return _NAMED[pid]()
    m = _SPHERE.match(pid)
    if m:
        return make_hypersphere(m.group(1), int(m.group(3) or n), float(m.group(2)))
    m = _SCEN.match(pid)
    if m:
        return make_scenario(m.group(1), int(m.group(3) or n), m.group(2) or "boundary").problem()
    raise UsageError(f"unknown problem id {problem_id!r}")


def active_set_residuals(problem: ConstrainedProblem, x) -> dict:
    """Scaled residual |g| / max(1, |rhs|) of every inequality at ``x``."""
    x = np.asarray(x, dtype=float)
    return {g.name: float(abs(g(x)) / g.scale) for g in problem.inequalities}
