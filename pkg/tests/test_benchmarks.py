import numpy as np
import pytest

from feasrepair.benchmarks import (ACTIVE_CONSTRAINTS, CATALOG_IDS, TP8_REPORTED_POINT,
                                   WELD_REPORTED_POINT, Placement, active_set_residuals,
                                   eval_ack, eval_elp, eval_ros, eval_sch, get_problem,
                                   make_scenario, make_tp5, make_tp8, make_weld)
from feasrepair.core import UsageError, is_feasible, make_rng

TP5_POINT = np.array([2.330, 1.953, -0.473, 4.362, -0.628, 1.035, 1.591])


def test_known_minima():
    assert eval_elp(np.zeros(20)) == 0.0
    assert eval_ack(np.zeros(20)) == pytest.approx(0.0, abs=1e-12)
    assert eval_ros(np.ones(20)) == 0.0
    assert eval_sch(np.array([1.0, 1.0])) == 5.0
    assert eval_ros(np.zeros(20)) == 19.0
    assert eval_elp(np.ones(20)) == 210.0


def test_elp_separable():
    x = make_rng(0).normal(size=20)
    parts = sum(eval_elp(np.where(np.arange(20) == i, x, 0.0)) for i in range(20))
    assert eval_elp(x) == pytest.approx(parts)


def test_functions_nonnegative():
    X = make_rng(1).uniform(-10, 10, (1000, 20))
    for f in (eval_elp, eval_sch, eval_ack, eval_ros):
        assert np.all(f(X) >= 0)


@pytest.mark.parametrize("fid, placement, lo, hi", [
    ("elp", "boundary", 0, 10), ("ros", "center", -8, 10), ("ack", "close", -1, 10),
    ("sch", "center", -10, 10), ("ros", "boundary", 1, 10), ("ros", "close", 0, 10),
])
def test_scenario_ranges(fid, placement, lo, hi):
    s = make_scenario(fid, 20, placement)
    assert np.all(s.bounds.lower == lo) and np.all(s.bounds.upper == hi)
    assert s.f_star == 0.0
    assert s.problem().known_optimum_value == 0.0


def test_scenario_errors():
    with pytest.raises(UsageError):
        make_scenario("elp", 20, "nowhere")
    with pytest.raises(UsageError):
        make_scenario("foo", 20, Placement.AT_CENTER)


def test_hypersphere_semantics():
    p = get_problem("sphere-elp-2")
    assert not p.enforce_bounds and p.has_general_constraints
    assert np.all(p.seed_point == 2.0)
    assert is_feasible(p, np.full(20, 2.0))
    assert is_feasible(p, np.full(20, 12.5)) is False


def test_catalog_resolves():
    for pid in CATALOG_IDS:
        assert get_problem(pid).dim > 0
    assert get_problem("elp:close@5").dim == 5
    with pytest.raises(UsageError):
        get_problem("rastrigin")


def test_tp5_anchor():
    p = make_tp5()
    assert float(p.objective(TP5_POINT)) == pytest.approx(680.63, abs=0.5)
    r = active_set_residuals(p, TP5_POINT)
    assert all(r[g] <= 1e-2 for g in ACTIVE_CONSTRAINTS["tp5"])


def test_tp8_anchor():
    p = make_tp8()
    assert float(p.objective(TP8_REPORTED_POINT)) == pytest.approx(24.33, abs=0.5)
    r = active_set_residuals(p, TP8_REPORTED_POINT)
    # three-decimal rounding of the printed point leaves g2 at 1.0000000000002e-2
    assert all(r[g] <= 1.1e-2 for g in ACTIVE_CONSTRAINTS["tp8"])


def test_weld_anchor():
    p = make_weld()
    assert float(p.objective(WELD_REPORTED_POINT)) == pytest.approx(2.38, abs=0.05)
    r = active_set_residuals(p, WELD_REPORTED_POINT)
    assert all(r[g] <= 1e-2 for g in ACTIVE_CONSTRAINTS["weld"])


@pytest.mark.parametrize("pid", ["tp5", "tp8", "weld"])
def test_seed_points_feasible(pid):
    p = get_problem(pid)
    assert is_feasible(p, p.seed_point)


def test_weld_g4_sense():
    p = make_weld()
    g4 = p.inequalities[3]
    assert g4.name == "g4"
    assert float(g4(p.seed_point)) > 0
    weak = p.seed_point.copy()
    weak[2] = weak[3] = 0.2
    assert float(g4(weak)) < 0
