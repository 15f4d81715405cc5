import numpy as np
import pytest

from feasrepair.benchmarks import get_problem, make_hypersphere, make_tp5
from feasrepair.constraints import (RepairFailureWarning, RootFinderConfig, alpha_bounds_rows,
                                    bounds_as_quadratic, compute_alpha_bounds,
                                    feasible_initialize, find_constraint_roots, point_on_ray,
                                    relax_equality, repair_general_ip, repair_general_rows)
from feasrepair.core import BoxBounds, ConstrainedProblem, UsageError, is_feasible, make_rng
from feasrepair.repair import box_ray_segment


def _sphere(n=20):
    return make_hypersphere("elp", n, 0.0)


def test_point_on_ray_examples():
    c, p = np.array([0.0, 0.0]), np.array([3.0, 4.0])
    assert np.allclose(point_on_ray(c, p, 2.5), [1.5, 2.0])
    assert np.array_equal(point_on_ray(c, p, 0.0), c)
    assert np.allclose(point_on_ray(c, p, 5.0), p, rtol=1e-12)
    with pytest.raises(UsageError):
        point_on_ray(c, c, 1.0)


def test_roots_simple_quadratic():
    g = lambda x: 1 - np.asarray(x)[..., 0] ** 2
    roots = find_constraint_roots(g, np.array([0.0]), np.array([1.5]), range_=(0, 3))
    assert len(roots) == 1 and roots[0] == pytest.approx(1.0, abs=1e-9)


def test_roots_sphere_chord():
    child = np.zeros(20)
    child[0] = 3.0
    g = lambda x: 1 - np.sum(np.asarray(x) ** 2, axis=-1)
    roots = find_constraint_roots(g, child, np.zeros(20))
    assert roots == pytest.approx([2.0, 4.0], abs=1e-8)


def test_roots_none():
    g = lambda x: 1 + np.asarray(x)[..., 0] ** 2
    assert find_constraint_roots(g, np.array([0.0]), np.array([1.0])) == []


def test_bounds_as_quadratic():
    g = bounds_as_quadratic(BoxBounds.uniform(0, 10, 1), 0)
    assert g(np.array([5.0])) == 25.0
    assert g(np.array([0.0])) == 0.0 and g(np.array([10.0])) == 0.0
    assert g(np.array([-2.0])) == -24.0
    with pytest.raises(UsageError):
        bounds_as_quadratic(BoxBounds.uniform(0, 10, 1), 1)


def test_relax_equality():
    eps = 1e-2
    g = relax_equality(lambda x: np.asarray(x)[..., 0], eps)
    assert g(np.array([0.0])) == pytest.approx(eps ** 2)
    assert g(np.array([eps])) == pytest.approx(0.0, abs=1e-18)
    assert g(np.array([2 * eps])) == pytest.approx(-3 * eps ** 2)
    with pytest.raises(UsageError):
        relax_equality(lambda x: x, 0.0)


def test_sphere_alpha_bounds():
    child = np.zeros(20)
    child[0] = 3.0
    ab = compute_alpha_bounds(_sphere(), child, np.zeros(20))
    assert ab.alpha_v == pytest.approx(2.0, abs=1e-8)
    assert ab.alpha_p == pytest.approx(3.0)
    assert ab.alpha_u == pytest.approx(4.0, abs=1e-8)


def test_alpha_bounds_parent_on_boundary():
    child = np.zeros(20)
    child[0] = 3.0
    parent = np.zeros(20)
    parent[0] = 1.0
    ab = compute_alpha_bounds(_sphere(), child, parent)
    assert ab.alpha_v == pytest.approx(ab.alpha_p, abs=1e-9)


def test_alpha_bounds_requires_feasible_parent():
    with pytest.raises(UsageError):
        compute_alpha_bounds(_sphere(), np.full(20, 3.0), np.full(20, 2.0))


def _box_problem(b):
    return ConstrainedProblem("box", lambda x: np.sum(np.asarray(x) ** 2, axis=-1), b)


def test_box_oracle_equivalence():
    rng = make_rng(11)
    n = 5
    b = BoxBounds.uniform(0, 10, n)
    prob = _box_problem(b)
    cfg = RootFinderConfig(max_ray_extent=1e4)
    P = rng.uniform(0, 10, (2000, n))
    C = P + rng.normal(0, 8, (2000, n))
    keep = ~prob.feasible_rows(C)
    C, P = C[keep], P[keep]
    a_v, a_p, a_u, _, ok = alpha_bounds_rows(prob, C, P, cfg)
    assert ok.all()
    ref = np.array([[s.d_v, s.d_p, s.d_u] for s in
                    (box_ray_segment(c, p, b) for c, p in zip(C, P))])
    assert np.max(np.abs(a_v - ref[:, 0])) <= 1e-8
    assert np.max(np.abs(a_u - ref[:, 2])) <= 1e-8
    assert np.allclose(a_p, ref[:, 1])


def test_repair_general_ip_sphere_endpoints():
    child = np.zeros(20)
    child[0] = 3.0
    y0 = repair_general_ip(child, np.zeros(20), _sphere(), "spread", r=0.0)
    assert np.linalg.norm(y0) == pytest.approx(1.0, abs=1e-8)
    assert is_feasible(_sphere(), y0)
    y1 = repair_general_ip(child, np.zeros(20), _sphere(), "confined", r=1.0)
    assert np.allclose(y1, 0.0, atol=1e-12)


def test_repair_general_ip_rejects_infeasible_parent():
    with pytest.raises(UsageError):
        repair_general_ip(np.full(20, 3.0), np.full(20, 2.0), _sphere())


def test_repair_failure_falls_back_with_warning(monkeypatch):
    parent = np.zeros(20)
    child = np.full(20, 3.0)
    # verification rejects everything but the parent, as a non-convex pocket would
    monkeypatch.setattr(ConstrainedProblem, "feasible_rows",
                        lambda self, X: np.all(np.atleast_2d(X) == parent, axis=1))
    with pytest.warns(RepairFailureWarning):
        y = repair_general_ip(child, parent, _sphere(), rng=make_rng(0))
    assert np.array_equal(y, parent)
    Y, failed = repair_general_rows(_sphere(), np.stack([child, child]), parent, "spread",
                                    1.2, make_rng(0))
    assert failed == 2 and np.array_equal(Y, np.stack([parent, parent]))


@pytest.mark.parametrize("pid", ["sphere-elp-0", "sphere-ack-2", "tp5", "tp8", "weld"])
def test_general_repair_always_feasible(pid):
    prob = get_problem(pid)
    rng = make_rng(5)
    P = feasible_initialize(prob, prob.seed_point, 200, rng=rng)
    assert prob.feasible_rows(P).all()
    C = P + rng.normal(0, 1, P.shape) * prob.bounds.width * 0.3
    Y, _ = repair_general_rows(prob, C, P, "spread", 1.2, rng)
    assert prob.feasible_rows(Y).all()
    Y, _ = repair_general_rows(prob, C, P, "confined", 1.2, rng)
    assert prob.feasible_rows(Y).all()


def test_tp5_ten_thousand_repairs_feasible():
    prob = make_tp5()
    rng = make_rng(6)
    P = feasible_initialize(prob, prob.seed_point, 1000, rng=rng)
    P = np.repeat(P, 10, axis=0)
    C = P + rng.normal(0, 3, P.shape)
    Y, failed = repair_general_rows(prob, C, P, "spread", 1.2, rng)
    assert prob.feasible_rows(Y).all()
    assert failed <= 10


def test_feasible_initialize_cases():
    rng = make_rng(1)
    box = get_problem("elp:center")
    X = feasible_initialize(box, np.zeros(20), 30, rng=make_rng(1))
    assert np.array_equal(X, box.bounds.sample(make_rng(1), 30))
    S = feasible_initialize(_sphere(), np.zeros(20), 100, rng=rng)
    assert np.all(np.linalg.norm(S, axis=1) <= 1.0)
    one = feasible_initialize(_sphere(), np.zeros(20), 1, rng=rng)
    assert one.shape == (1, 20) and is_feasible(_sphere(), one[0])
    with pytest.raises(UsageError):
        feasible_initialize(_sphere(), np.full(20, 5.0), 10, rng=rng)


def test_root_finder_config_validation():
    with pytest.raises(UsageError):
        RootFinderConfig(scan_steps=8)
    with pytest.raises(UsageError):
        RootFinderConfig(bisection_tolerance=0.0)
