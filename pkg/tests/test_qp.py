"""QP solver: iteration counts, event paths, oracle agreement, dual trace."""

import numpy as np
import pytest

from helpers import enumerate_qp_optimum
from miqpcert.linalg import lp_solve
from miqpcert.problem import random_mpmiqp
from miqpcert.qp import kkt_residuals, solve_qp, solve_qp_arrays


def test_inactive_constraint_costs_one_solve():
    # min 0.5 x^2 with x <= 1: the unconstrained point already satisfies it.
    out = solve_qp_arrays(np.eye(1), np.zeros(1),
                          np.array([[1.0]]), np.array([1.0]))
    assert out.status == "optimal"
    assert out.iterations == 1
    assert out.path == "o"
    assert out.active_set == ()
    assert np.allclose(out.x, [0.0])


def test_single_add_costs_two_solves():
    # min 0.5 x^2 with x >= 1: one working-set change.
    out = solve_qp_arrays(np.eye(1), np.zeros(1),
                          np.array([[-1.0]]), np.array([-1.0]))
    assert out.status == "optimal"
    assert out.iterations == 2
    assert out.path == "v000.a.o"
    assert out.active_set == (0,)
    assert np.allclose(out.x, [1.0])
    assert np.allclose(out.lam, [1.0])
    assert out.objective == pytest.approx(0.5)


def test_infeasible_detection_is_free():
    # x <= -1 and x >= 2 cannot hold together; the detection itself does
    # not add a KKT solve.
    G = np.array([[1.0], [-1.0]])
    g = np.array([-1.0, -2.0])
    out = solve_qp_arrays(np.eye(1), np.zeros(1), G, g)
    assert out.status == "infeasible"
    assert out.iterations == 2
    assert out.path == "v001.a.v000.f"
    assert out.objective == np.inf
    assert out.x is None


def test_drop_event_hand_example():
    # Crafted so the first added row must leave again: the pending row's
    # multiplier push drives the working multiplier to zero first.
    H = np.eye(2)
    f = np.array([-0.2, -10.0])
    G = np.array([[0.5, 1.0], [10.0, 0.0]])
    g = np.array([9.5, 0.0])
    out = solve_qp_arrays(H, f, G, g)
    assert out.status == "optimal"
    assert out.path == "v001.a.v000.d001.a.o"
    assert out.iterations == 4
    assert np.allclose(out.x, [-0.04, 9.52])
    assert np.allclose(out.lam, [0.48, 0.0])
    assert out.objective == pytest.approx(-49.876)
    assert np.allclose(out.dual_path, [-50.02, -50.0, -49.88, -49.876])


def test_dual_path_accounting():
    # One entry per KKT solve; adds and drops each cost one.
    H = np.eye(2)
    f = np.array([-0.2, -10.0])
    G = np.array([[0.5, 1.0], [10.0, 0.0]])
    g = np.array([9.5, 0.0])
    out = solve_qp_arrays(H, f, G, g)
    events = sum(1 for t in out.path.split(".") if t == "a" or t[0] == "d")
    assert out.iterations == 1 + events
    assert len(out.dual_path) == out.iterations


def test_equality_rows_are_respected():
    # Fixing x1 = 1 by an equality row matches solving the reduced problem.
    H = np.diag([1.0, 2.0])
    f = np.array([-1.0, 0.0])
    G = np.array([[1.0, 0.0]])
    g = np.array([10.0])
    Geq = np.array([[0.0, 1.0]])
    geq = np.array([1.0])
    out = solve_qp_arrays(H, f, G, g, Geq, geq)
    assert out.status == "optimal"
    assert np.allclose(out.x, [1.0, 1.0])
    # Stationarity in the second coordinate: 2*1 + 0 + mu = 0.
    assert np.allclose(out.eq_multipliers, [-2.0])
    assert out.iterations == 1


def _random_qp(rng):
    n = int(rng.integers(1, 5))
    m = int(rng.integers(0, 9))
    Hbar = rng.standard_normal((n, n))
    H = Hbar @ Hbar.T + 0.3 * np.eye(n)
    f = rng.standard_normal(n)
    G = rng.standard_normal((m, n))
    g = rng.uniform(-0.5, 1.5, m)
    return H, f, G, g


def test_matches_enumeration_oracle():
    rng = np.random.default_rng(42)
    statuses = {"optimal": 0, "infeasible": 0}
    for _ in range(200):
        H, f, G, g = _random_qp(rng)
        out = solve_qp_arrays(H, f, G, g)
        truth = enumerate_qp_optimum(H, f, G, g)
        if out.status == "optimal":
            assert truth is not None
            J, x = truth
            assert out.objective == pytest.approx(J, abs=1e-7)
            assert np.allclose(out.x, x, atol=1e-6)
        else:
            assert truth is None
        statuses[out.status] += 1
    assert statuses["optimal"] > 100
    assert statuses["infeasible"] > 10


def test_infeasible_agrees_with_lp_phase_one():
    rng = np.random.default_rng(7)
    seen_infeasible = 0
    for _ in range(150):
        H, f, G, g = _random_qp(rng)
        if G.shape[0] == 0:
            continue
        out = solve_qp_arrays(H, f, G, g)
        feas = lp_solve(np.zeros(H.shape[0]), G, g)
        if out.status == "infeasible":
            assert feas.status == "infeasible"
            seen_infeasible += 1
        else:
            assert feas.status in ("optimal", "unbounded")
    assert seen_infeasible > 5


def test_optimality_residuals():
    rng = np.random.default_rng(3)
    for _ in range(150):
        H, f, G, g = _random_qp(rng)
        out = solve_qp_arrays(H, f, G, g)
        if out.status != "optimal":
            continue
        grad = H @ out.x + f + G.T @ out.lam
        slack = g - G @ out.x
        assert np.max(np.abs(grad)) <= 1e-7
        if slack.size:
            assert np.min(slack) >= -1e-7
            assert np.min(out.lam) >= -1e-7
            assert np.max(np.abs(out.lam * slack)) <= 1e-6


def test_dual_path_is_monotone():
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(200):
        H, f, G, g = _random_qp(rng)
        out = solve_qp_arrays(H, f, G, g)
        diffs = np.diff(out.dual_path)
        if diffs.size:
            assert np.min(diffs) >= -1e-8
            checked += 1
    assert checked > 100


def test_deterministic_replay():
    rng = np.random.default_rng(5)
    for _ in range(30):
        H, f, G, g = _random_qp(rng)
        a = solve_qp_arrays(H, f, G, g)
        b = solve_qp_arrays(H, f, G, g)
        assert a.path == b.path
        assert a.iterations == b.iterations
        assert a.dual_path == b.dual_path
        if a.status == "optimal":
            assert np.array_equal(a.x, b.x)
            assert a.objective == b.objective


def test_assembled_qp_entry_point():
    p = random_mpmiqp(19, n_c=2, n_b=2, m=4, n_theta=2)
    aqp = p.root_relaxation().assemble()
    rng = np.random.default_rng(0)
    for _ in range(25):
        theta = rng.uniform(-1.0, 1.0, 2)
        out = solve_qp(aqp, theta)
        direct = solve_qp_arrays(aqp.H, aqp.f_of(theta), aqp.G,
                                 aqp.rhs_of(theta), aqp.Geq, aqp.geq)
        assert out.path == direct.path
        assert out.iterations == direct.iterations
        if out.status == "optimal":
            assert np.array_equal(out.x, direct.x)
            res = kkt_residuals(aqp, out)
            assert res.stationarity <= 1e-7
            assert res.primal <= 1e-7
            assert res.dual_min >= -1e-7
            assert res.complementarity <= 1e-6
        assert np.array_equal(out.theta, theta)


def test_fixed_binary_node_matches_oracle():
    p = random_mpmiqp(23, n_c=2, n_b=3, m=5, n_theta=2)
    node = p.root_relaxation().child(2, 1).child(4, 0)
    aqp = node.assemble()
    rng = np.random.default_rng(1)
    hits = 0
    for _ in range(40):
        theta = rng.uniform(-1.0, 1.0, 2)
        out = solve_qp(aqp, theta)
        truth = enumerate_qp_optimum(
            aqp.H, aqp.f_of(theta), aqp.G, aqp.rhs_of(theta),
            aqp.Geq, aqp.geq,
        )
        if out.status == "optimal":
            assert truth is not None
            assert out.objective == pytest.approx(truth[0], abs=1e-7)
            assert out.x[2] == pytest.approx(1.0, abs=1e-9)
            assert out.x[4] == pytest.approx(0.0, abs=1e-9)
            hits += 1
        else:
            assert truth is None
    assert hits > 5
