"""Parametric certification: hand partitions, replay agreement, coverage."""

import numpy as np
import pytest

from miqpcert.bounds import QuadraticFunc
from miqpcert.errors import DegeneracyWarning
from miqpcert.geometry import Polyhedron, grid
from miqpcert.mpqp import AffineMap, leaves_containing, qpcert, value_function
from miqpcert.problem import MpMIQP, random_mpmiqp
from miqpcert.qp import solve_qp


def one_var_family(A, b, W, f_theta):
    return MpMIQP(
        H=np.array([[1.0]]),
        f=np.array([0.0]),
        f_theta=np.array(f_theta, dtype=float),
        A=np.array(A, dtype=float),
        b=np.array(b, dtype=float),
        W=np.array(W, dtype=float),
        binary_indices=(),
        theta0=Polyhedron.box(np.array([-1.0]), np.array([1.0])),
    )


def test_two_leaf_partition_by_hand():
    # min 0.5 x^2 + theta x with x >= 0: active for theta > 0 only.
    fam = one_var_family(A=[[-1.0]], b=[0.0], W=[[0.0]], f_theta=[[1.0]])
    leaves = qpcert(fam.root_relaxation(), fam.theta0)
    assert [leaf.path for leaf in leaves] == ["o", "v000.a.o"]
    free, clamped = leaves
    assert free.kappa == 1
    assert free.active_set == ()
    assert free.region.contains([-0.5]) and not free.region.contains([0.5])
    # x(theta) = -theta, J(theta) = -theta^2 / 2.
    assert np.allclose(free.x.F, [[-1.0]]) and np.allclose(free.x.g, [0.0])
    assert free.objective.value([-0.5]) == pytest.approx(-0.125)
    assert clamped.kappa == 2
    assert clamped.active_set == (0,)
    assert clamped.region.contains([0.5]) and not clamped.region.contains([-0.5])
    assert np.allclose(clamped.x.F, [[0.0]]) and np.allclose(clamped.x.g, [0.0])
    assert clamped.objective.value([0.7]) == pytest.approx(0.0)


def test_infeasible_leaf_by_hand():
    # x <= 0 together with x >= theta: impossible once theta > 0.
    fam = one_var_family(A=[[1.0], [-1.0]], b=[0.0, 0.0],
                         W=[[0.0], [-1.0]], f_theta=[[0.0]])
    leaves = qpcert(fam.root_relaxation(), fam.theta0)
    assert [leaf.path for leaf in leaves] == [
        "o", "v001.a.o", "v001.a.v000.f"
    ]
    feasible, point, infeasible = leaves
    assert feasible.kappa == 1
    assert feasible.region.contains([-0.3])
    # The middle leaf is the single point theta = 0.
    lo, hi = point.region.bounding_box()
    assert np.allclose(lo, [0.0]) and np.allclose(hi, [0.0])
    assert infeasible.kappa == 2
    assert infeasible.objective.infinite
    assert infeasible.x is None
    assert infeasible.region.contains([0.5])
    # The detection leaf ends on the working set it got stuck with.
    assert infeasible.active_set == (1,)


def test_duplicate_row_warns_and_skips():
    fam = one_var_family(A=[[-1.0], [-1.0]], b=[0.0, 0.0],
                         W=[[0.0], [0.0]], f_theta=[[1.0]])
    with pytest.warns(DegeneracyWarning):
        leaves = qpcert(fam.root_relaxation(), fam.theta0)
    assert [leaf.path for leaf in leaves] == ["o", "v000.a.o"]
    pts = grid(fam.theta0, 50)
    covered = np.zeros(len(pts), dtype=bool)
    for leaf in leaves:
        covered |= leaf.region.contains_many(pts)
    assert covered.all()


def test_slack_constraints_give_single_leaf():
    p = random_mpmiqp(31, n_c=3, n_b=0, m=4, n_theta=2)
    fam = MpMIQP(p.H, p.f, p.f_theta, p.A, p.b + 100.0, p.W,
                 (), p.theta0)
    leaves = qpcert(fam.root_relaxation(), fam.theta0)
    assert len(leaves) == 1
    leaf = leaves[0]
    assert leaf.path == "o" and leaf.kappa == 1
    Hinv_ft = np.linalg.solve(fam.H, fam.f_theta)
    assert np.allclose(leaf.x.F, -Hinv_ft, atol=1e-9)


def _replay_family(fam, node, seed, points_per_leaf=4):
    aqp = node.assemble()
    leaves = qpcert(node, fam.theta0)
    assert leaves == sorted(leaves, key=lambda leaf: leaf.path)
    rng = np.random.default_rng(seed)
    pts = grid(fam.theta0, 40)
    covered = np.zeros(len(pts), dtype=bool)
    for leaf in leaves:
        covered |= leaf.region.contains_many(pts)
    assert covered.all()
    # No point sits strictly inside two leaves.
    for pt in pts[:: max(1, len(pts) // 200)]:
        strict = leaves_containing(leaves, pt, tol=-1e-7)
        assert len(strict) <= 1
    replayed = 0
    for leaf in leaves:
        center, radius = leaf.region.chebyshev_center()
        if radius <= 1e-6:
            continue
        samples = [center] + [
            center + rng.uniform(-1.0, 1.0, fam.n_theta) * radius / 2
            for _ in range(points_per_leaf - 1)
        ]
        for theta in samples:
            out = solve_qp(aqp, theta)
            assert out.path == leaf.path
            assert out.iterations == leaf.kappa
            if out.status == "optimal":
                assert out.active_set == leaf.active_set
                assert np.allclose(out.x, leaf.x.at(theta), atol=1e-6)
                assert out.objective == pytest.approx(
                    leaf.objective.value(theta), abs=1e-6
                )
            else:
                assert leaf.objective.infinite
            replayed += 1
    return len(leaves), replayed


def test_replay_matches_online_solver_pure_qp():
    total_leaves = 0
    for seed in (0, 1, 2):
        fam = random_mpmiqp(seed, n_c=3, n_b=0, m=5, n_theta=2)
        n_leaves, replayed = _replay_family(fam, fam.root_relaxation(), seed)
        assert replayed >= n_leaves - 2
        total_leaves += n_leaves
    assert total_leaves >= 6


def test_replay_matches_online_solver_with_binaries():
    fam = random_mpmiqp(5, n_c=2, n_b=2, m=4, n_theta=2)
    _replay_family(fam, fam.root_relaxation(), 5)
    # A child node with one binary fixed exercises the equality rows.
    node = fam.root_relaxation().child(fam.binary_indices[0], 1)
    _replay_family(fam, node, 6)


def test_audit_mode_passes_on_random_family():
    fam = random_mpmiqp(9, n_c=2, n_b=1, m=4, n_theta=2)
    leaves = qpcert(fam.root_relaxation(), fam.theta0, audit=True)
    assert len(leaves) >= 1


def test_value_function_formula():
    rng = np.random.default_rng(14)
    fam = random_mpmiqp(14, n_c=3, n_b=0, m=4, n_theta=2)
    aqp = fam.root_relaxation().assemble()
    F = rng.standard_normal((3, 2))
    g0 = rng.standard_normal(3)
    vf = value_function(AffineMap(F, g0), aqp)
    for _ in range(20):
        theta = rng.uniform(-1.0, 1.0, 2)
        x = F @ theta + g0
        direct = 0.5 * x @ aqp.H @ x + aqp.f_of(theta) @ x
        assert vf.value(theta) == pytest.approx(direct, abs=1e-10)


def test_kappa_counts_events():
    # Each leaf's count is one more than its add/drop tokens.
    fam = random_mpmiqp(3, n_c=2, n_b=1, m=4, n_theta=2)
    leaves = qpcert(fam.root_relaxation(), fam.theta0)
    for leaf in leaves:
        events = sum(1 for t in leaf.path.split(".")
                     if t == "a" or t.startswith("d"))
        assert leaf.kappa == 1 + events


def test_infinite_leaves_have_no_minimizer():
    fam = one_var_family(A=[[1.0], [-1.0]], b=[0.0, 0.0],
                         W=[[0.0], [-1.0]], f_theta=[[0.0]])
    leaves = qpcert(fam.root_relaxation(), fam.theta0)
    for leaf in leaves:
        if leaf.objective.infinite:
            assert leaf.x is None
        else:
            assert isinstance(leaf.x, AffineMap)
            assert isinstance(leaf.objective, QuadraticFunc)
