"""Parametric certification of the QP solver.

Runs the dual active-set method over a whole parameter region at once. All
solver state (point, multipliers, slacks) is affine in the parameter while
the working set is fixed, so every decision the solver takes is a sign
condition on affine functions. Wherever a decision flips, the region splits;
each leaf of the resulting tree carries the exact iteration count, active
set, parametric minimizer, and value function that the online solver
produces anywhere in that leaf.

Ties produce closed, overlapping leaf boundaries on purpose: the online
run's outcome at a boundary point is then always among the leaves containing
it, which keeps worst-case lookups safe.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .bounds import QuadraticFunc
from .errors import (
    DegeneracyWarning,
    EmptyRegion,
    IterationCapExceeded,
    NumericalFailure,
    UnboundedRegion,
)
from .geometry import Polyhedron
from .linalg import kkt_solve, lp_solve
from .qp import DIRECTION_ZERO_TOL, ITERATION_CAP_FACTOR, RATE_TOL

AUDIT_TOL = 1e-6
# Minimum geometric margin for a strict decision to be attainable.
STRICT_TOL = 1e-9


@dataclass
class AffineMap:
    """x(theta) = F theta + g."""

    F: np.ndarray
    g: np.ndarray

    def at(self, theta):
        return self.F @ np.asarray(theta, dtype=float) + self.g


@dataclass
class CertLeaf:
    """One leaf of the certification tree.

    kappa is the number of KKT solves the online method performs for any
    parameter in the region. objective is the optimal value as a function of
    the parameter (infinite on infeasible leaves, where x is None). path
    lists the event tokens; sorting leaves by path reproduces the order in
    which the online tie-breaking prefers them.
    """

    region: Polyhedron
    kappa: int
    active_set: tuple
    objective: QuadraticFunc
    x: AffineMap | None
    path: str


def value_function(x_map, aqp):
    """Objective of the QP along a parametric minimizer."""
    F, g0 = x_map.F, x_map.g
    H, f0, f1 = aqp.H, aqp.f_const, aqp.f_lin
    Q = F.T @ H @ F + f1.T @ F + F.T @ f1
    q = F.T @ (H @ g0 + f0) + f1.T @ g0
    c = 0.5 * float(g0 @ H @ g0) + float(f0 @ g0)
    return QuadraticFunc(Q, q, c)


def leaves_containing(leaves, theta, tol=None):
    """Leaves whose region contains theta, in path order."""
    if tol is None:
        return [leaf for leaf in leaves if leaf.region.contains(theta)]
    return [leaf for leaf in leaves if leaf.region.contains(theta, tol=tol)]


def _child_region(parent, A_new, b_new, n_theta, check_empty=True):
    """parent intersected with new rows; None when provably empty.

    check_empty=False skips the closing emptiness LP; callers that follow
    up with a reachability test get the emptiness proof from that test's
    LPs instead of paying for a separate one here.
    """
    A_new = np.asarray(A_new, dtype=float).reshape(-1, n_theta)
    b_new = np.asarray(b_new, dtype=float)
    child = parent.with_rows(A_new, b_new)
    if child is parent:
        return parent
    try:
        center, _ = parent.chebyshev_center()
    except EmptyRegion:
        return None
    if np.all(A_new @ center <= b_new):
        child._empty = False
        return child
    lo, hi = parent.outer_box()
    floor = np.minimum(A_new * lo, A_new * hi).sum(axis=1)
    if np.any(floor > b_new):
        return None
    if check_empty and child.is_empty():
        return None
    return child


def _strictly_reachable(child, A_strict, b_strict, hint=None):
    """True when some point of child clears every strict row by a margin.

    The per-instance solver takes the decision encoded by a strict row only
    on strict inequality; ties fall to the preceding alternative. A child
    whose strict rows hold with equality throughout is therefore never
    entered, and expanding it would recurse over a measure-zero tie set
    (where reversed comparisons can alternate without end). hint is a point
    of the parent region that short-circuits the test when it already lies
    in the child with the required margin.
    """
    A_strict = np.atleast_2d(np.asarray(A_strict, dtype=float))
    b_strict = np.atleast_1d(np.asarray(b_strict, dtype=float))
    norms = np.sqrt((A_strict * A_strict).sum(axis=1))
    flat = norms <= 1e-12
    if np.any(b_strict[flat] <= STRICT_TOL):
        return False
    if bool(np.all(flat)):
        return True
    A_n = A_strict[~flat] / norms[~flat, None]
    b_n = b_strict[~flat] / norms[~flat]
    if (hint is not None and np.all(A_n @ hint <= b_n - STRICT_TOL)
            and child.contains(hint)):
        child._empty = False
        return True
    try:
        center, _ = child.chebyshev_center()
    except EmptyRegion:
        return False
    if np.all(A_n @ center <= b_n - STRICT_TOL):
        return True
    # Largest uniform margin on the strict rows over the child.
    dim = child.dim
    cost = np.zeros(dim + 1)
    cost[-1] = -1.0
    A_lp = np.vstack([
        np.column_stack([A_n, np.ones(len(b_n))]),
        np.column_stack([child.A, np.zeros(child.nrows)]),
        np.concatenate([np.zeros(dim), [-1.0]])[None, :],
    ])
    b_lp = np.concatenate([b_n, child.b, [1.0]])
    res = lp_solve(cost, A_lp, b_lp)
    if res.status == "unbounded":
        child._empty = False
        return True
    if res.status != "optimal":
        return False
    child._empty = False
    return -res.objective > STRICT_TOL


def qpcert(node, region, audit=False):
    """Certify one relaxation's QP over a region.

    node is a relaxation (or an already assembled QP). Returns the list of
    CertLeaf, sorted by path. With audit=True every symbolic state is
    spot-checked against its optimality system at the region's center.
    """
    aqp = node.assemble() if hasattr(node, "assemble") else node
    H = aqp.H
    G = aqp.G
    n = aqp.n
    m = aqp.n_ineq
    n_eq = aqp.n_eq
    nt = aqp.n_theta
    hfac = aqp.hessian_factor()
    cap = ITERATION_CAP_FACTOR * (n + m + n_eq)

    fresh_cache = {}

    def fresh(work):
        """Affine solver state for a working set: minimizer, working
        multipliers, and all slacks, each as (linear, constant) parts."""
        hit = fresh_cache.get(work)
        if hit is not None:
            return hit
        rows = list(work)
        A_ws = np.vstack([aqp.Geq, G[rows]])
        g_mat = np.column_stack([aqp.f_const, aqp.f_lin])
        h_mat = np.vstack([
            np.column_stack([aqp.geq, np.zeros((n_eq, nt))]),
            np.column_stack([aqp.g_const[rows], aqp.g_lin[rows]]),
        ])
        X, Lam = kkt_solve(H, A_ws, g_mat, h_mat, hfac=hfac)
        g0 = X[:, 0]
        F = X[:, 1:]
        lam0 = Lam[n_eq:, 0]
        LamF = Lam[n_eq:, 1:]
        S_const = aqp.g_const - G @ g0
        S_lin = aqp.g_lin - G @ F
        state = (F, g0, LamF, lam0, S_lin, S_const)
        fresh_cache[work] = state
        return state

    dir_cache = {}

    def direction(work, p):
        key = (work, p)
        hit = dir_cache.get(key)
        if hit is not None:
            return hit
        A_ws = np.vstack([aqp.Geq, G[list(work)]])
        z, w = kkt_solve(H, A_ws, -G[p], np.zeros(n_eq + len(work)),
                         hfac=hfac)
        pair = (z, w[n_eq:])
        dir_cache[key] = pair
        return pair

    def audit_state(work, F, g0, LamF, lam0, reg):
        try:
            theta_c, _ = reg.chebyshev_center()
        except EmptyRegion:
            return
        x_c = F @ theta_c + g0
        lam_c = LamF @ theta_c + lam0
        rows = list(work)
        A_ws = np.vstack([aqp.Geq, G[rows]])
        h_c = np.concatenate([aqp.geq,
                              aqp.g_const[rows] + aqp.g_lin[rows] @ theta_c])
        # Equality multipliers are not tracked here; check stationarity in
        # the complement of the equality normals' span instead.
        grad = H @ x_c + aqp.f_of(theta_c) + G[rows].T @ lam_c
        if n_eq:
            mu, *_ = np.linalg.lstsq(aqp.Geq.T, -grad, rcond=None)
            grad = grad + aqp.Geq.T @ mu
        if np.max(np.abs(grad), initial=0.0) > AUDIT_TOL:
            raise NumericalFailure("symbolic state fails stationarity")
        if A_ws.shape[0] and np.max(np.abs(A_ws @ x_c - h_c)) > AUDIT_TOL:
            raise NumericalFailure("symbolic state leaves its working set")

    leaves = []

    def emit(reg, kappa, work, x_map, objective, tokens):
        try:
            reg = reg.reduce()
        except EmptyRegion:
            return
        leaves.append(CertLeaf(
            region=reg, kappa=kappa, active_set=tuple(work),
            objective=objective, x=x_map, path=".".join(tokens),
        ))

    def settled(sub, parent):
        """Reduced form of a child region; None when empty. Regions on the
        stack stay irredundant, which keeps their LPs well conditioned."""
        if sub is None or sub is parent:
            return sub
        try:
            return sub.reduce()
        except EmptyRegion:
            return None

    def admit(raw, parent, strict_rows, strict_offs, hint):
        """Settled child when strictly reachable, else None.

        Reachability runs on the raw child so unreachable ones never pay
        for a reduce, and the test's LPs double as the emptiness check.
        Raw descriptions can carry nearly dependent rows; when a test LP
        fails on them numerically (reported as a failure, or as a bogus
        unbounded verdict on a set every parent keeps bounded), the child
        is reduced first and the test retried on the cleaner description.
        """
        if raw is None:
            return None
        try:
            if not _strictly_reachable(raw, strict_rows, strict_offs, hint):
                return None
        except (NumericalFailure, UnboundedRegion):
            raw = settled(raw, parent)
            if raw is None or not _strictly_reachable(
                    raw, strict_rows, strict_offs, hint):
                return None
            return raw
        return settled(raw, parent)

    try:
        root = region.reduce()
    except EmptyRegion:
        return []
    stack = [(tuple(), None, root, 1, ())]
    while stack:
        work, pending, reg, kappa, tokens = stack.pop()
        F, g0, LamF, lam0, S_lin, S_const = fresh(work)
        if audit:
            audit_state(work, F, g0, LamF, lam0, reg)
        if pending is None:
            in_work = set(work)
            cands = [i for i in range(m) if i not in in_work]
            kept = []
            for p in cands:
                dup = any(
                    S_const[p] == S_const[q]
                    and np.array_equal(S_lin[p], S_lin[q])
                    for q in kept
                )
                if dup:
                    warnings.warn(
                        f"row {p} has the same slack function as an earlier "
                        "candidate; only the earlier one is explored",
                        DegeneracyWarning, stacklevel=2,
                    )
                else:
                    kept.append(p)
            # Region where no candidate is violated: an optimal leaf.
            if kept:
                sub = _child_region(reg, -S_lin[kept], S_const[kept], nt)
            else:
                sub = reg
            if sub is not None:
                x_map = AffineMap(F.copy(), g0.copy())
                emit(sub, kappa, work, x_map, value_function(x_map, aqp),
                     tokens + ("o",))
            # One child per candidate that can be the most violated row.
            # Violation, and winning against lower-index candidates, must
            # hold strictly for the row to be picked.
            try:
                hint, _ = reg.chebyshev_center()
            except EmptyRegion:
                hint = None
            for p in kept:
                rows = [S_lin[p]]
                offs = [-S_const[p]]
                for q in kept:
                    if q < p:
                        rows.append(S_lin[p] - S_lin[q])
                        offs.append(S_const[q] - S_const[p])
                n_strict = len(rows)
                for q in kept:
                    if q > p:
                        rows.append(S_lin[p] - S_lin[q])
                        offs.append(S_const[q] - S_const[p])
                sub = admit(
                    _child_region(reg, np.array(rows), np.array(offs),
                                  nt, check_empty=False),
                    reg, rows[:n_strict], offs[:n_strict], hint,
                )
                if sub is None:
                    continue
                stack.append((work, p, sub, kappa, tokens + (f"v{p:03d}",)))
            continue

        p = pending
        z, r = direction(work, p)
        z_norm = float(np.max(np.abs(z))) if n else 0.0
        if z_norm <= DIRECTION_ZERO_TOL and np.all(r <= RATE_TOL):
            # The whole region shares this dual ray, so the pending row is
            # incompatible with the working set everywhere in it.
            emit(reg, kappa, work, None, QuadraticFunc.infinity(nt),
                 tokens + ("f",))
            continue
        if kappa + 1 > cap:
            raise IterationCapExceeded(
                f"certification exceeds the {cap}-solve cap"
            )
        blocking = [(pos, j) for pos, j in enumerate(work)
                    if r[pos] > RATE_TOL]
        kept = []
        for pos, j in blocking:
            dup = False
            for pos2, _ in kept:
                coeff = r[pos] * LamF[pos2] - r[pos2] * LamF[pos]
                const = r[pos] * lam0[pos2] - r[pos2] * lam0[pos]
                if const == 0.0 and not coeff.any():
                    dup = True
                    break
            if dup:
                warnings.warn(
                    f"working row {j} has the same crossing time as an "
                    "earlier one; only the earlier one is explored",
                    DegeneracyWarning, stacklevel=2,
                )
            else:
                kept.append((pos, j))
        if z_norm > DIRECTION_ZERO_TOL:
            d = float(G[p] @ z)
            # Add child: the pending row reaches feasibility before any
            # working multiplier crosses zero. Ties go to the add.
            rows = []
            offs = []
            for pos, j in kept:
                rows.append(-(d * LamF[pos] + r[pos] * S_lin[p]))
                offs.append(d * lam0[pos] + r[pos] * S_const[p])
            if rows:
                sub = settled(
                    _child_region(reg, np.array(rows), np.array(offs), nt),
                    reg,
                )
            else:
                sub = reg
            if sub is not None:
                new_work = tuple(sorted(work + (p,)))
                stack.append((new_work, None, sub, kappa + 1,
                              tokens + ("a",)))
        else:
            d = 0.0
        # A drop must beat the add and every lower-index competitor
        # strictly; ties with higher-index competitors stay with this row.
        try:
            hint, _ = reg.chebyshev_center()
        except EmptyRegion:
            hint = None
        for pos, j in kept:
            rows = []
            offs = []
            if z_norm > DIRECTION_ZERO_TOL:
                rows.append(d * LamF[pos] + r[pos] * S_lin[p])
                offs.append(-(d * lam0[pos] + r[pos] * S_const[p]))
            for pos2, k in kept:
                if k < j:
                    rows.append(r[pos2] * LamF[pos] - r[pos] * LamF[pos2])
                    offs.append(r[pos] * lam0[pos2] - r[pos2] * lam0[pos])
            n_strict = len(rows)
            for pos2, k in kept:
                if k > j:
                    rows.append(r[pos2] * LamF[pos] - r[pos] * LamF[pos2])
                    offs.append(r[pos] * lam0[pos2] - r[pos2] * lam0[pos])
            if rows:
                sub = _child_region(reg, np.array(rows), np.array(offs),
                                    nt, check_empty=False)
            else:
                sub = reg
            if n_strict:
                sub = admit(sub, reg, rows[:n_strict], offs[:n_strict],
                            hint)
            else:
                sub = settled(sub, reg)
            if sub is None:
                continue
            new_work = tuple(x for x in work if x != j)
            stack.append((new_work, p, sub, kappa + 1,
                          tokens + (f"d{j:03d}",)))

    leaves.sort(key=lambda leaf: leaf.path)
    return leaves
